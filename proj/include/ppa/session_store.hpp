// Copyright 2026 The PPA Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <algorithm>
#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"
#include "ppa/core.hpp"
#include "ppa/core_json.hpp"
#include "ppa/error.hpp"
#include "ppa/io.hpp"
#include "ppa/png_codec.hpp"

namespace ppa {

enum class BlobAccess { Public, Local };

inline bool is_digest(std::string_view s) {
  return s.size() == 64 && std::all_of(s.begin(), s.end(), [](char c) {
           return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'f');
         });
}

inline bool is_session_id(std::string_view s) {
  return !s.empty() && s.size() <= 64 && std::all_of(s.begin(), s.end(), [](unsigned char c) {
           return std::isalnum(c) || c == '-' || c == '_';
         });
}

// Filesystem layout:
//   <root>/sessions/<id>/session.json
//   <root>/blobs/<digest>.png           candidate rasters
//   <root>/blobs/private/<digest>.png   original rasters, Local access only
class SessionStore {
 public:
  explicit SessionStore(std::filesystem::path root) : root_(std::move(root)) {
    std::filesystem::create_directories(root_ / "sessions");
    std::filesystem::create_directories(root_ / "blobs" / "private");
  }

  const std::filesystem::path& root() const noexcept { return root_; }

  std::string put_blob(const Raster& raster, bool private_blob) {
    const std::string digest = raster.digest();
    const auto path = blob_path(digest, private_blob);
    if (!std::filesystem::exists(path)) io::write_atomic(path, encode_png(raster));
    return digest;
  }

  bool is_private(const std::string& digest) const {
    return is_digest(digest) && std::filesystem::exists(blob_path(digest, true));
  }

  std::vector<std::uint8_t> read_blob(const std::string& digest, BlobAccess access) const {
    if (!is_digest(digest)) fail(ErrorCode::NotFound, "no blob " + digest);
    if (is_private(digest)) {
      if (access != BlobAccess::Local) fail(ErrorCode::Forbidden, "blob " + digest + " is private");
      return io::read_bytes(blob_path(digest, true));
    }
    const auto path = blob_path(digest, false);
    if (!std::filesystem::exists(path)) fail(ErrorCode::NotFound, "no blob " + digest);
    return io::read_bytes(path);
  }

  Raster read_raster(const std::string& digest, BlobAccess access) const {
    Raster r = decode_png(read_blob(digest, access));
    if (r.digest() != digest) fail(ErrorCode::IoError, "blob " + digest + " is corrupt");
    return r;
  }

  // Blobs first, then the document, so a crash never leaves a session that
  // references a missing blob.
  void save(const Session& s) {
    if (!is_session_id(s.session_id)) fail(ErrorCode::InvariantViolation, "bad session id");
    put_blob(s.source.raster, true);
    for (const auto& c : s.candidates) {
      // A candidate identical to the original stays private.
      if (c.digest != s.source.digest) put_blob(c.raster, false);
    }
    io::write_atomic(session_path(s.session_id), nlohmann::json(s).dump(2) + "\n");
  }

  bool exists(const std::string& id) const {
    return is_session_id(id) && std::filesystem::exists(session_path(id));
  }

  Session load(const std::string& id) const {
    if (!exists(id)) fail(ErrorCode::NotFound, "no session " + id);
    Session s;
    try {
      s = nlohmann::json::parse(io::read_file(session_path(id))).get<Session>();
    } catch (const nlohmann::json::exception& e) {
      fail(ErrorCode::ParseError, session_path(id).string() + ": " + e.what());
    }
    s.source.raster = read_raster(s.source.digest, BlobAccess::Local);
    for (auto& c : s.candidates) c.raster = read_raster(c.digest, BlobAccess::Local);
    return s;
  }

  nlohmann::json load_document(const std::string& id) const {
    if (!exists(id)) fail(ErrorCode::NotFound, "no session " + id);
    return nlohmann::json::parse(io::read_file(session_path(id)));
  }

  std::vector<std::string> list() const {
    std::vector<std::string> out;
    for (const auto& e : std::filesystem::directory_iterator(root_ / "sessions")) {
      if (std::filesystem::exists(e.path() / "session.json")) out.push_back(e.path().filename().string());
    }
    std::sort(out.begin(), out.end());
    return out;
  }

 private:
  std::filesystem::path blob_path(const std::string& digest, bool private_blob) const {
    return private_blob ? root_ / "blobs" / "private" / (digest + ".png") : root_ / "blobs" / (digest + ".png");
  }
  std::filesystem::path session_path(const std::string& id) const {
    return root_ / "sessions" / id / "session.json";
  }

  std::filesystem::path root_;
};

}  // namespace ppa
