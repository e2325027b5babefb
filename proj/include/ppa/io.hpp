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

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "ppa/error.hpp"

namespace ppa::io {

namespace fs = std::filesystem;

inline std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::IoError, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline std::vector<std::uint8_t> read_bytes(const fs::path& path) {
  const std::string s = read_file(path);
  return {s.begin(), s.end()};
}

// Write to a sibling temp file and rename over the target, so readers never
// observe a half-written document.
inline void write_atomic(const fs::path& path, std::span<const char> data) {
  std::error_code ec;
  if (path.has_parent_path()) fs::create_directories(path.parent_path(), ec);
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorCode::IoError, "cannot write " + tmp.string());
    out.write(data.data(), static_cast<std::streamsize>(data.size()));
    if (!out) fail(ErrorCode::IoError, "short write on " + tmp.string());
  }
  fs::rename(tmp, path, ec);
  if (ec) fail(ErrorCode::IoError, "rename failed for " + path.string() + ": " + ec.message());
}

inline void write_atomic(const fs::path& path, const std::string& data) {
  write_atomic(path, std::span<const char>(data.data(), data.size()));
}

inline void write_atomic(const fs::path& path, std::span<const std::uint8_t> data) {
  write_atomic(path, std::span<const char>(reinterpret_cast<const char*>(data.data()), data.size()));
}

}  // namespace ppa::io
