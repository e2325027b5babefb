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


// ppa-serve: the session REST service.
//
//   ppa-serve --store DIR --config CFG [--host 127.0.0.1] [--port 8080]

#include <csignal>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "httplib.h"
#include "ppa/config.hpp"
#include "ppa/rest.hpp"
#include "ppa/service.hpp"
#include "ppa/session_store.hpp"

namespace {
httplib::Server* g_server = nullptr;
void on_signal(int) {
  if (g_server) g_server->stop();
}
}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Privacy-preserving OVLM session service"};
  std::string store_dir;
  std::string config_path;
  std::string host = "127.0.0.1";
  int port = 8080;
  app.add_option("--store", store_dir, "Session store directory")->required();
  app.add_option("--config", config_path, "Backend config JSON")->required();
  app.add_option("--host", host, "Bind address");
  app.add_option("--port", port, "Listen port")->check(CLI::Range(1, 65535));
  CLI11_PARSE(app, argc, argv);

  try {
    auto loaded = ppa::load_config_file(config_path);
    ppa::PpaService service(ppa::SessionStore(store_dir), loaded.service, loaded.backends);
    httplib::Server server;
    ppa::rest::mount(server, service);
    g_server = &server;
    std::signal(SIGINT, on_signal);
    std::signal(SIGTERM, on_signal);
    std::cerr << "ppa-serve listening on " << host << ":" << port << "\n";
    if (!server.listen(host, port)) {
      std::cerr << "ppa-serve: cannot listen on " << host << ":" << port << "\n";
      return 1;
    }
  } catch (const ppa::Error& e) {
    std::cerr << "ppa-serve: " << e.what() << "\n";
    return e.code() == ppa::ErrorCode::ConfigError ? 2 : 1;
  }
  return 0;
}
