/*
 * Copyright 2026 The tabrisk Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef TABRISK_SERVICE_HPP_
#define TABRISK_SERVICE_HPP_

#include <atomic>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <string>

#include "json.hpp"
#include "tabrisk/dataset.hpp"
#include "tabrisk/ensemble.hpp"
#include "tabrisk/explain.hpp"

namespace httplib {
class Server;
}

namespace tabrisk {

struct ServiceOptions {
  std::string host = "127.0.0.1";
  int port = 8080;  // 0 binds any free port
  std::size_t default_n_samples = 500;
  std::size_t max_n_samples = 20000;
  std::uint64_t default_seed = 0;
};

// Port from TABRISK_PORT when set and valid, else fallback.
int PortFromEnvironment(int fallback);

// Read-only JSON API over a frozen ensemble and a counterfactual neighbor
// pool (also the attribution background).
//
//   GET  /health          {"status": "ok"}
//   GET  /schema          feature specs
//   GET  /model           backbones, alphas, gate, threshold, training info
//   POST /predict         {"features": {...}, "threshold"?}
//   POST /counterfactual  {"features": {...}, "max_changes"?, "threshold"?}
//   POST /attribution     {"features": {...}, "n_samples"?, "seed"?}
//
// Errors carry {"error": {"code", "message", "field"?, "id"?}}: 400 for
// malformed JSON, 404 for unknown routes, 422 for invalid fields and 500 (with
// an opaque id) for anything else.
class Service {
 public:
  struct Response {
    int status = 200;
    nlohmann::json body;
  };

  Service(EnsembleModel model, Dataset pool, ServiceOptions options = {});
  ~Service();

  // Routes one request without any socket I/O.
  Response Handle(const std::string& method, const std::string& path, const std::string& body) const;

  // Binds the listening socket and returns the bound port.
  int Bind();
  // Serves until Stop(); returns false if the server failed.
  bool Run();
  void Stop();

  const EnsembleModel& model() const { return model_; }

 private:
  Response Predict(const nlohmann::json& req) const;
  Response CounterfactualFor(const nlohmann::json& req) const;
  Response AttributionFor(const nlohmann::json& req) const;
  Response ModelInfo() const;

  EnsembleModel model_;
  ServiceOptions options_;
  std::unique_ptr<CounterfactualSearch> search_;
  std::unique_ptr<httplib::Server> server_;
  mutable std::atomic<std::uint64_t> error_counter_{0};
};

}  // namespace tabrisk

#endif  // TABRISK_SERVICE_HPP_
