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

#include "tabrisk/service.hpp"

#include <cstdlib>
#include <cstdio>
#include <iostream>

#include "httplib.h"
#include "tabrisk/errors.hpp"
#include "tabrisk/metrics.hpp"

namespace tabrisk {

namespace {

// Validation failure tied to a request field.
struct FieldError {
  std::string field;
  std::string message;
};

Service::Response ErrorResponse(int status, const std::string& code, const std::string& message,
                                const std::string& field = {}) {
  nlohmann::json e = {{"code", code}, {"message", message}};
  if (!field.empty()) e["field"] = field;
  return {status, {{"error", e}}};
}

const nlohmann::json& RequireFeatures(const nlohmann::json& req) {
  if (!req.is_object()) throw FieldError{"", "request body must be a JSON object"};
  if (!req.contains("features")) throw FieldError{"features", "missing field 'features'"};
  const nlohmann::json& f = req["features"];
  if (!f.is_object()) throw FieldError{"features", "'features' must be an object"};
  return f;
}

double OptionalThreshold(const nlohmann::json& req, double fallback) {
  if (!req.contains("threshold") || req["threshold"].is_null()) return fallback;
  const nlohmann::json& t = req["threshold"];
  if (!t.is_number() || !(t.get<double>() >= 0.0 && t.get<double>() <= 1.0)) {
    throw FieldError{"threshold", "'threshold' must be a number in [0, 1]"};
  }
  return t.get<double>();
}

std::size_t OptionalCount(const nlohmann::json& req, const std::string& name, std::size_t fallback,
                          std::size_t lo, std::size_t hi) {
  if (!req.contains(name) || req[name].is_null()) return fallback;
  const nlohmann::json& v = req[name];
  if (!v.is_number_integer() || v.get<long long>() < static_cast<long long>(lo) ||
      v.get<long long>() > static_cast<long long>(hi)) {
    throw FieldError{name, "'" + name + "' must be an integer in [" + std::to_string(lo) + ", " +
                               std::to_string(hi) + "]"};
  }
  return static_cast<std::size_t>(v.get<long long>());
}

}  // namespace

int PortFromEnvironment(int fallback) {
  const char* env = std::getenv("TABRISK_PORT");
  if (env == nullptr || *env == '\0') return fallback;
  char* end = nullptr;
  const long v = std::strtol(env, &end, 10);
  if (*end != '\0' || v < 0 || v > 65535) return fallback;
  return static_cast<int>(v);
}

Service::Service(EnsembleModel model, Dataset pool, ServiceOptions options)
    : model_(std::move(model)), options_(std::move(options)) {
  model_.Validate();
  search_ = std::make_unique<CounterfactualSearch>(model_, std::move(pool));
}

Service::~Service() { Stop(); }

Service::Response Service::ModelInfo() const {
  nlohmann::json backbones = nlohmann::json::array();
  for (const MlpModel& m : model_.members) backbones.push_back(ToString(m.backbone));
  return {200,
          {{"members", model_.members.size()},
           {"backbones", backbones},
           {"alphas", model_.alphas},
           {"fallback", model_.fallback},
           {"gate", model_.gate},
           {"threshold", model_.threshold},
           {"training", model_.training_info},
           {"pool_size", search_->pool().size()}}};
}

Service::Response Service::Predict(const nlohmann::json& req) const {
  const std::vector<double> x = EncodeFeatureMap(*model_.schema, RequireFeatures(req));
  const double threshold = OptionalThreshold(req, model_.threshold);
  const double p = model_.PredictProba(x);
  return {200,
          {{"probability", p},
           {"class", Classify(p, threshold)},
           {"threshold", threshold},
           {"member_probabilities", model_.MemberProbabilities(x)},
           {"alphas", model_.alphas}}};
}

Service::Response Service::CounterfactualFor(const nlohmann::json& req) const {
  const std::vector<double> x = EncodeFeatureMap(*model_.schema, RequireFeatures(req));
  const std::size_t d = model_.schema->num_features();
  const std::size_t max_changes = OptionalCount(req, "max_changes", d, 0, d);
  const double threshold = OptionalThreshold(req, model_.threshold);
  Counterfactual cf;
  if (threshold == model_.threshold) {
    cf = search_->Generate(CaseRecord{x, std::nullopt}, max_changes);
  } else {
    EnsembleModel m = model_;
    m.threshold = threshold;
    cf = CounterfactualSearch(m, search_->pool()).Generate(CaseRecord{x, std::nullopt}, max_changes);
  }
  nlohmann::json body = cf.ToJson(*model_.schema);
  body["threshold"] = threshold;
  body["original_class"] = Classify(cf.original_prob, threshold);
  body["counterfactual_class"] = Classify(cf.counterfactual_prob, threshold);
  return {200, body};
}

Service::Response Service::AttributionFor(const nlohmann::json& req) const {
  const std::vector<double> x = EncodeFeatureMap(*model_.schema, RequireFeatures(req));
  const std::size_t n = OptionalCount(req, "n_samples", options_.default_n_samples, 1, options_.max_n_samples);
  std::uint64_t seed = options_.default_seed;
  if (req.contains("seed") && !req["seed"].is_null()) {
    if (!req["seed"].is_number_unsigned()) throw FieldError{"seed", "'seed' must be a non-negative integer"};
    seed = req["seed"].get<std::uint64_t>();
  }
  nlohmann::json body = ShapleyAttribution(model_, x, search_->pool(), n, seed).ToJson();
  body["seed"] = seed;
  return {200, body};
}

Service::Response Service::Handle(const std::string& method, const std::string& path,
                                  const std::string& body) const {
  try {
    if (method == "GET") {
      if (path == "/health") return {200, {{"status", "ok"}}};
      if (path == "/schema") {
        nlohmann::json s = model_.schema->ToJson();
        s["threshold"] = model_.threshold;
        return {200, s};
      }
      if (path == "/model") return ModelInfo();
    } else if (method == "POST" &&
               (path == "/predict" || path == "/counterfactual" || path == "/attribution")) {
      nlohmann::json req;
      try {
        req = nlohmann::json::parse(body);
      } catch (const nlohmann::json::parse_error& ex) {
        return ErrorResponse(400, "malformed_json", ex.what());
      }
      if (path == "/predict") return Predict(req);
      if (path == "/counterfactual") return CounterfactualFor(req);
      return AttributionFor(req);
    }
    return ErrorResponse(404, "not_found", "no route for " + method + " " + path);
  } catch (const FieldError& e) {
    return ErrorResponse(422, "invalid_field", e.message, e.field);
  } catch (const DataError& e) {
    return ErrorResponse(422, "invalid_field", e.what(), e.column());
  } catch (const std::exception& e) {
    char id[32];
    std::snprintf(id, sizeof id, "E%08llx", static_cast<unsigned long long>(++error_counter_));
    std::cerr << "request " << method << ' ' << path << " failed [" << id << "]: " << e.what() << '\n';
    Response r = ErrorResponse(500, "internal", "internal error");
    r.body["error"]["id"] = id;
    return r;
  }
}

int Service::Bind() {
  server_ = std::make_unique<httplib::Server>();
  server_->set_default_headers({{"Access-Control-Allow-Origin", "*"},
                                {"Access-Control-Allow-Methods", "GET, POST, OPTIONS"},
                                {"Access-Control-Allow-Headers", "Content-Type"}});
  auto route = [this](const httplib::Request& req, httplib::Response& res) {
    const Response r = Handle(req.method, req.path, req.body);
    res.status = r.status;
    res.set_content(r.body.dump(), "application/json");
  };
  server_->Get(R"(/.*)", route);
  server_->Post(R"(/.*)", route);
  server_->Options(R"(/.*)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });
  int port = options_.port;
  if (port == 0) {
    port = server_->bind_to_any_port(options_.host);
  } else if (!server_->bind_to_port(options_.host, port)) {
    port = -1;
  }
  if (port < 0) throw Error("cannot bind " + options_.host + ":" + std::to_string(options_.port));
  return port;
}

bool Service::Run() {
  if (!server_) Bind();
  return server_->listen_after_bind();
}

void Service::Stop() {
  if (server_) server_->stop();
}

}  // namespace tabrisk
