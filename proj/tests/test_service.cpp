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

#include <chrono>
#include <cstdlib>
#include <thread>

#include "doctest.h"
#include "tabrisk/benchmark_data.hpp"
#include "tabrisk/errors.hpp"
#include "tabrisk/service.hpp"
#include "test_util.hpp"

// After Eigen: resolv.h defines a _res macro that collides with Eigen internals.
#include "httplib.h"

using namespace tabrisk;
using nlohmann::json;

namespace {

struct Fixture {
  EnsembleModel model;
  Dataset pool;
};

// A small ensemble trained on the benchmark generator.
const Fixture& Trained() {
  static const Fixture f = [] {
    BenchmarkConfig bc;
    bc.n_total = 600;
    bc.n_positive = 200;
    bc.seed = 5;
    const Dataset data = GenerateBenchmarkDataset(bc, testing::BenchmarkSchema());
    const ScalerParams sc = FitMinMax(data);
    TrainConfig tc;
    tc.k_folds = 3;
    tc.max_epochs = 30;
    tc.learning_rate = 3e-3;
    EnsembleModel e = BuildEnsemble(KFoldTrain(MakeLabeledMatrix(data, sc), Backbone::kV1, tc), sc,
                                    data.schema_ptr());
    return Fixture{std::move(e), data};
  }();
  return f;
}

json FeatureMap(const FeatureSchema& s, const std::vector<double>& x) { return DecodeFeatureMap(s, x); }

// A pool record the ensemble classifies as 1.
std::vector<double> AbnormalCase(const Fixture& f) {
  for (const CaseRecord& r : f.pool.records()) {
    if (f.model.Predict(r.x) == 1) return r.x;
  }
  FAIL("no abnormal-classified record");
  return {};
}

std::string Body(const json& j) { return j.dump(); }

}  // namespace

TEST_CASE("health, schema and model routes") {
  const Fixture& f = Trained();
  const Service svc(f.model, f.pool);
  CHECK(svc.Handle("GET", "/health", "").body["status"] == "ok");
  const auto schema = svc.Handle("GET", "/schema", "");
  CHECK(schema.status == 200);
  CHECK(FeatureSchema::FromJson(schema.body) == *f.model.schema);
  const auto model = svc.Handle("GET", "/model", "");
  CHECK(model.body["alphas"].size() == 3);
  CHECK(model.body["gate"] == 0.7);
  CHECK(svc.Handle("GET", "/nope", "").status == 404);
  CHECK(svc.Handle("DELETE", "/predict", "").status == 404);
}

TEST_CASE("predict") {
  const Fixture& f = Trained();
  const Service svc(f.model, f.pool);
  const std::vector<double>& x = f.pool.record(3).x;
  const auto r = svc.Handle("POST", "/predict", Body({{"features", FeatureMap(*f.model.schema, x)}}));
  REQUIRE(r.status == 200);
  const double p = r.body["probability"];
  CHECK(p == f.model.PredictProba(x));
  CHECK(p > 0.0);
  CHECK(p < 1.0);
  CHECK(r.body["class"] == f.model.Predict(x));
  CHECK(r.body["member_probabilities"].size() == 3);
  CHECK(svc.Handle("POST", "/predict", Body({{"features", FeatureMap(*f.model.schema, x)}})).body == r.body);

  const auto zero = svc.Handle("POST", "/predict",
                               Body({{"features", FeatureMap(*f.model.schema, x)}, {"threshold", 0.0}}));
  CHECK(zero.body["class"] == 1);
  CHECK(zero.body["threshold"] == 0.0);
}

TEST_CASE("validation errors") {
  const Fixture& f = Trained();
  const Service svc(f.model, f.pool);
  json features = FeatureMap(*f.model.schema, f.pool.record(0).x);
  const std::string dropped = f.model.schema->feature(5).name;
  json missing = features;
  missing.erase(dropped);
  auto r = svc.Handle("POST", "/predict", Body({{"features", missing}}));
  CHECK(r.status == 422);
  CHECK(r.body["error"]["code"] == "invalid_field");
  CHECK(r.body["error"]["field"] == dropped);

  json extra = features;
  extra["not_a_feature"] = 1;
  r = svc.Handle("POST", "/predict", Body({{"features", extra}}));
  CHECK(r.status == 422);
  CHECK(r.body["error"]["field"] == "not_a_feature");

  r = svc.Handle("POST", "/predict", "{not json");
  CHECK(r.status == 400);
  CHECK(r.body["error"]["code"] == "malformed_json");

  r = svc.Handle("POST", "/predict", Body({{"features", features}, {"threshold", 2}}));
  CHECK(r.status == 422);
  CHECK(r.body["error"]["field"] == "threshold");

  r = svc.Handle("POST", "/predict", Body({{"x", 1}}));
  CHECK(r.status == 422);
  CHECK(r.body["error"]["field"] == "features");

  r = svc.Handle("POST", "/attribution", Body({{"features", features}, {"n_samples", 0}}));
  CHECK(r.status == 422);
  CHECK(r.body["error"]["field"] == "n_samples");

  r = svc.Handle("POST", "/counterfactual", Body({{"features", features}, {"max_changes", -1}}));
  CHECK(r.status == 422);
  CHECK(r.body["error"]["field"] == "max_changes");
}

TEST_CASE("counterfactual round trip through predict") {
  const Fixture& f = Trained();
  const Service svc(f.model, f.pool);
  const auto cf = svc.Handle("POST", "/counterfactual",
                             Body({{"features", FeatureMap(*f.model.schema, AbnormalCase(f))}}));
  REQUIRE(cf.status == 200);
  CHECK(cf.body["original_class"] == 1);
  CHECK(cf.body["flipped"] == true);
  CHECK(cf.body["counterfactual_class"] == 0);
  CHECK(cf.body["changed_features"].size() >= 1);
  const auto again = svc.Handle("POST", "/predict", Body({{"features", cf.body["counterfactual"]}}));
  REQUIRE(again.status == 200);
  CHECK(again.body["class"] == 0);
  CHECK(again.body["probability"] == cf.body["counterfactual_prob"]);
}

TEST_CASE("attribution is seeded") {
  const Fixture& f = Trained();
  const Service svc(f.model, f.pool);
  const json req = {{"features", FeatureMap(*f.model.schema, f.pool.record(1).x)}, {"n_samples", 50}, {"seed", 3}};
  const auto a = svc.Handle("POST", "/attribution", Body(req));
  REQUIRE(a.status == 200);
  CHECK(a.body["features"].size() == f.model.schema->num_features());
  CHECK(a.body["n_samples"] == 50);
  CHECK(svc.Handle("POST", "/attribution", Body(req)).body == a.body);
}

TEST_CASE("http integration on an ephemeral port") {
  const Fixture& f = Trained();
  ServiceOptions opt;
  opt.port = 0;
  Service svc(f.model, f.pool, opt);
  const int port = svc.Bind();
  REQUIRE(port > 0);
  std::thread server([&] { svc.Run(); });

  httplib::Client cli("127.0.0.1", port);
  cli.set_connection_timeout(5);
  httplib::Result health;
  for (int i = 0; i < 50 && !(health = cli.Get("/health")); ++i) {
    std::this_thread::sleep_for(std::chrono::milliseconds(20));
  }
  REQUIRE(health);
  CHECK(health->status == 200);
  CHECK(health->get_header_value("Access-Control-Allow-Origin") == "*");

  const json features = FeatureMap(*f.model.schema, AbnormalCase(f));
  auto pred = cli.Post("/predict", Body({{"features", features}}), "application/json");
  REQUIRE(pred);
  CHECK(pred->status == 200);
  CHECK(json::parse(pred->body)["class"] == 1);

  auto cf = cli.Post("/counterfactual", Body({{"features", features}}), "application/json");
  REQUIRE(cf);
  const json cfj = json::parse(cf->body);
  auto back = cli.Post("/predict", Body({{"features", cfj["counterfactual"]}}), "application/json");
  REQUIRE(back);
  CHECK(json::parse(back->body)["class"] == 0);

  auto bad = cli.Post("/predict", "{", "application/json");
  REQUIRE(bad);
  CHECK(bad->status == 400);

  auto opts = cli.Options("/predict");
  REQUIRE(opts);
  CHECK(opts->status == 204);
  CHECK(opts->get_header_value("Access-Control-Allow-Methods").find("POST") != std::string::npos);

  svc.Stop();
  server.join();
}

TEST_CASE("port from environment") {
  setenv("TABRISK_PORT", "9123", 1);
  CHECK(PortFromEnvironment(8080) == 9123);
  setenv("TABRISK_PORT", "abc", 1);
  CHECK(PortFromEnvironment(8080) == 8080);
  unsetenv("TABRISK_PORT");
  CHECK(PortFromEnvironment(8080) == 8080);
}
