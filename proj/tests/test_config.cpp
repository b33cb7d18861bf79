// Copyright 2026 The drilmpc Authors
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <string>

#include "drilmpc/config.hpp"
#include "drilmpc/errors.hpp"

using namespace drilmpc;

namespace {

std::string error_of(const std::string& text) {
  try {
    config::parse_config_text(text, "cfg.json");
  } catch (const ConfigError& e) {
    return e.what();
  }
  return {};
}

}  // namespace

TEST_CASE("an empty object yields the benchmark defaults") {
  const auto cfg = config::parse_config_text("{}");
  const auto bench = ocp::Scenario::benchmark();
  CHECK(cfg.scenario.start.isApprox(bench.start));
  CHECK(cfg.scenario.target == bench.target);
  CHECK(cfg.scenario.risk.beta == 0.05);
  CHECK(cfg.scenario.risk.delta == 0.02);
  CHECK(cfg.scenario.support->size() == 15);
  CHECK(cfg.options.theta == 0.05);
  CHECK(cfg.options.mpc.horizon == 5);
  CHECK(cfg.options.mpc.eps_term == 1e-2);
  CHECK(cfg.options.mpc.t_max == 500);
  CHECK(cfg.n0 == 5);
  CHECK(cfg.iterations == 20);
  CHECK(cfg.seed_inputs.empty());
  CHECK(cfg.sweep_thetas.size() == 4);
}

TEST_CASE("algorithm keys override the defaults") {
  const auto cfg = config::parse_config_text(
      R"({"algorithm": {"horizon": 7, "beta": 0.1, "delta": 0.05, "theta": 0.2, "theta_decay": 0.9,
          "n0": 3, "iterations": 4, "seed": 11, "freeze_dataset": true},
          "scenario": {"input_lower": [-0.2, -0.2], "input_upper": [0.2, 0.2]}})");
  CHECK(cfg.options.mpc.horizon == 7);
  CHECK(cfg.scenario.risk.beta == 0.1);
  CHECK(cfg.scenario.risk.delta == 0.05);
  CHECK(cfg.options.theta == 0.2);
  CHECK(cfg.options.theta_decay == 0.9);
  CHECK(cfg.options.freeze_dataset);
  CHECK(cfg.n0 == 3);
  CHECK(cfg.iterations == 4);
  CHECK(cfg.seed == 11);
  CHECK(cfg.scenario.input_box.upper(0) == 0.2);
}

TEST_CASE("out of range parameters are rejected with the key path") {
  const auto beta = error_of(R"({"algorithm": {"beta": 0}})");
  CHECK(beta.find("algorithm.beta") != std::string::npos);
  const auto theta = error_of(R"({"algorithm": {"theta": 1.5}})");
  CHECK(theta.find("algorithm.theta") != std::string::npos);
  CHECK_FALSE(error_of(R"({"algorithm": {"delta": -1}})").empty());
  CHECK_FALSE(error_of(R"({"algorithm": {"horizon": 0}})").empty());
  CHECK_FALSE(error_of(R"({"algorithm": {"n0": 0}})").empty());
  CHECK_FALSE(error_of(R"({"algorithm": {"theta_decay": 0}})").empty());
  CHECK_FALSE(error_of(R"({"algorithm": {"confidence": 1}})").empty());
}

TEST_CASE("unknown keys are reported with file and line") {
  const auto msg = error_of("{\n  \"algorithm\": {\n    \"horizn\": 5\n  }\n}\n");
  CHECK(msg.find("cfg.json:3") != std::string::npos);
  CHECK(msg.find("horizn") != std::string::npos);
  CHECK_FALSE(error_of(R"({"scenario": {"obstacle": {"radius": 1}}})").empty());
}

TEST_CASE("malformed input and wrong shapes are config errors") {
  CHECK_FALSE(error_of("{\"algorithm\": ").empty());
  CHECK_FALSE(error_of(R"({"algorithm": {"horizon": "five"}})").empty());
  CHECK_FALSE(error_of(R"({"scenario": {"start": [0, 0, 0]}})").empty());
  CHECK_FALSE(error_of(R"({"scenario": {"Q": [[1, 0], [0, 1]]}})").empty());
  CHECK_FALSE(error_of(R"({"scenario": {"true_distribution": {"family": "poisson"}}})").empty());
  CHECK_THROWS_AS(config::parse_config("/nonexistent/cfg.json"), ConfigError);
}

TEST_CASE("explicit supports and probabilities are accepted") {
  const auto cfg = config::parse_config_text(
      R"({"scenario": {"support": {"points": [-0.2, 0.0, 0.3]},
          "true_distribution": {"family": "explicit", "probs": [0.25, 0.5, 0.25]}}})");
  REQUIRE(cfg.scenario.support->size() == 3);
  CHECK((*cfg.scenario.support)[2] == 0.3);
  CHECK(cfg.scenario.true_probs[1] == 0.5);
  CHECK_FALSE(error_of(R"({"scenario": {"support": {"points": [-0.2, 0.0, 0.3]},
      "true_distribution": {"family": "explicit", "probs": [0.5, 0.5]}}})").empty());
}

TEST_CASE("dumped configs parse back to the same dump") {
  auto cfg = config::parse_config_text(R"({"algorithm": {"theta": 0.123456789012345678, "seed": 42},
      "scenario": {"seed_inputs": [[0.1, 0.2], [-0.1, -0.2]]}})");
  const auto text = config::dump_config(cfg);
  const auto again = config::parse_config_text(text);
  CHECK(config::dump_config(again) == text);
  CHECK(again.options.theta == cfg.options.theta);
  CHECK(again.seed == 42);
  REQUIRE(again.seed_inputs.size() == 2);
  CHECK(again.seed_inputs[1](1) == -0.2);
}

TEST_CASE("the shipped configs are valid") {
  for (const char* name : {"benchmark.json", "benchmark_slow.json"}) {
    CAPTURE(name);
    const auto path = std::filesystem::path(DRILMPC_SOURCE_DIR) / "configs" / name;
    CHECK_NOTHROW(config::parse_config(path));
  }
}
