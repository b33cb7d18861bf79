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

#include <CLI11.hpp>

#include <atomic>
#include <chrono>
#include <cstdlib>
#include <fstream>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <fmt/format.h>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "drilmpc/config.hpp"
#include "drilmpc/errors.hpp"
#include "drilmpc/iterate.hpp"
#include "drilmpc/report.hpp"

namespace fs = std::filesystem;
using namespace drilmpc;

namespace {

struct Overrides {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<double> theta;
  std::optional<int> iterations;
  int jobs = 1;
};

config::ExperimentConfig load(const Overrides& o) {
  auto cfg = o.config.empty() ? config::ExperimentConfig{} : config::parse_config(o.config);
  if (o.seed) cfg.seed = *o.seed;
  if (o.out) cfg.output.directory = *o.out;
  if (o.theta) cfg.options.theta = *o.theta;
  if (o.iterations) cfg.iterations = *o.iterations;
  cfg.validate();
  return cfg;
}

iterate::ExperimentReport execute(const config::ExperimentConfig& cfg, const fs::path& dir) {
  const auto start = std::chrono::steady_clock::now();
  auto report = iterate::run_experiment(cfg.scenario, cfg.options, cfg.seed_inputs, cfg.n0, cfg.iterations, cfg.seed,
                                        cfg.output.checkpoints ? dir / "checkpoints" : fs::path{});
  report::emit_report(report, cfg, dir);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  spdlog::info("theta={} seed={}: {} iterations in {:.1f}s, {} colliding, final cost {:.6g} -> {}", cfg.options.theta,
               cfg.seed, report.records.size(), secs, report.colliding_iterations(),
               report.records.empty() ? report.seed_traj.total_cost() : report.records.back().cost, dir.string());
  return report;
}

// Runs task(i) for i in [0, n) on up to `jobs` threads; the first exception is rethrown.
template <typename F>
void parallel_for(std::size_t n, int jobs, F task) {
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex mu;
  auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        task(i);
      } catch (...) {
        std::lock_guard lock(mu);
        if (!error) error = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  for (int k = 1; k < std::max(1, jobs) && static_cast<std::size_t>(k) < n; ++k) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

std::uint64_t stream_seed(std::uint64_t base, std::uint64_t i) {
  std::uint64_t z = base + 0x9E3779B97F4A7C15ULL * (i + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

void write_text(const fs::path& p, const std::string& text) {
  fs::create_directories(p.parent_path());
  std::ofstream(p, std::ios::binary) << text;
}

int cmd_run(const Overrides& o) {
  const auto cfg = load(o);
  execute(cfg, cfg.output.directory);
  return 0;
}

int cmd_sweep(const Overrides& o, int seeds) {
  const auto base = load(o);
  std::vector<double> thetas = base.sweep_thetas;
  if (o.theta) thetas = {*o.theta};
  struct Row {
    double theta;
    std::uint64_t seed;
    double cost;
    int colliding;
    double clearance;
    double safety;
  };
  std::vector<Row> rows(thetas.size() * static_cast<std::size_t>(seeds));
  parallel_for(rows.size(), o.jobs, [&](std::size_t k) {
    auto cfg = base;
    cfg.options.theta = thetas[k / static_cast<std::size_t>(seeds)];
    cfg.seed = base.seed + k % static_cast<std::size_t>(seeds);
    fs::path dir = fs::path(base.output.directory) / fmt::format("theta_{}", cfg.options.theta);
    if (seeds > 1) dir /= fmt::format("seed_{}", cfg.seed);
    const auto rep = execute(cfg, dir);
    const auto& last = rep.records.empty() ? rep.seed_traj : rep.records.back().run.traj;
    rows[k] = {cfg.options.theta, cfg.seed, last.total_cost(), rep.colliding_iterations(),
               report::min_clearance(cfg.scenario.obstacle, last), rep.safety_frequency()};
  });
  std::string csv = "theta,seed,final_cost,colliding_iterations,final_min_clearance,safety_frequency\n";
  for (const auto& r : rows) {
    csv += fmt::format("{:.17g},{},{:.17g},{},{:.17g},{:.17g}\n", r.theta, r.seed, r.cost, r.colliding, r.clearance,
                       r.safety);
  }
  write_text(fs::path(base.output.directory) / "sweep.csv", csv);
  fmt::print("{}", csv);
  return 0;
}

int cmd_replicate(const Overrides& o, int n) {
  const auto base = load(o);
  struct Row {
    std::uint64_t seed;
    int colliding;
    double safety;
    double cost;
  };
  std::vector<Row> rows(static_cast<std::size_t>(n));
  parallel_for(rows.size(), o.jobs, [&](std::size_t k) {
    const auto seed = stream_seed(base.seed, k);
    const auto rep = iterate::run_experiment(base.scenario, base.options, base.seed_inputs, base.n0,
                                             base.iterations, seed);
    rows[k] = {seed, rep.colliding_iterations(), rep.safety_frequency(),
               rep.records.empty() ? rep.seed_traj.total_cost() : rep.records.back().cost};
  });
  std::string csv = "replication,seed,colliding_iterations,safety_frequency,final_cost\n";
  double mean_safety = 0.0, mean_colliding = 0.0;
  for (std::size_t k = 0; k < rows.size(); ++k) {
    csv += fmt::format("{},{},{},{:.17g},{:.17g}\n", k, rows[k].seed, rows[k].colliding, rows[k].safety, rows[k].cost);
    mean_safety += rows[k].safety / static_cast<double>(n);
    mean_colliding += rows[k].colliding / static_cast<double>(n);
  }
  write_text(fs::path(base.output.directory) / "replicate.csv", csv);
  fmt::print("replications            {}\n", n);
  fmt::print("theta                   {}\n", base.options.theta);
  fmt::print("iterations each         {}\n", base.iterations);
  fmt::print("mean safety frequency   {:.6f}\n", mean_safety);
  fmt::print("mean colliding iters    {:.6f}\n", mean_colliding);
  return 0;
}

int cmd_check(const std::string& dir) {
  bool ok = true;
  for (const auto& item : report::check_report(dir)) {
    fmt::print("{:<20} {}  {}\n", item.name, item.ok ? "ok  " : "FAIL", item.detail);
    ok = ok && item.ok;
  }
  return ok ? 0 : 1;
}

void add_common(CLI::App* sub, Overrides& o) {
  sub->add_option("--config", o.config, "JSON experiment config (benchmark defaults if omitted)")->check(CLI::ExistingFile);
  sub->add_option("--seed", o.seed, "override the experiment seed");
  sub->add_option("--out", o.out, "output directory");
  sub->add_option("--theta", o.theta, "override the ambiguity radius");
  sub->add_option("--iterations", o.iterations, "override the iteration count");
  sub->add_option("--jobs", o.jobs, "worker threads")->check(CLI::PositiveNumber);
}

}  // namespace

int main(int argc, char** argv) {
  spdlog::set_default_logger(spdlog::stderr_color_mt("drilmpc"));
  const char* level = std::getenv("DRILMPC_LOG");
  spdlog::set_level(level ? spdlog::level::from_str(level) : spdlog::level::info);

  CLI::App app{"Iterative distributionally robust risk-constrained MPC"};
  app.require_subcommand(1);
  Overrides o;
  int seeds = 1;
  int reps = 200;
  std::string check_dir = "out";

  auto* run = app.add_subcommand("run", "run one experiment and write its report");
  add_common(run, o);
  auto* sweep = app.add_subcommand("sweep", "run the experiment for every radius in sweep.thetas");
  add_common(sweep, o);
  sweep->add_option("--seeds", seeds, "consecutive seeds per radius")->check(CLI::PositiveNumber);
  auto* replicate = app.add_subcommand("replicate", "Monte-Carlo safety study over independent sample streams");
  add_common(replicate, o);
  replicate->add_option("--n", reps, "number of replications")->check(CLI::PositiveNumber);
  auto* check = app.add_subcommand("check", "re-verify a finished report directory");
  check->add_option("--out,dir", check_dir, "report directory")->check(CLI::ExistingDirectory);

  CLI11_PARSE(app, argc, argv);
  try {
    if (run->parsed()) return cmd_run(o);
    if (sweep->parsed()) return cmd_sweep(o, seeds);
    if (replicate->parsed()) return cmd_replicate(o, reps);
    if (check->parsed()) return cmd_check(check_dir);
  } catch (const ConfigError& e) {
    spdlog::error("{}", e.what());
    return 2;
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return 1;
  }
  return 0;
}
