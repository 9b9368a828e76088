#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>

#include "rcb/rcb.hpp"

namespace fs = std::filesystem;

namespace {

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out = "out";
  std::optional<std::uint64_t> budget;
  unsigned threads = 1;
};

rcb::ScenarioConfig load(const Common& c) {
  rcb::ScenarioConfig cfg = rcb::load_config(c.config);
  if (c.seed) cfg.seed = *c.seed;
  if (c.budget) cfg.table_trials = *c.budget;
  return cfg;
}

void print_progress(const rcb::TableProgress& p) {
  std::fprintf(stderr, "  N=%u k=%u failures=%llu/%llu\n", p.N, p.k,
               static_cast<unsigned long long>(p.estimate.failures),
               static_cast<unsigned long long>(p.estimate.trials));
}

void print_table_summary(const rcb::FailureTable& t, double zeta) {
  std::printf("%8s %6s %10s %12s %10s %10s\n", "N", "cells", "k_floor", "slope", "fit", "k(zeta)");
  for (std::uint32_t N : t.rows()) {
    std::size_t cells = 0;
    for (const auto& c : t.cells())
      if (c.N == N) ++cells;
    const rcb::FailureFit* f = t.fit(N);
    const auto k = t.largest_k(N, zeta);
    std::printf("%8u %6zu %10u %12.6g %10s %10s\n", N, cells, f ? f->k_floor : 0u, f ? f->slope : 0.0,
                f && f->valid ? "valid" : "none", k ? std::to_string(*k).c_str() : "-");
  }
}

int cmd_simulate(const Common& c) {
  const rcb::ScenarioConfig cfg = load(c);
  rcb::ScenarioOptions opt;
  opt.threads = c.threads;
  opt.table_progress = print_progress;
  opt.on_epoch = [](const rcb::EpochRecord& r) {
    if (r.epoch % 10 == 0) {
      std::fprintf(stderr, "epoch %llu: nodes=%llu W=%llu sum_k=%llu groups=%llu R_s=%.5f\n",
                   static_cast<unsigned long long>(r.epoch), static_cast<unsigned long long>(r.nodes),
                   static_cast<unsigned long long>(r.W), static_cast<unsigned long long>(r.sum_k),
                   static_cast<unsigned long long>(r.groups), r.R_s);
    }
  };
  const rcb::ScenarioResult r = rcb::run_scenario(cfg, opt);
  rcb::write_scenario_outputs(r, c.out);
  const auto& k = r.counters;
  std::printf("%s\n", r.message.c_str());
  std::printf("enhanced blocks mined: %zu\n", r.history.size());
  std::printf("group joins: %llu  repairs: %llu  fallbacks: %llu  groups lost: %llu\n",
              static_cast<unsigned long long>(k.group_joins), static_cast<unsigned long long>(k.repairs),
              static_cast<unsigned long long>(k.fallbacks), static_cast<unsigned long long>(k.groups_lost));
  if (!r.metrics.empty()) std::printf("final R_s: %.6f\n", r.metrics.back().R_s);
  std::printf("outputs written to %s\n", c.out.c_str());
  return r.exit_code();
}

int cmd_build_table(const Common& c) {
  const rcb::ScenarioConfig cfg = load(c);
  if (cfg.table_trials == 0) {
    std::fprintf(stderr, "build-table: budget must be > 0\n");
    return 1;
  }
  std::fprintf(stderr, "building failure table: %zu cells, %llu trials each\n", cfg.table_grid().size(),
               static_cast<unsigned long long>(cfg.table_trials));
  const rcb::FailureTable t = rcb::build_failure_table(cfg.table_grid(), cfg.failure_model(), cfg.table_trials,
                                                       cfg.effective_table_seed(), c.threads, print_progress);
  if (t.empty()) {
    std::fprintf(stderr, "build-table: no cell completed\n");
    return 1;
  }
  fs::create_directories(c.out);
  {
    std::ofstream os(fs::path(c.out) / "failure_table.csv", std::ios::binary);
    t.write_csv(os);
  }
  {
    std::ofstream os(fs::path(c.out) / "failure_table_fit.csv", std::ios::binary);
    t.write_fit_csv(os);
  }
  print_table_summary(t, cfg.zeta);
  return 0;
}

int cmd_inspect_table(const std::string& path, double zeta) {
  std::ifstream in(path);
  if (!in) {
    std::fprintf(stderr, "inspect-table: cannot open %s\n", path.c_str());
    return 1;
  }
  const rcb::FailureTable t = rcb::FailureTable::read_csv(in);
  std::printf("%zu cells over %zu rows\n", t.cells().size(), t.rows().size());
  print_table_summary(t, zeta);
  return 0;
}

int cmd_metrics(const std::string& dir, std::uint64_t block_bytes) {
  std::ifstream ev(fs::path(dir) / "events.csv");
  std::ifstream me(fs::path(dir) / "metrics.csv");
  if (!ev || !me) {
    std::fprintf(stderr, "metrics: %s must hold events.csv and metrics.csv\n", dir.c_str());
    return 1;
  }
  const auto events = rcb::read_events_csv(ev);
  const auto metrics = rcb::MetricsLedger::read_csv(me);
  std::map<std::uint64_t, std::uint64_t> W;
  for (const auto& r : metrics.records()) W[r.epoch] = r.W;
  const auto s = rcb::communication_metrics(events, W, block_bytes);

  std::printf("epoch,R_s,mean_coded_bytes,mean_pool_bytes,comm_reduction\n");
  for (const auto& r : metrics.records()) {
    const double rs = rcb::storage_reduction(r.W, r.sum_k, r.groups);
    auto get = [&](const std::map<std::uint64_t, double>& m) {
      auto it = m.find(r.epoch);
      return it == m.end() ? 0.0 : it->second;
    };
    std::printf("%llu,%.8f,%.1f,%.1f,%.8f\n", static_cast<unsigned long long>(r.epoch), rs, get(s.mean_coded_bytes),
                get(s.mean_pool_bytes), get(s.reduction));
  }
  std::fprintf(stderr, "group joins: %llu  P(blocks <= 10) = %.4f\n", static_cast<unsigned long long>(s.group_joins),
               s.cdf_at(10));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Rateless-coded blockchain storage simulator"};
  app.require_subcommand(1);

  Common sim;
  auto* simulate = app.add_subcommand("simulate", "Run a scenario and write its CSV outputs");
  Common tab;
  auto* build = app.add_subcommand("build-table", "Estimate the failure table for a config");
  for (auto [sub, c] : {std::pair{simulate, &sim}, std::pair{build, &tab}}) {
    sub->add_option("--config", c->config, "Scenario config file")->required()->check(CLI::ExistingFile);
    sub->add_option("--seed", c->seed, "Override the config seed");
    sub->add_option("--out", c->out, "Output directory");
    sub->add_option("--budget", c->budget, "Monte Carlo trials per table cell");
    sub->add_option("--threads", c->threads, "Worker threads for the table build")->check(CLI::PositiveNumber);
  }

  std::string table_path;
  double zeta = 1e-12;
  auto* inspect = app.add_subcommand("inspect-table", "Summarise a failure table file");
  inspect->add_option("--table", table_path, "failure_table.csv")->required()->check(CLI::ExistingFile);
  inspect->add_option("--zeta", zeta, "Failure target used for the k column");

  std::string metrics_dir;
  std::uint64_t block_bytes = 125000;
  auto* metrics = app.add_subcommand("metrics", "Recompute storage and communication figures from a run");
  metrics->add_option("--out", metrics_dir, "Directory of a simulate run")->required()->check(CLI::ExistingDirectory);
  metrics->add_option("--block-bytes", block_bytes, "Bytes per block");

  CLI11_PARSE(app, argc, argv);
  try {
    if (*simulate) return cmd_simulate(sim);
    if (*build) return cmd_build_table(tab);
    if (*inspect) return cmd_inspect_table(table_path, zeta);
    if (*metrics) return cmd_metrics(metrics_dir, block_bytes);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 1;
}
