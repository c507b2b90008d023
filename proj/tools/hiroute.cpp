// Command-line front end: run, sweep, validate, report.

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <tuple>
#include <vector>

#include "CLI11.hpp"
#include "hiroute/config.hpp"
#include "hiroute/engine.hpp"
#include "hiroute/validation.hpp"
#include "json.hpp"

namespace fs = std::filesystem;
using namespace hiroute;

namespace {

struct CommonArgs {
  std::string config;
  std::vector<std::string> overrides;
  std::string out;
  int jobs = 1;
  std::uint64_t seed_offset = 0;
};

void add_common(CLI::App* sub, CommonArgs& a) {
  sub->add_option("--config", a.config, "experiment config (JSON)");
  sub->add_option("--override", a.overrides, "dotted key=value, repeatable")->take_all();
  sub->add_option("--out", a.out, "output directory (default: output.dir)");
  sub->add_option("--jobs", a.jobs, "concurrent runs")->check(CLI::PositiveNumber);
  sub->add_option("--seed-offset", a.seed_offset, "added to every configured seed");
}

ExperimentConfig resolve(const CommonArgs& a) {
  ExperimentConfig cfg = a.config.empty() ? ExperimentConfig{} : load_config(a.config);
  cfg = apply_overrides(cfg, a.overrides);
  for (auto& s : cfg.seeds) s += a.seed_offset;
  return cfg;
}

fs::path out_dir(const CommonArgs& a, const ExperimentConfig& cfg) {
  return a.out.empty() ? fs::path(cfg.output.dir) : fs::path(a.out);
}

/// Runs fn(i) for i in [0, n) on up to `workers` threads.
template <class F>
void parallel_for(std::size_t n, int workers, F&& fn) {
  std::atomic<std::size_t> next{0};
  auto loop = [&] {
    for (std::size_t i = next++; i < n; i = next++) fn(i);
  };
  std::vector<std::thread> pool;
  const int extra = std::min<int>(workers, static_cast<int>(n)) - 1;
  for (int w = 0; w < extra; ++w) pool.emplace_back(loop);
  loop();
  for (auto& t : pool) t.join();
}

std::string pm(const std::vector<double>& xs) {
  const auto r = mean_std(xs);
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.4f +- %.4f", r.mean, r.std);
  return buf;
}

void print_header() {
  std::printf("%-14s %-14s %2s  %-18s %-18s %-18s\n", "policy", "placement", "K",
              "feedback_rate", "hit_rate", "error_rate");
}

void print_row(const std::string& policy, const std::string& placement, int k,
               const std::vector<RunSummary>& runs) {
  std::vector<double> fb, hit, err;
  for (const auto& r : runs) {
    fb.push_back(r.feedback_rate);
    hit.push_back(r.hit_rate);
    err.push_back(r.error_rate);
  }
  std::printf("%-14s %-14s %2d  %-18s %-18s %-18s\n", policy.c_str(), placement.c_str(), k,
              pm(fb).c_str(), pm(hit).c_str(), pm(err).c_str());
}

int cmd_run(const CommonArgs& a) {
  const auto cfg = resolve(a);
  const auto out = out_dir(a, cfg);
  const auto source = WorkloadSource::from_config(cfg.workload);
  std::vector<RunSummary> runs(cfg.seeds.size());
  parallel_for(cfg.seeds.size(), a.jobs,
               [&](std::size_t i) { runs[i] = run_seed(cfg, cfg.seeds[i], source, out); });
  print_header();
  print_row(to_string(cfg.policy), to_string(cfg.placement.kind),
            static_cast<int>(cfg.topology.layer_sizes.size()), runs);
  return 0;
}

struct Cell {
  ExperimentConfig cfg;
  std::vector<RunSummary> runs;
  std::vector<std::string> failures;
};

int cmd_sweep(const CommonArgs& a) {
  const auto base = resolve(a);
  const auto& sw = base.sweep;
  if (sw.policies.empty() && sw.topologies.empty() && sw.placements.empty()) {
    throw ConfigError("sweep", "empty sweep: list at least one axis");
  }
  const auto policies = sw.policies.empty() ? std::vector<PolicyKind>{base.policy} : sw.policies;
  const auto placements =
      sw.placements.empty() ? std::vector<PlacementKind>{base.placement.kind} : sw.placements;
  std::vector<std::optional<int>> topologies;
  if (sw.topologies.empty()) topologies.push_back(std::nullopt);
  for (int k : sw.topologies) topologies.push_back(k);

  std::vector<Cell> cells;
  for (auto t : topologies) {
    for (auto p : policies) {
      for (auto pl : placements) {
        Cell c{base, {}, {}};
        if (t) {
          const auto canon = canonical_topology(*t);
          c.cfg.topology.layer_sizes = canon.layer_sizes;
          c.cfg.topology.memory_budgets = canon.memory_budgets;
        }
        c.cfg.policy = p;
        c.cfg.placement.kind = pl;
        c.cfg.validate();
        cells.push_back(std::move(c));
      }
    }
  }

  const auto out = out_dir(a, base);
  const auto source = WorkloadSource::from_config(base.workload);
  const std::size_t S = base.seeds.size();
  std::vector<std::optional<RunSummary>> results(cells.size() * S);
  std::vector<std::string> errors(cells.size() * S);
  parallel_for(results.size(), a.jobs, [&](std::size_t i) {
    const auto& cfg = cells[i / S].cfg;
    try {
      results[i] = run_seed(cfg, cfg.seeds[i % S], source, out);
    } catch (const std::exception& e) {
      errors[i] = e.what();
    }
  });

  bool failed = false;
  for (std::size_t i = 0; i < results.size(); ++i) {
    auto& cell = cells[i / S];
    if (results[i]) cell.runs.push_back(*results[i]);
    else {
      cell.failures.push_back(errors[i]);
      failed = true;
    }
  }

  fs::create_directories(out);
  const auto table_path = out / (base.name + "-comparison.csv");
  std::ofstream table(table_path);
  if (!table) throw std::runtime_error("cannot write " + table_path.string());
  table << "policy,layers,placement,runs,failed,error_mean,error_std,hit_mean,hit_std,"
           "feedback_mean,feedback_std,max_avg_cost_mean,max_avg_cost_std\n";
  print_header();
  for (const auto& c : cells) {
    std::vector<double> err, hit, fb, cost;
    for (const auto& r : c.runs) {
      err.push_back(r.error_rate);
      hit.push_back(r.hit_rate);
      fb.push_back(r.feedback_rate);
      cost.push_back(r.max_avg_cost);
    }
    const int k = static_cast<int>(c.cfg.topology.layer_sizes.size());
    char buf[512];
    const auto e = mean_std(err), h = mean_std(hit), f = mean_std(fb), co = mean_std(cost);
    std::snprintf(buf, sizeof buf, "%s,%d,%s,%zu,%zu,%.6g,%.6g,%.6g,%.6g,%.6g,%.6g,%.6g,%.6g\n",
                  to_string(c.cfg.policy), k, to_string(c.cfg.placement.kind), c.runs.size(),
                  c.failures.size(), e.mean, e.std, h.mean, h.std, f.mean, f.std, co.mean, co.std);
    table << buf;
    print_row(to_string(c.cfg.policy), to_string(c.cfg.placement.kind), k, c.runs);
    for (const auto& msg : c.failures) {
      std::fprintf(stderr, "cell %s/%s/k%d failed: %s\n", to_string(c.cfg.policy),
                   to_string(c.cfg.placement.kind), k, msg.c_str());
    }
  }
  std::printf("comparison table: %s\n", table_path.string().c_str());
  return failed ? 2 : 0;
}

int cmd_validate(bool inject) {
  ValidationOptions opts;
  opts.inject_beta_sign_bug = inject;
  bool ok = true;
  for (const auto& r : run_property_suite(opts)) {
    std::printf("%s %-16s %s\n", r.passed ? "PASS" : "FAIL", r.name.c_str(), r.detail.c_str());
    ok = ok && r.passed;
  }
  return ok ? 0 : 1;
}

int cmd_report(const std::string& dir) {
  using Key = std::tuple<std::string, int, std::string>;
  std::map<Key, std::vector<RunSummary>> groups;
  if (!fs::is_directory(dir)) throw std::runtime_error("not a directory: " + dir);
  for (const auto& entry : fs::recursive_directory_iterator(dir)) {
    if (entry.path().filename() != "summary.json") continue;
    std::ifstream in(entry.path());
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(in);
    } catch (const std::exception& e) {
      throw std::runtime_error(entry.path().string() + ": " + e.what());
    }
    RunSummary s;
    s.policy = j.at("policy").get<std::string>();
    s.placement = j.at("placement").get<std::string>();
    s.num_layers = j.at("num_layers").get<int>();
    s.error_rate = j.at("error_rate").get<double>();
    s.hit_rate = j.at("hit_rate").get<double>();
    s.feedback_rate = j.at("feedback_rate").get<double>();
    groups[{s.policy, s.num_layers, s.placement}].push_back(s);
  }
  if (groups.empty()) throw std::runtime_error("no summary.json under " + dir);
  print_header();
  for (const auto& [key, runs] : groups) {
    print_row(std::get<0>(key), std::get<2>(key), std::get<1>(key), runs);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hierarchical inference routing simulator"};
  app.require_subcommand(1);
  CommonArgs run_args, sweep_args;
  auto* run = app.add_subcommand("run", "run every seed of one configuration");
  add_common(run, run_args);
  auto* sweep = app.add_subcommand("sweep", "run the sweep cross product");
  add_common(sweep, sweep_args);
  auto* validate = app.add_subcommand("validate", "fast property self-check");
  bool inject = false;
  validate->add_flag("--inject-beta-sign-bug", inject, "negative control");
  auto* report = app.add_subcommand("report", "aggregate summaries under a directory");
  std::string report_dir;
  report->add_option("dir,--out", report_dir, "directory holding run outputs")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    if (*run) return cmd_run(run_args);
    if (*sweep) return cmd_sweep(sweep_args);
    if (*validate) return cmd_validate(inject);
    if (*report) return cmd_report(report_dir);
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 1;
}
