#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "hiroute/baseline_routers.hpp"
#include "hiroute/loss_estimation.hpp"
#include "hiroute/placement.hpp"
#include "hiroute/topology.hpp"
#include "hiroute/workload.hpp"
#include "json.hpp"

namespace hiroute {

/// Invalid configuration; `field` is the dotted path of the offending key.
struct ConfigError : std::runtime_error {
  ConfigError(std::string field, const std::string& what);
  std::string field;
};

struct TopologyConfig {
  std::vector<int> layer_sizes{4, 2, 1};
  std::vector<double> memory_budgets{30.0, 100.0, kUnbounded};
  double resource_budget = 0.4;
  double tau = 1.0;
  double distance_factor = 1.0;

  Topology build() const;
};

/// Doubling hierarchy with K layers (2^{K-1}, ..., 2, 1) and the memory
/// budgets used for the 3/4/5-layer experiments.
TopologyConfig canonical_topology(int num_layers);

struct WorkloadConfig {
  std::string mode = "synthetic";  // synthetic | trace
  std::string trace_path;
  double mean_jobs_per_slot = 0.375;  // per entry node
  double dirichlet_alpha = 1.0;
  double confidence_noise = 0.1;
  SyntheticSpec synthetic;
};

struct LearningConfig {
  std::optional<double> eta;  // default: sqrt(ln|E| / total_jobs)
  double lambda = 0.1;
  double v = 70.0;
  double eta_b = 0.05;
  BaselineTarget baseline_target = BaselineTarget::kObserved;
  std::vector<double> thresholds = uniform_threshold_grid(11);
  RecursionOptions recursion;
};

struct PlacementConfig {
  PlacementKind kind = PlacementKind::kGreedy;
  int epoch_slots = 500;
  double switch_penalty = 0.1;
};

struct StaticBaselineConfig {
  std::optional<double> offload_prob;  // default: calibrated
};

struct OutputConfig {
  std::string dir = "runs";
  bool metrics = true;
  bool paths = false;
};

/// Axes of a sweep; the cross product policies x topologies x placements is
/// run for every seed.
struct SweepConfig {
  std::vector<PolicyKind> policies;
  std::vector<int> topologies;  // layer counts of canonical topologies
  std::vector<PlacementKind> placements;
};

struct ExperimentConfig {
  std::string name = "experiment";
  TopologyConfig topology;
  WorkloadConfig workload;
  PolicyKind policy = PolicyKind::kVrLyExp4;
  LearningConfig learning;
  PlacementConfig placement;
  StaticBaselineConfig baseline;
  std::int64_t total_jobs = 20000;
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
  std::int64_t regret_checkpoint = 1000;
  OutputConfig output;
  SweepConfig sweep;

  /// Throws ConfigError naming the first invalid field.
  void validate() const;
};

nlohmann::json to_json(const ExperimentConfig& cfg);
/// Strict: unknown keys and mistyped values raise ConfigError. Missing keys
/// keep their defaults.
ExperimentConfig config_from_json(const nlohmann::json& j);
ExperimentConfig load_config(const std::filesystem::path& path);

/// Applies "a.b.c=value" overrides. The key must exist in the schema; the
/// value is parsed as JSON, falling back to a plain string.
ExperimentConfig apply_overrides(const ExperimentConfig& cfg,
                                 const std::vector<std::string>& overrides);

}  // namespace hiroute
