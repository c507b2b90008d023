#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "hiroute/baseline_routers.hpp"
#include "hiroute/config.hpp"
#include "hiroute/control.hpp"
#include "hiroute/loss_estimation.hpp"
#include "hiroute/placement.hpp"
#include "hiroute/regret.hpp"
#include "hiroute/routing_policy.hpp"
#include "hiroute/topology.hpp"
#include "hiroute/workload.hpp"
#include "json.hpp"

namespace hiroute {

/// Raised when a routing path breaks the layer-by-layer invariant.
struct RoutingInvariantError : std::logic_error {
  using std::logic_error::logic_error;
};

struct SlotMetrics {
  std::int64_t slot = 0;
  int jobs = 0;
  int errors = 0;
  int hard_jobs = 0;
  int hard_hits = 0;  // hard jobs that reached the oracle
  int feedback = 0;   // jobs that reached the oracle
  std::vector<double> cost;   // inbound cost per node in this slot
  std::vector<double> queue;  // queue per node after the slot's update
  double mean_entropy = 0.0;
  double drift_penalty = 0.0;
};

/// Routing outcome of one job.
struct JobRecord {
  std::int64_t job_id = 0;
  std::int64_t slot = 0;
  TaskId task = 0;
  bool hard = false;
  std::vector<NodeId> path;  // entry first
  std::vector<double> hop_cost;  // cost paid at path[i + 1]
  int exit_layer = 1;
  int error = 0;
};

struct RunSummary {
  std::string policy;
  std::string placement;
  int num_layers = 0;
  std::uint64_t seed = 0;
  std::int64_t jobs = 0;
  std::int64_t slots = 0;
  std::int64_t hard_jobs = 0;
  double error_rate = 0.0;
  double hit_rate = 0.0;
  double feedback_rate = 0.0;
  double hard_fraction = 0.0;
  double offload_prob = 0.0;  // static policies only
  double eta = 0.0;
  std::vector<double> avg_cost;     // per node, total inbound cost / slots
  std::vector<double> final_queue;  // per node
  double max_avg_cost = 0.0;        // over constrained nodes
  double max_queue_over_t = 0.0;
  std::vector<RegretPoint> regret_curve;  // entry nodes, summed over tasks
  std::vector<std::pair<std::int64_t, double>> entropy_curve;  // (slot, mean entropy)
  // Estimator diagnostics over all learning updates with f > 0.
  std::int64_t updates = 0;
  std::int64_t lemma_condition_held = 0;  // 0 < beta <= 2f
  double mean_var_naive = 0.0;
  double mean_var_vr = 0.0;
  std::vector<PairRegret> pair_regret;
};

nlohmann::json to_json(const RunSummary& s);

/// Run-specific inputs shared across seeds (world or trace).
struct WorkloadSource {
  std::shared_ptr<const SyntheticWorld> world;
  std::shared_ptr<const Trace> trace;

  const Catalog& catalog() const { return world ? world->catalog : trace->catalog; }
  static WorkloadSource from_config(const WorkloadConfig& cfg);
};

/// One seeded run of the slotted loop.
class Simulation {
 public:
  Simulation(const ExperimentConfig& cfg, std::uint64_t seed,
             WorkloadSource source);
  explicit Simulation(const ExperimentConfig& cfg, std::uint64_t seed)
      : Simulation(cfg, seed, WorkloadSource::from_config(cfg.workload)) {}
  ~Simulation();
  Simulation(const Simulation&) = delete;
  Simulation& operator=(const Simulation&) = delete;

  bool done() const { return jobs_started_ >= cfg_.total_jobs; }
  /// Runs slot t = slot() + 1.
  SlotMetrics step();
  /// Runs to completion, handing every slot to `sink` when given.
  void run(const std::function<void(const SlotMetrics&)>& sink = {});

  RunSummary summary() const;

  void set_path_sink(std::function<void(const JobRecord&)> sink) { path_sink_ = std::move(sink); }
  void set_visit_sink(std::function<void(const VisitRecord&)> sink) { visit_sink_ = std::move(sink); }
  void set_epoch_sink(std::function<void(const nlohmann::json&)> sink) { epoch_sink_ = std::move(sink); }

  std::int64_t slot() const { return slot_; }
  const Topology& topology() const { return topo_; }
  const Catalog& catalog() const { return source_.catalog(); }
  const Placement& placement() const { return placement_; }
  const QueueState& queues() const { return queues_; }
  const ExpertTable* experts() const { return experts_.get(); }
  const BaselineTable* baselines() const { return baselines_.get(); }
  double offload_prob() const { return static_ ? static_->offload_prob : 0.0; }
  double eta() const { return eta_; }

 private:
  class Query;

  void maybe_place();
  void route(Job& job, SlotMetrics& m, std::span<const double> q_start);
  double job_confidence(const Job& job, NodeId n) const;
  NodeContext node_context(NodeId n, const Job& job) const;

  ExperimentConfig cfg_;
  std::uint64_t seed_;
  WorkloadSource source_;
  Topology topo_;
  std::shared_ptr<const ErrorTable> errors_;
  std::unique_ptr<JobGenerator> generator_;
  Placement placement_;
  QueueState queues_;
  std::unique_ptr<ExpertTable> experts_;
  std::unique_ptr<BaselineTable> baselines_;
  std::optional<StaticPolicyConfig> static_;
  std::optional<EstimatorConfig> estimator_;
  ConfidenceModel confidence_;
  Rng routing_rng_;
  double eta_ = 0.0;

  std::int64_t slot_ = 0;
  std::int64_t jobs_started_ = 0;
  std::int64_t jobs_done_ = 0;
  std::int64_t errors_total_ = 0;
  std::int64_t hard_total_ = 0;
  std::int64_t hard_hits_total_ = 0;
  std::int64_t feedback_total_ = 0;
  std::vector<double> cost_total_;
  std::vector<std::vector<double>> task_hist_;  // arrivals per node this epoch
  std::vector<std::vector<double>> prev_hist_;

  RegretTracker regret_;
  std::int64_t next_checkpoint_ = 0;
  std::vector<RegretPoint> regret_curve_;
  std::vector<std::pair<std::int64_t, double>> entropy_curve_;
  std::int64_t updates_ = 0;
  std::int64_t lemma_held_ = 0;
  double var_naive_sum_ = 0.0;
  double var_vr_sum_ = 0.0;

  std::vector<double> scratch_losses_;
  std::vector<double> scratch_estimates_;

  std::function<void(const JobRecord&)> path_sink_;
  std::function<void(const VisitRecord&)> visit_sink_;
  std::function<void(const nlohmann::json&)> epoch_sink_;
};

/// Expected per-slot arrival rate and transfer cost at each entry node, as
/// used for calibrating the static offload probability.
WorkloadStats workload_stats(const ArrivalModel& arrivals,
                             std::span<const double> mean_size_per_task,
                             double distance_factor);

/// Expected job size per task type: the size range midpoint for synthetic
/// tasks, the record average for traces.
std::vector<double> mean_size_per_task(const WorkloadSource& source);

/// Column header of metrics.csv for a topology with `num_nodes` nodes.
std::string metrics_csv_header(int num_nodes);
std::string metrics_csv_row(const SlotMetrics& m);

/// Directory name of one run: <name>-<policy>-<placement>-k<K>-s<seed>.
std::string run_id(const ExperimentConfig& cfg, std::uint64_t seed);

/// Runs one seed and writes metrics.csv, summary.json, epochs.jsonl and
/// optionally paths.jsonl under <out>/<run_id>/.
RunSummary run_seed(const ExperimentConfig& cfg, std::uint64_t seed,
                    const WorkloadSource& source,
                    const std::filesystem::path& out_dir);

/// One summary per configured seed, in seed order. Writes files when
/// cfg.output.metrics is set.
std::vector<RunSummary> run_experiment(const ExperimentConfig& cfg,
                                       const std::filesystem::path& out_dir);

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;  // sample standard deviation (0 for a single value)
};
MeanStd mean_std(std::span<const double> xs);

}  // namespace hiroute
