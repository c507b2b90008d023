#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "hiroute/routing_policy.hpp"
#include "hiroute/topology.hpp"
#include "hiroute/workload.hpp"

namespace hiroute {

// ---------------------------------------------------------------------------
// Estimators

/// Importance-weighted estimate: fb ? f / rho : 0.
double naive_estimate(double f, double rho, bool fb);

/// Baseline-corrected estimate: fb ? (f - beta) / rho + beta : beta.
/// Unbiased for f for any beta.
double vr_estimate(double f, double beta, double rho, bool fb);

struct VariancePair {
  double naive = 0.0;
  double vr = 0.0;
};

/// Exact variances of both estimators under fb ~ Bernoulli(rho).
VariancePair variance_pair(double f, double beta, double rho);

/// Full-feedback loss of expert (threshold, destination) for one job:
/// v * 1{threshold <= z} * b + 1{threshold > z} * (q_dest * cost + fbar_dest).
double expert_loss(double v, double threshold, double z, int local_error,
                   double q_dest, double cost, double fbar_dest);

// ---------------------------------------------------------------------------
// One-step recursions

/// rho_n = sum_a p(a) * rho_a over destinations. `offload_probs[i]` is the
/// probability of offloading to destination i.
double reach_prob_step(std::span<const double> offload_probs,
                       std::span<const double> child_rho);

/// fbar_n = v * p(0) * b + sum_a p(a) * (q_a * c_a + fbar_a).
double expected_loss_step(double v, double p_local, int local_error,
                          std::span<const double> offload_probs,
                          std::span<const double> child_queue,
                          std::span<const double> child_cost,
                          std::span<const double> child_fbar);

// ---------------------------------------------------------------------------
// Recursion over the downstream hierarchy for one job

enum class RecursionWeights { kRaw, kMixed };

struct RecursionOptions {
  RecursionWeights rho = RecursionWeights::kMixed;
  RecursionWeights fbar = RecursionWeights::kRaw;
};

/// What a node reports about a job when queried: its confidence, the local
/// error it would incur, and the action distribution it would use.
struct NodeContext {
  double z = 1.0;
  int local_error = 0;
  ActionDistribution dist;  // empty at the oracle
};

/// Message interface a node uses to ask downstream nodes about a job.
class DownstreamQuery {
 public:
  virtual ~DownstreamQuery() = default;
  virtual NodeContext query(NodeId node, const Job& job) const = 0;
};

/// Memoised rho and fbar for one job under the slot-start snapshot. Every
/// node is queried at most once.
class RecursionSnapshot {
 public:
  RecursionSnapshot(const Topology& topo, const DownstreamQuery& query,
                    const Job& job, std::span<const double> queues, double v,
                    double distance_factor, RecursionOptions opts = {});

  const NodeContext& context(NodeId n);
  /// Probability of reaching the oracle from n. Throws if not positive.
  double reach_prob(NodeId n);
  /// Expected downstream loss at n; 0 at the oracle.
  double expected_loss(NodeId n);
  double hop_cost() const { return job_->size_units * distance_factor_; }

 private:
  const Topology* topo_;
  const DownstreamQuery* query_;
  const Job* job_;
  std::span<const double> queues_;
  double v_;
  double distance_factor_;
  RecursionOptions opts_;
  std::vector<NodeContext> ctx_;
  std::vector<std::uint8_t> have_ctx_;
  std::vector<double> rho_;
  std::vector<double> fbar_;
};

// ---------------------------------------------------------------------------

/// What the EMA tracks on a feedback event. kImportanceWeighted moves toward
/// f / rho, whose fixed point under feedback-only updates is f / rho rather
/// than f. kObserved moves toward the realized f itself.
enum class BaselineTarget { kImportanceWeighted, kObserved };

const char* to_string(BaselineTarget t);
BaselineTarget parse_baseline_target(const std::string& s);

/// EMA baselines, one per (node, task, joint expert); start at 0.
class BaselineTable {
 public:
  BaselineTable(const Topology& topo, int num_tasks, int num_thresholds,
                double eta_b,
                BaselineTarget target = BaselineTarget::kImportanceWeighted);

  double eta_b() const { return eta_b_; }
  BaselineTarget target() const { return target_; }
  std::span<const double> values(NodeId n, TaskId y) const;
  double get(NodeId n, TaskId y, int expert) const { return values(n, y)[expert]; }

  /// beta <- (1 - eta_b) beta + eta_b * target when fb; unchanged otherwise.
  void update(NodeId n, TaskId y, int expert, double f, double rho, bool fb);

  /// Mean absolute baseline over all entries.
  double mean_abs() const;

 private:
  std::span<double> mutable_values(NodeId n, TaskId y);

  int num_tasks_;
  double eta_b_;
  BaselineTarget target_;
  std::vector<std::size_t> offset_;  // [node * num_tasks + task]
  std::vector<int> size_;
  std::vector<double> beta_;
};

/// beta_update as a free function on a single value.
double baseline_step(double beta, double eta_b, double f, double rho, bool fb);

}  // namespace hiroute
