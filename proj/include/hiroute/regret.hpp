#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "hiroute/topology.hpp"
#include "hiroute/workload.hpp"

namespace hiroute {

/// One (job, visited node) pair with full-information expert losses.
struct VisitRecord {
  std::int64_t job_index = 0;  // 1-based position in the job stream
  NodeId node = 0;
  TaskId task = 0;
  double realized_loss = 0.0;  // F_n under the sampled action
  std::vector<double> expert_losses;
};

struct RegretPoint {
  std::int64_t jobs = 0;  // Gamma
  double regret = 0.0;
  double regret_per_job() const { return jobs > 0 ? regret / static_cast<double>(jobs) : 0.0; }
};

/// Hindsight regret of one (node, task) stream against its best fixed expert.
struct PairRegret {
  NodeId node = 0;
  TaskId task = 0;
  std::int64_t visits = 0;
  double realized = 0.0;
  int best_expert = -1;
  double best_loss = 0.0;
  double regret() const { return realized - best_loss; }
};

/// Running totals per (node, task). Feed records in job order; curve points
/// sum the regret of the selected nodes over all tasks.
class RegretTracker {
 public:
  RegretTracker(int num_nodes, int num_tasks);

  void add(const VisitRecord& r);
  void add(std::int64_t job_index, NodeId node, TaskId task, double realized,
           std::span<const double> expert_losses);

  /// Sum over `nodes` and all tasks of cumF - min_e cumf_e.
  double regret(std::span<const NodeId> nodes) const;
  PairRegret pair(NodeId node, TaskId task) const;
  std::vector<PairRegret> pairs() const;

 private:
  struct Slot {
    std::int64_t visits = 0;
    double realized = 0.0;
    std::vector<double> cum;
  };
  int num_tasks_;
  std::vector<Slot> slots_;
};

/// Replays a visit log and reports the per-(node, task) regret, plus the
/// aggregate curve over `nodes` at every multiple of `checkpoint` jobs.
struct RegretReport {
  std::vector<PairRegret> pairs;
  std::vector<RegretPoint> curve;
};

RegretReport regret_oracle(std::span<const VisitRecord> records, int num_nodes,
                           int num_tasks, std::span<const NodeId> nodes,
                           std::int64_t checkpoint, std::int64_t total_jobs);

}  // namespace hiroute
