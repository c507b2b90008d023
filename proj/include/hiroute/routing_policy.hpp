#pragma once

#include <span>
#include <vector>

#include "hiroute/random.hpp"
#include "hiroute/topology.hpp"
#include "hiroute/workload.hpp"

namespace hiroute {

/// Joint expert space H x U_n. Expert (h, d) recommends offloading to
/// destinations[d] when the confidence is below thresholds[h], and local
/// termination otherwise. Expert index = h * |U_n| + d.
struct ExpertGrid {
  std::vector<double> thresholds;   // strictly increasing, in [0, 1]
  std::vector<NodeId> destinations; // U_n

  ExpertGrid() = default;
  ExpertGrid(std::vector<double> thresholds, std::vector<NodeId> destinations);

  int num_thresholds() const { return static_cast<int>(thresholds.size()); }
  int num_destinations() const { return static_cast<int>(destinations.size()); }
  int size() const { return num_thresholds() * num_destinations(); }
  int index(int h, int d) const { return h * num_destinations() + d; }
  int threshold_of(int e) const { return e / num_destinations(); }
  int destination_of(int e) const { return e % num_destinations(); }
};

/// {0, 1/(points-1), ..., 1}.
std::vector<double> uniform_threshold_grid(int points = 11);

/// Actions are indexed 0 = terminate locally, i >= 1 = offload to
/// destinations[i - 1].
struct ActionDistribution {
  std::vector<double> raw;    // p_n^j(a) induced by the expert weights
  std::vector<double> mixed;  // (1 - lambda) p + lambda / (|U_n| + 1)

  int num_actions() const { return static_cast<int>(raw.size()); }
  double raw_offload() const;
  double mixed_offload() const;
};

ActionDistribution action_probs(const ExpertGrid& grid,
                                std::span<const double> weights, double z,
                                double lambda);

/// Draws an action index from the mixed distribution.
int sample_action(const ActionDistribution& dist, Rng& rng);

/// Softmax of -eta * cum_loss with max-subtraction.
std::vector<double> exp_weights(std::span<const double> cum_loss, double eta);

double shannon_entropy(std::span<const double> probs);

/// sqrt(ln|E| / expected_jobs).
double default_eta(int num_experts, double expected_jobs);

/// Per-(node, task) EXP4 state for every non-oracle node.
class ExpertTable {
 public:
  ExpertTable(const Topology& topo, int num_tasks,
              std::vector<double> thresholds, double eta, double lambda);

  double eta() const { return eta_; }
  double lambda() const { return lambda_; }
  int num_tasks() const { return num_tasks_; }

  const ExpertGrid& grid(NodeId n) const { return grids_.at(n); }
  std::span<const double> weights(NodeId n, TaskId y) const;
  std::span<const double> cum_loss(NodeId n, TaskId y) const;

  /// Recomputes w(t) from g(t-1) for one (node, task).
  void update_weights(NodeId n, TaskId y);
  /// Slot-start refresh of every table whose losses changed since the last
  /// refresh. Returns the number of tables recomputed.
  int refresh_weights();

  /// g^e += losses[e]. Throws on non-finite input.
  void accumulate_loss(NodeId n, TaskId y, std::span<const double> losses);

  double entropy(NodeId n, TaskId y) const;
  /// Mean weight entropy over all (non-oracle node, task) tables.
  double mean_entropy() const;

 private:
  struct Entry {
    std::size_t offset = 0;
    int size = 0;
    bool dirty = false;
    double entropy = 0.0;
  };
  const Entry& entry(NodeId n, TaskId y) const;
  Entry& entry(NodeId n, TaskId y);

  int num_tasks_;
  double eta_;
  double lambda_;
  std::vector<ExpertGrid> grids_;  // empty grid for oracle nodes
  std::vector<Entry> entries_;     // [node * num_tasks + task]
  std::vector<double> weights_;
  std::vector<double> cum_loss_;
  std::vector<std::size_t> dirty_;
  double entropy_sum_ = 0.0;
  std::size_t num_tables_ = 0;
};

}  // namespace hiroute
