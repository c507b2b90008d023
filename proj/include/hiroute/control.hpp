#pragma once

#include <span>
#include <vector>

#include "hiroute/topology.hpp"

namespace hiroute {

/// Q_n(t+1) = max(Q_n(t) + C_n(t) - gamma_n * tau, 0).
double queue_update(double q, double realized_cost, double gamma_tau);

/// One offload hop landing at a node: job size and the edge distance factor.
struct InboundTransfer {
  double size_units = 0.0;
  double distance_factor = 1.0;
};

/// c^j(n', n) for a single hop.
inline double transfer_cost(double size_units, double distance_factor = 1.0) {
  return size_units * distance_factor;
}

/// C_n(t): total cost of the jobs offloaded into a node during one slot.
double realized_cost(std::span<const InboundTransfer> inbound);

/// Virtual queues for layers 2..K. Entry nodes keep a permanent zero.
class QueueState {
 public:
  explicit QueueState(const Topology& topo);

  double operator[](NodeId n) const { return q_[n]; }
  std::span<const double> values() const { return q_; }

  /// Applies one slot's realized costs (indexed by node id) to every
  /// constrained node. Uses only the slot totals, so node order is irrelevant.
  void advance(std::span<const double> slot_costs);

 private:
  const Topology* topo_;
  std::vector<double> q_;
};

/// Realized per-slot drift-plus-penalty objective:
/// sum_n q_n * cost_n + v * (errors in the slot).
double drift_penalty_diagnostic(std::span<const double> queues,
                                std::span<const double> slot_costs,
                                double slot_errors, double v);

}  // namespace hiroute
