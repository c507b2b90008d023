#include "hiroute/control.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace hiroute {

double queue_update(double q, double realized_cost, double gamma_tau) {
  if (!std::isfinite(q) || !std::isfinite(realized_cost) ||
      !std::isfinite(gamma_tau) || q < 0.0 || realized_cost < 0.0) {
    throw std::invalid_argument("queue_update needs finite nonnegative inputs");
  }
  return std::max(q + realized_cost - gamma_tau, 0.0);
}

double realized_cost(std::span<const InboundTransfer> inbound) {
  double total = 0.0;
  for (const auto& t : inbound) total += transfer_cost(t.size_units, t.distance_factor);
  return total;
}

QueueState::QueueState(const Topology& topo)
    : topo_(&topo), q_(topo.num_nodes(), 0.0) {}

void QueueState::advance(std::span<const double> slot_costs) {
  if (static_cast<int>(slot_costs.size()) != topo_->num_nodes()) {
    throw std::invalid_argument("slot cost vector must cover every node");
  }
  for (NodeId n = 0; n < topo_->num_nodes(); ++n) {
    if (topo_->is_entry(n)) continue;
    q_[n] = queue_update(q_[n], slot_costs[n], topo_->gamma_tau(n));
  }
}

double drift_penalty_diagnostic(std::span<const double> queues,
                                std::span<const double> slot_costs,
                                double slot_errors, double v) {
  double weighted = 0.0;
  const std::size_t n = std::min(queues.size(), slot_costs.size());
  for (std::size_t i = 0; i < n; ++i) weighted += queues[i] * slot_costs[i];
  return weighted + v * slot_errors;
}

}  // namespace hiroute
