#include "hiroute/loss_estimation.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace hiroute {

double naive_estimate(double f, double rho, bool fb) {
  return fb ? f / rho : 0.0;
}

double vr_estimate(double f, double beta, double rho, bool fb) {
  return fb ? (f - beta) / rho + beta : beta;
}

VariancePair variance_pair(double f, double beta, double rho) {
  if (!(rho > 0.0 && rho <= 1.0)) {
    throw std::invalid_argument("variance_pair needs rho in (0, 1]");
  }
  // Var(c * Bernoulli(rho)) = c^2 rho (1 - rho) with c = f / rho or (f - beta) / rho.
  const double scale = (1.0 - rho) / rho;
  return {f * f * scale, (f - beta) * (f - beta) * scale};
}

double expert_loss(double v, double threshold, double z, int local_error,
                   double q_dest, double cost, double fbar_dest) {
  if (threshold <= z) return v * local_error;
  return q_dest * cost + fbar_dest;
}

double reach_prob_step(std::span<const double> offload_probs,
                       std::span<const double> child_rho) {
  if (offload_probs.size() != child_rho.size()) {
    throw std::invalid_argument("reach_prob_step size mismatch");
  }
  double rho = 0.0;
  for (std::size_t i = 0; i < offload_probs.size(); ++i) rho += offload_probs[i] * child_rho[i];
  return rho;
}

double expected_loss_step(double v, double p_local, int local_error,
                          std::span<const double> offload_probs,
                          std::span<const double> child_queue,
                          std::span<const double> child_cost,
                          std::span<const double> child_fbar) {
  const std::size_t n = offload_probs.size();
  if (child_queue.size() != n || child_cost.size() != n || child_fbar.size() != n) {
    throw std::invalid_argument("expected_loss_step size mismatch");
  }
  double f = v * p_local * local_error;
  for (std::size_t i = 0; i < n; ++i) {
    f += offload_probs[i] * (child_queue[i] * child_cost[i] + child_fbar[i]);
  }
  return f;
}

RecursionSnapshot::RecursionSnapshot(const Topology& topo,
                                     const DownstreamQuery& query,
                                     const Job& job,
                                     std::span<const double> queues, double v,
                                     double distance_factor,
                                     RecursionOptions opts)
    : topo_(&topo),
      query_(&query),
      job_(&job),
      queues_(queues),
      v_(v),
      distance_factor_(distance_factor),
      opts_(opts),
      ctx_(topo.num_nodes()),
      have_ctx_(topo.num_nodes(), 0),
      rho_(topo.num_nodes(), -1.0),
      fbar_(topo.num_nodes(), NAN) {}

const NodeContext& RecursionSnapshot::context(NodeId n) {
  if (!have_ctx_.at(n)) {
    ctx_[n] = query_->query(n, *job_);
    have_ctx_[n] = 1;
  }
  return ctx_[n];
}

double RecursionSnapshot::reach_prob(NodeId n) {
  if (rho_.at(n) >= 0.0) return rho_[n];
  double rho = 1.0;
  if (!topo_->is_oracle(n)) {
    const auto up = topo_->uplinks(n);
    const auto& dist = context(n).dist;
    const auto& p = opts_.rho == RecursionWeights::kMixed ? dist.mixed : dist.raw;
    rho = 0.0;
    for (std::size_t i = 0; i < up.size(); ++i) rho += p[i + 1] * reach_prob(up[i]);
    if (!(rho > 0.0)) {
      throw std::logic_error("reach probability not positive at node " +
                             std::to_string(n));
    }
  }
  rho_[n] = rho;
  return rho;
}

double RecursionSnapshot::expected_loss(NodeId n) {
  if (!std::isnan(fbar_.at(n))) return fbar_[n];
  double f = 0.0;
  if (!topo_->is_oracle(n)) {
    const auto up = topo_->uplinks(n);
    const auto& c = context(n);
    const auto& p = opts_.fbar == RecursionWeights::kMixed ? c.dist.mixed : c.dist.raw;
    const double cost = hop_cost();
    f = v_ * p[0] * c.local_error;
    for (std::size_t i = 0; i < up.size(); ++i) {
      f += p[i + 1] * (queues_[up[i]] * cost + expected_loss(up[i]));
    }
  }
  fbar_[n] = f;
  return f;
}

// ---------------------------------------------------------------------------

const char* to_string(BaselineTarget t) {
  return t == BaselineTarget::kObserved ? "observed" : "importance_weighted";
}

BaselineTarget parse_baseline_target(const std::string& s) {
  if (s == "observed") return BaselineTarget::kObserved;
  if (s == "importance_weighted") return BaselineTarget::kImportanceWeighted;
  throw std::invalid_argument("unknown baseline target '" + s + "'");
}

double baseline_step(double beta, double eta_b, double f, double rho, bool fb) {
  if (!fb) return beta;
  return (1.0 - eta_b) * beta + eta_b * (f / rho);
}

BaselineTable::BaselineTable(const Topology& topo, int num_tasks,
                             int num_thresholds, double eta_b,
                             BaselineTarget target)
    : num_tasks_(num_tasks), eta_b_(eta_b), target_(target) {
  if (!(eta_b > 0.0 && eta_b <= 1.0)) {
    throw std::invalid_argument("baseline rate eta_b must lie in (0, 1]");
  }
  offset_.assign(static_cast<std::size_t>(topo.num_nodes()) * num_tasks, 0);
  size_.assign(offset_.size(), 0);
  std::size_t offset = 0;
  for (NodeId n = 0; n < topo.num_nodes(); ++n) {
    if (topo.is_oracle(n)) continue;
    const int E = num_thresholds * static_cast<int>(topo.uplinks(n).size());
    for (TaskId y = 0; y < num_tasks; ++y) {
      offset_[static_cast<std::size_t>(n) * num_tasks + y] = offset;
      size_[static_cast<std::size_t>(n) * num_tasks + y] = E;
      offset += E;
    }
  }
  beta_.assign(offset, 0.0);
}

std::span<const double> BaselineTable::values(NodeId n, TaskId y) const {
  const std::size_t key = static_cast<std::size_t>(n) * num_tasks_ + y;
  return {beta_.data() + offset_.at(key), static_cast<std::size_t>(size_[key])};
}

std::span<double> BaselineTable::mutable_values(NodeId n, TaskId y) {
  const std::size_t key = static_cast<std::size_t>(n) * num_tasks_ + y;
  return {beta_.data() + offset_.at(key), static_cast<std::size_t>(size_[key])};
}

void BaselineTable::update(NodeId n, TaskId y, int expert, double f, double rho,
                           bool fb) {
  auto vals = mutable_values(n, y);
  if (expert < 0 || static_cast<std::size_t>(expert) >= vals.size()) {
    throw std::out_of_range("baseline expert index out of range");
  }
  auto& beta = vals[expert];
  beta = target_ == BaselineTarget::kObserved ? baseline_step(beta, eta_b_, f, 1.0, fb)
                                              : baseline_step(beta, eta_b_, f, rho, fb);
}

double BaselineTable::mean_abs() const {
  if (beta_.empty()) return 0.0;
  double s = 0.0;
  for (double b : beta_) s += std::abs(b);
  return s / static_cast<double>(beta_.size());
}

}  // namespace hiroute
