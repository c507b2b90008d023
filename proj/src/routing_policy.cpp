#include "hiroute/routing_policy.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace hiroute {

ExpertGrid::ExpertGrid(std::vector<double> th, std::vector<NodeId> dest)
    : thresholds(std::move(th)), destinations(std::move(dest)) {
  if (thresholds.empty() || destinations.empty()) {
    throw std::invalid_argument("expert grid needs thresholds and destinations");
  }
  for (std::size_t i = 0; i < thresholds.size(); ++i) {
    if (!(thresholds[i] >= 0.0 && thresholds[i] <= 1.0)) {
      throw std::invalid_argument("thresholds must lie in [0, 1]");
    }
    if (i > 0 && !(thresholds[i] > thresholds[i - 1])) {
      throw std::invalid_argument("thresholds must be strictly increasing");
    }
  }
}

std::vector<double> uniform_threshold_grid(int points) {
  if (points < 2) throw std::invalid_argument("threshold grid needs >= 2 points");
  std::vector<double> grid(points);
  for (int i = 0; i < points; ++i) grid[i] = static_cast<double>(i) / (points - 1);
  return grid;
}

double ActionDistribution::raw_offload() const {
  double s = 0.0;
  for (std::size_t a = 1; a < raw.size(); ++a) s += raw[a];
  return s;
}

double ActionDistribution::mixed_offload() const {
  double s = 0.0;
  for (std::size_t a = 1; a < mixed.size(); ++a) s += mixed[a];
  return s;
}

ActionDistribution action_probs(const ExpertGrid& grid,
                                std::span<const double> weights, double z,
                                double lambda) {
  const int U = grid.num_destinations();
  if (static_cast<int>(weights.size()) != grid.size()) {
    throw std::invalid_argument("weight vector does not match expert grid");
  }
  ActionDistribution dist;
  dist.raw.assign(U + 1, 0.0);
  for (int h = 0; h < grid.num_thresholds(); ++h) {
    const bool offload = grid.thresholds[h] > z;
    for (int d = 0; d < U; ++d) {
      dist.raw[offload ? d + 1 : 0] += weights[grid.index(h, d)];
    }
  }
  const double floor = lambda / (U + 1);
  dist.mixed.resize(U + 1);
  for (int a = 0; a <= U; ++a) dist.mixed[a] = (1.0 - lambda) * dist.raw[a] + floor;
  return dist;
}

int sample_action(const ActionDistribution& dist, Rng& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double r = u(rng);
  const int n = dist.num_actions();
  for (int a = 0; a < n; ++a) {
    r -= dist.mixed[a];
    if (r < 0.0) return a;
  }
  // Rounding left a sliver of mass: take the last action with support.
  for (int a = n - 1; a >= 0; --a) {
    if (dist.mixed[a] > 0.0) return a;
  }
  return 0;
}

std::vector<double> exp_weights(std::span<const double> cum_loss, double eta) {
  std::vector<double> w(cum_loss.size());
  if (w.empty()) return w;
  const double lo = *std::min_element(cum_loss.begin(), cum_loss.end());
  double total = 0.0;
  for (std::size_t e = 0; e < w.size(); ++e) {
    w[e] = std::exp(-eta * (cum_loss[e] - lo));
    total += w[e];
  }
  for (double& x : w) x /= total;
  return w;
}

double shannon_entropy(std::span<const double> probs) {
  double h = 0.0;
  for (double p : probs) {
    if (p > 0.0) h -= p * std::log(p);
  }
  return h;
}

double default_eta(int num_experts, double expected_jobs) {
  if (num_experts < 2 || !(expected_jobs > 0.0)) {
    throw std::invalid_argument("default_eta needs >= 2 experts and jobs > 0");
  }
  return std::sqrt(std::log(static_cast<double>(num_experts)) / expected_jobs);
}

ExpertTable::ExpertTable(const Topology& topo, int num_tasks,
                         std::vector<double> thresholds, double eta,
                         double lambda)
    : num_tasks_(num_tasks), eta_(eta), lambda_(lambda) {
  if (!(eta > 0.0) || !std::isfinite(eta)) {
    throw std::invalid_argument("learning rate eta must be positive");
  }
  if (!(lambda > 0.0 && lambda < 1.0)) {
    throw std::invalid_argument("exploration rate lambda must lie in (0, 1)");
  }
  if (num_tasks <= 0) throw std::invalid_argument("need at least one task type");
  grids_.resize(topo.num_nodes());
  entries_.resize(static_cast<std::size_t>(topo.num_nodes()) * num_tasks);
  std::size_t offset = 0;
  for (NodeId n = 0; n < topo.num_nodes(); ++n) {
    if (topo.is_oracle(n)) continue;
    const auto up = topo.uplinks(n);
    grids_[n] = ExpertGrid(thresholds, std::vector<NodeId>(up.begin(), up.end()));
    const int E = grids_[n].size();
    const double h0 = std::log(static_cast<double>(E));
    for (TaskId y = 0; y < num_tasks; ++y) {
      auto& en = entries_[static_cast<std::size_t>(n) * num_tasks + y];
      en.offset = offset;
      en.size = E;
      en.entropy = h0;
      offset += E;
      entropy_sum_ += h0;
      ++num_tables_;
    }
  }
  weights_.resize(offset);
  cum_loss_.assign(offset, 0.0);
  for (const auto& en : entries_) {
    std::fill_n(weights_.begin() + en.offset, en.size, 1.0 / std::max(en.size, 1));
  }
}

const ExpertTable::Entry& ExpertTable::entry(NodeId n, TaskId y) const {
  const auto& en = entries_.at(static_cast<std::size_t>(n) * num_tasks_ + y);
  if (en.size == 0) {
    throw std::invalid_argument("node " + std::to_string(n) + " has no expert table");
  }
  return en;
}

ExpertTable::Entry& ExpertTable::entry(NodeId n, TaskId y) {
  return const_cast<Entry&>(std::as_const(*this).entry(n, y));
}

std::span<const double> ExpertTable::weights(NodeId n, TaskId y) const {
  const auto& en = entry(n, y);
  return {weights_.data() + en.offset, static_cast<std::size_t>(en.size)};
}

std::span<const double> ExpertTable::cum_loss(NodeId n, TaskId y) const {
  const auto& en = entry(n, y);
  return {cum_loss_.data() + en.offset, static_cast<std::size_t>(en.size)};
}

void ExpertTable::update_weights(NodeId n, TaskId y) {
  auto& en = entry(n, y);
  const auto w = exp_weights(
      std::span<const double>(cum_loss_.data() + en.offset, en.size), eta_);
  std::copy(w.begin(), w.end(), weights_.begin() + en.offset);
  const double h = shannon_entropy(w);
  entropy_sum_ += h - en.entropy;
  en.entropy = h;
  en.dirty = false;
}

int ExpertTable::refresh_weights() {
  std::sort(dirty_.begin(), dirty_.end());
  int count = 0;
  for (std::size_t key : dirty_) {
    const NodeId n = static_cast<NodeId>(key / num_tasks_);
    const TaskId y = static_cast<TaskId>(key % num_tasks_);
    if (!entries_[key].dirty) continue;
    update_weights(n, y);
    ++count;
  }
  dirty_.clear();
  return count;
}

void ExpertTable::accumulate_loss(NodeId n, TaskId y,
                                  std::span<const double> losses) {
  auto& en = entry(n, y);
  if (static_cast<int>(losses.size()) != en.size) {
    throw std::invalid_argument("loss vector does not match expert table");
  }
  for (double l : losses) {
    if (!std::isfinite(l)) {
      throw std::domain_error("non-finite expert loss at node " + std::to_string(n));
    }
  }
  bool changed = false;
  for (int e = 0; e < en.size; ++e) {
    cum_loss_[en.offset + e] += losses[e];
    changed |= losses[e] != 0.0;
  }
  if (changed && !en.dirty) {
    en.dirty = true;
    dirty_.push_back(static_cast<std::size_t>(n) * num_tasks_ + y);
  }
}

double ExpertTable::entropy(NodeId n, TaskId y) const { return entry(n, y).entropy; }

double ExpertTable::mean_entropy() const {
  return num_tables_ ? entropy_sum_ / static_cast<double>(num_tables_) : 0.0;
}

}  // namespace hiroute
