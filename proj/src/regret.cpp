#include "hiroute/regret.hpp"

#include <algorithm>
#include <stdexcept>

namespace hiroute {

RegretTracker::RegretTracker(int num_nodes, int num_tasks)
    : num_tasks_(num_tasks),
      slots_(static_cast<std::size_t>(num_nodes) * num_tasks) {}

void RegretTracker::add(const VisitRecord& r) {
  add(r.job_index, r.node, r.task, r.realized_loss, r.expert_losses);
}

void RegretTracker::add(std::int64_t, NodeId node, TaskId task, double realized,
                        std::span<const double> expert_losses) {
  auto& s = slots_.at(static_cast<std::size_t>(node) * num_tasks_ + task);
  if (s.cum.empty()) s.cum.assign(expert_losses.size(), 0.0);
  if (s.cum.size() != expert_losses.size()) {
    throw std::invalid_argument("expert count changed for a (node, task) pair");
  }
  ++s.visits;
  s.realized += realized;
  for (std::size_t e = 0; e < s.cum.size(); ++e) s.cum[e] += expert_losses[e];
}

PairRegret RegretTracker::pair(NodeId node, TaskId task) const {
  const auto& s = slots_.at(static_cast<std::size_t>(node) * num_tasks_ + task);
  PairRegret p{node, task, s.visits, s.realized, -1, 0.0};
  // exhaustive scan; first minimum wins
  for (std::size_t e = 0; e < s.cum.size(); ++e) {
    if (p.best_expert < 0 || s.cum[e] < p.best_loss) {
      p.best_expert = static_cast<int>(e);
      p.best_loss = s.cum[e];
    }
  }
  return p;
}

double RegretTracker::regret(std::span<const NodeId> nodes) const {
  double total = 0.0;
  for (NodeId n : nodes) {
    for (TaskId y = 0; y < num_tasks_; ++y) {
      if (slots_[static_cast<std::size_t>(n) * num_tasks_ + y].visits > 0) {
        total += pair(n, y).regret();
      }
    }
  }
  return total;
}

std::vector<PairRegret> RegretTracker::pairs() const {
  std::vector<PairRegret> out;
  const int num_nodes = static_cast<int>(slots_.size()) / std::max(num_tasks_, 1);
  for (NodeId n = 0; n < num_nodes; ++n) {
    for (TaskId y = 0; y < num_tasks_; ++y) {
      if (slots_[static_cast<std::size_t>(n) * num_tasks_ + y].visits > 0) {
        out.push_back(pair(n, y));
      }
    }
  }
  return out;
}

RegretReport regret_oracle(std::span<const VisitRecord> records, int num_nodes,
                           int num_tasks, std::span<const NodeId> nodes,
                           std::int64_t checkpoint, std::int64_t total_jobs) {
  if (checkpoint <= 0) throw std::invalid_argument("checkpoint must be positive");
  RegretTracker tracker(num_nodes, num_tasks);
  RegretReport report;
  std::int64_t next = checkpoint;
  auto flush_until = [&](std::int64_t job) {
    while (next < job && next <= total_jobs) {
      report.curve.push_back({next, tracker.regret(nodes)});
      next += checkpoint;
    }
  };
  for (const auto& r : records) {
    flush_until(r.job_index);
    tracker.add(r);
  }
  flush_until(total_jobs + 1);
  report.pairs = tracker.pairs();
  return report;
}

}  // namespace hiroute
