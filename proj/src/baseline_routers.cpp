#include "hiroute/baseline_routers.hpp"

#include <algorithm>
#include <stdexcept>

namespace hiroute {

const char* to_string(PolicyKind k) {
  switch (k) {
    case PolicyKind::kPureLocal: return "pure_local";
    case PolicyKind::kRandom: return "random";
    case PolicyKind::kRoundRobin: return "round_robin";
    case PolicyKind::kLyExp4: return "ly_exp4";
    case PolicyKind::kVrLyExp4: return "vr_ly_exp4";
    case PolicyKind::kVrLocalLoss: return "vr_local_loss";
  }
  return "?";
}

PolicyKind parse_policy_kind(const std::string& s) {
  for (auto k : {PolicyKind::kPureLocal, PolicyKind::kRandom, PolicyKind::kRoundRobin,
                 PolicyKind::kLyExp4, PolicyKind::kVrLyExp4, PolicyKind::kVrLocalLoss}) {
    if (s == to_string(k)) return k;
  }
  throw std::invalid_argument("unknown policy '" + s + "'");
}

bool is_static(PolicyKind k) {
  return k == PolicyKind::kPureLocal || k == PolicyKind::kRandom ||
         k == PolicyKind::kRoundRobin;
}

StaticPolicyConfig::StaticPolicyConfig(PolicyKind k, double p, int num_nodes)
    : kind(k), offload_prob(k == PolicyKind::kPureLocal ? 0.0 : p),
      rr_counters(num_nodes, 0) {
  if (!is_static(k)) throw std::invalid_argument("not a static policy");
  if (!(offload_prob >= 0.0 && offload_prob <= 1.0)) {
    throw std::invalid_argument("offload probability must lie in [0, 1]");
  }
}

int static_action(StaticPolicyConfig& cfg, const Topology& topo, NodeId node,
                  Rng& rng) {
  const auto up = topo.uplinks(node);
  if (cfg.kind == PolicyKind::kPureLocal) return 0;
  std::uniform_real_distribution<double> u(0.0, 1.0);
  if (!(u(rng) < cfg.offload_prob)) return 0;
  if (cfg.kind == PolicyKind::kRandom) {
    std::uniform_int_distribution<int> pick(0, static_cast<int>(up.size()) - 1);
    return pick(rng) + 1;
  }
  int& pos = cfg.rr_counters.at(node);
  const int a = pos % static_cast<int>(up.size());
  pos = (pos + 1) % static_cast<int>(up.size());
  return a + 1;
}

double calibrate_offload_prob(const Topology& topo, const WorkloadStats& stats,
                              double gamma) {
  const auto entry = topo.layer_nodes(1);
  const auto next = topo.layer_nodes(2);
  if (stats.arrival_rate.size() != entry.size() ||
      stats.mean_cost.size() != entry.size()) {
    throw std::invalid_argument("workload stats must cover every entry node");
  }
  const double share = gamma * topo.tau() * static_cast<double>(next.size()) /
                       static_cast<double>(entry.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < entry.size(); ++i) {
    const double load = stats.arrival_rate[i] * stats.mean_cost[i];
    sum += load > 0.0 ? std::min(1.0, share / load) : 1.0;
  }
  return sum / static_cast<double>(entry.size());
}

EstimatorConfig variant_flags(PolicyKind kind) {
  switch (kind) {
    case PolicyKind::kLyExp4: return {EstimatorKind::kNaive, false};
    case PolicyKind::kVrLyExp4: return {EstimatorKind::kVarianceReduced, false};
    case PolicyKind::kVrLocalLoss: return {EstimatorKind::kVarianceReduced, true};
    default: break;
  }
  throw std::invalid_argument(std::string("policy ") + to_string(kind) +
                              " has no estimator");
}

}  // namespace hiroute
