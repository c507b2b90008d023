#pragma once

#include <span>
#include <string>
#include <vector>

#include "hiroute/random.hpp"
#include "hiroute/topology.hpp"

namespace hiroute {

enum class PolicyKind {
  kPureLocal,
  kRandom,
  kRoundRobin,
  kLyExp4,       // EXP4 + Lyapunov, importance-weighted estimator
  kVrLyExp4,     // EXP4 + Lyapunov, variance-reduced estimator
  kVrLocalLoss,  // variance-reduced, upstream expected loss dropped
};

const char* to_string(PolicyKind k);
PolicyKind parse_policy_kind(const std::string& s);
bool is_static(PolicyKind k);

struct StaticPolicyConfig {
  PolicyKind kind = PolicyKind::kPureLocal;
  double offload_prob = 0.0;    // aggregate probability of leaving a node
  std::vector<int> rr_counters;  // per node, round-robin position

  StaticPolicyConfig(PolicyKind kind, double offload_prob, int num_nodes);
};

/// Action index for a non-oracle node: 0 = terminate, i >= 1 = offload to
/// uplinks(node)[i - 1].
int static_action(StaticPolicyConfig& cfg, const Topology& topo, NodeId node,
                  Rng& rng);

/// Arrival rate (jobs per slot) and mean transfer cost per job at every
/// entry node.
struct WorkloadStats {
  std::vector<double> arrival_rate;
  std::vector<double> mean_cost;
};

/// Aggregate per-hop offload probability that keeps the expected inbound
/// cost of each next-layer node within budget: each entry node gets a
/// gamma * |N_2| / |N_1| share, divided by its expected cost per slot.
/// Averaged over entry nodes and capped at 1.
double calibrate_offload_prob(const Topology& topo, const WorkloadStats& stats,
                              double gamma);

enum class EstimatorKind { kNaive, kVarianceReduced };

struct EstimatorConfig {
  EstimatorKind estimator = EstimatorKind::kVarianceReduced;
  bool zero_upstream_loss = false;  // drop fbar of the destination in f
};

/// Estimator configuration of the learning policies. Throws for static ones.
EstimatorConfig variant_flags(PolicyKind kind);

}  // namespace hiroute
