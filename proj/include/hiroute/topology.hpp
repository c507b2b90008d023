#pragma once

#include <limits>
#include <span>
#include <vector>

namespace hiroute {

// Nodes are numbered 0..N-1, layer by layer, starting at the entry layer.
using NodeId = int;

struct NodeRef {
  NodeId id = 0;
  int layer = 1;  // 1 = entry, K = oracle

  friend bool operator==(const NodeRef&, const NodeRef&) = default;
};

inline constexpr double kUnbounded = std::numeric_limits<double>::infinity();

/// K-layer inference hierarchy. Layer 1 holds the entry nodes that receive
/// jobs, layer K holds the oracle. Every node in layer k < K can offload to
/// every node in layer k+1. Immutable once built.
class Topology {
 public:
  /// Validates and takes ownership of an explicit layer assignment.
  /// `memory_budget` and `resource_budget` are indexed by node id; the oracle
  /// memory entry and layer-1 resource entries are ignored.
  Topology(std::vector<std::vector<NodeId>> layers,
           std::vector<double> memory_budget,
           std::vector<double> resource_budget, double tau = 1.0);

  int num_layers() const { return static_cast<int>(layers_.size()); }
  int num_nodes() const { return static_cast<int>(layer_of_.size()); }

  std::span<const NodeId> layer_nodes(int layer) const;
  int layer_of(NodeId n) const;
  NodeRef ref(NodeId n) const { return {n, layer_of(n)}; }

  bool is_entry(NodeId n) const { return layer_of(n) == 1; }
  bool is_oracle(NodeId n) const { return layer_of(n) == num_layers(); }

  /// U_n: all nodes of the next layer. Throws for oracle nodes.
  std::span<const NodeId> uplinks(NodeRef n) const;
  std::span<const NodeId> uplinks(NodeId n) const { return uplinks(ref(n)); }

  /// mu_n; kUnbounded for the oracle layer.
  double memory_budget(NodeId n) const;
  /// gamma_n; throws for entry nodes, which carry no resource constraint.
  double resource_budget(NodeId n) const;
  double gamma_tau(NodeId n) const { return resource_budget(n) * tau_; }
  double tau() const { return tau_; }

 private:
  void check_ref(NodeRef n) const;

  std::vector<std::vector<NodeId>> layers_;
  std::vector<int> layer_of_;
  std::vector<double> memory_;
  std::vector<double> resource_;
  double tau_;
};

/// Builds the canonical doubling-style hierarchy: `layer_sizes[k]` nodes in
/// layer k+1, per-layer memory budgets (the oracle entry is ignored), and a
/// uniform per-slot resource budget for every non-entry node.
Topology build_topology(std::span<const int> layer_sizes,
                        std::span<const double> memory_budgets,
                        double resource_budget, double tau = 1.0);

}  // namespace hiroute
