#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "hiroute/topology.hpp"
#include "hiroute/workload.hpp"

namespace hiroute {

/// Models resident at each node (sorted ids), and the slot it took effect.
struct Placement {
  std::vector<std::vector<ModelId>> loaded;  // indexed by node id
  std::int64_t epoch = 1;
};

/// Memory footprint of a model set.
double footprint(std::span<const ModelId> models, std::span<const double> sizes);

/// True when every non-oracle node respects its memory budget.
bool placement_feasible(const Placement& p, const Topology& topo,
                        std::span<const double> sizes);

/// Dense task x model expected-error matrix plus model sizes. Unsupported
/// (task, model) pairs carry error 1.
struct ErrorTable {
  int num_tasks = 0;
  int num_models = 0;
  std::vector<double> error;  // row-major [task][model]
  std::vector<double> sizes;

  double at(TaskId y, ModelId m) const { return error[y * num_models + m]; }

  static ErrorTable from_catalog(const Catalog& catalog);
};

struct PlacementUtilityCtx {
  std::vector<double> mixture;  // arrival distribution over task types
  std::shared_ptr<const ErrorTable> errors;
  double switch_penalty = 0.0;          // nu
  std::vector<std::uint8_t> previous;   // previous[m] = 1 if m was resident
};

/// Expected error reduction E_J[1 - min_{m in S} err(J, m)], with the
/// minimum over an empty set taken as 1.
double expected_accuracy(const PlacementUtilityCtx& ctx,
                         std::span<const ModelId> set);

/// Placement utility: expected accuracy minus nu * size of newly loaded models.
double utility(const PlacementUtilityCtx& ctx, std::span<const ModelId> set);

/// Delta U(m | S), evaluated in its explicit per-task form.
double marginal_gain(const PlacementUtilityCtx& ctx, ModelId m_new,
                     std::span<const ModelId> set);

/// Marginal-density greedy under a memory knapsack. Adds the feasible
/// candidate with the largest gain/size until none fits or the best gain is
/// negative. Ties go to the lowest model id. Returns the set in insertion
/// order.
std::vector<ModelId> greedy_onload(const PlacementUtilityCtx& ctx,
                                   double budget,
                                   std::span<const ModelId> pool);

enum class PlacementKind { kGreedy, kRandomFixed, kLayerDiverse };

const char* to_string(PlacementKind k);
PlacementKind parse_placement_kind(const std::string& s);

/// Round-robin partition of model ids into K groups (group g holds ids
/// congruent to g mod K).
std::vector<std::vector<ModelId>> layer_groups(int num_models, int num_layers);

/// Static placements: random-fixed fills every node's budget with uniformly
/// random feasible additions; layer-diverse restricts layer k to group k-1.
/// Oracle nodes get no models.
Placement baseline_placement(PlacementKind kind, const Topology& topo,
                             std::span<const double> sizes, std::uint64_t seed);

}  // namespace hiroute
