#include "hiroute/placement.hpp"

#include <algorithm>
#include <stdexcept>

#include "hiroute/random.hpp"

namespace hiroute {

double footprint(std::span<const ModelId> models, std::span<const double> sizes) {
  double total = 0.0;
  for (ModelId m : models) total += sizes[m];
  return total;
}

bool placement_feasible(const Placement& p, const Topology& topo,
                        std::span<const double> sizes) {
  if (static_cast<int>(p.loaded.size()) != topo.num_nodes()) return false;
  for (NodeId n = 0; n < topo.num_nodes(); ++n) {
    if (topo.is_oracle(n)) continue;
    if (footprint(p.loaded[n], sizes) > topo.memory_budget(n) + 1e-9) return false;
  }
  return true;
}

ErrorTable ErrorTable::from_catalog(const Catalog& catalog) {
  ErrorTable t;
  t.num_tasks = catalog.num_tasks();
  t.num_models = catalog.num_models();
  t.error.resize(static_cast<std::size_t>(t.num_tasks) * t.num_models);
  for (TaskId y = 0; y < t.num_tasks; ++y) {
    for (ModelId m = 0; m < t.num_models; ++m) {
      t.error[y * t.num_models + m] = catalog.effective_error(m, y);
    }
  }
  for (const auto& m : catalog.models()) t.sizes.push_back(m.memory_size);
  return t;
}

double expected_accuracy(const PlacementUtilityCtx& ctx,
                         std::span<const ModelId> set) {
  const auto& E = *ctx.errors;
  double acc = 0.0;
  for (TaskId y = 0; y < E.num_tasks; ++y) {
    const double w = ctx.mixture[y];
    if (w == 0.0) continue;
    double best = 1.0;
    for (ModelId m : set) best = std::min(best, E.at(y, m));
    acc += w * (1.0 - best);
  }
  return acc;
}

namespace {

bool is_new(const PlacementUtilityCtx& ctx, ModelId m) {
  return ctx.previous.empty() || !ctx.previous[m];
}

}  // namespace

double utility(const PlacementUtilityCtx& ctx, std::span<const ModelId> set) {
  double penalty = 0.0;
  for (ModelId m : set) {
    if (is_new(ctx, m)) penalty += ctx.errors->sizes[m];
  }
  return expected_accuracy(ctx, set) - ctx.switch_penalty * penalty;
}

double marginal_gain(const PlacementUtilityCtx& ctx, ModelId m_new,
                     std::span<const ModelId> set) {
  const auto& E = *ctx.errors;
  double gain = 0.0;
  for (TaskId y = 0; y < E.num_tasks; ++y) {
    const double w = ctx.mixture[y];
    if (w == 0.0) continue;
    double best = 1.0;
    for (ModelId m : set) best = std::min(best, E.at(y, m));
    const double with_new = std::min(best, E.at(y, m_new));
    gain += w * (best - with_new);
  }
  if (is_new(ctx, m_new)) gain -= ctx.switch_penalty * E.sizes[m_new];
  return gain;
}

std::vector<ModelId> greedy_onload(const PlacementUtilityCtx& ctx,
                                   double budget,
                                   std::span<const ModelId> pool) {
  const auto& sizes = ctx.errors->sizes;
  std::vector<ModelId> candidates(pool.begin(), pool.end());
  std::sort(candidates.begin(), candidates.end());
  std::vector<ModelId> chosen;
  double remaining = budget;
  for (;;) {
    int best = -1;
    double best_density = 0.0;
    double best_gain = 0.0;
    for (ModelId m : candidates) {
      if (sizes[m] > remaining) continue;
      if (std::find(chosen.begin(), chosen.end(), m) != chosen.end()) continue;
      const double gain = marginal_gain(ctx, m, chosen);
      const double density = gain / sizes[m];
      if (best < 0 || density > best_density) {
        best = m;
        best_density = density;
        best_gain = gain;
      }
    }
    if (best < 0 || best_gain < 0.0) break;
    chosen.push_back(best);
    remaining -= sizes[best];
  }
  return chosen;
}

const char* to_string(PlacementKind k) {
  switch (k) {
    case PlacementKind::kGreedy: return "greedy";
    case PlacementKind::kRandomFixed: return "random_fixed";
    case PlacementKind::kLayerDiverse: return "layer_diverse";
  }
  return "?";
}

PlacementKind parse_placement_kind(const std::string& s) {
  if (s == "greedy") return PlacementKind::kGreedy;
  if (s == "random_fixed") return PlacementKind::kRandomFixed;
  if (s == "layer_diverse") return PlacementKind::kLayerDiverse;
  throw std::invalid_argument("unknown placement kind '" + s + "'");
}

std::vector<std::vector<ModelId>> layer_groups(int num_models, int num_layers) {
  if (num_layers <= 0) throw std::invalid_argument("need at least one group");
  std::vector<std::vector<ModelId>> groups(num_layers);
  for (ModelId m = 0; m < num_models; ++m) groups[m % num_layers].push_back(m);
  return groups;
}

Placement baseline_placement(PlacementKind kind, const Topology& topo,
                             std::span<const double> sizes, std::uint64_t seed) {
  if (kind == PlacementKind::kGreedy) {
    throw std::invalid_argument("greedy placement is workload dependent");
  }
  const int M = static_cast<int>(sizes.size());
  const auto groups = layer_groups(M, topo.num_layers());
  Rng rng = make_rng(seed, Stream::kPlacement);

  Placement p;
  p.loaded.resize(topo.num_nodes());
  for (NodeId n = 0; n < topo.num_nodes(); ++n) {
    if (topo.is_oracle(n)) continue;
    std::vector<ModelId> pool;
    if (kind == PlacementKind::kLayerDiverse) {
      pool = groups[topo.layer_of(n) - 1];
    } else {
      for (ModelId m = 0; m < M; ++m) pool.push_back(m);
    }
    double remaining = topo.memory_budget(n);
    auto& loaded = p.loaded[n];
    for (;;) {
      std::vector<ModelId> feasible;
      for (ModelId m : pool) {
        if (sizes[m] <= remaining &&
            std::find(loaded.begin(), loaded.end(), m) == loaded.end()) {
          feasible.push_back(m);
        }
      }
      if (feasible.empty()) break;
      std::uniform_int_distribution<std::size_t> pick(0, feasible.size() - 1);
      const ModelId m = feasible[pick(rng)];
      loaded.push_back(m);
      remaining -= sizes[m];
    }
    std::sort(loaded.begin(), loaded.end());
  }
  return p;
}

}  // namespace hiroute
