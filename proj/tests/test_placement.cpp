#include <algorithm>
#include <memory>
#include <random>
#include <vector>

#include "doctest.h"
#include "hiroute/config.hpp"
#include "hiroute/placement.hpp"
#include "oracles.hpp"

using namespace hiroute;

namespace {

PlacementUtilityCtx one_task(std::vector<double> errs, std::vector<double> sizes,
                             double nu) {
  auto t = std::make_shared<ErrorTable>();
  t->num_tasks = 1;
  t->num_models = static_cast<int>(errs.size());
  t->error = std::move(errs);
  t->sizes = std::move(sizes);
  PlacementUtilityCtx c;
  c.mixture = {1.0};
  c.errors = t;
  c.switch_penalty = nu;
  return c;
}

}  // namespace

TEST_CASE("utility examples") {
  auto ctx = one_task({0.3}, {2.0}, 0.1);
  const std::vector<ModelId> none{}, m0{0};
  CHECK(utility(ctx, none) == 0.0);
  CHECK(utility(ctx, m0) == doctest::Approx(0.5));
  ctx.previous = {1};
  CHECK(utility(ctx, m0) == doctest::Approx(0.7));
}

TEST_CASE("marginal gain examples") {
  auto ctx = one_task({0.2}, {1.0}, 0.1);
  CHECK(marginal_gain(ctx, 0, {}) == doctest::Approx(0.7));

  // dominated and already resident -> 0
  auto dom = one_task({0.1, 0.4}, {1.0, 1.0}, 0.1);
  dom.previous = {1, 1};
  const std::vector<ModelId> s{0};
  CHECK(marginal_gain(dom, 1, s) == 0.0);
}

TEST_CASE("marginal gain equals utility difference") {
  std::mt19937_64 rng(7);
  for (int it = 0; it < 200; ++it) {
    const auto in = oracle::random_instance(rng, 4, 6, 4.0, 0.1);
    const auto ctx = in.ctx();
    for (unsigned mask = 0; mask < 64; ++mask) {
      std::vector<ModelId> S;
      for (int m = 0; m < 6; ++m) if (mask >> m & 1u) S.push_back(m);
      CHECK(utility(ctx, S) ==
            doctest::Approx(oracle::utility(in.mixture, in.err, in.sizes, in.nu, in.previous, mask))
                .epsilon(1e-12));
      for (int m = 0; m < 6; ++m) {
        if (mask >> m & 1u) continue;
        auto with = S;
        with.push_back(m);
        CHECK(std::abs(utility(ctx, with) - utility(ctx, S) - marginal_gain(ctx, m, S)) < 1e-12);
      }
    }
  }
}

TEST_CASE("diminishing returns on random small instances") {
  std::mt19937_64 rng(9);
  int violations = 0;
  for (int it = 0; it < 1000; ++it) {
    const auto in = oracle::random_instance(rng, 3, 5, 4.0, 0.0);
    const auto ctx = in.ctx();
    std::uniform_int_distribution<unsigned> pick(0, 31);
    unsigned b = pick(rng), a = b & pick(rng);
    for (int m = 0; m < 5; ++m) {
      if (b >> m & 1u) continue;
      std::vector<ModelId> A, B;
      for (int k = 0; k < 5; ++k) {
        if (a >> k & 1u) A.push_back(k);
        if (b >> k & 1u) B.push_back(k);
      }
      if (marginal_gain(ctx, m, A) < marginal_gain(ctx, m, B) - 1e-12) ++violations;
    }
  }
  CHECK(violations == 0);
}

TEST_CASE("greedy examples") {
  auto ctx = one_task({0.4, 0.6}, {2.0, 1.0}, 0.0);
  const std::vector<ModelId> pool{0, 1};
  CHECK(greedy_onload(ctx, 0.0, pool).empty());
  CHECK(greedy_onload(ctx, 1.0, pool) == std::vector<ModelId>{1});
}

TEST_CASE("greedy is feasible, error gains shrink along its path, and it is near optimal") {
  std::mt19937_64 rng(13);
  for (int it = 0; it < 300; ++it) {
    const auto in = oracle::random_instance(rng, 5, 6, 4.0, 0.05);
    auto ctx = in.ctx();
    std::vector<ModelId> pool{0, 1, 2, 3, 4, 5};
    const auto set = greedy_onload(ctx, 8.0, pool);
    CHECK(footprint(set, in.sizes) <= 8.0 + 1e-12);

    // every candidate's error gain shrinks as the greedy set grows
    auto err_only = ctx;
    err_only.switch_penalty = 0.0;
    std::vector<double> last(6, 2.0);
    std::vector<ModelId> prefix;
    for (std::size_t i = 0; i <= set.size(); ++i) {
      for (ModelId m = 0; m < 6; ++m) {
        if (std::find(prefix.begin(), prefix.end(), m) != prefix.end()) continue;
        const double g = marginal_gain(err_only, m, prefix);
        CHECK(g <= last[m] + 1e-12);
        last[m] = g;
      }
      if (i < set.size()) prefix.push_back(set[i]);
    }

    const double opt = oracle::knapsack_optimum(in.mixture, in.err, in.sizes, in.nu, in.previous, 8.0);
    CHECK(utility(ctx, set) >= 0.5 * opt - 1e-12);
  }
}

TEST_CASE("baseline placements") {
  const auto topo = canonical_topology(3).build();
  std::vector<double> sizes;
  for (const auto& m : default_model_pool()) sizes.push_back(m.size);

  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const auto rf = baseline_placement(PlacementKind::kRandomFixed, topo, sizes, seed);
    CHECK(placement_feasible(rf, topo, sizes));
    CHECK(rf.loaded[6].empty());
    const auto ld = baseline_placement(PlacementKind::kLayerDiverse, topo, sizes, seed);
    CHECK(placement_feasible(ld, topo, sizes));
    const auto groups = layer_groups(23, 3);
    for (NodeId n = 0; n < 6; ++n) {
      const auto& g = groups[topo.layer_of(n) - 1];
      for (ModelId m : ld.loaded[n]) CHECK(std::find(g.begin(), g.end(), m) != g.end());
    }
  }

  const auto groups = layer_groups(23, 3);
  CHECK(groups[0].size() == 8);
  CHECK(groups[1].size() == 8);
  CHECK(groups[2].size() == 7);
  std::vector<int> seen(23, 0);
  for (const auto& g : groups) for (ModelId m : g) ++seen[m];
  CHECK(std::all_of(seen.begin(), seen.end(), [](int c) { return c == 1; }));
  CHECK_THROWS(baseline_placement(PlacementKind::kGreedy, topo, sizes, 1));
}
