#include <cmath>
#include <stdexcept>
#include <vector>

#include "doctest.h"
#include "hiroute/config.hpp"
#include "hiroute/topology.hpp"

using namespace hiroute;

TEST_CASE("3-layer 4-2-1 topology") {
  const std::vector<int> sizes{4, 2, 1};
  const std::vector<double> mem{30, 100, kUnbounded};
  const auto t = build_topology(sizes, mem, 0.4);
  CHECK(t.num_layers() == 3);
  CHECK(t.num_nodes() == 7);
  CHECK(t.layer_nodes(1).size() == 4);
  CHECK(t.is_oracle(6));
  CHECK(t.memory_budget(0) == 30);
  CHECK(t.memory_budget(4) == 100);
  CHECK(std::isinf(t.memory_budget(6)));
  CHECK(t.resource_budget(4) == doctest::Approx(0.4));
  CHECK(t.resource_budget(6) == doctest::Approx(0.4));
  CHECK_THROWS(t.resource_budget(0));

  // entry -> both layer-2 nodes, layer 2 -> oracle, oracle -> error
  const auto up = t.uplinks(0);
  CHECK(std::vector<NodeId>(up.begin(), up.end()) == std::vector<NodeId>{4, 5});
  const auto up2 = t.uplinks(5);
  CHECK(std::vector<NodeId>(up2.begin(), up2.end()) == std::vector<NodeId>{6});
  CHECK_THROWS(t.uplinks(6));
}

TEST_CASE("minimal chain and 5-layer count") {
  const std::vector<int> chain{1, 1};
  const std::vector<double> mem{30, kUnbounded};
  const auto t = build_topology(chain, mem, 0.4);
  CHECK(t.num_nodes() == 2);
  CHECK(t.uplinks(0).size() == 1);

  const auto five = canonical_topology(5).build();
  CHECK(five.num_nodes() == 31);
  CHECK(canonical_topology(4).build().num_nodes() == 15);
}

TEST_CASE("topology rejects bad input") {
  const std::vector<double> mem3{30, 100, kUnbounded};
  CHECK_THROWS(build_topology(std::vector<int>{4, 0, 1}, mem3, 0.4));
  CHECK_THROWS(build_topology(std::vector<int>{4}, std::vector<double>{30}, 0.4));
  CHECK_THROWS(build_topology(std::vector<int>{4, 2, 1}, std::vector<double>{30, -1, kUnbounded}, 0.4));
  CHECK_THROWS(build_topology(std::vector<int>{4, 2, 1}, mem3, 0.0));
  CHECK_THROWS(Topology({{0, 1}, {1}}, {1, 1}, {0, 1}));  // node in two layers
}

TEST_CASE("canonical topologies: full fan-out and doubling layers") {
  for (int K : {3, 4, 5}) {
    const auto t = canonical_topology(K).build();
    CHECK(t.num_layers() == K);
    for (int k = 1; k <= K; ++k) {
      CHECK(t.layer_nodes(k).size() == (1u << (K - k)));
      for (NodeId n : t.layer_nodes(k)) {
        CHECK(t.layer_of(n) == k);
        if (k < K) CHECK(t.uplinks(n).size() == t.layer_nodes(k + 1).size());
      }
    }
  }
  CHECK_THROWS_AS(canonical_topology(6), ConfigError);
}
