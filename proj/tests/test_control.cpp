#include <vector>

#include "doctest.h"
#include "hiroute/config.hpp"
#include "hiroute/control.hpp"

using namespace hiroute;

TEST_CASE("queue update rule") {
  CHECK(queue_update(0.0, 0.5, 0.4) == doctest::Approx(0.1));
  CHECK(queue_update(0.2, 0.1, 0.4) == 0.0);
  // constant excess delta grows the queue linearly
  double q = 0.0;
  for (int t = 1; t <= 100; ++t) {
    q = queue_update(q, 0.4 + 0.03, 0.4);
    CHECK(q == doctest::Approx(0.03 * t));
  }
}

TEST_CASE("realized cost") {
  CHECK(realized_cost({}) == 0.0);
  const std::vector<InboundTransfer> in{{3.0, 1.0}, {12.0, 1.0}};
  CHECK(realized_cost(in) == doctest::Approx(15.0));
  CHECK(transfer_cost(4.0, 2.0) == 8.0);
}

TEST_CASE("queue state") {
  const auto topo = canonical_topology(3).build();
  QueueState qs(topo);
  for (NodeId n = 0; n < 7; ++n) CHECK(qs[n] == 0.0);
  std::vector<double> cost{5, 5, 5, 5, 1.0, 0.1, 0.9};
  qs.advance(cost);
  CHECK(qs[0] == 0.0);  // entry nodes carry no queue
  CHECK(qs[4] == doctest::Approx(0.6));
  CHECK(qs[5] == 0.0);
  CHECK(qs[6] == doctest::Approx(0.5));
  for (double v : qs.values()) CHECK(v >= 0.0);
}

TEST_CASE("drift-plus-penalty diagnostic") {
  const std::vector<double> zero{0, 0, 0}, q{1, 2, 3}, c{1, 1, 2};
  CHECK(drift_penalty_diagnostic(zero, c, 4, 70) == doctest::Approx(280));
  CHECK(drift_penalty_diagnostic(q, c, 4, 0) == doctest::Approx(9));
}
