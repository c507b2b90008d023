#include <cmath>
#include <random>
#include <vector>

#include "doctest.h"
#include "hiroute/config.hpp"
#include "hiroute/loss_estimation.hpp"
#include "oracles.hpp"

using namespace hiroute;

namespace {

// Chain of single-node layers with hand-set offload probabilities.
class Chain : public DownstreamQuery {
 public:
  Chain(std::vector<double> raw, std::vector<double> mixed, std::vector<int> err)
      : raw_(std::move(raw)), mixed_(std::move(mixed)), err_(std::move(err)) {}
  NodeContext query(NodeId n, const Job&) const override {
    NodeContext c;
    if (n >= static_cast<NodeId>(raw_.size())) return c;
    c.local_error = err_[n];
    c.dist.raw = {1 - raw_[n], raw_[n]};
    c.dist.mixed = {1 - mixed_[n], mixed_[n]};
    return c;
  }

 private:
  std::vector<double> raw_, mixed_;
  std::vector<int> err_;
};

Topology chain_topology(int depth) {
  return build_topology(std::vector<int>(depth, 1), std::vector<double>(depth, 10.0), 0.4);
}

}  // namespace

TEST_CASE("naive estimator") {
  CHECK(naive_estimate(2.0, 0.25, false) == 0.0);
  CHECK(naive_estimate(2.0, 0.25, true) == 8.0);
}

TEST_CASE("vr estimator") {
  CHECK(vr_estimate(1.0, 0.8, 0.25, false) == 0.8);
  CHECK(vr_estimate(1.0, 0.8, 0.25, true) == doctest::Approx(1.6));
}

TEST_CASE("two-point unbiasedness") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> f(-50, 500), b(-100, 1000), r(1e-3, 1.0);
  for (int i = 0; i < 10000; ++i) {
    const double F = f(rng), B = b(rng), R = r(rng);
    const double mean = R * vr_estimate(F, B, R, true) + (1 - R) * vr_estimate(F, B, R, false);
    CHECK(std::abs(mean - F) <= 1e-12 * std::max(1.0, std::abs(F) + std::abs(B) / R));
    const double naive = R * naive_estimate(F, R, true);
    CHECK(std::abs(naive - F) <= 1e-12 * std::max(1.0, std::abs(F)));
  }
}

TEST_CASE("Monte Carlo mean of the vr estimator") {
  std::mt19937_64 rng(8);
  const double F = 1.0, B = 0.8, R = 0.25;
  std::bernoulli_distribution fb(R);
  const int N = 100000;
  double s = 0, s2 = 0;
  for (int i = 0; i < N; ++i) {
    const double x = vr_estimate(F, B, R, fb(rng));
    s += x;
    s2 += x * x;
  }
  const double mean = s / N, var = s2 / N - mean * mean;
  CHECK(std::abs(mean - F) <= 4 * std::sqrt(var / N));
}

TEST_CASE("variance pair") {
  const auto v = variance_pair(1.0, 0.8, 0.25);
  CHECK(v.naive == doctest::Approx(3.0));
  CHECK(v.vr == doctest::Approx(0.12));
  const auto z = variance_pair(2.0, 0.0, 0.4);
  CHECK(z.naive == doctest::Approx(z.vr));
  const auto e = variance_pair(2.0, 4.0, 0.4);
  CHECK(e.naive == doctest::Approx(e.vr));
  // ordering on the open interval
  for (double ratio = 0.05; ratio < 2.0; ratio += 0.05) {
    const auto p = variance_pair(3.0, 3.0 * ratio, 0.3);
    CHECK(p.vr < p.naive);
  }
}

TEST_CASE("expert loss") {
  CHECK(expert_loss(70, 0.0, 0.4, 0, 5, 3, 9) == 0.0);
  CHECK(expert_loss(70, 1.0, 0.5, 1, 2, 3, 4) == doctest::Approx(10.0));
  CHECK(expert_loss(70, 0.3, 0.5, 1, 2, 3, 4) == 70.0);
  // threshold equal to z keeps the job local
  CHECK(expert_loss(70, 0.5, 0.5, 1, 2, 3, 4) == 70.0);
  // local-loss variant: upstream term dropped
  CHECK(expert_loss(70, 1.0, 0.5, 1, 2, 3, 0.0) == 6.0);
}

TEST_CASE("one-step recursions") {
  const std::vector<double> p{0.5}, rho{1.0};
  CHECK(reach_prob_step(p, rho) == 0.5);
  const std::vector<double> p1{1.0}, q{2.0}, c{3.0}, fb{0.0};
  CHECK(expected_loss_step(70, 0.0, 0, p1, q, c, fb) == 6.0);
  const std::vector<double> p0{0.0};
  CHECK(expected_loss_step(70, 1.0, 1, p0, q, c, fb) == 70.0);
}

TEST_CASE("reach probability on chains") {
  // 3-layer chain, 0.5 at both decision layers -> 0.25
  {
    const auto topo = chain_topology(3);
    Chain q({0.5, 0.5}, {0.5, 0.5}, {0, 0});
    Job job;
    std::vector<double> queues(3, 0.0);
    RecursionSnapshot s(topo, q, job, queues, 70, 1);
    CHECK(s.reach_prob(2) == 1.0);
    CHECK(s.reach_prob(0) == doctest::Approx(0.25));
    CHECK(s.expected_loss(2) == 0.0);
  }
  // product formula up to depth 5, using the mixed distribution
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0.02, 1.0);
  for (int depth = 2; depth <= 5; ++depth) {
    for (int it = 0; it < 50; ++it) {
      const auto topo = chain_topology(depth);
      std::vector<double> raw(depth - 1), mixed(depth - 1);
      for (int i = 0; i < depth - 1; ++i) {
        raw[i] = u(rng);
        mixed[i] = u(rng);
      }
      Chain q(raw, mixed, std::vector<int>(depth - 1, 0));
      Job job;
      std::vector<double> queues(depth, 0.0);
      RecursionSnapshot s(topo, q, job, queues, 70, 1);
      double prod = 1.0;
      for (double m : mixed) prod *= m;
      CHECK(std::abs(s.reach_prob(0) - prod) <= 1e-12);
    }
  }
}

TEST_CASE("expected loss matches exhaustive enumeration") {
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int depth = 2; depth <= 5; ++depth) {
    for (int it = 0; it < 100; ++it) {
      const auto topo = chain_topology(depth);
      std::vector<double> raw(depth - 1), mixed(depth - 1);
      std::vector<int> err(depth - 1);
      for (int i = 0; i < depth - 1; ++i) {
        raw[i] = u(rng);
        mixed[i] = 0.05 + 0.9 * u(rng);
        err[i] = u(rng) < 0.5;
      }
      std::vector<double> queues(depth);
      for (double& x : queues) x = 10 * u(rng);
      Job job;
      job.size_units = 1 + 4 * u(rng);
      Chain q(raw, mixed, err);
      RecursionSnapshot s(topo, q, job, queues, 70, 1.5);
      const double ref = oracle::chain_expected_loss(raw, err, queues, job.size_units * 1.5, 70);
      CHECK(std::abs(s.expected_loss(0) - ref) <= 1e-10);
    }
  }
}

TEST_CASE("reach probability floor on the 3-layer topology") {
  // worst case: every node's raw mass on local, so only exploration offloads
  class Floor : public DownstreamQuery {
   public:
    NodeContext query(NodeId n, const Job&) const override {
      NodeContext c;
      if (n == 6) return c;
      const int U = n < 4 ? 2 : 1;
      c.dist.raw.assign(U + 1, 0.0);
      c.dist.raw[0] = 1.0;
      for (int a = 0; a <= U; ++a) c.dist.mixed.push_back((a == 0 ? 0.9 : 0.0) + 0.1 / (U + 1));
      return c;
    }
  } q;
  const auto topo = canonical_topology(3).build();
  Job job;
  std::vector<double> queues(7, 0.0);
  RecursionSnapshot s(topo, q, job, queues, 70, 1);
  const double floor = std::pow(0.1 / 3, 2);
  CHECK(s.reach_prob(0) >= floor - 1e-15);
  CHECK(floor == doctest::Approx(0.00111).epsilon(0.01));
}

TEST_CASE("reach probability must be positive") {
  const auto topo = chain_topology(3);
  Chain q({0.5, 0.5}, {0.0, 0.5}, {0, 0});
  Job job;
  std::vector<double> queues(3, 0.0);
  RecursionSnapshot s(topo, q, job, queues, 70, 1);
  CHECK_THROWS(s.reach_prob(0));
}

TEST_CASE("baseline EMA") {
  CHECK(baseline_step(0.0, 0.1, 2.0, 0.25, true) == doctest::Approx(0.8));
  CHECK(baseline_step(0.3, 0.1, 2.0, 0.25, false) == 0.3);
  double b = 0.0;
  for (int i = 0; i < 500; ++i) b = baseline_step(b, 0.1, 2.0, 0.25, true);
  CHECK(b == doctest::Approx(8.0).epsilon(1e-9));

  const auto topo = canonical_topology(3).build();
  BaselineTable iw(topo, 2, 11, 0.1, BaselineTarget::kImportanceWeighted);
  for (double v : iw.values(0, 1)) CHECK(v == 0.0);
  iw.update(0, 1, 3, 2.0, 0.25, true);
  CHECK(iw.get(0, 1, 3) == doctest::Approx(0.8));
  iw.update(0, 1, 3, 2.0, 0.25, false);
  CHECK(iw.get(0, 1, 3) == doctest::Approx(0.8));

  BaselineTable obs(topo, 2, 11, 0.1, BaselineTarget::kObserved);
  obs.update(0, 1, 3, 2.0, 0.25, true);
  CHECK(obs.get(0, 1, 3) == doctest::Approx(0.2));
  CHECK(obs.values(4, 0).size() == 11);
  CHECK(parse_baseline_target(to_string(BaselineTarget::kObserved)) == BaselineTarget::kObserved);
}
