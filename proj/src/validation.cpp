#include "hiroute/validation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <memory>

#include "hiroute/loss_estimation.hpp"
#include "hiroute/placement.hpp"
#include "hiroute/random.hpp"
#include "hiroute/routing_policy.hpp"

namespace hiroute {
namespace {

std::string fmt(const char* f, double a, double b = 0.0) {
  char buf[160];
  std::snprintf(buf, sizeof buf, f, a, b);
  return buf;
}

PropertyResult check_unbiased(Rng& rng, bool bug) {
  std::uniform_real_distribution<double> uf(0.0, 100.0), ub(-100.0, 100.0), ur(0.001, 1.0);
  double worst = 0.0;
  for (int i = 0; i < 10000; ++i) {
    const double f = uf(rng), beta = ub(rng), rho = ur(rng);
    auto est = [&](bool fb) {
      if (!bug) return vr_estimate(f, beta, rho, fb);
      return fb ? (f + beta) / rho + beta : beta;
    };
    const double mean = rho * est(true) + (1.0 - rho) * est(false);
    worst = std::max(worst, std::abs(mean - f) / std::max(1.0, std::abs(f)));
  }
  return {"unbiasedness", worst <= 1e-10, fmt("max relative error %.3g", worst)};
}

PropertyResult check_variance(Rng& rng) {
  const auto v = variance_pair(1.0, 0.8, 0.25);
  bool ok = std::abs(v.naive - 3.0) < 1e-12 && std::abs(v.vr - 0.12) < 1e-12;
  std::bernoulli_distribution fb(0.25);
  double s1 = 0, s2 = 0, t1 = 0, t2 = 0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    const bool b = fb(rng);
    const double a = naive_estimate(1.0, 0.25, b), c = vr_estimate(1.0, 0.8, 0.25, b);
    s1 += a;
    s2 += a * a;
    t1 += c;
    t2 += c * c;
  }
  const double var_n = s2 / n - (s1 / n) * (s1 / n);
  const double var_v = t2 / n - (t1 / n) * (t1 / n);
  ok = ok && std::abs(var_n / 3.0 - 1.0) < 0.05 && std::abs(var_v / 0.12 - 1.0) < 0.05;
  for (int i = 1; i < 200 && ok; ++i) {
    const double r = 2.0 * i / 200.0;  // beta / f in (0, 2)
    for (int k = 1; k <= 200; ++k) {
      const auto p = variance_pair(1.0, r, k / 200.0);
      if (p.vr > p.naive + 1e-12) ok = false;
    }
  }
  return {"variance_pair", ok, fmt("monte carlo naive %.4f vr %.4f", var_n, var_v)};
}

PropertyResult check_simplex(Rng& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  bool ok = true;
  double worst = 0.0;
  for (int trial = 0; trial < 200 && ok; ++trial) {
    const int dests = 1 + trial % 4;
    std::vector<NodeId> d(dests);
    for (int i = 0; i < dests; ++i) d[i] = i + 1;
    ExpertGrid grid(uniform_threshold_grid(11), d);
    std::vector<double> loss(grid.size());
    for (double& l : loss) l = 10.0 * u(rng);
    const auto w = exp_weights(loss, 0.5);
    const double lambda = 0.05 + 0.9 * u(rng);
    const auto dist = action_probs(grid, w, u(rng), lambda);
    double raw = 0, mixed = 0;
    for (int a = 0; a < dist.num_actions(); ++a) {
      raw += dist.raw[a];
      mixed += dist.mixed[a];
      if (dist.mixed[a] < lambda / (dests + 1) - 1e-12) ok = false;
    }
    worst = std::max({worst, std::abs(raw - 1.0), std::abs(mixed - 1.0)});
  }
  ok = ok && worst < 1e-12;
  return {"action_simplex", ok, fmt("max sum deviation %.3g", worst)};
}

PropertyResult check_submodular(Rng& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const int M = 5, Y = 4;
  long violations = 0, checks = 0;
  for (int trial = 0; trial < 20; ++trial) {
    auto table = std::make_shared<ErrorTable>();
    table->num_tasks = Y;
    table->num_models = M;
    table->error.resize(Y * M);
    for (double& e : table->error) e = u(rng);
    table->sizes.assign(M, 1.0);
    PlacementUtilityCtx ctx;
    ctx.errors = table;
    ctx.mixture.assign(Y, 1.0 / Y);
    auto members = [&](unsigned mask) {
      std::vector<ModelId> s;
      for (int m = 0; m < M; ++m) if (mask >> m & 1u) s.push_back(m);
      return s;
    };
    for (unsigned b = 0; b < (1u << M); ++b) {
      for (unsigned a = b;; a = (a - 1) & b) {
        const auto A = members(a), B = members(b);
        for (int m = 0; m < M; ++m) {
          if (b >> m & 1u) continue;
          ++checks;
          if (marginal_gain(ctx, m, A) < marginal_gain(ctx, m, B) - 1e-12) ++violations;
        }
        if (a == 0) break;
      }
    }
  }
  return {"submodularity", violations == 0,
          fmt("%.0f violations in %.0f checks", static_cast<double>(violations),
              static_cast<double>(checks))};
}

class ChainQuery : public DownstreamQuery {
 public:
  explicit ChainQuery(std::vector<double> offload) : offload_(std::move(offload)) {}
  NodeContext query(NodeId n, const Job&) const override {
    NodeContext c;
    if (n >= static_cast<NodeId>(offload_.size())) return c;
    const double p = offload_[n];
    c.dist.raw = {1.0 - p, p};
    c.dist.mixed = c.dist.raw;
    return c;
  }

 private:
  std::vector<double> offload_;
};

PropertyResult check_rho_chain(Rng& rng) {
  std::uniform_real_distribution<double> u(0.05, 1.0);
  double worst = 0.0;
  for (int depth = 2; depth <= 5; ++depth) {
    std::vector<int> sizes(depth, 1);
    std::vector<double> mem(depth, 10.0);
    const auto topo = build_topology(sizes, mem, 0.4, 1.0);
    std::vector<double> p(depth - 1);
    for (double& x : p) x = u(rng);
    ChainQuery q(p);
    Job job;
    std::vector<double> queues(depth, 0.0);
    RecursionSnapshot snap(topo, q, job, queues, 1.0, 1.0);
    double prod = 1.0;
    for (double x : p) prod *= x;
    worst = std::max(worst, std::abs(snap.reach_prob(0) - prod));
  }
  return {"rho_chain", worst <= 1e-12, fmt("max deviation %.3g", worst)};
}

}  // namespace

std::vector<PropertyResult> run_property_suite(const ValidationOptions& opts) {
  Rng rng = make_rng(opts.seed, Stream::kRouting);
  std::vector<PropertyResult> out;
  out.push_back(check_unbiased(rng, opts.inject_beta_sign_bug));
  out.push_back(check_variance(rng));
  out.push_back(check_simplex(rng));
  out.push_back(check_submodular(rng));
  out.push_back(check_rho_chain(rng));
  return out;
}

}  // namespace hiroute
