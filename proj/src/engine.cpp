#include "hiroute/engine.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <stdexcept>

namespace hiroute {

using nlohmann::json;

WorkloadSource WorkloadSource::from_config(const WorkloadConfig& cfg) {
  WorkloadSource s;
  if (cfg.mode == "trace") {
    s.trace = std::make_shared<const Trace>(load_trace(cfg.trace_path));
  } else {
    s.world = std::make_shared<const SyntheticWorld>(make_synthetic_world(cfg.synthetic));
  }
  return s;
}

std::vector<double> mean_size_per_task(const WorkloadSource& source) {
  const Catalog& cat = source.catalog();
  std::vector<double> out(cat.num_tasks(), 0.0);
  if (source.world) {
    const auto& sp = source.world->spec;
    for (TaskId y = 0; y < cat.num_tasks(); ++y) {
      out[y] = cat.task(y).modality == Modality::kVision
                   ? 0.5 * (sp.vision_size_min + sp.vision_size_max)
                   : 0.5 * (sp.text_size_min + sp.text_size_max);
    }
    return out;
  }
  std::vector<double> count(cat.num_tasks(), 0.0);
  for (const auto& j : source.trace->jobs) {
    out[j.task] += j.size_units;
    count[j.task] += 1.0;
  }
  for (TaskId y = 0; y < cat.num_tasks(); ++y) {
    if (count[y] > 0.0) out[y] /= count[y];
  }
  return out;
}

WorkloadStats workload_stats(const ArrivalModel& arrivals,
                             std::span<const double> mean_size,
                             double distance_factor) {
  WorkloadStats st;
  const double rate = arrivals.mean_jobs_per_slot;
  for (const auto& mix : arrivals.task_mixture) {
    double c = 0.0;
    for (std::size_t y = 0; y < mix.size(); ++y) c += mix[y] * mean_size[y];
    st.arrival_rate.push_back(rate);
    st.mean_cost.push_back(c * distance_factor);
  }
  return st;
}

// ---------------------------------------------------------------------------

class Simulation::Query : public DownstreamQuery {
 public:
  explicit Query(const Simulation& sim) : sim_(sim) {}
  NodeContext query(NodeId node, const Job& job) const override {
    return sim_.node_context(node, job);
  }

 private:
  const Simulation& sim_;
};

Simulation::Simulation(const ExperimentConfig& cfg, std::uint64_t seed,
                       WorkloadSource source)
    : cfg_(cfg),
      seed_(seed),
      source_(std::move(source)),
      topo_(cfg.topology.build()),
      queues_(topo_),
      routing_rng_(make_rng(seed, Stream::kRouting)),
      regret_(topo_.num_nodes(), source_.catalog().num_tasks()) {
  cfg_.validate();
  const Catalog& cat = catalog();
  errors_ = std::make_shared<const ErrorTable>(ErrorTable::from_catalog(cat));

  const auto entries = topo_.layer_nodes(1);
  Rng mix_rng = make_rng(seed, Stream::kMixtures);
  std::vector<TaskId> eligible;
  if (source_.trace) eligible = trace_task_support(*source_.trace);
  ArrivalModel arrivals =
      make_arrival_model(entries, cat.num_tasks(), cfg_.workload.mean_jobs_per_slot,
                         cfg_.workload.dirichlet_alpha, mix_rng, eligible);
  const std::uint64_t arrival_seed =
      derive_seed(seed, {static_cast<std::uint64_t>(Stream::kArrivals)});
  if (source_.world) {
    generator_ = std::make_unique<JobGenerator>(*source_.world, arrivals, arrival_seed);
  } else {
    generator_ = std::make_unique<JobGenerator>(*source_.trace, arrivals, arrival_seed);
  }
  confidence_.noise_std = cfg_.workload.confidence_noise;

  if (is_static(cfg_.policy)) {
    double p = 0.0;
    if (cfg_.baseline.offload_prob) {
      p = *cfg_.baseline.offload_prob;
    } else {
      const auto sizes = mean_size_per_task(source_);
      p = calibrate_offload_prob(
          topo_, workload_stats(generator_->arrivals(), sizes, cfg_.topology.distance_factor),
          cfg_.topology.resource_budget);
    }
    static_.emplace(cfg_.policy, p, topo_.num_nodes());
  } else {
    estimator_ = variant_flags(cfg_.policy);
    const int experts_at_entry = static_cast<int>(cfg_.learning.thresholds.size()) *
                                 static_cast<int>(topo_.uplinks(entries[0]).size());
    eta_ = cfg_.learning.eta ? *cfg_.learning.eta
                             : default_eta(experts_at_entry, static_cast<double>(cfg_.total_jobs));
    experts_ = std::make_unique<ExpertTable>(topo_, cat.num_tasks(), cfg_.learning.thresholds,
                                             eta_, cfg_.learning.lambda);
    baselines_ = std::make_unique<BaselineTable>(
        topo_, cat.num_tasks(), static_cast<int>(cfg_.learning.thresholds.size()),
        cfg_.learning.eta_b, cfg_.learning.baseline_target);
  }

  cost_total_.assign(topo_.num_nodes(), 0.0);
  task_hist_.assign(topo_.num_nodes(), std::vector<double>(cat.num_tasks(), 0.0));
  placement_.loaded.assign(topo_.num_nodes(), {});
  next_checkpoint_ = cfg_.regret_checkpoint;
}

Simulation::~Simulation() = default;

double Simulation::job_confidence(const Job& job, NodeId n) const {
  // Keyed by (seed, job, node) so routing and downstream queries agree.
  Rng rng(derive_seed(seed_, {static_cast<std::uint64_t>(Stream::kConfidence),
                              static_cast<std::uint64_t>(job.id),
                              static_cast<std::uint64_t>(n)}));
  return confidence(job, placement_.loaded[n], catalog(), confidence_, rng);
}

NodeContext Simulation::node_context(NodeId n, const Job& job) const {
  NodeContext c;
  if (topo_.is_oracle(n)) return c;
  c.z = job_confidence(job, n);
  c.local_error = inference_error(job, false, placement_.loaded[n], catalog());
  if (experts_) {
    c.dist = action_probs(experts_->grid(n), experts_->weights(n, job.task), c.z,
                          experts_->lambda());
  }
  return c;
}

void Simulation::maybe_place() {
  const auto D = static_cast<std::int64_t>(cfg_.placement.epoch_slots);
  if ((slot_ - 1) % D != 0) return;
  const bool first = slot_ == 1;
  const int M = catalog().num_models();
  if (!first) {
    prev_hist_ = task_hist_;
    for (auto& h : task_hist_) std::fill(h.begin(), h.end(), 0.0);
  }

  if (cfg_.placement.kind == PlacementKind::kGreedy) {
    const auto entries = topo_.layer_nodes(1);
    std::vector<ModelId> pool(M);
    std::iota(pool.begin(), pool.end(), 0);
    Placement next;
    next.loaded.assign(topo_.num_nodes(), {});
    next.epoch = slot_;
    for (NodeId n = 0; n < topo_.num_nodes(); ++n) {
      if (topo_.is_oracle(n)) continue;
      PlacementUtilityCtx ctx;
      ctx.errors = errors_;
      if (topo_.is_entry(n)) {
        const auto it = std::find(entries.begin(), entries.end(), n);
        ctx.mixture = generator_->arrivals().task_mixture[it - entries.begin()];
      } else {
        const auto& h = first ? task_hist_[n] : prev_hist_[n];
        const double total = std::accumulate(h.begin(), h.end(), 0.0);
        ctx.mixture.assign(h.size(), 1.0 / static_cast<double>(h.size()));
        if (total > 0.0) {
          for (std::size_t y = 0; y < h.size(); ++y) ctx.mixture[y] = h[y] / total;
        }
      }
      // the first deployment is free; later epochs pay for new models
      ctx.switch_penalty = first ? 0.0 : cfg_.placement.switch_penalty;
      if (!first) {
        ctx.previous.assign(M, 0);
        for (ModelId m : placement_.loaded[n]) ctx.previous[m] = 1;
      }
      auto set = greedy_onload(ctx, topo_.memory_budget(n), pool);
      std::sort(set.begin(), set.end());
      next.loaded[n] = std::move(set);
    }
    placement_ = std::move(next);
  } else if (first) {
    placement_ = baseline_placement(
        cfg_.placement.kind, topo_, errors_->sizes,
        derive_seed(seed_, {static_cast<std::uint64_t>(Stream::kPlacement)}));
    placement_.epoch = slot_;
  } else {
    return;
  }

  if (epoch_sink_) {
    json e{{"slot", slot_}, {"loaded", placement_.loaded}};
    if (baselines_) e["mean_abs_baseline"] = baselines_->mean_abs();
    e["lemma_condition_held"] = lemma_held_;
    e["updates"] = updates_;
    epoch_sink_(e);
  }
}

void Simulation::route(Job& job, SlotMetrics& m, std::span<const double> q_start) {
  const int K = topo_.num_layers();
  const TaskId y = job.task;
  JobRecord rec;
  rec.job_id = job.id;
  rec.slot = slot_;
  rec.task = y;
  rec.hard = job.hard();
  rec.path.push_back(job.entry_node);

  const Query query(*this);
  std::optional<RecursionSnapshot> snap;
  if (experts_) {
    snap.emplace(topo_, query, job, q_start, cfg_.learning.v,
                 cfg_.topology.distance_factor, cfg_.learning.recursion);
  }
  const double hop = transfer_cost(job.size_units, cfg_.topology.distance_factor);

  NodeId n = job.entry_node;
  while (!topo_.is_oracle(n)) {
    const int a = snap ? sample_action(snap->context(n).dist, routing_rng_)
                       : static_action(*static_, topo_, n, routing_rng_);
    if (a == 0) break;
    const NodeId next = topo_.uplinks(n)[a - 1];
    if (topo_.layer_of(next) != topo_.layer_of(n) + 1) {
      throw RoutingInvariantError("offload skipped a layer");
    }
    m.cost[next] += hop;
    rec.hop_cost.push_back(hop);
    rec.path.push_back(next);
    if (static_cast<int>(rec.path.size()) > K) {
      throw RoutingInvariantError("routing path longer than the hierarchy");
    }
    n = next;
  }
  for (NodeId v : rec.path) task_hist_[v][y] += 1.0;

  const bool fb = topo_.is_oracle(n);
  rec.exit_layer = topo_.layer_of(n);
  rec.error = inference_error(job, fb, placement_.loaded[n], catalog());

  ++m.jobs;
  m.errors += rec.error;
  m.feedback += fb ? 1 : 0;
  if (rec.hard) {
    ++m.hard_jobs;
    m.hard_hits += fb ? 1 : 0;
  }
  ++jobs_done_;

  if (snap) {
    const double v = cfg_.learning.v;
    const bool vr = estimator_->estimator == EstimatorKind::kVarianceReduced;
    const bool local_only = estimator_->zero_upstream_loss;
    for (std::size_t i = 0; i < rec.path.size(); ++i) {
      const NodeId node = rec.path[i];
      if (topo_.is_oracle(node)) break;
      const auto& ctx = snap->context(node);
      const double rho = snap->reach_prob(node);
      const auto& grid = experts_->grid(node);
      const int E = grid.size();
      scratch_losses_.resize(E);
      scratch_estimates_.resize(E);
      std::vector<double> true_losses(E);
      for (int e = 0; e < E; ++e) {
        const NodeId dest = grid.destinations[grid.destination_of(e)];
        const double theta = grid.thresholds[grid.threshold_of(e)];
        const double fbar = snap->expected_loss(dest);
        true_losses[e] = expert_loss(v, theta, ctx.z, ctx.local_error, q_start[dest], hop, fbar);
        scratch_losses_[e] =
            local_only ? expert_loss(v, theta, ctx.z, ctx.local_error, q_start[dest], hop, 0.0)
                       : true_losses[e];
      }
      double realized = v * ctx.local_error;
      if (i + 1 < rec.path.size()) {
        const NodeId next = rec.path[i + 1];
        realized = q_start[next] * hop + snap->expected_loss(next);
      }

      const auto beta = baselines_->values(node, y);
      const double odds = std::max(0.0, (1.0 - rho) / rho);
      bool any = false;
      for (int e = 0; e < E; ++e) {
        const double f = scratch_losses_[e];
        scratch_estimates_[e] = vr ? vr_estimate(f, beta[e], rho, fb) : naive_estimate(f, rho, fb);
        any = any || scratch_estimates_[e] != 0.0;
        if (f > 0.0) {
          ++updates_;
          if (beta[e] > 0.0 && beta[e] <= 2.0 * f) ++lemma_held_;
          var_naive_sum_ += f * f * odds;
          var_vr_sum_ += (f - beta[e]) * (f - beta[e]) * odds;
        }
      }
      if (any) experts_->accumulate_loss(node, y, scratch_estimates_);
      if (vr && fb) {
        for (int e = 0; e < E; ++e) baselines_->update(node, y, e, scratch_losses_[e], rho, fb);
      }

      regret_.add(jobs_done_, node, y, realized, true_losses);
      if (visit_sink_) visit_sink_(VisitRecord{jobs_done_, node, y, realized, true_losses});
    }
    if (jobs_done_ == next_checkpoint_) {
      regret_curve_.push_back({jobs_done_, regret_.regret(topo_.layer_nodes(1))});
      next_checkpoint_ += cfg_.regret_checkpoint;
    }
  }
  if (path_sink_) path_sink_(rec);
}

SlotMetrics Simulation::step() {
  ++slot_;
  maybe_place();
  if (experts_) experts_->refresh_weights();

  const std::vector<double> q_start(queues_.values().begin(), queues_.values().end());
  auto jobs = generator_->generate_slot(slot_);
  const auto room = static_cast<std::size_t>(cfg_.total_jobs - jobs_started_);
  if (jobs.size() > room) jobs.resize(room);
  jobs_started_ += static_cast<std::int64_t>(jobs.size());

  SlotMetrics m;
  m.slot = slot_;
  m.cost.assign(topo_.num_nodes(), 0.0);
  for (auto& job : jobs) route(job, m, q_start);

  queues_.advance(m.cost);
  m.queue.assign(queues_.values().begin(), queues_.values().end());
  m.mean_entropy = experts_ ? experts_->mean_entropy() : 0.0;
  m.drift_penalty = drift_penalty_diagnostic(q_start, m.cost, m.errors, cfg_.learning.v);

  for (NodeId n = 0; n < topo_.num_nodes(); ++n) cost_total_[n] += m.cost[n];
  errors_total_ += m.errors;
  hard_total_ += m.hard_jobs;
  hard_hits_total_ += m.hard_hits;
  feedback_total_ += m.feedback;
  if (slot_ % 1000 == 0) entropy_curve_.emplace_back(slot_, m.mean_entropy);
  return m;
}

void Simulation::run(const std::function<void(const SlotMetrics&)>& sink) {
  while (!done()) {
    const auto m = step();
    if (sink) sink(m);
  }
}

RunSummary Simulation::summary() const {
  RunSummary s;
  s.policy = to_string(cfg_.policy);
  s.placement = to_string(cfg_.placement.kind);
  s.num_layers = topo_.num_layers();
  s.seed = seed_;
  s.jobs = jobs_done_;
  s.slots = slot_;
  s.hard_jobs = hard_total_;
  const double J = std::max<double>(static_cast<double>(jobs_done_), 1.0);
  s.error_rate = static_cast<double>(errors_total_) / J;
  s.feedback_rate = static_cast<double>(feedback_total_) / J;
  s.hard_fraction = static_cast<double>(hard_total_) / J;
  s.hit_rate = hard_total_ > 0 ? static_cast<double>(hard_hits_total_) / static_cast<double>(hard_total_) : 0.0;
  s.offload_prob = offload_prob();
  s.eta = eta_;
  const double T = std::max<double>(static_cast<double>(slot_), 1.0);
  s.final_queue.assign(queues_.values().begin(), queues_.values().end());
  for (NodeId n = 0; n < topo_.num_nodes(); ++n) {
    s.avg_cost.push_back(cost_total_[n] / T);
    if (!topo_.is_entry(n)) {
      s.max_avg_cost = std::max(s.max_avg_cost, s.avg_cost.back());
      s.max_queue_over_t = std::max(s.max_queue_over_t, queues_[n] / T);
    }
  }
  s.regret_curve = regret_curve_;
  if (experts_ && (s.regret_curve.empty() || s.regret_curve.back().jobs != jobs_done_)) {
    s.regret_curve.push_back({jobs_done_, regret_.regret(topo_.layer_nodes(1))});
  }
  s.entropy_curve = entropy_curve_;
  s.updates = updates_;
  s.lemma_condition_held = lemma_held_;
  if (updates_ > 0) {
    s.mean_var_naive = var_naive_sum_ / static_cast<double>(updates_);
    s.mean_var_vr = var_vr_sum_ / static_cast<double>(updates_);
  }
  s.pair_regret = regret_.pairs();
  return s;
}

json to_json(const RunSummary& s) {
  json curve = json::array();
  for (const auto& p : s.regret_curve) {
    curve.push_back({{"jobs", p.jobs}, {"regret", p.regret}, {"regret_per_job", p.regret_per_job()}});
  }
  json entropy = json::array();
  for (const auto& [slot, h] : s.entropy_curve) entropy.push_back({{"slot", slot}, {"entropy", h}});
  json pairs = json::array();
  for (const auto& p : s.pair_regret) {
    pairs.push_back({{"node", p.node}, {"task", p.task}, {"visits", p.visits},
                     {"regret", p.regret()}, {"best_expert", p.best_expert}});
  }
  return json{
      {"policy", s.policy},
      {"placement", s.placement},
      {"num_layers", s.num_layers},
      {"seed", s.seed},
      {"jobs", s.jobs},
      {"slots", s.slots},
      {"hard_jobs", s.hard_jobs},
      {"error_rate", s.error_rate},
      {"hit_rate", s.hit_rate},
      {"feedback_rate", s.feedback_rate},
      {"hard_fraction", s.hard_fraction},
      {"offload_prob", s.offload_prob},
      {"eta", s.eta},
      {"avg_cost", s.avg_cost},
      {"final_queue", s.final_queue},
      {"max_avg_cost", s.max_avg_cost},
      {"max_queue_over_t", s.max_queue_over_t},
      {"regret_curve", curve},
      {"entropy_curve", entropy},
      {"estimator",
       {{"updates", s.updates},
        {"lemma_condition_held", s.lemma_condition_held},
        {"mean_var_naive", s.mean_var_naive},
        {"mean_var_vr", s.mean_var_vr}}},
      {"pair_regret", pairs},
  };
}

std::string metrics_csv_header(int num_nodes) {
  std::string h = "slot,jobs,errors,hard_jobs,hard_hits,feedback,mean_entropy,drift_penalty";
  for (int n = 0; n < num_nodes; ++n) h += ",cost_" + std::to_string(n);
  for (int n = 0; n < num_nodes; ++n) h += ",queue_" + std::to_string(n);
  return h;
}

std::string metrics_csv_row(const SlotMetrics& m) {
  char buf[64];
  std::string row;
  std::snprintf(buf, sizeof buf, "%lld,%d,%d,%d,%d,%d", static_cast<long long>(m.slot), m.jobs,
                m.errors, m.hard_jobs, m.hard_hits, m.feedback);
  row += buf;
  auto num = [&](double x) {
    std::snprintf(buf, sizeof buf, ",%.10g", x);
    row += buf;
  };
  num(m.mean_entropy);
  num(m.drift_penalty);
  for (double c : m.cost) num(c);
  for (double q : m.queue) num(q);
  return row;
}

std::string run_id(const ExperimentConfig& cfg, std::uint64_t seed) {
  return cfg.name + "-" + to_string(cfg.policy) + "-" + to_string(cfg.placement.kind) + "-k" +
         std::to_string(cfg.topology.layer_sizes.size()) + "-s" + std::to_string(seed);
}

namespace {

std::ofstream open_out(const std::filesystem::path& p) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + p.string());
  return out;
}

void check_written(std::ofstream& out, const std::filesystem::path& p) {
  out.flush();
  if (!out) throw std::runtime_error("write failed: " + p.string());
}

}  // namespace

RunSummary run_seed(const ExperimentConfig& cfg, std::uint64_t seed,
                    const WorkloadSource& source, const std::filesystem::path& out_dir) {
  Simulation sim(cfg, seed, source);
  if (!cfg.output.metrics) {
    sim.run();
    return sim.summary();
  }
  const auto dir = out_dir / run_id(cfg, seed);
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw std::runtime_error("cannot create " + dir.string() + ": " + ec.message());

  const auto metrics_path = dir / "metrics.csv";
  const auto epochs_path = dir / "epochs.jsonl";
  const auto paths_path = dir / "paths.jsonl";
  auto metrics = open_out(metrics_path);
  auto epochs = open_out(epochs_path);
  std::ofstream paths;
  if (cfg.output.paths) {
    paths = open_out(paths_path);
    sim.set_path_sink([&](const JobRecord& r) {
      paths << json{{"job", r.job_id}, {"slot", r.slot}, {"task", r.task}, {"hard", r.hard},
                    {"path", r.path}, {"hop_cost", r.hop_cost}, {"exit_layer", r.exit_layer},
                    {"error", r.error}}.dump()
            << '\n';
    });
  }
  sim.set_epoch_sink([&](const json& e) { epochs << e.dump() << '\n'; });

  metrics << metrics_csv_header(sim.topology().num_nodes()) << '\n';
  sim.run([&](const SlotMetrics& m) { metrics << metrics_csv_row(m) << '\n'; });
  check_written(metrics, metrics_path);
  check_written(epochs, epochs_path);
  if (cfg.output.paths) check_written(paths, paths_path);

  const auto summary = sim.summary();
  const auto summary_path = dir / "summary.json";
  auto out = open_out(summary_path);
  json j = to_json(summary);
  j["config"] = to_json(cfg);
  out << j.dump(2) << '\n';
  check_written(out, summary_path);
  return summary;
}

std::vector<RunSummary> run_experiment(const ExperimentConfig& cfg,
                                       const std::filesystem::path& out_dir) {
  cfg.validate();
  const auto source = WorkloadSource::from_config(cfg.workload);
  std::vector<RunSummary> out;
  for (auto seed : cfg.seeds) out.push_back(run_seed(cfg, seed, source, out_dir));
  return out;
}

MeanStd mean_std(std::span<const double> xs) {
  MeanStd r;
  if (xs.empty()) return r;
  r.mean = std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
  if (xs.size() > 1) {
    double ss = 0.0;
    for (double x : xs) ss += (x - r.mean) * (x - r.mean);
    r.std = std::sqrt(ss / static_cast<double>(xs.size() - 1));
  }
  return r;
}

}  // namespace hiroute
