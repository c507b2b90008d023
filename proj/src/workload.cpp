#include "hiroute/workload.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "json.hpp"

namespace hiroute {

const char* to_string(Modality m) {
  return m == Modality::kText ? "text" : "vision";
}

Modality parse_modality(const std::string& s) {
  if (s == "text") return Modality::kText;
  if (s == "vision") return Modality::kVision;
  throw std::invalid_argument("unknown modality '" + s + "'");
}

Catalog::Catalog(std::vector<TaskType> tasks, std::vector<ModelSpec> models)
    : tasks_(std::move(tasks)), models_(std::move(models)) {
  for (const auto& m : models_) {
    if (!(m.memory_size > 0.0)) {
      throw std::invalid_argument("model " + m.id + " has nonpositive size");
    }
    if (m.error_prob.size() != tasks_.size()) {
      throw std::invalid_argument("model " + m.id +
                                  " needs one error probability per task");
    }
    for (double p : m.error_prob) {
      if (!(p >= 0.0 && p <= 1.0)) {
        throw std::invalid_argument("model " + m.id +
                                    " has error probability outside [0,1]");
      }
    }
  }
}

std::optional<TaskId> Catalog::find_task(const std::string& name) const {
  for (std::size_t i = 0; i < tasks_.size(); ++i) {
    if (tasks_[i].name == name) return static_cast<TaskId>(i);
  }
  return std::nullopt;
}

std::optional<ModelId> Catalog::find_model(const std::string& id) const {
  for (std::size_t i = 0; i < models_.size(); ++i) {
    if (models_[i].id == id) return static_cast<ModelId>(i);
  }
  return std::nullopt;
}

bool Job::hard() const {
  return std::none_of(correct.begin(), correct.end(),
                      [](std::uint8_t c) { return c != 0; });
}

ArrivalModel make_arrival_model(std::span<const NodeId> entry_nodes,
                                int num_tasks, double mean_jobs_per_slot,
                                double dirichlet_alpha, Rng& rng,
                                std::span<const TaskId> eligible) {
  if (!(mean_jobs_per_slot >= 0.0)) {
    throw std::invalid_argument("mean_jobs_per_slot must be nonnegative");
  }
  if (!(dirichlet_alpha > 0.0)) {
    throw std::invalid_argument("dirichlet alpha must be positive");
  }
  std::vector<bool> allowed(num_tasks, eligible.empty());
  for (TaskId y : eligible) allowed.at(y) = true;

  ArrivalModel model;
  model.mean_jobs_per_slot = mean_jobs_per_slot;
  model.entry_nodes.assign(entry_nodes.begin(), entry_nodes.end());
  std::gamma_distribution<double> gamma(dirichlet_alpha, 1.0);
  for (std::size_t i = 0; i < entry_nodes.size(); ++i) {
    std::vector<double> mix(num_tasks, 0.0);
    double total = 0.0;
    for (int y = 0; y < num_tasks; ++y) {
      if (!allowed[y]) continue;
      mix[y] = gamma(rng);
      total += mix[y];
    }
    if (!(total > 0.0)) {
      throw std::invalid_argument("task mixture has no support");
    }
    for (double& p : mix) p /= total;
    model.task_mixture.push_back(std::move(mix));
  }
  return model;
}

std::optional<ModelId> select_model(const Catalog& catalog, TaskId task,
                                    std::span<const ModelId> loaded) {
  std::optional<ModelId> best;
  double best_err = 2.0;
  for (ModelId m : loaded) {
    if (!catalog.supports(m, task)) continue;
    const double e = catalog.effective_error(m, task);
    if (e < best_err || (e == best_err && best && m < *best)) {
      best = m;
      best_err = e;
    }
  }
  return best;
}

double confidence(const Job& job, std::span<const ModelId> loaded,
                  const Catalog& catalog, const ConfidenceModel& cm,
                  Rng& rng) {
  const auto m = select_model(catalog, job.task, loaded);
  const double centre = m ? 1.0 - catalog.effective_error(*m, job.task) : 0.0;
  double z = centre;
  if (cm.noise_std > 0.0) {
    std::normal_distribution<double> noise(0.0, cm.noise_std);
    z += noise(rng);
  }
  return std::clamp(z, 0.0, 1.0);
}

int inference_error(const Job& job, bool at_oracle,
                    std::span<const ModelId> loaded, const Catalog& catalog) {
  if (at_oracle) return 0;
  const auto m = select_model(catalog, job.task, loaded);
  if (!m) return 1;
  return job.correct[*m] ? 0 : 1;
}

// ---------------------------------------------------------------------------

std::vector<SyntheticModel> default_model_pool() {
  return {
      {"gpt2-large", 0.8, false},     {"gpt2-xl", 1.5, false},
      {"deepseek-llm-7b", 7.0, false}, {"deepseek-moe-16b", 16.0, false},
      {"deepseek-llm-67b", 67.0, false}, {"qwen2-0.5b", 0.5, false},
      {"qwen1.5-0.5b", 0.5, false},   {"qwen2-72b", 72.0, false},
      {"deepseek-vl2", 27.0, true},   {"deepseek-vl2-tiny", 3.0, true},
      {"qwen2.5-vl-32b", 32.0, true}, {"qwen2.5-vl-72b", 72.0, true},
      {"gemma3-27b", 27.0, true},     {"internvl2.5-78b", 78.0, true},
      {"janus-pro-1b", 1.0, true},    {"janus-pro-7b", 7.0, true},
      {"kimi-vl-a3b", 16.0, true},    {"mimo-vl-7b", 7.0, true},
      {"phi-3.5-vision", 4.2, true},  {"pixtral-12b", 12.0, true},
      {"qianfan-vl-8b", 8.0, true},   {"smolvlm2", 2.2, true},
      {"llava-next-7b", 7.0, true},
  };
}

namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace

SyntheticWorld make_synthetic_world(const SyntheticSpec& spec_in) {
  SyntheticWorld world;
  world.spec = spec_in;
  auto& spec = world.spec;
  if (spec.models.empty()) spec.models = default_model_pool();
  if (spec.num_text_tasks < 0 || spec.num_vision_tasks < 0 ||
      spec.num_text_tasks + spec.num_vision_tasks == 0) {
    throw std::invalid_argument("synthetic workload needs task types");
  }
  if (!(spec.hard_fraction >= 0.0 && spec.hard_fraction < 1.0) ||
      !(spec.hard_task_share > 0.0 && spec.hard_task_share <= 1.0)) {
    throw std::invalid_argument("hard_fraction/hard_task_share out of range");
  }

  Rng rng = make_rng(spec.world_seed, Stream::kWorld);
  std::uniform_real_distribution<double> difficulty(-1.0, 1.5);
  std::normal_distribution<double> specialisation(0.0, 0.7);
  std::normal_distribution<double> skill_noise(0.0, 0.2);

  std::vector<TaskType> tasks;
  char buf[32];
  for (int i = 0; i < spec.num_text_tasks; ++i) {
    std::snprintf(buf, sizeof buf, "text-%03d", i);
    tasks.push_back({buf, Modality::kText});
  }
  for (int i = 0; i < spec.num_vision_tasks; ++i) {
    std::snprintf(buf, sizeof buf, "vision-%03d", i);
    tasks.push_back({buf, Modality::kVision});
  }
  const int Y = static_cast<int>(tasks.size());
  const int M = static_cast<int>(spec.models.size());

  std::vector<double> task_difficulty(Y);
  for (double& d : task_difficulty) d = difficulty(rng);
  std::vector<double> skill(M);
  for (int m = 0; m < M; ++m) {
    skill[m] = -0.2 + 0.55 * std::log(spec.models[m].size) + skill_noise(rng);
  }

  // Impossible component: a fixed share of task types, scaled so the share
  // of impossible jobs is hard_fraction under a uniform task marginal.
  const int num_hard_tasks =
      std::max(1, static_cast<int>(std::lround(spec.hard_task_share * Y)));
  std::vector<int> order(Y);
  for (int y = 0; y < Y; ++y) order[y] = y;
  std::shuffle(order.begin(), order.end(), rng);
  world.hardness.assign(Y, 0.0);
  const double per_task =
      std::min(1.0, spec.hard_fraction * Y / static_cast<double>(num_hard_tasks));
  for (int i = 0; i < num_hard_tasks; ++i) world.hardness[order[i]] = per_task;

  world.p_correct.assign(Y, std::vector<double>(M, 0.0));
  std::vector<ModelSpec> models(M);
  for (int m = 0; m < M; ++m) {
    models[m].id = spec.models[m].id;
    models[m].memory_size = spec.models[m].size;
    models[m].supports_text = true;
    models[m].supports_vision = spec.models[m].vision;
    models[m].error_prob.assign(Y, 1.0);
  }
  for (int y = 0; y < Y; ++y) {
    for (int m = 0; m < M; ++m) {
      const double pc =
          sigmoid(skill[m] - task_difficulty[y] + specialisation(rng));
      if (!models[m].supports(tasks[y].modality)) continue;
      world.p_correct[y][m] = pc;
      models[m].error_prob[y] = 1.0 - (1.0 - world.hardness[y]) * pc;
    }
  }
  world.catalog = Catalog(std::move(tasks), std::move(models));
  return world;
}

// ---------------------------------------------------------------------------

TraceParseError::TraceParseError(std::size_t line_no, const std::string& what)
    : std::runtime_error("trace line " + std::to_string(line_no) + ": " + what),
      line(line_no) {}

namespace {

using nlohmann::json;

const json& require(const json& obj, const char* key, std::size_t line) {
  auto it = obj.find(key);
  if (it == obj.end()) {
    throw TraceParseError(line, std::string("missing field '") + key + "'");
  }
  return *it;
}

}  // namespace

Trace parse_trace(std::istream& in) {
  std::string text;
  std::size_t line_no = 0;

  struct RawModel {
    std::string id;
    double size;
    bool text, vision;
    std::map<std::string, double> error_prob;
  };
  std::vector<RawModel> raw_models;
  std::map<std::string, int> model_index;

  std::vector<TaskType> tasks;
  std::map<std::string, int> task_index;
  Trace trace;

  bool header_seen = false;
  while (std::getline(in, text)) {
    ++line_no;
    if (text.find_first_not_of(" \t\r") == std::string::npos) continue;
    json obj;
    try {
      obj = json::parse(text);
    } catch (const json::parse_error& e) {
      throw TraceParseError(line_no, std::string("invalid JSON: ") + e.what());
    }
    if (!obj.is_object()) throw TraceParseError(line_no, "expected an object");

    try {
      if (!header_seen) {
        const auto& models = require(obj, "models", line_no);
        if (!models.is_array() || models.empty()) {
          throw TraceParseError(line_no, "'models' must be a non-empty array");
        }
        for (const auto& m : models) {
          RawModel rm;
          rm.id = require(m, "id", line_no).get<std::string>();
          rm.size = require(m, "size", line_no).get<double>();
          if (!(rm.size > 0.0)) {
            throw TraceParseError(line_no, "model " + rm.id + " size must be positive");
          }
          rm.text = rm.vision = false;
          for (const auto& mod : require(m, "modalities", line_no)) {
            const auto md = parse_modality(mod.get<std::string>());
            (md == Modality::kText ? rm.text : rm.vision) = true;
          }
          if (auto ep = m.find("error_prob"); ep != m.end()) {
            for (const auto& [task, p] : ep->items()) {
              const double v = p.get<double>();
              if (!(v >= 0.0 && v <= 1.0)) {
                throw TraceParseError(line_no, "error_prob outside [0,1]");
              }
              rm.error_prob[task] = v;
            }
          }
          if (model_index.count(rm.id)) {
            throw TraceParseError(line_no, "duplicate model id " + rm.id);
          }
          model_index[rm.id] = static_cast<int>(raw_models.size());
          raw_models.push_back(std::move(rm));
        }
        header_seen = true;
        continue;
      }

      const auto job_id = require(obj, "job_id", line_no).get<std::string>();
      const auto task_name = require(obj, "task_type", line_no).get<std::string>();
      const auto modality =
          parse_modality(require(obj, "modality", line_no).get<std::string>());
      const double size = require(obj, "size_units", line_no).get<double>();
      if (!(size > 0.0)) throw TraceParseError(line_no, "size_units must be positive");

      auto [it, inserted] =
          task_index.try_emplace(task_name, static_cast<int>(tasks.size()));
      if (inserted) {
        tasks.push_back({task_name, modality});
      } else if (tasks[it->second].modality != modality) {
        throw TraceParseError(line_no, "task " + task_name + " changes modality");
      }

      Job job;
      job.id = static_cast<std::int64_t>(trace.jobs.size());
      job.task = it->second;
      job.size_units = size;
      job.correct.assign(raw_models.size(), 0);
      std::vector<bool> seen(raw_models.size(), false);
      const auto& corr = require(obj, "correctness", line_no);
      if (!corr.is_object()) throw TraceParseError(line_no, "'correctness' must be an object");
      for (const auto& [mid, val] : corr.items()) {
        auto mi = model_index.find(mid);
        if (mi == model_index.end()) {
          throw TraceParseError(line_no, "unknown model_id '" + mid + "'");
        }
        if (!val.is_number_integer() && !val.is_number_unsigned()) {
          throw TraceParseError(line_no, "correctness for " + mid + " must be 0 or 1");
        }
        const auto v = val.get<long long>();
        if (v != 0 && v != 1) {
          throw TraceParseError(line_no, "correctness for " + mid + " must be 0 or 1");
        }
        const auto& rm = raw_models[mi->second];
        const bool ok = modality == Modality::kText ? rm.text : rm.vision;
        job.correct[mi->second] = ok ? static_cast<std::uint8_t>(v) : 0;
        seen[mi->second] = true;
      }
      for (std::size_t m = 0; m < seen.size(); ++m) {
        if (!seen[m]) {
          throw TraceParseError(line_no, "missing correctness for model " + raw_models[m].id);
        }
      }
      trace.jobs.push_back(std::move(job));
      trace.job_ids.push_back(job_id);
    } catch (const nlohmann::json::exception& e) {
      throw TraceParseError(line_no, e.what());
    } catch (const std::invalid_argument& e) {
      throw TraceParseError(line_no, e.what());
    }
  }
  if (!header_seen) throw TraceParseError(line_no, "missing models header");

  // Expected errors: header value when given, else the empirical trace rate.
  const std::size_t Y = tasks.size();
  std::vector<std::vector<double>> wrong(raw_models.size(), std::vector<double>(Y, 0.0));
  std::vector<double> count(Y, 0.0);
  for (const auto& j : trace.jobs) {
    count[j.task] += 1.0;
    for (std::size_t m = 0; m < raw_models.size(); ++m) wrong[m][j.task] += j.correct[m] ? 0.0 : 1.0;
  }
  std::vector<ModelSpec> models;
  for (std::size_t m = 0; m < raw_models.size(); ++m) {
    const auto& rm = raw_models[m];
    ModelSpec spec{rm.id, rm.size, rm.text, rm.vision, std::vector<double>(Y, 1.0)};
    for (std::size_t y = 0; y < Y; ++y) {
      if (!spec.supports(tasks[y].modality)) continue;
      auto given = rm.error_prob.find(tasks[y].name);
      spec.error_prob[y] = given != rm.error_prob.end()
                               ? given->second
                               : (count[y] > 0 ? wrong[m][y] / count[y] : 1.0);
    }
    models.push_back(std::move(spec));
  }
  trace.catalog = Catalog(std::move(tasks), std::move(models));
  return trace;
}

Trace load_trace(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open trace " + path.string());
  return parse_trace(in);
}

std::vector<TaskId> trace_task_support(const Trace& trace) {
  std::vector<bool> seen(trace.catalog.num_tasks(), false);
  for (const auto& j : trace.jobs) seen[j.task] = true;
  std::vector<TaskId> out;
  for (int y = 0; y < trace.catalog.num_tasks(); ++y) {
    if (seen[y]) out.push_back(y);
  }
  return out;
}

// ---------------------------------------------------------------------------

JobGenerator::JobGenerator(const SyntheticWorld& world, ArrivalModel arrivals,
                           std::uint64_t seed)
    : world_(&world), arrivals_(std::move(arrivals)), rng_(seed) {
  for (const auto& mix : arrivals_.task_mixture) {
    mixture_dists_.emplace_back(mix.begin(), mix.end());
  }
}

JobGenerator::JobGenerator(const Trace& trace, ArrivalModel arrivals,
                           std::uint64_t seed)
    : trace_(&trace), arrivals_(std::move(arrivals)), rng_(seed) {
  trace_by_task_.resize(trace.catalog.num_tasks());
  for (std::size_t i = 0; i < trace.jobs.size(); ++i) {
    trace_by_task_[trace.jobs[i].task].push_back(i);
  }
  for (const auto& mix : arrivals_.task_mixture) {
    for (std::size_t y = 0; y < mix.size(); ++y) {
      if (mix[y] > 0.0 && trace_by_task_.at(y).empty()) {
        throw std::invalid_argument("task mixture puts mass on a task with no trace records");
      }
    }
    mixture_dists_.emplace_back(mix.begin(), mix.end());
  }
}

const Catalog& JobGenerator::catalog() const {
  return world_ ? world_->catalog : trace_->catalog;
}

Job JobGenerator::make_job(TaskId task, NodeId entry, std::int64_t t) {
  Job job;
  if (world_) {
    const auto& spec = world_->spec;
    const bool vision = world_->catalog.task(task).modality == Modality::kVision;
    std::uniform_real_distribution<double> size(
        vision ? spec.vision_size_min : spec.text_size_min,
        vision ? spec.vision_size_max : spec.text_size_max);
    job.size_units = size(rng_);
    const int M = world_->catalog.num_models();
    job.correct.assign(M, 0);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const bool impossible = u(rng_) < world_->hardness[task];
    for (int m = 0; m < M; ++m) {
      // Always draw, so the stream layout does not depend on hardness.
      const double draw = u(rng_);
      if (!impossible && world_->catalog.supports(m, task) &&
          draw < world_->p_correct[task][m]) {
        job.correct[m] = 1;
      }
    }
  } else {
    const auto& pool = trace_by_task_[task];
    std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
    job = trace_->jobs[pool[pick(rng_)]];
  }
  job.id = next_id_++;
  job.arrival_slot = t;
  job.task = task;
  job.entry_node = entry;
  return job;
}

std::vector<Job> JobGenerator::generate_slot(std::int64_t t) {
  std::vector<Job> jobs;
  if (arrivals_.mean_jobs_per_slot <= 0.0 || arrivals_.entry_nodes.empty()) {
    return jobs;
  }
  // Rate is per entry node, so deeper topologies keep the same per-node load.
  std::poisson_distribution<int> count(arrivals_.mean_jobs_per_slot);
  for (std::size_t e = 0; e < arrivals_.entry_nodes.size(); ++e) {
    const int n = count(rng_);
    for (int i = 0; i < n; ++i) {
      const TaskId task = mixture_dists_[e](rng_);
      jobs.push_back(make_job(task, arrivals_.entry_nodes[e], t));
    }
  }
  return jobs;
}

}  // namespace hiroute
