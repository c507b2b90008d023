#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "hiroute/random.hpp"
#include "hiroute/topology.hpp"

namespace hiroute {

using ModelId = int;  // index into Catalog::models
using TaskId = int;   // index into Catalog::tasks

enum class Modality { kText, kVision };

const char* to_string(Modality m);
Modality parse_modality(const std::string& s);

struct TaskType {
  std::string name;
  Modality modality = Modality::kText;
};

struct ModelSpec {
  std::string id;
  double memory_size = 1.0;  // s_m, memory units (1 unit = 1B parameters)
  bool supports_text = true;
  bool supports_vision = false;
  // Expected error per task id. Only meaningful for supported modalities.
  std::vector<double> error_prob;

  bool supports(Modality m) const {
    return m == Modality::kText ? supports_text : supports_vision;
  }
};

/// Task types plus the model pool with its per-task expected errors.
class Catalog {
 public:
  Catalog() = default;
  Catalog(std::vector<TaskType> tasks, std::vector<ModelSpec> models);

  int num_tasks() const { return static_cast<int>(tasks_.size()); }
  int num_models() const { return static_cast<int>(models_.size()); }
  const TaskType& task(TaskId y) const { return tasks_.at(y); }
  const ModelSpec& model(ModelId m) const { return models_.at(m); }
  std::span<const TaskType> tasks() const { return tasks_; }
  std::span<const ModelSpec> models() const { return models_; }

  bool supports(ModelId m, TaskId y) const {
    return models_[m].supports(tasks_[y].modality);
  }
  /// Expected error of model m on task y; 1 when the modality is unsupported.
  double effective_error(ModelId m, TaskId y) const {
    return supports(m, y) ? models_[m].error_prob[y] : 1.0;
  }

  std::optional<TaskId> find_task(const std::string& name) const;
  std::optional<ModelId> find_model(const std::string& id) const;

 private:
  std::vector<TaskType> tasks_;
  std::vector<ModelSpec> models_;
};

struct Job {
  std::int64_t id = 0;
  std::int64_t arrival_slot = 0;
  TaskId task = 0;
  NodeId entry_node = 0;
  double size_units = 1.0;
  // correct[m] == 1 iff model m answers this job correctly.
  std::vector<std::uint8_t> correct;

  /// True when no model answers correctly.
  bool hard() const;
};

struct ArrivalModel {
  double mean_jobs_per_slot = 0.375;  // Poisson mean per entry node
  std::vector<NodeId> entry_nodes;
  // task_mixture[i] is the task distribution at entry_nodes[i].
  std::vector<std::vector<double>> task_mixture;
};

/// Draws one Dirichlet(alpha) task mixture per entry node. Tasks outside
/// `eligible` (when non-empty) get probability zero.
ArrivalModel make_arrival_model(std::span<const NodeId> entry_nodes,
                                int num_tasks, double mean_jobs_per_slot,
                                double dirichlet_alpha, Rng& rng,
                                std::span<const TaskId> eligible = {});

struct ConfidenceModel {
  double noise_std = 0.1;
};

/// Picks the loaded model with the lowest expected error that supports the
/// task; ties go to the lowest model id. Empty when no loaded model fits.
std::optional<ModelId> select_model(const Catalog& catalog, TaskId task,
                                    std::span<const ModelId> loaded);

/// z_n(j) = clamp(best loaded accuracy for the task + N(0, sigma), 0, 1).
/// The centre is 0 when no loaded model supports the task.
double confidence(const Job& job, std::span<const ModelId> loaded,
                  const Catalog& catalog, const ConfidenceModel& cm, Rng& rng);

/// Realised local error b(j, x_n): 0 at the oracle, 1 with no capable model,
/// otherwise the frozen correctness bit of the selected model.
int inference_error(const Job& job, bool at_oracle,
                    std::span<const ModelId> loaded, const Catalog& catalog);

// ---------------------------------------------------------------------------
// Synthetic workload

struct SyntheticModel {
  std::string id;
  double size = 1.0;
  bool vision = false;  // vision-language models also handle text
};

struct SyntheticSpec {
  int num_text_tasks = 80;
  int num_vision_tasks = 34;
  std::vector<SyntheticModel> models;  // empty -> default_model_pool()
  // Target share of jobs that every model gets wrong, and the share of task
  // types carrying that impossible component.
  double hard_fraction = 0.11;
  double hard_task_share = 0.15;
  double text_size_min = 1.0, text_size_max = 5.0;
  double vision_size_min = 10.0, vision_size_max = 20.0;
  std::uint64_t world_seed = 7;
};

/// 23 models: 8 text-only, 15 vision-language, 0.5B to 78B parameters.
std::vector<SyntheticModel> default_model_pool();

/// Fixed "world" shared by every run: task types, models, their expected
/// errors, and each task's impossible-job probability.
struct SyntheticWorld {
  Catalog catalog;
  std::vector<double> hardness;          // P(job impossible | task)
  std::vector<std::vector<double>> p_correct;  // [task][model], given not impossible
  SyntheticSpec spec;
};

SyntheticWorld make_synthetic_world(const SyntheticSpec& spec);

// ---------------------------------------------------------------------------
// Trace workload (JSONL)

struct TraceParseError : std::runtime_error {
  TraceParseError(std::size_t line, const std::string& what);
  std::size_t line;
};

struct Trace {
  Catalog catalog;
  std::vector<Job> jobs;  // arrival_slot and entry_node unset
  std::vector<std::string> job_ids;
};

Trace load_trace(const std::filesystem::path& path);
Trace parse_trace(std::istream& in);

// ---------------------------------------------------------------------------

/// Source of job bodies given a task type: either the synthetic world or a
/// resampled trace.
class JobGenerator {
 public:
  JobGenerator(const SyntheticWorld& world, ArrivalModel arrivals,
               std::uint64_t seed);
  JobGenerator(const Trace& trace, ArrivalModel arrivals, std::uint64_t seed);

  /// Jobs arriving in slot t: a Poisson count per entry node, tasks drawn
  /// from that node's mixture, correctness bits frozen at creation.
  std::vector<Job> generate_slot(std::int64_t t);

  const ArrivalModel& arrivals() const { return arrivals_; }
  const Catalog& catalog() const;

 private:
  Job make_job(TaskId task, NodeId entry, std::int64_t t);

  const SyntheticWorld* world_ = nullptr;
  const Trace* trace_ = nullptr;
  std::vector<std::vector<std::size_t>> trace_by_task_;
  ArrivalModel arrivals_;
  Rng rng_;
  std::vector<std::discrete_distribution<int>> mixture_dists_;
  std::int64_t next_id_ = 0;
};

/// Task types that have at least one trace record.
std::vector<TaskId> trace_task_support(const Trace& trace);

}  // namespace hiroute
