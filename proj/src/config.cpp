#include "hiroute/config.hpp"

#include <cmath>
#include <fstream>
#include <set>

namespace hiroute {

using nlohmann::json;

ConfigError::ConfigError(std::string f, const std::string& what)
    : std::runtime_error(f + ": " + what), field(std::move(f)) {}

Topology TopologyConfig::build() const {
  return build_topology(layer_sizes, memory_budgets, resource_budget, tau);
}

TopologyConfig canonical_topology(int num_layers) {
  TopologyConfig t;
  switch (num_layers) {
    case 3: t.memory_budgets = {30, 100, kUnbounded}; break;
    case 4: t.memory_budgets = {30, 80, 200, kUnbounded}; break;
    case 5: t.memory_budgets = {30, 80, 150, 200, kUnbounded}; break;
    default:
      throw ConfigError("sweep.topologies",
                        "no canonical topology with " + std::to_string(num_layers) + " layers");
  }
  t.layer_sizes.clear();
  for (int k = num_layers - 1; k >= 0; --k) t.layer_sizes.push_back(1 << k);
  return t;
}

namespace {

std::string join(const std::string& path, const std::string& key) {
  return path.empty() ? key : path + "." + key;
}

/// Reads one JSON object against the schema, remembering which keys were
/// consumed so leftovers can be reported.
class Reader {
 public:
  Reader(const json& obj, std::string path) : obj_(obj), path_(std::move(path)) {
    if (!obj_.is_object()) throw ConfigError(path_.empty() ? "<root>" : path_, "expected an object");
  }

  const json* find(const std::string& key) {
    used_.insert(key);
    auto it = obj_.find(key);
    return it == obj_.end() ? nullptr : &*it;
  }

  void number(const std::string& key, double& out) {
    if (auto* v = find(key)) out = as_number(*v, join(path_, key));
  }
  void optional_number(const std::string& key, std::optional<double>& out) {
    if (auto* v = find(key)) {
      if (v->is_null()) out.reset();
      else out = as_number(*v, join(path_, key));
    }
  }
  template <class Int>
  void integer(const std::string& key, Int& out) {
    if (auto* v = find(key)) out = static_cast<Int>(as_integer(*v, join(path_, key)));
  }
  void boolean(const std::string& key, bool& out) {
    if (auto* v = find(key)) {
      if (!v->is_boolean()) throw ConfigError(join(path_, key), "expected a boolean");
      out = v->get<bool>();
    }
  }
  void string(const std::string& key, std::string& out) {
    if (auto* v = find(key)) {
      if (!v->is_string()) throw ConfigError(join(path_, key), "expected a string");
      out = v->get<std::string>();
    }
  }
  template <class F>
  void array(const std::string& key, F&& each) {
    if (auto* v = find(key)) {
      if (!v->is_array()) throw ConfigError(join(path_, key), "expected an array");
      for (std::size_t i = 0; i < v->size(); ++i) {
        each((*v)[i], join(path_, key) + "[" + std::to_string(i) + "]");
      }
    }
  }
  template <class F>
  void object(const std::string& key, F&& read) {
    if (auto* v = find(key)) {
      Reader child(*v, join(path_, key));
      read(child);
      child.finish();
    }
  }

  void finish() const {
    for (const auto& [key, value] : obj_.items()) {
      if (!used_.count(key)) throw ConfigError(join(path_, key), "unknown key");
    }
  }

  static double as_number(const json& v, const std::string& field) {
    if (!v.is_number()) throw ConfigError(field, "expected a number");
    return v.get<double>();
  }
  static long long as_integer(const json& v, const std::string& field) {
    if (!v.is_number_integer() && !v.is_number_unsigned()) {
      throw ConfigError(field, "expected an integer");
    }
    return v.get<long long>();
  }
  static std::string as_string(const json& v, const std::string& field) {
    if (!v.is_string()) throw ConfigError(field, "expected a string");
    return v.get<std::string>();
  }

 private:
  const json& obj_;
  std::string path_;
  std::set<std::string> used_;
};

const char* to_string(RecursionWeights w) {
  return w == RecursionWeights::kRaw ? "raw" : "mixed";
}

RecursionWeights parse_weights(const std::string& s, const std::string& field) {
  if (s == "raw") return RecursionWeights::kRaw;
  if (s == "mixed") return RecursionWeights::kMixed;
  throw ConfigError(field, "expected 'raw' or 'mixed'");
}

template <class Fn>
auto parse_enum(const std::string& field, Fn&& fn, const std::string& s) {
  try {
    return fn(s);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(field, e.what());
  }
}

}  // namespace

json to_json(const ExperimentConfig& c) {
  json mem = json::array();
  for (double m : c.topology.memory_budgets) {
    mem.push_back(std::isinf(m) ? json(nullptr) : json(m));
  }
  json models = json::array();
  for (const auto& m : c.workload.synthetic.models) {
    models.push_back({{"id", m.id}, {"size", m.size}, {"vision", m.vision}});
  }
  const auto& s = c.workload.synthetic;
  json policies = json::array(), placements = json::array();
  for (auto p : c.sweep.policies) policies.push_back(to_string(p));
  for (auto p : c.sweep.placements) placements.push_back(to_string(p));

  return json{
      {"name", c.name},
      {"topology",
       {{"layer_sizes", c.topology.layer_sizes},
        {"memory_budgets", mem},
        {"resource_budget", c.topology.resource_budget},
        {"tau", c.topology.tau},
        {"distance_factor", c.topology.distance_factor}}},
      {"workload",
       {{"mode", c.workload.mode},
        {"trace_path", c.workload.trace_path},
        {"mean_jobs_per_slot", c.workload.mean_jobs_per_slot},
        {"dirichlet_alpha", c.workload.dirichlet_alpha},
        {"confidence_noise", c.workload.confidence_noise},
        {"synthetic",
         {{"num_text_tasks", s.num_text_tasks},
          {"num_vision_tasks", s.num_vision_tasks},
          {"models", models},
          {"hard_fraction", s.hard_fraction},
          {"hard_task_share", s.hard_task_share},
          {"text_size", {s.text_size_min, s.text_size_max}},
          {"vision_size", {s.vision_size_min, s.vision_size_max}},
          {"world_seed", s.world_seed}}}}},
      {"policy", to_string(c.policy)},
      {"learning",
       {{"eta", c.learning.eta ? json(*c.learning.eta) : json(nullptr)},
        {"lambda", c.learning.lambda},
        {"v", c.learning.v},
        {"eta_b", c.learning.eta_b},
        {"baseline_target", to_string(c.learning.baseline_target)},
        {"thresholds", c.learning.thresholds},
        {"rho_weights", to_string(c.learning.recursion.rho)},
        {"fbar_weights", to_string(c.learning.recursion.fbar)}}},
      {"placement",
       {{"kind", to_string(c.placement.kind)},
        {"epoch_slots", c.placement.epoch_slots},
        {"switch_penalty", c.placement.switch_penalty}}},
      {"baseline",
       {{"offload_prob", c.baseline.offload_prob ? json(*c.baseline.offload_prob)
                                                  : json(nullptr)}}},
      {"total_jobs", c.total_jobs},
      {"seeds", c.seeds},
      {"regret_checkpoint", c.regret_checkpoint},
      {"output", {{"dir", c.output.dir}, {"metrics", c.output.metrics}, {"paths", c.output.paths}}},
      {"sweep", {{"policies", policies}, {"topologies", c.sweep.topologies}, {"placements", placements}}},
  };
}

ExperimentConfig config_from_json(const json& j) {
  ExperimentConfig c;
  Reader root(j, "");
  root.string("name", c.name);

  root.object("topology", [&](Reader& r) {
    auto& t = c.topology;
    if (r.find("layer_sizes")) {
      t.layer_sizes.clear();
      r.array("layer_sizes", [&](const json& v, const std::string& f) {
        t.layer_sizes.push_back(static_cast<int>(Reader::as_integer(v, f)));
      });
    }
    if (r.find("memory_budgets")) {
      t.memory_budgets.clear();
      r.array("memory_budgets", [&](const json& v, const std::string& f) {
        t.memory_budgets.push_back(v.is_null() ? kUnbounded : Reader::as_number(v, f));
      });
    }
    r.number("resource_budget", t.resource_budget);
    r.number("tau", t.tau);
    r.number("distance_factor", t.distance_factor);
  });

  root.object("workload", [&](Reader& r) {
    auto& w = c.workload;
    r.string("mode", w.mode);
    r.string("trace_path", w.trace_path);
    r.number("mean_jobs_per_slot", w.mean_jobs_per_slot);
    r.number("dirichlet_alpha", w.dirichlet_alpha);
    r.number("confidence_noise", w.confidence_noise);
    r.object("synthetic", [&](Reader& s) {
      auto& sp = w.synthetic;
      s.integer("num_text_tasks", sp.num_text_tasks);
      s.integer("num_vision_tasks", sp.num_vision_tasks);
      if (s.find("models")) {
        sp.models.clear();
        s.array("models", [&](const json& v, const std::string& f) {
          Reader m(v, f);
          SyntheticModel model;
          m.string("id", model.id);
          m.number("size", model.size);
          m.boolean("vision", model.vision);
          m.finish();
          sp.models.push_back(model);
        });
      }
      s.number("hard_fraction", sp.hard_fraction);
      s.number("hard_task_share", sp.hard_task_share);
      auto range = [&](const char* key, double& lo, double& hi) {
        std::vector<double> vals;
        s.array(key, [&](const json& v, const std::string& f) {
          vals.push_back(Reader::as_number(v, f));
        });
        if (vals.empty()) return;
        if (vals.size() != 2) throw ConfigError(std::string("workload.synthetic.") + key, "expected [min, max]");
        lo = vals[0];
        hi = vals[1];
      };
      range("text_size", sp.text_size_min, sp.text_size_max);
      range("vision_size", sp.vision_size_min, sp.vision_size_max);
      s.integer("world_seed", sp.world_seed);
    });
  });

  if (auto* p = root.find("policy")) {
    c.policy = parse_enum("policy", parse_policy_kind, Reader::as_string(*p, "policy"));
  }

  root.object("learning", [&](Reader& r) {
    auto& l = c.learning;
    r.optional_number("eta", l.eta);
    r.number("lambda", l.lambda);
    r.number("v", l.v);
    r.number("eta_b", l.eta_b);
    if (auto* t = r.find("baseline_target")) {
      l.baseline_target = parse_enum("learning.baseline_target", parse_baseline_target,
                                     Reader::as_string(*t, "learning.baseline_target"));
    }
    if (r.find("thresholds")) {
      l.thresholds.clear();
      r.array("thresholds", [&](const json& v, const std::string& f) {
        l.thresholds.push_back(Reader::as_number(v, f));
      });
    }
    std::string rho = to_string(l.recursion.rho), fbar = to_string(l.recursion.fbar);
    r.string("rho_weights", rho);
    r.string("fbar_weights", fbar);
    l.recursion.rho = parse_weights(rho, "learning.rho_weights");
    l.recursion.fbar = parse_weights(fbar, "learning.fbar_weights");
  });

  root.object("placement", [&](Reader& r) {
    std::string kind = to_string(c.placement.kind);
    r.string("kind", kind);
    c.placement.kind = parse_enum("placement.kind", parse_placement_kind, kind);
    r.integer("epoch_slots", c.placement.epoch_slots);
    r.number("switch_penalty", c.placement.switch_penalty);
  });

  root.object("baseline", [&](Reader& r) { r.optional_number("offload_prob", c.baseline.offload_prob); });

  root.integer("total_jobs", c.total_jobs);
  if (root.find("seeds")) {
    c.seeds.clear();
    root.array("seeds", [&](const json& v, const std::string& f) {
      const auto s = Reader::as_integer(v, f);
      if (s < 0) throw ConfigError(f, "seeds must be nonnegative");
      c.seeds.push_back(static_cast<std::uint64_t>(s));
    });
  }
  root.integer("regret_checkpoint", c.regret_checkpoint);

  root.object("output", [&](Reader& r) {
    r.string("dir", c.output.dir);
    r.boolean("metrics", c.output.metrics);
    r.boolean("paths", c.output.paths);
  });

  root.object("sweep", [&](Reader& r) {
    r.array("policies", [&](const json& v, const std::string& f) {
      c.sweep.policies.push_back(parse_enum(f, parse_policy_kind, Reader::as_string(v, f)));
    });
    r.array("topologies", [&](const json& v, const std::string& f) {
      c.sweep.topologies.push_back(static_cast<int>(Reader::as_integer(v, f)));
    });
    r.array("placements", [&](const json& v, const std::string& f) {
      c.sweep.placements.push_back(parse_enum(f, parse_placement_kind, Reader::as_string(v, f)));
    });
  });

  root.finish();
  c.validate();
  return c;
}

void ExperimentConfig::validate() const {
  const auto& t = topology;
  if (t.layer_sizes.size() < 2) throw ConfigError("topology.layer_sizes", "need at least 2 layers");
  for (int s : t.layer_sizes) {
    if (s <= 0) throw ConfigError("topology.layer_sizes", "layers must be non-empty");
  }
  if (t.memory_budgets.size() != t.layer_sizes.size()) {
    throw ConfigError("topology.memory_budgets", "need one budget per layer");
  }
  for (std::size_t k = 0; k + 1 < t.memory_budgets.size(); ++k) {
    if (!(t.memory_budgets[k] > 0.0)) throw ConfigError("topology.memory_budgets", "budgets must be positive");
  }
  if (!(t.resource_budget > 0.0)) throw ConfigError("topology.resource_budget", "must be positive");
  if (!(t.tau > 0.0)) throw ConfigError("topology.tau", "must be positive");
  if (!(t.distance_factor > 0.0)) throw ConfigError("topology.distance_factor", "must be positive");

  const auto& w = workload;
  if (w.mode != "synthetic" && w.mode != "trace") {
    throw ConfigError("workload.mode", "expected 'synthetic' or 'trace'");
  }
  if (w.mode == "trace" && w.trace_path.empty()) {
    throw ConfigError("workload.trace_path", "required in trace mode");
  }
  if (!(w.mean_jobs_per_slot >= 0.0)) throw ConfigError("workload.mean_jobs_per_slot", "must be nonnegative");
  if (!(w.dirichlet_alpha > 0.0)) throw ConfigError("workload.dirichlet_alpha", "must be positive");
  if (!(w.confidence_noise >= 0.0)) throw ConfigError("workload.confidence_noise", "must be nonnegative");
  const auto& s = w.synthetic;
  if (s.num_text_tasks < 0 || s.num_vision_tasks < 0 || s.num_text_tasks + s.num_vision_tasks == 0) {
    throw ConfigError("workload.synthetic.num_text_tasks", "need at least one task type");
  }
  if (!(s.hard_fraction >= 0.0 && s.hard_fraction < 1.0)) {
    throw ConfigError("workload.synthetic.hard_fraction", "must lie in [0, 1)");
  }
  if (!(s.hard_task_share > 0.0 && s.hard_task_share <= 1.0)) {
    throw ConfigError("workload.synthetic.hard_task_share", "must lie in (0, 1]");
  }
  if (!(s.text_size_min > 0.0 && s.text_size_max >= s.text_size_min)) {
    throw ConfigError("workload.synthetic.text_size", "need 0 < min <= max");
  }
  if (!(s.vision_size_min > 0.0 && s.vision_size_max >= s.vision_size_min)) {
    throw ConfigError("workload.synthetic.vision_size", "need 0 < min <= max");
  }
  for (const auto& m : s.models) {
    if (!(m.size > 0.0)) throw ConfigError("workload.synthetic.models", "model sizes must be positive");
  }

  const auto& l = learning;
  if (l.eta && !(*l.eta > 0.0)) throw ConfigError("learning.eta", "must be positive");
  if (!(l.lambda > 0.0 && l.lambda < 1.0)) throw ConfigError("learning.lambda", "must lie in (0, 1)");
  if (!(l.v >= 0.0)) throw ConfigError("learning.v", "must be nonnegative");
  if (!(l.eta_b > 0.0 && l.eta_b <= 1.0)) throw ConfigError("learning.eta_b", "must lie in (0, 1]");
  if (l.thresholds.empty()) throw ConfigError("learning.thresholds", "must be non-empty");
  for (std::size_t i = 0; i < l.thresholds.size(); ++i) {
    if (!(l.thresholds[i] >= 0.0 && l.thresholds[i] <= 1.0) ||
        (i > 0 && !(l.thresholds[i] > l.thresholds[i - 1]))) {
      throw ConfigError("learning.thresholds", "must be strictly increasing within [0, 1]");
    }
  }
  if (placement.epoch_slots <= 0) throw ConfigError("placement.epoch_slots", "must be positive");
  if (!(placement.switch_penalty >= 0.0)) throw ConfigError("placement.switch_penalty", "must be nonnegative");
  if (baseline.offload_prob && !(*baseline.offload_prob >= 0.0 && *baseline.offload_prob <= 1.0)) {
    throw ConfigError("baseline.offload_prob", "must lie in [0, 1]");
  }
  if (total_jobs <= 0) throw ConfigError("total_jobs", "must be positive");
  if (seeds.empty()) throw ConfigError("seeds", "must be non-empty");
  if (regret_checkpoint <= 0) throw ConfigError("regret_checkpoint", "must be positive");
  for (int k : sweep.topologies) {
    if (k < 3 || k > 5) throw ConfigError("sweep.topologies", "supported layer counts are 3, 4, 5");
  }
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("<file>", "cannot open " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("<file>", path.string() + ": " + e.what());
  }
  return config_from_json(j);
}

ExperimentConfig apply_overrides(const ExperimentConfig& cfg,
                                 const std::vector<std::string>& overrides) {
  json j = to_json(cfg);
  for (const auto& ov : overrides) {
    const auto eq = ov.find('=');
    if (eq == std::string::npos || eq == 0) {
      throw ConfigError(ov, "override must look like key=value");
    }
    const std::string key = ov.substr(0, eq);
    const std::string text = ov.substr(eq + 1);
    json* node = &j;
    std::size_t start = 0;
    for (;;) {
      const auto dot = key.find('.', start);
      const std::string part = key.substr(start, dot - start);
      if (!node->is_object() || !node->contains(part)) throw ConfigError(key, "unknown key");
      node = &(*node)[part];
      if (dot == std::string::npos) break;
      start = dot + 1;
    }
    json value;
    try {
      value = json::parse(text);
    } catch (const json::parse_error&) {
      value = text;
    }
    *node = value;
  }
  return config_from_json(j);
}

}  // namespace hiroute
