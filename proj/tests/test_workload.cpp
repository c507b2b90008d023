#include <cmath>
#include <numeric>
#include <sstream>
#include <vector>

#include "doctest.h"
#include "hiroute/workload.hpp"

using namespace hiroute;

namespace {

Catalog two_model_catalog() {
  ModelSpec a{"a", 1.0, true, false, {0.3}};
  ModelSpec b{"b", 2.0, true, false, {0.1}};
  return Catalog({{"t", Modality::kText}}, {a, b});
}

const char* kToyTrace =
    R"({"models": [{"id": "m0", "size": 1, "modalities": ["text"]}, {"id": "m1", "size": 7, "modalities": ["text", "vision"]}]}
{"job_id": "j0", "task_type": "qa", "modality": "text", "size_units": 2, "correctness": {"m0": 1, "m1": 1}}
{"job_id": "j1", "task_type": "qa", "modality": "text", "size_units": 3, "correctness": {"m0": 0, "m1": 1}}
{"job_id": "j2", "task_type": "vqa", "modality": "vision", "size_units": 12, "correctness": {"m0": 0, "m1": 0}}
)";

}  // namespace

TEST_CASE("zero arrival rate gives empty slots") {
  const auto world = make_synthetic_world({});
  const std::vector<NodeId> entries{0, 1};
  Rng rng(1);
  auto arrivals = make_arrival_model(entries, world.catalog.num_tasks(), 0.0, 1.0, rng);
  JobGenerator gen(world, arrivals, 5);
  for (int t = 1; t <= 100; ++t) CHECK(gen.generate_slot(t).empty());
}

TEST_CASE("Dirichlet mixtures are distinct probability vectors") {
  const std::vector<NodeId> entries{0, 1, 2, 3};
  Rng rng(3);
  auto a = make_arrival_model(entries, 114, 1.0, 1.0, rng);
  REQUIRE(a.task_mixture.size() == 4);
  for (const auto& mix : a.task_mixture) {
    CHECK(mix.size() == 114);
    CHECK(std::accumulate(mix.begin(), mix.end(), 0.0) == doctest::Approx(1.0).epsilon(1e-12));
    for (double p : mix) CHECK(p >= 0.0);
  }
  CHECK(a.task_mixture[0] != a.task_mixture[1]);
}

TEST_CASE("synthetic world shape") {
  const auto w = make_synthetic_world({});
  CHECK(w.catalog.num_tasks() == 114);
  CHECK(w.catalog.num_models() == 23);
  int text = 0;
  for (const auto& t : w.catalog.tasks()) text += t.modality == Modality::kText;
  CHECK(text == 80);
  // every task has at least one capable model
  for (TaskId y = 0; y < w.catalog.num_tasks(); ++y) {
    bool any = false;
    for (ModelId m = 0; m < w.catalog.num_models(); ++m) any = any || w.catalog.supports(m, y);
    CHECK(any);
  }
}

TEST_CASE("stationary mixture over 1e4 slots") {
  const auto world = make_synthetic_world({});
  const std::vector<NodeId> entries{0, 1};
  Rng rng(11);
  auto arrivals = make_arrival_model(entries, world.catalog.num_tasks(), 2.0, 1.0, rng);
  JobGenerator gen(world, arrivals, 12);
  std::vector<std::vector<double>> counts(2, std::vector<double>(world.catalog.num_tasks(), 0.0));
  std::vector<double> totals(2, 0.0);
  for (int t = 1; t <= 10000; ++t) {
    for (const auto& j : gen.generate_slot(t)) {
      counts[j.entry_node][j.task] += 1.0;
      totals[j.entry_node] += 1.0;
    }
  }
  int outside = 0;
  for (int e = 0; e < 2; ++e) {
    // mean 2 per entry node per slot
    CHECK(totals[e] / 10000.0 == doctest::Approx(2.0).epsilon(0.03));
    for (std::size_t y = 0; y < counts[e].size(); ++y) {
      const double p = arrivals.task_mixture[e][y];
      const double n = totals[e];
      const double sd = std::sqrt(n * p * (1 - p));
      if (std::abs(counts[e][y] - n * p) > 3.0 * sd + 1e-9) ++outside;
    }
  }
  // 228 cells at 3 sigma: a handful of exceedances is expected noise
  CHECK(outside <= 6);
}

TEST_CASE("job stream is reproducible per seed") {
  const auto world = make_synthetic_world({});
  const std::vector<NodeId> entries{0, 1, 2, 3};
  auto make = [&](std::uint64_t s) {
    Rng rng(s);
    auto arr = make_arrival_model(entries, world.catalog.num_tasks(), 0.5, 1.0, rng);
    JobGenerator gen(world, arr, s + 100);
    std::vector<Job> all;
    for (int t = 1; t <= 300; ++t) for (auto& j : gen.generate_slot(t)) all.push_back(j);
    return all;
  };
  const auto a = make(4), b = make(4), c = make(5);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].task == b[i].task);
    CHECK(a[i].size_units == b[i].size_units);
    CHECK(a[i].correct == b[i].correct);
    CHECK(a[i].entry_node == b[i].entry_node);
  }
  bool differ = a.size() != c.size();
  for (std::size_t i = 0; !differ && i < a.size(); ++i) differ = a[i].task != c[i].task;
  CHECK(differ);
}

TEST_CASE("job sizes respect modality ranges and hard fraction is near 0.11") {
  const auto world = make_synthetic_world({});
  const std::vector<NodeId> entries{0, 1, 2, 3};
  Rng rng(21);
  auto arr = make_arrival_model(entries, world.catalog.num_tasks(), 1.0, 1.0, rng);
  JobGenerator gen(world, arr, 22);
  double hard = 0, total = 0;
  for (int t = 1; t <= 20000; ++t) {
    for (const auto& j : gen.generate_slot(t)) {
      const bool vision = world.catalog.task(j.task).modality == Modality::kVision;
      if (vision) {
        CHECK(j.size_units >= 10.0);
        CHECK(j.size_units <= 20.0);
      } else {
        CHECK(j.size_units >= 1.0);
        CHECK(j.size_units <= 5.0);
      }
      hard += j.hard();
      total += 1;
    }
  }
  CHECK(std::abs(hard / total - 0.11) <= 0.02);
}

TEST_CASE("confidence") {
  const auto cat = two_model_catalog();
  Job job;
  job.correct = {0, 1};
  ConfidenceModel exact{0.0};
  Rng rng(1);
  const std::vector<ModelId> both{0, 1}, none{};
  // sigma 0, best error 0.1 -> z = 0.9
  CHECK(confidence(job, both, cat, exact, rng) == doctest::Approx(0.9));
  CHECK(confidence(job, none, cat, exact, rng) == 0.0);

  // sigma 0.1 around 0.8: Monte Carlo mean
  ModelSpec m{"m", 1.0, true, false, {0.2}};
  Catalog c1({{"t", Modality::kText}}, {m});
  const std::vector<ModelId> one{0};
  ConfidenceModel noisy{0.1};
  double sum = 0;
  const int N = 10000;
  for (int i = 0; i < N; ++i) {
    const double z = confidence(job, one, c1, noisy, rng);
    CHECK(z >= 0.0);
    CHECK(z <= 1.0);
    sum += z;
  }
  CHECK(std::abs(sum / N - 0.8) <= 3 * 0.1 / std::sqrt(N));
}

TEST_CASE("inference error and model selection") {
  const auto cat = two_model_catalog();
  Job job;
  job.correct = {0, 1};  // wrong under the 0.3 model, right under the 0.1 model
  const std::vector<ModelId> both{0, 1}, weak{0}, none{};
  CHECK(*select_model(cat, 0, both) == 1);
  CHECK(inference_error(job, false, both, cat) == 0);
  CHECK(inference_error(job, false, weak, cat) == 1);
  CHECK(inference_error(job, false, none, cat) == 1);
  CHECK(inference_error(job, true, none, cat) == 0);

  // ties go to the lower id
  ModelSpec x{"x", 1.0, true, false, {0.2}}, y{"y", 1.0, true, false, {0.2}};
  Catalog tie({{"t", Modality::kText}}, {x, y});
  const std::vector<ModelId> rev{1, 0};
  CHECK(*select_model(tie, 0, rev) == 0);

  // same job, same node -> same bit
  CHECK(inference_error(job, false, both, cat) == inference_error(job, false, both, cat));
}

TEST_CASE("hard job tagging") {
  Job j;
  j.correct = {0, 0, 0};
  CHECK(j.hard());
  j.correct = {0, 1, 0};
  CHECK_FALSE(j.hard());
}

TEST_CASE("toy trace round trip") {
  std::istringstream in(kToyTrace);
  const auto tr = parse_trace(in);
  CHECK(tr.catalog.num_models() == 2);
  CHECK(tr.catalog.num_tasks() == 2);
  REQUIRE(tr.jobs.size() == 3);
  CHECK(tr.job_ids == std::vector<std::string>{"j0", "j1", "j2"});
  CHECK(tr.jobs[0].correct == std::vector<std::uint8_t>{1, 1});
  CHECK(tr.jobs[1].correct == std::vector<std::uint8_t>{0, 1});
  CHECK(tr.jobs[2].correct == std::vector<std::uint8_t>{0, 0});
  CHECK(tr.jobs[2].size_units == 12);
  // no header error_prob: empirical rate, unsupported modality stays 1
  CHECK(tr.catalog.model(0).error_prob[0] == doctest::Approx(0.5));
  CHECK(tr.catalog.model(0).error_prob[1] == 1.0);
  CHECK(tr.catalog.model(1).error_prob[1] == doctest::Approx(1.0));
}

TEST_CASE("trace schema violations name the line") {
  auto fails_on = [](const std::string& text) -> std::size_t {
    std::istringstream in(text);
    try {
      parse_trace(in);
    } catch (const TraceParseError& e) {
      return e.line;
    }
    return 0;
  };
  const std::string header =
      R"({"models": [{"id": "m0", "size": 1, "modalities": ["text"]}]})" "\n";
  CHECK(fails_on(header +
                 R"({"job_id": "j", "task_type": "qa", "modality": "text", "size_units": 1, "correctness": {"m0": 0.5}})") == 2);
  CHECK(fails_on(header +
                 R"({"job_id": "j", "task_type": "qa", "modality": "text", "size_units": 1, "correctness": {"m0": 1}})" "\n" +
                 R"({"job_id": "k", "task_type": "qa", "modality": "text", "size_units": 1, "correctness": {"zz": 1}})") == 3);
  CHECK(fails_on(header + "{not json}") == 2);
  CHECK(fails_on(R"({"job_id": "j"})") == 1);
}

TEST_CASE("23-model 114-task trace is accepted") {
  std::ostringstream os;
  os << R"({"models": [)";
  for (int m = 0; m < 23; ++m) {
    os << (m ? "," : "") << R"({"id": "m)" << m << R"(", "size": 1, "modalities": ["text", "vision"]})";
  }
  os << "]}\n";
  for (int y = 0; y < 114; ++y) {
    os << R"({"job_id": "j)" << y << R"(", "task_type": "t)" << y
       << R"(", "modality": ")" << (y < 80 ? "text" : "vision") << R"(", "size_units": 1, "correctness": {)";
    for (int m = 0; m < 23; ++m) os << (m ? "," : "") << "\"m" << m << "\": " << ((m + y) % 2);
    os << "}}\n";
  }
  std::istringstream in(os.str());
  const auto tr = parse_trace(in);
  CHECK(tr.catalog.num_models() == 23);
  CHECK(tr.catalog.num_tasks() == 114);
  CHECK(tr.jobs.size() == 114);
}
