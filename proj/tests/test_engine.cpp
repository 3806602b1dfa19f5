// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "aluc/engine.hpp"
#include "aluc/error.hpp"
#include "fixtures.hpp"

using namespace aluc;

namespace {

// Pixels a..d = 0..3 of a 3x2 grid, seeds at 4 (class 1) and 5 (class 2).
Session trace_session(EngineConfig cfg = {}) {
  cfg.theta = 0.6;
  cfg.batch_size = 2;
  Session s = init_session_interactive(fixture::tiny_stack(3, 2), 2, cfg);
  add_seed(s, 4, 1);
  add_seed(s, 5, 2);
  return s;
}

const std::vector<std::size_t> kRanking = {0, 1, 2, 3};
const std::vector<double> kScores = {0.1, 0.2, 0.3, 0.4};
const std::vector<double> kConfidence = {0.7, 0.5, 0.9, 0.8, 1.0, 1.0};

ScriptedOracle trace_oracle() {
  return ScriptedOracle({{0, OracleAnswer::unknown()}, {2, OracleAnswer::label(2)}, {3, OracleAnswer::label(1)}});
}

Errc code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return Errc::invalid_argument;
}

std::filesystem::path temp_path(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / "aluc_engine_tests";
  std::filesystem::create_directories(dir);
  return dir / name;
}

}  // namespace

TEST_CASE("scripted batch assembly trace") {
  Session s = trace_session();
  auto oracle = trace_oracle();
  const BatchResult r = assemble_batch(s, kRanking, kScores, kConfidence, oracle);

  CHECK(s.batch == std::vector<std::size_t>{2, 3});
  CHECK(s.batch_labels == std::vector<int>{2, 1});
  CHECK(s.confidence.pixels == std::vector<std::size_t>{4, 5, 0, 1, 2, 3});
  CHECK(s.confidence.targets == std::vector<int>{1, 1, -1, -1, 1, 1});
  CHECK(s.confidence.positives == 4);
  CHECK(s.confidence.negatives == 2);

  REQUIRE(s.log.size() == 4);
  const std::vector<Outcome> outcomes = {Outcome::refused, Outcome::masked, Outcome::labeled, Outcome::labeled};
  for (std::size_t i = 0; i < 4; ++i) {
    CHECK(s.log[i].pixel == kRanking[i]);
    CHECK(s.log[i].outcome == outcomes[i]);
    CHECK(s.log[i].order == int(i));
    CHECK(s.log[i].score == kScores[i]);
    CHECK(s.log[i].confidence == kConfidence[i]);
  }
  CHECK(s.log[2].label == 2);
  CHECK(s.log[3].label == 1);
  CHECK(s.log[0].timestamp < s.log[3].timestamp);

  CHECK(r.presented == 3);
  CHECK(r.labeled == 2);
  CHECK(r.refused == 1);
  CHECK(r.masked == 1);
  CHECK_FALSE(r.partial);
  // the masked pixel was never shown to the labeler
  CHECK(oracle.calls() == 3);
  CHECK(s.excluded[0] == 1);
  CHECK(s.excluded[1] == 0);
  CHECK(s.effort() == 2 + 3);
  s.check_invariants();

  finish_iteration(s, IterationPlan{}, r.partial);
  CHECK(s.iteration == 2);
  CHECK(s.labeled == std::vector<std::size_t>{4, 5, 2, 3});
  CHECK(s.pool_size() == 2);
  s.check_invariants();

  SUBCASE("a masked pixel labeled later flips its negative in place") {
    const std::vector<double> conf = {0.7, 0.95, 0.9, 0.8, 1.0, 1.0};
    ScriptedOracle o({{1, OracleAnswer::label(1)}});
    const std::vector<std::size_t> ranking = {0, 1};
    const std::vector<double> scores = {0, 0};
    const BatchResult r2 = assemble_batch(s, ranking, scores, conf, o);
    CHECK(r2.labeled == 1);
    CHECK(r2.partial);
    CHECK(s.confidence.size() == 6);
    CHECK(s.confidence.targets[3] == 1);
    CHECK(s.confidence.negatives == 1);
    CHECK(s.confidence.positives == 5);
    // pixel 0 was refused and stays out of every later walk
    CHECK(o.calls() == 1);
    s.check_invariants();
  }
  SUBCASE("a pixel masked twice is one negative") {
    ScriptedOracle o({});
    const std::vector<std::size_t> ranking = {1};
    const std::vector<double> scores = {0};
    assemble_batch(s, ranking, scores, kConfidence, o);
    CHECK(s.confidence.size() == 6);
    CHECK(s.confidence.negatives == 2);
    CHECK(std::count(s.confidence.pixels.begin(), s.confidence.pixels.end(), std::size_t{1}) == 1);
    s.check_invariants();
  }
  SUBCASE("masked candidates are not recorded when disabled") {
    Session t = trace_session([] {
      EngineConfig c;
      c.masked_negatives = false;
      return c;
    }());
    auto o = trace_oracle();
    assemble_batch(t, kRanking, kScores, kConfidence, o);
    CHECK(t.confidence.pixels == std::vector<std::size_t>{4, 5, 0, 2, 3});
    CHECK(t.log[1].outcome == Outcome::masked);
  }
}

TEST_CASE("an all-pass mask presents every candidate") {
  Session s = trace_session();
  auto oracle = trace_oracle();
  const BatchResult r = assemble_batch(s, kRanking, kScores, {}, oracle);
  CHECK(r.masked == 0);
  // pixel 1 has no scripted answer and is refused instead of masked
  CHECK(r.presented == 4);
  CHECK(r.refused == 2);
  CHECK(s.batch == std::vector<std::size_t>{2, 3});
  for (const auto& q : s.log) CHECK(q.confidence == 1.0);
}

TEST_CASE("answer protocol errors") {
  Session s = trace_session();
  BatchWalk walk;
  const auto first = next_query(s, kRanking, kScores, kConfidence, walk);
  REQUIRE(first == std::optional<std::size_t>(0));
  // asking again returns the same outstanding query
  CHECK(next_query(s, kRanking, kScores, kConfidence, walk) == first);
  CHECK(code_of([&] { apply_answer(s, walk, 2, OracleAnswer::label(1)); }) == Errc::stale_query);
  CHECK(code_of([&] { apply_answer(s, walk, 0, OracleAnswer::label(7)); }) == Errc::invalid_argument);
  apply_answer(s, walk, 0, OracleAnswer::label(1));
  CHECK(code_of([&] { apply_answer(s, walk, 0, OracleAnswer::label(1)); }) == Errc::stale_query);
  CHECK(code_of([&] { add_seed(s, 4, 1); }) == Errc::duplicate);
  CHECK(code_of([&] { add_seed(s, 1, 3); }) == Errc::invalid_argument);
}

TEST_CASE("simulated initialization draws seeds per class") {
  const auto nine = fixture::scene(48, 9, 3, 2.0, 8.0);
  const Session s = init_session(nine.features, nine.scene.labels, 9, EngineConfig{});
  CHECK(s.labeled.size() == 45);
  CHECK(s.seed_count == 45);
  CHECK(s.effort() == 45);
  std::map<int, int> per_class;
  for (std::size_t i = 0; i < s.labeled.size(); ++i) {
    CHECK(s.labels[i] == nine.scene.labels.labels[s.labeled[i]]);
    ++per_class[s.labels[i]];
  }
  for (int c = 1; c <= 9; ++c) CHECK(per_class[c] == 5);
  CHECK(s.confidence.positives == 45);
  CHECK(s.confidence.negatives == 0);
  CHECK(s.pool_size() == 48 * 48 - 45);
  s.check_invariants();

  const auto seven = fixture::scene(48, 7, 4, 2.0, 8.0);
  EngineConfig ten;
  ten.seeds_per_class = 10;
  CHECK(init_session(seven.features, seven.scene.labels, 7, ten).labeled.size() == 70);
  CHECK(init_session(seven.features, seven.scene.labels, 7, ten) ==
        init_session(seven.features, seven.scene.labels, 7, ten));
}

TEST_CASE("iterations with an infallible labeler") {
  const auto p = fixture::scene(40, 4, 8);
  EngineConfig cfg;
  cfg.max_iterations = 3;
  Session s = init_session(p.features, p.scene.labels, 4, cfg);
  GroundTruthOracle oracle(p.scene.labels);

  const IterationReport first = run_iteration(s, p.features, oracle);
  CHECK(first.plan.iteration == 1);
  CHECK_FALSE(first.plan.confidence_model.has_value());
  CHECK(first.plan.confidence.empty());
  CHECK(first.batch.labeled == 20);
  CHECK(first.batch.refused == 0);
  CHECK(first.batch.masked == 0);
  CHECK(first.plan.predicted.size() == p.features.pixel_count());
  for (const auto& q : s.log) CHECK(q.confidence == 1.0);
  CHECK(s.labeled.size() == 40);
  CHECK(s.iteration == 2);
  s.check_invariants();

  // ranking covers the pool and is ordered by the heuristic
  CHECK(first.plan.ranking.size() == 40 * 40 - 20);
  CHECK(std::is_sorted(first.plan.ranked_scores.begin(), first.plan.ranked_scores.end()));

  // no refusals means no negatives: the mask stays all-pass
  const IterationReport second = run_iteration(s, p.features, oracle);
  CHECK_FALSE(second.plan.confidence_model.has_value());
  CHECK(second.batch.labeled == 20);
  run_iteration(s, p.features, oracle);
  CHECK(s.done());
  CHECK(code_of([&] { run_iteration(s, p.features, oracle); }) == Errc::wrong_phase);
}

TEST_CASE("gated iterations with a fallible labeler keep every invariant") {
  const auto p = fixture::scene(40, 4, 9);
  EngineConfig cfg;
  cfg.max_iterations = 5;
  Session s = init_session(p.features, p.scene.labels, 4, cfg);
  FallibleOracle oracle(p.scene.labels, FallibleOracleConfig{1, 1.0, 0.05, 3});

  std::set<std::size_t> refused;
  bool saw_mask = false;
  while (!s.done()) {
    const std::size_t before_x = s.labeled.size();
    const IterationReport r = run_iteration(s, p.features, oracle);
    s.check_invariants();
    CHECK(s.labeled.size() == before_x + r.batch.labeled);
    CHECK(s.labeled.size() <= s.confidence.size());
    if (r.plan.iteration == 1) CHECK(r.plan.confidence.empty());
    if (r.plan.confidence_model) {
      CHECK(r.plan.confidence_model->iteration == r.plan.iteration);
      CHECK(r.plan.confidence.size() == p.features.pixel_count());
      for (double v : r.plan.confidence) {
        CHECK(v > 0.0);
        CHECK(v < 1.0);
      }
    }
    saw_mask = saw_mask || r.batch.masked > 0;
    for (const auto& q : s.log) {
      if (q.iteration != r.plan.iteration) continue;
      CHECK(refused.count(q.pixel) == 0);
      if (q.outcome == Outcome::refused) refused.insert(q.pixel);
      if (q.outcome == Outcome::masked) CHECK(q.confidence <= cfg.theta);
      if (q.outcome != Outcome::masked && r.plan.confidence_model) CHECK(q.confidence > cfg.theta);
    }
  }
  CHECK(s.iteration == 6);
  CHECK(saw_mask);
  CHECK_FALSE(refused.empty());
}

TEST_CASE("ungated and random-sampling variants") {
  const auto p = fixture::scene(32, 3, 5);
  for (auto h : {Heuristic::rs, Heuristic::neqb}) {
    EngineConfig cfg;
    cfg.heuristic = h;
    cfg.gated = false;
    cfg.max_iterations = 3;
    cfg.committee_size = 4;
    Session s = init_session(p.features, p.scene.labels, 3, cfg);
    FallibleOracle oracle(p.scene.labels, FallibleOracleConfig{1, 1.0, 0.05, 3});
    while (!s.done()) {
      const auto r = run_iteration(s, p.features, oracle);
      CHECK(r.plan.confidence.empty());
      CHECK(r.batch.masked == 0);
      s.check_invariants();
    }
  }
}

TEST_CASE("replays are identical") {
  const auto p = fixture::scene(32, 3, 6);
  EngineConfig cfg;
  cfg.max_iterations = 3;
  auto run = [&] {
    Session s = init_session(p.features, p.scene.labels, 3, cfg);
    FallibleOracle oracle(p.scene.labels, FallibleOracleConfig{1, 1.0, 0.05, 3});
    while (!s.done()) run_iteration(s, p.features, oracle);
    return s;
  };
  const Session a = run();
  CHECK(a == run());
  cfg.seed = 2;
  CHECK_FALSE(a == run());
}

TEST_CASE("partial batches") {
  const auto f = fixture::tiny_stack(3, 2);
  LabelMap truth{3, 2, {1, 1, 2, 2, 1, 2}};
  EngineConfig cfg;
  cfg.seeds_per_class = 1;
  cfg.batch_size = 20;
  cfg.max_iterations = 5;
  Session s = init_session(f, truth, 2, cfg);
  GroundTruthOracle oracle(truth);
  const auto r = run_iteration(s, f, oracle);
  CHECK(r.batch.partial);
  CHECK(r.batch.labeled == 4);
  CHECK(s.partial_iterations == std::vector<int>{1});
  CHECK(s.pool_size() == 0);
  CHECK(s.done());
  s.check_invariants();
}

TEST_CASE("engine configuration") {
  EngineConfig c;
  c.theta = 0.7;
  c.heuristic = Heuristic::neqb;
  c.sigma_grid = {1.0, 2.0};
  const EngineConfig back = engine_config_from_json(to_json(c));
  CHECK(to_json(back) == to_json(c));
  CHECK(engine_config_from_json(nlohmann::json{{"batch_size", 5}}).batch_size == 5);
  CHECK(code_of([] { engine_config_from_json(nlohmann::json{{"batch", 5}}); }) == Errc::format);
  for (auto bad : {nlohmann::json{{"theta", 1.0}}, nlohmann::json{{"batch_size", 0}},
                   nlohmann::json{{"seeds_per_class", 0}}, nlohmann::json{{"heuristic", "neqb"}, {"committee_fraction", 0.0}}})
    CHECK_THROWS_AS(engine_config_from_json(bad), Error);
}

TEST_CASE("snapshots") {
  const auto p = fixture::scene(32, 3, 7);
  EngineConfig cfg;
  cfg.max_iterations = 4;
  Session s = init_session(p.features, p.scene.labels, 3, cfg);
  FallibleOracle oracle(p.scene.labels, FallibleOracleConfig{1, 1.0, 0.05, 3});
  run_iteration(s, p.features, oracle);
  run_iteration(s, p.features, oracle);

  const auto path = temp_path("session.json");
  persist_session(s, path);
  Session resumed = resume_session(path);
  CHECK(resumed == s);
  CHECK(snapshot_text(resumed) == snapshot_text(s));

  // an interrupted run continues exactly like an uninterrupted one
  while (!s.done()) run_iteration(s, p.features, oracle);
  while (!resumed.done()) run_iteration(resumed, p.features, oracle);
  CHECK(resumed == s);

  const std::string text = snapshot_text(s);
  auto j = nlohmann::json::parse(text);
  j["payload"]["iteration"] = 2;
  CHECK(code_of([&] { parse_snapshot(j.dump()); }) == Errc::checksum);
  j = nlohmann::json::parse(text);
  j["version"] = 99;
  CHECK(code_of([&] { parse_snapshot(j.dump()); }) == Errc::version_mismatch);
  CHECK(code_of([] { parse_snapshot("{not json"); }) == Errc::checksum);
  CHECK(code_of([] { parse_snapshot("{}"); }) == Errc::checksum);
  CHECK(code_of([] { resume_session("/nonexistent/session.json"); }) == Errc::io);

  std::ostringstream csv;
  write_query_log_csv(s, csv);
  std::istringstream lines(csv.str());
  std::string header;
  std::getline(lines, header);
  CHECK(header == "iteration,order,pixel_x,pixel_y,score,confidence,outcome,label");
  std::size_t rows = 0;
  for (std::string line; std::getline(lines, line);) ++rows;
  CHECK(rows == s.log.size());
}
