// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <sstream>

#include "aluc/engine.hpp"
#include "aluc/error.hpp"
#include "aluc/metrics.hpp"
#include "aluc/rng.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"

using namespace aluc;

TEST_CASE("kappa hand cases") {
  const std::vector<std::uint64_t> c = {40, 10, 20, 30};
  const auto cm = confusion_from_counts(2, c);
  CHECK(cm.n == 100);
  CHECK(cohen_kappa(cm) == 0.4);
  CHECK(overall_accuracy(cm) == 0.7);
  // agreement at chance level
  CHECK(cohen_kappa(confusion_from_counts(2, std::vector<std::uint64_t>{25, 25, 25, 25})) == 0.0);
  CHECK(cohen_kappa(confusion_from_counts(3, std::vector<std::uint64_t>{5, 0, 0, 0, 7, 0, 0, 0, 1})) == 1.0);
  // a single class everywhere is perfect agreement
  CHECK(cohen_kappa(confusion_from_counts(2, std::vector<std::uint64_t>{9, 0, 0, 0})) == 1.0);
  CHECK_THROWS_AS(cohen_kappa(confusion_from_counts(2, std::vector<std::uint64_t>{0, 0, 0, 0})), Error);
  CHECK_THROWS_AS(confusion_from_counts(2, std::vector<std::uint64_t>{1, 2, 3}), Error);
}

TEST_CASE("kappa matches the textbook formula on random matrices") {
  Rng rng(41);
  double worst = 0;
  for (int t = 0; t < 1000; ++t) {
    const int k = 2 + int(rng.index(8));
    std::vector<std::uint64_t> counts(k * k);
    std::vector<std::vector<double>> dense(k, std::vector<double>(k));
    for (int i = 0; i < k; ++i)
      for (int j = 0; j < k; ++j) {
        const std::uint64_t v = rng.index(i == j ? 200 : 40);
        counts[i * k + j] = v;
        dense[i][j] = double(v);
      }
    counts[0] += 1;
    dense[0][0] += 1;
    worst = std::max(worst, std::fabs(cohen_kappa(confusion_from_counts(k, counts)) - oracle::kappa(dense)));
  }
  CHECK(worst < 1e-12);
}

TEST_CASE("kappa is 1 exactly for diagonal matrices") {
  Rng rng(2);
  for (int t = 0; t < 200; ++t) {
    const int k = 2 + int(rng.index(5));
    std::vector<std::uint64_t> counts(k * k, 0);
    for (int i = 0; i < k; ++i) counts[i * k + i] = 1 + rng.index(50);
    CHECK(cohen_kappa(confusion_from_counts(k, counts)) == 1.0);
    counts[1] += 1;
    CHECK(cohen_kappa(confusion_from_counts(k, counts)) < 1.0);
  }
}

TEST_CASE("confusion matrix from maps") {
  const LabelMap ref{3, 1, {1, 2, 0}};
  const std::vector<int> pred = {1, 1, 2};
  const auto cm = confusion_matrix(pred, ref, 2);
  CHECK(cm.n == 2);
  CHECK(cm.at(1, 1) == 1);
  CHECK(cm.at(2, 1) == 1);
  const std::vector<std::uint8_t> skip = {1, 0, 0};
  CHECK(confusion_matrix(pred, ref, 2, skip).n == 1);
  const LabelMap predmap{3, 1, {1, 1, 2}};
  CHECK(confusion_matrix(predmap, ref, 2).counts == cm.counts);
  CHECK_THROWS_AS(confusion_matrix(std::vector<int>{1, 1}, ref, 2), Error);
}

TEST_CASE("curve accounting of the scripted trace") {
  EngineConfig cfg;
  cfg.batch_size = 2;
  Session s = init_session_interactive(fixture::tiny_stack(3, 2), 2, cfg);
  add_seed(s, 4, 1);
  add_seed(s, 5, 2);
  ScriptedOracle o({{0, OracleAnswer::unknown()}, {2, OracleAnswer::label(2)}, {3, OracleAnswer::label(1)}});
  const std::vector<std::size_t> ranking = {0, 1, 2, 3};
  const std::vector<double> scores = {0, 0, 0, 0};
  const std::vector<double> conf = {0.7, 0.5, 0.9, 0.8, 1, 1};
  assemble_batch(s, ranking, scores, conf, o);
  finish_iteration(s, IterationPlan{}, false);

  const std::vector<double> kappa = {0.5, 0.6}, oa = {0.7, 0.8};
  const auto pts = curve_from_session(s, kappa, oa);
  REQUIRE(pts.size() == 2);
  CHECK(pts[0].iteration == 1);
  CHECK(pts[0].labels_cum == 2);
  CHECK(pts[0].effort_cum == 2);
  CHECK(pts[0].queries_iter == 3);
  CHECK(pts[1].labels_cum == 4);
  CHECK(pts[1].effort_cum == 5);
  CHECK(pts[1].queries_iter == 0);
  CHECK(pts[1].kappa == 0.6);
}

TEST_CASE("effort grows strictly on a real session") {
  const auto p = fixture::scene(32, 3, 12);
  EngineConfig cfg;
  cfg.max_iterations = 4;
  Session s = init_session(p.features, p.scene.labels, 3, cfg);
  FallibleOracle oracle(p.scene.labels, FallibleOracleConfig{1, 1.0, 0.05, 1});
  while (!s.done()) run_iteration(s, p.features, oracle);
  const std::vector<double> k(4, 0.5);
  const auto pts = curve_from_session(s, k, k);
  for (std::size_t i = 1; i < pts.size(); ++i) {
    CHECK(pts[i].effort_cum > pts[i - 1].effort_cum);
    CHECK(pts[i].effort_cum == pts[i - 1].effort_cum + pts[i - 1].queries_iter);
    CHECK(pts[i].labels_cum == pts[i - 1].labels_cum + 20);
  }
  CHECK(pts.back().effort_cum + pts.back().queries_iter == s.effort());
}

TEST_CASE("summaries and CSV") {
  std::vector<RunCurve> runs = {
      {"a", 1, {{1, 10, 10, 0.5, 0.6, 25}, {2, 30, 35, 0.7, 0.8, 21}}},
      {"a", 2, {{1, 10, 10, 0.7, 0.7, 27}, {2, 30, 37, 0.9, 0.9, 23}}},
      {"b", 1, {{1, 10, 10, 0.4, 0.5, 30}}},
  };
  const auto rows = summarize(runs);
  REQUIRE(rows.size() == 3);
  CHECK(rows[0].method == "a");
  CHECK(rows[0].iteration == 1);
  CHECK(rows[0].kappa_mean == doctest::Approx(0.6));
  CHECK(rows[0].kappa_std == doctest::Approx(0.1));
  CHECK(rows[0].queries_mean == 26.0);
  CHECK(rows[0].queries_std == 1.0);
  CHECK(rows[1].effort_mean == 36.0);
  CHECK(rows[2].method == "b");
  CHECK(rows[2].runs == 1);
  CHECK(rows[2].kappa_std == 0.0);
  CHECK(rows[2].queries_std == 0.0);

  std::stringstream csv;
  write_curves_csv(runs, csv);
  const auto back = read_curves_csv(csv);
  REQUIRE(back.size() == 3);
  for (std::size_t r = 0; r < 3; ++r) {
    CHECK(back[r].method == runs[r].method);
    CHECK(back[r].seed == runs[r].seed);
    REQUIRE(back[r].points.size() == runs[r].points.size());
    for (std::size_t i = 0; i < runs[r].points.size(); ++i) {
      CHECK(back[r].points[i].kappa == runs[r].points[i].kappa);
      CHECK(back[r].points[i].effort_cum == runs[r].points[i].effort_cum);
      CHECK(back[r].points[i].queries_iter == runs[r].points[i].queries_iter);
    }
  }
  std::istringstream bad("method,seed\nx,1\n");
  CHECK_THROWS_AS(read_curves_csv(bad), Error);

  std::ostringstream q;
  write_queries_csv(rows, q);
  CHECK(q.str().rfind("method,iteration,queries_mean,queries_std\n", 0) == 0);

  CHECK(format_number(0.1) == "0.1");
  CHECK(format_number(1.0 / 3.0) == "0.3333333333333333");
  CHECK(std::stod(format_number(0.8125673)) == 0.8125673);
}
