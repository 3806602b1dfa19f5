// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "aluc/error.hpp"
#include "aluc/experiment.hpp"

using namespace aluc;
namespace fs = std::filesystem;

namespace {

nlohmann::json small_config() {
  return nlohmann::json::parse(R"({
    "scene": {"width": 40, "height": 40, "classes": 3, "bands": 3, "granularity": 12,
              "spread": 10, "class_std": 4, "noise": 2, "mixing": 1, "seed": 3},
    "features": {"radii": [1, 3]},
    "methods": ["mclu+gated"],
    "oracle": {"kind": "ground_truth"},
    "engine": {"batch_size": 20, "max_iterations": 3},
    "runs": 1,
    "seed": 5
  })");
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

fs::path fresh_dir(const std::string& name) {
  const auto d = fs::temp_directory_path() / "aluc_experiment_tests" / name;
  fs::remove_all(d);
  return d;
}

}  // namespace

TEST_CASE("method tags") {
  CHECK(MethodSpec::parse("mclu+gated") == MethodSpec{Heuristic::mclu, true});
  CHECK(MethodSpec::parse("rs+ungated").name() == "rs+ungated");
  CHECK_THROWS_AS(MethodSpec::parse("mclu"), Error);
  CHECK_THROWS_AS(MethodSpec::parse("foo+gated"), Error);
}

TEST_CASE("infallible labeler gives full batches") {
  const auto config = experiment_config_from_json(small_config());
  const auto dir = fresh_dir("infallible");
  const ExperimentResult r = run_experiment(config, dir);
  REQUIRE(r.curves.size() == 1);
  REQUIRE(r.curves[0].points.size() == 3);
  for (const auto& p : r.curves[0].points) CHECK(p.queries_iter == 20);
  CHECK(r.curves[0].points[0].labels_cum == 15);
  CHECK(r.curves[0].points[2].labels_cum == 55);
  CHECK(r.curves[0].points[2].effort_cum == 55);

  std::ifstream curves(dir / "curves.csv");
  const auto back = read_curves_csv(curves);
  REQUIRE(back.size() == 1);
  CHECK(back[0].points.size() == 3);
  CHECK(back[0].points[1].kappa == r.curves[0].points[1].kappa);
  CHECK(fs::exists(dir / "summary.csv"));
  CHECK(fs::exists(dir / "queries.csv"));
  const auto run_dir = dir / "runs" / "mclu+gated" / "seed_5";
  CHECK(fs::exists(run_dir / "session.json"));
  CHECK(fs::exists(run_dir / "queries.csv"));
  CHECK(fs::exists(run_dir / "classification_03.png"));
  CHECK(report_directory(dir).size() == 3);
  CHECK(format_summary(r.summary).find("mclu+gated") != std::string::npos);
}

TEST_CASE("experiments are byte-for-byte reproducible") {
  auto j = small_config();
  j["methods"] = {"mclu+gated", "rs+ungated"};
  j["oracle"] = {{"persona", "analyst"}};
  j["runs"] = 2;
  const auto config = experiment_config_from_json(j);
  const auto a = fresh_dir("repro_a"), b = fresh_dir("repro_b");
  run_experiment(config, a);
  run_experiment(config, b);
  CHECK(slurp(a / "curves.csv") == slurp(b / "curves.csv"));
  CHECK_FALSE(slurp(a / "curves.csv").empty());
  for (const char* m : {"mclu+gated", "rs+ungated"})
    for (const char* s : {"seed_5", "seed_6"}) {
      const auto rel = fs::path("runs") / m / s;
      CHECK(slurp(a / rel / "session.json") == slurp(b / rel / "session.json"));
      CHECK(slurp(a / rel / "queries.csv") == slurp(b / rel / "queries.csv"));
    }
}

TEST_CASE("experiment config errors") {
  auto expect_error = [](nlohmann::json j, const std::string& fragment) {
    try {
      experiment_config_from_json(j);
      FAIL("expected an error");
    } catch (const Error& e) {
      CHECK(std::string(e.what()).find(fragment) != std::string::npos);
    }
  };
  auto j = small_config();
  j["colour"] = 1;
  expect_error(j, "colour");
  j = small_config();
  j["methods"] = {"mclu+sometimes"};
  expect_error(j, "methods");
  j = small_config();
  j["engine"]["theta"] = 2.0;
  expect_error(j, "theta");
  j = small_config();
  j.erase("scene");
  expect_error(j, "scene");
  j = small_config();
  j["oracle"] = {{"persona", "robot"}};
  expect_error(j, "oracle");
  CHECK_THROWS_AS(load_experiment_config("/nonexistent/config.json"), Error);
}

TEST_CASE("shipped default config parses") {
  const auto c = load_experiment_config(fs::path(ALUC_SOURCE_DIR) / "configs" / "default.json");
  CHECK(c.scene.has_value());
  CHECK(c.scene->width == 96);
  CHECK(c.scene->classes == 5);
  CHECK(c.engine.batch_size == 20);
  CHECK(c.engine.theta == 0.6);
  CHECK(c.runs == 5);
  CHECK(c.oracle.fallible.window == 1);
  CHECK(c.oracle.fallible.purity == 1.0);
  CHECK(c.oracle.fallible.refusal == 0.05);
}
