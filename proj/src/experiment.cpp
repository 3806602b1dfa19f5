// SPDX-License-Identifier: Apache-2.0
#include "aluc/experiment.hpp"

#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "aluc/error.hpp"
#include "aluc/log.hpp"
#include "aluc/png.hpp"
#include "aluc/rng.hpp"

namespace aluc {

std::string MethodSpec::name() const { return std::string(to_string(heuristic)) + (gated ? "+gated" : "+ungated"); }

MethodSpec MethodSpec::parse(const std::string& tag) {
  const auto plus = tag.find('+');
  if (plus == std::string::npos) throw Error(Errc::format, "methods: '" + tag + "' must be <heuristic>+gated or <heuristic>+ungated");
  const auto h = parse_heuristic(tag.substr(0, plus));
  if (!h) throw Error(Errc::format, "methods: unknown heuristic in '" + tag + "'");
  const std::string mode = tag.substr(plus + 1);
  if (mode != "gated" && mode != "ungated") throw Error(Errc::format, "methods: unknown mode in '" + tag + "'");
  return {*h, mode == "gated"};
}

void ExperimentConfig::validate() const {
  if (!scene && raster.empty()) throw Error(Errc::invalid_argument, "scene: give a scene or raster + labels");
  if (scene && !raster.empty()) throw Error(Errc::invalid_argument, "scene: scene and raster are exclusive");
  if (!scene && (labels.empty() || classes < 1)) throw Error(Errc::invalid_argument, "labels: raster input needs labels and classes");
  if (scene) scene->validate();
  morph.validate();
  if (methods.empty()) throw Error(Errc::invalid_argument, "methods: empty");
  if (runs < 1) throw Error(Errc::invalid_argument, "runs: must be >= 1");
  if (!oracle.ground_truth) oracle.fallible.validate();
  engine.validate();
}

ExperimentConfig experiment_config_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir) {
  if (!j.is_object()) throw Error(Errc::format, "experiment config: expected an object");
  static const std::set<std::string> known{"scene", "raster", "labels", "classes", "features", "methods",
                                           "oracle", "engine", "runs", "seed", "exclude_training"};
  for (const auto& [key, value] : j.items())
    if (!known.count(key)) throw Error(Errc::format, "experiment config: unknown field '" + key + "'");
  ExperimentConfig c;
  auto field = [&](const char* name, auto&& fn) {
    if (!j.contains(name)) return;
    try {
      fn(j.at(name));
    } catch (const nlohmann::json::exception& e) {
      throw Error(Errc::format, std::string(name) + ": " + e.what());
    } catch (const Error& e) {
      throw Error(e.code(), std::string(name) + ": " + e.what());
    }
  };
  auto resolve = [&](const std::string& p) {
    std::filesystem::path path(p);
    return path.is_relative() && !base_dir.empty() ? base_dir / path : path;
  };
  field("scene", [&](const nlohmann::json& v) { c.scene = scene_spec_from_json(v); });
  field("raster", [&](const nlohmann::json& v) { c.raster = resolve(v.get<std::string>()); });
  field("labels", [&](const nlohmann::json& v) { c.labels = resolve(v.get<std::string>()); });
  field("classes", [&](const nlohmann::json& v) { c.classes = v.get<int>(); });
  field("features", [&](const nlohmann::json& v) {
    if (v.contains("radii")) c.morph.radii = v.at("radii").get<std::vector<int>>();
  });
  field("methods", [&](const nlohmann::json& v) {
    for (const auto& m : v) c.methods.push_back(MethodSpec::parse(m.get<std::string>()));
  });
  field("oracle", [&](const nlohmann::json& v) {
    if (v.contains("persona")) c.oracle.fallible = FallibleOracleConfig::persona(v.at("persona").get<std::string>());
    const std::string kind = v.value("kind", std::string("fallible"));
    if (kind == "ground_truth") c.oracle.ground_truth = true;
    else if (kind != "fallible") throw Error(Errc::format, "kind must be 'fallible' or 'ground_truth'");
    if (v.contains("window")) c.oracle.fallible.window = v.at("window").get<int>();
    if (v.contains("purity")) c.oracle.fallible.purity = v.at("purity").get<double>();
    if (v.contains("refusal")) c.oracle.fallible.refusal = v.at("refusal").get<double>();
  });
  field("engine", [&](const nlohmann::json& v) { c.engine = engine_config_from_json(v); });
  field("runs", [&](const nlohmann::json& v) { c.runs = v.get<int>(); });
  field("seed", [&](const nlohmann::json& v) { c.seed = v.get<std::uint64_t>(); });
  field("exclude_training", [&](const nlohmann::json& v) { c.exclude_training = v.get<bool>(); });
  c.validate();
  return c;
}

ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::io, "cannot read " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::format, path.string() + ": " + e.what());
  }
  return experiment_config_from_json(j, path.parent_path());
}

RunInputs prepare_run_inputs(const ExperimentConfig& config, int run) {
  RunInputs in;
  Raster raster;
  if (config.scene) {
    SceneSpec spec = *config.scene;
    spec.seed += static_cast<std::uint64_t>(run);
    Scene scene = generate_synthetic_scene(spec);
    raster = std::move(scene.raster);
    in.truth = std::move(scene.labels);
    in.omega = spec.classes;
  } else {
    raster = load_raster(config.raster);
    in.omega = config.classes;
    in.truth = load_label_map(config.labels, in.omega);
    if (in.truth.width != raster.width || in.truth.height != raster.height)
      throw Error(Errc::size_mismatch, "labels: dimensions differ from the raster");
  }
  in.features = build_feature_stack(raster, config.morph);
  return in;
}

namespace {

std::string iter_tag(int iteration) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%02d", iteration);
  return buf;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  const auto tmp = std::filesystem::path(path.string() + ".tmp");
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(Errc::io, "cannot write " + tmp.string());
    out << text;
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace

RunCurve run_method(const RunInputs& in, const MethodSpec& method, const EngineConfig& engine, Oracle& oracle,
                    bool exclude_training, const std::filesystem::path& dir) {
  EngineConfig cfg = engine;
  cfg.heuristic = method.heuristic;
  cfg.gated = method.gated;
  Session session = init_session(in.features, in.truth, in.omega, cfg);
  if (!dir.empty()) std::filesystem::create_directories(dir);

  std::vector<double> kappa, oa;
  while (!session.done()) {
    std::vector<std::uint8_t> skip;
    if (exclude_training) {
      skip.assign(session.pixel_count(), 0);
      for (std::size_t p : session.labeled) skip[p] = 1;
    }
    const IterationReport report = run_iteration(session, in.features, oracle);
    const ConfusionMatrix cm = confusion_matrix(report.plan.predicted, in.truth, in.omega, skip);
    kappa.push_back(cohen_kappa(cm));
    oa.push_back(overall_accuracy(cm));
    session.check_invariants();
    logger().info("{} seed {} iteration {}: kappa {:.4f}, presented {}, masked {}", method.name(), cfg.seed,
                  report.plan.iteration, kappa.back(), report.batch.presented, report.batch.masked);
    if (!dir.empty()) {
      const std::string tag = iter_tag(report.plan.iteration);
      write_file(dir / ("classification_" + tag + ".png"),
                 classification_png(in.features.width, in.features.height, report.plan.predicted, in.omega));
      write_file(dir / ("confidence_" + tag + ".png"),
                 confidence_png(in.features.width, in.features.height, report.plan.confidence));
      if (!report.plan.confidence.empty()) {
        Raster conf{in.features.width, in.features.height, 1, {}};
        conf.values.assign(report.plan.confidence.begin(), report.plan.confidence.end());
        store_raster(conf, dir / ("confidence_" + tag), {{"iteration", report.plan.iteration}});
      }
    }
  }
  if (!dir.empty()) {
    persist_session(session, dir / "session.json");
    std::ostringstream csv;
    write_query_log_csv(session, csv);
    write_text(dir / "queries.csv", csv.str());
  }
  return {method.name(), cfg.seed, curve_from_session(session, kappa, oa)};
}

ExperimentResult run_experiment(const ExperimentConfig& config, const std::filesystem::path& outdir) {
  config.validate();
  ExperimentResult result;
  if (!outdir.empty()) std::filesystem::create_directories(outdir);
  auto flush = [&] {
    result.summary = summarize(result.curves);
    if (outdir.empty()) return;
    std::ostringstream curves, summary, queries;
    write_curves_csv(result.curves, curves);
    write_summary_csv(result.summary, summary);
    write_queries_csv(result.summary, queries);
    write_text(outdir / "curves.csv", curves.str());
    write_text(outdir / "summary.csv", summary.str());
    write_text(outdir / "queries.csv", queries.str());
  };
  for (int r = 0; r < config.runs; ++r) {
    const RunInputs inputs = prepare_run_inputs(config, r);
    const std::uint64_t run_seed = config.seed + static_cast<std::uint64_t>(r);
    for (const MethodSpec& method : config.methods) {
      EngineConfig engine = config.engine;
      engine.seed = run_seed;
      std::unique_ptr<Oracle> oracle;
      if (config.oracle.ground_truth) {
        oracle = std::make_unique<GroundTruthOracle>(inputs.truth);
      } else {
        FallibleOracleConfig oc = config.oracle.fallible;
        oc.seed = derive_seed(run_seed, {stream::refusal});
        oracle = std::make_unique<FallibleOracle>(inputs.truth, oc);
      }
      const std::filesystem::path dir =
          outdir.empty() ? std::filesystem::path{} : outdir / "runs" / method.name() / ("seed_" + std::to_string(run_seed));
      result.curves.push_back(run_method(inputs, method, engine, *oracle, config.exclude_training, dir));
      flush();
    }
  }
  flush();
  return result;
}

std::string format_summary(const std::vector<SummaryRow>& rows) {
  std::ostringstream out;
  char line[160];
  std::snprintf(line, sizeof line, "%-16s %5s %9s %9s %10s %10s %5s\n", "method", "iter", "kappa", "kappa_sd",
                "effort", "queries", "runs");
  out << line;
  for (const auto& r : rows) {
    std::snprintf(line, sizeof line, "%-16s %5d %9.4f %9.4f %10.1f %10.2f %5zu\n", r.method.c_str(), r.iteration,
                  r.kappa_mean, r.kappa_std, r.effort_mean, r.queries_mean, r.runs);
    out << line;
  }
  return out.str();
}

std::vector<SummaryRow> report_directory(const std::filesystem::path& outdir) {
  std::ifstream in(outdir / "curves.csv");
  if (!in) throw Error(Errc::io, "cannot read " + (outdir / "curves.csv").string());
  return summarize(read_curves_csv(in));
}

}  // namespace aluc
