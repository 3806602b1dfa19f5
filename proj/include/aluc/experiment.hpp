// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "aluc/engine.hpp"
#include "aluc/features.hpp"
#include "aluc/metrics.hpp"
#include "aluc/oracle.hpp"
#include "aluc/raster.hpp"

namespace aluc {

struct MethodSpec {
  Heuristic heuristic = Heuristic::mclu;
  bool gated = true;

  std::string name() const;  // e.g. "mclu+gated"
  static MethodSpec parse(const std::string& tag);
  bool operator==(const MethodSpec&) const = default;
};

struct OracleSpec {
  bool ground_truth = false;
  FallibleOracleConfig fallible;  // seed is replaced per run
};

struct ExperimentConfig {
  std::optional<SceneSpec> scene;   // synthetic scene, seed advanced per run
  std::filesystem::path raster;     // or stored raster + label map
  std::filesystem::path labels;
  int classes = 0;
  MorphConfig morph;
  std::vector<MethodSpec> methods;
  OracleSpec oracle;
  EngineConfig engine;
  int runs = 1;
  std::uint64_t seed = 1;
  bool exclude_training = false;  // evaluate kappa without the training pixels

  void validate() const;
};

/// Relative paths are resolved against `base_dir`. Errors name the offending field.
ExperimentConfig experiment_config_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
ExperimentConfig load_experiment_config(const std::filesystem::path& path);

struct ExperimentResult {
  std::vector<RunCurve> curves;
  std::vector<SummaryRow> summary;
};

struct RunInputs {
  FeatureStack features;
  LabelMap truth;
  int omega = 0;
};

/// Scene (or stored raster) and features of run `run`.
RunInputs prepare_run_inputs(const ExperimentConfig& config, int run);

/// One session of one method until the stopping rule. Writes the snapshot, query log and
/// per-iteration maps under `dir` when it is non-empty.
RunCurve run_method(const RunInputs& inputs, const MethodSpec& method, const EngineConfig& engine, Oracle& oracle,
                    bool exclude_training, const std::filesystem::path& dir);

/// Every run of every method. Writes curves.csv, summary.csv and queries.csv under
/// `outdir` (refreshed after each finished run) when it is non-empty.
ExperimentResult run_experiment(const ExperimentConfig& config, const std::filesystem::path& outdir);

/// Plain-text table of the summary rows.
std::string format_summary(const std::vector<SummaryRow>& rows);
/// Reads <outdir>/curves.csv and summarizes it.
std::vector<SummaryRow> report_directory(const std::filesystem::path& outdir);

}  // namespace aluc
