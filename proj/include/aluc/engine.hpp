// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include <nlohmann/json.hpp>

#include "aluc/confidence.hpp"
#include "aluc/features.hpp"
#include "aluc/heuristics.hpp"
#include "aluc/oracle.hpp"
#include "aluc/svm.hpp"

namespace aluc {

struct EngineConfig {
  Heuristic heuristic = Heuristic::mclu;
  bool gated = true;
  int batch_size = 20;
  double theta = 0.6;
  int seeds_per_class = 5;
  int committee_size = 10;
  double committee_fraction = 0.75;
  int max_iterations = 10;
  std::size_t max_queries = 0;          // 0: no budget
  std::size_t candidate_subsample = 0;  // 0: rank the full pool
  double C = 100.0;
  double tol = 1e-3;
  bool retune_sigma = true;      // re-select the main bandwidth by CV from iteration 2 on
  bool masked_negatives = true;  // record gate-masked candidates as confidence negatives
  int cv_folds = 4;
  std::vector<double> sigma_grid = default_sigma_grid();
  std::size_t median_sample = 1000;
  bool wall_clock = false;  // query timestamps: wall-clock ms, or a logical counter
  std::uint64_t seed = 1;

  void validate() const;
  bool operator==(const EngineConfig&) const = default;
};

nlohmann::json to_json(const EngineConfig& config);
/// Fields missing from `j` keep the values in `base`.
EngineConfig engine_config_from_json(const nlohmann::json& j, const EngineConfig& base = {});

struct QueryRecord {
  int iteration = 0;
  int order = 0;  // position within the iteration's walk
  std::size_t pixel = 0;
  double score = 0.0;
  double confidence = 1.0;  // 1 when the mask is bypassed
  Outcome outcome = Outcome::labeled;
  int label = 0;  // class for labeled outcomes, 0 otherwise
  std::uint64_t timestamp = 0;

  bool operator==(const QueryRecord&) const = default;
};

/// Full loop state. Pixel ids index the feature stack (row * width + col).
struct Session {
  int width = 0;
  int height = 0;
  int omega = 0;
  EngineConfig config;
  int iteration = 1;
  std::vector<std::size_t> labeled;  // X
  std::vector<int> labels;
  std::size_t seed_count = 0;
  ConfidenceSet confidence;            // X_theta
  std::vector<std::uint8_t> in_pool;   // U membership per pixel
  std::vector<std::uint8_t> excluded;  // refused pixels, never presented again
  std::vector<std::size_t> batch;      // S of the current iteration
  std::vector<int> batch_labels;
  std::vector<QueryRecord> log;
  std::vector<int> partial_iterations;  // iterations closed before the batch filled
  double main_sigma = 0.0;
  std::uint64_t clock = 0;
  std::uint64_t features_fingerprint = 0;

  std::size_t pixel_count() const noexcept { return in_pool.size(); }
  std::size_t pool_size() const noexcept;
  /// Queries shown to the labeler (labeled + refused); masked candidates cost nothing.
  std::size_t presented_queries() const noexcept;
  /// Seeds plus presented queries.
  std::size_t effort() const noexcept { return seed_count + presented_queries(); }
  bool done() const noexcept;
  /// Throws Errc::invalid_argument naming the first violated invariant.
  void check_invariants() const;

  bool operator==(const Session&) const = default;
};

/// Simulated mode: seeds_per_class pixels per class drawn (stratified, seeded) from the
/// ground truth; X_theta starts as the same pixels, all +1; U is every other pixel.
Session init_session(const FeatureStack& features, const LabelMap& truth, int omega, const EngineConfig& config);
/// Interactive mode: empty X, filled by add_seed.
Session init_session_interactive(const FeatureStack& features, int omega, const EngineConfig& config);
/// Throws Errc::duplicate for a pixel that is already a seed.
void add_seed(Session& session, std::size_t pixel, int label);

/// Models and ranking for one iteration (training, scoring, confidence assessment).
struct IterationPlan {
  int iteration = 0;
  double main_sigma = 0.0;
  OaaModel model;
  std::optional<ConfidenceModel> confidence_model;
  std::vector<int> predicted;        // class per pixel
  std::vector<double> confidence;    // p(+1) per pixel; empty when the mask is all-pass
  std::vector<std::size_t> ranking;  // candidate pixels, most desirable first
  std::vector<double> ranked_scores;  // heuristic score aligned with ranking
};

IterationPlan prepare_iteration(const Session& session, const FeatureStack& features);

/// Cursor over a ranking; lets the batch walk pause on every presented query.
struct BatchWalk {
  std::size_t position = 0;
  int order = 0;
  std::optional<std::size_t> presented;
  double presented_score = 0.0;
  double presented_confidence = 1.0;
  bool exhausted = false;
};

struct BatchResult {
  std::size_t presented = 0;
  std::size_t labeled = 0;
  std::size_t refused = 0;
  std::size_t masked = 0;
  bool partial = false;
};

/// Advances to the next candidate to show the labeler, recording gate-masked candidates
/// on the way. Returns nothing once the batch is full or the ranking is exhausted.
std::optional<std::size_t> next_query(Session& session, std::span<const std::size_t> ranking,
                                      std::span<const double> scores, std::span<const double> confidence,
                                      BatchWalk& walk);
/// Applies the labeler's answer to the query returned by next_query.
void apply_answer(Session& session, BatchWalk& walk, std::size_t pixel, OracleAnswer answer);
bool batch_full(const Session& session) noexcept;

/// Walks the ranking: skip refused pixels; mask candidates with p <= theta; present the
/// rest; stop at m labels or when the ranking runs out.
BatchResult assemble_batch(Session& session, std::span<const std::size_t> ranking,
                           std::span<const double> scores, std::span<const double> confidence, Oracle& oracle);

/// X += S, U -= S, iteration + 1.
void finish_iteration(Session& session, const IterationPlan& plan, bool partial);

struct IterationReport {
  IterationPlan plan;
  BatchResult batch;
};

IterationReport run_iteration(Session& session, const FeatureStack& features, Oracle& oracle);

nlohmann::json session_to_json(const Session& session);
Session session_from_json(const nlohmann::json& j);
/// Versioned snapshot with a CRC-32 over the payload.
void persist_session(const Session& session, const std::filesystem::path& path);
Session resume_session(const std::filesystem::path& path);
std::string snapshot_text(const Session& session);
Session parse_snapshot(const std::string& text);

/// iteration,order,pixel_x,pixel_y,score,confidence,outcome,label
void write_query_log_csv(const Session& session, std::ostream& out);

}  // namespace aluc
