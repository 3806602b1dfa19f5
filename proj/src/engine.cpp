// SPDX-License-Identifier: Apache-2.0
#include "aluc/engine.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <set>
#include <string>

#include "aluc/error.hpp"
#include "aluc/log.hpp"
#include "aluc/rng.hpp"

namespace aluc {

void EngineConfig::validate() const {
  if (batch_size < 1) throw Error(Errc::invalid_argument, "batch_size: must be >= 1");
  if (!(theta > 0.0 && theta < 1.0)) throw Error(Errc::invalid_argument, "theta: must lie in (0, 1)");
  if (seeds_per_class < 1) throw Error(Errc::invalid_argument, "seeds_per_class: must be >= 1");
  if (heuristic == Heuristic::neqb) {
    if (committee_size < 2) throw Error(Errc::invalid_argument, "committee_size: must be >= 2");
    if (!(committee_fraction > 0.0 && committee_fraction <= 1.0))
      throw Error(Errc::invalid_argument, "committee_fraction: must lie in (0, 1]");
  }
  if (max_iterations < 0) throw Error(Errc::invalid_argument, "max_iterations: must be >= 0");
  if (max_iterations == 0 && max_queries == 0)
    throw Error(Errc::invalid_argument, "stopping rule: set max_iterations or max_queries");
  if (!(C > 0.0) || !std::isfinite(C)) throw Error(Errc::invalid_argument, "C: must be positive");
  if (!(tol > 0.0)) throw Error(Errc::invalid_argument, "tol: must be positive");
  if (cv_folds < 2) throw Error(Errc::invalid_argument, "cv_folds: must be >= 2");
  if (sigma_grid.empty()) throw Error(Errc::invalid_argument, "sigma_grid: empty");
  for (double s : sigma_grid)
    if (!(s > 0.0) || !std::isfinite(s)) throw Error(Errc::invalid_argument, "sigma_grid: entries must be positive");
  if (median_sample < 2) throw Error(Errc::invalid_argument, "median_sample: must be >= 2");
}

nlohmann::json to_json(const EngineConfig& c) {
  return {{"heuristic", std::string(to_string(c.heuristic))},
          {"gated", c.gated},
          {"batch_size", c.batch_size},
          {"theta", c.theta},
          {"seeds_per_class", c.seeds_per_class},
          {"committee_size", c.committee_size},
          {"committee_fraction", c.committee_fraction},
          {"max_iterations", c.max_iterations},
          {"max_queries", c.max_queries},
          {"candidate_subsample", c.candidate_subsample},
          {"C", c.C},
          {"tol", c.tol},
          {"retune_sigma", c.retune_sigma},
          {"masked_negatives", c.masked_negatives},
          {"cv_folds", c.cv_folds},
          {"sigma_grid", c.sigma_grid},
          {"median_sample", c.median_sample},
          {"wall_clock", c.wall_clock},
          {"seed", c.seed}};
}

EngineConfig engine_config_from_json(const nlohmann::json& j, const EngineConfig& base) {
  if (!j.is_object()) throw Error(Errc::format, "engine config: expected an object");
  EngineConfig c = base;
  static const std::set<std::string> known{"heuristic", "gated", "batch_size", "theta", "seeds_per_class",
                                           "committee_size", "committee_fraction", "max_iterations",
                                           "max_queries", "candidate_subsample", "C", "tol", "retune_sigma",
                                           "masked_negatives", "cv_folds", "sigma_grid", "median_sample",
                                           "wall_clock", "seed"};
  for (const auto& [key, value] : j.items())
    if (!known.count(key)) throw Error(Errc::format, "engine config: unknown field '" + key + "'");
  try {
    if (j.contains("heuristic")) {
      const auto tag = j.at("heuristic").get<std::string>();
      const auto h = parse_heuristic(tag);
      if (!h) throw Error(Errc::format, "heuristic: unknown tag '" + tag + "'");
      c.heuristic = *h;
    }
    auto get = [&](const char* key, auto& field) {
      if (j.contains(key)) field = j.at(key).get<std::decay_t<decltype(field)>>();
    };
    get("gated", c.gated);
    get("batch_size", c.batch_size);
    get("theta", c.theta);
    get("seeds_per_class", c.seeds_per_class);
    get("committee_size", c.committee_size);
    get("committee_fraction", c.committee_fraction);
    get("max_iterations", c.max_iterations);
    get("max_queries", c.max_queries);
    get("candidate_subsample", c.candidate_subsample);
    get("C", c.C);
    get("tol", c.tol);
    get("retune_sigma", c.retune_sigma);
    get("masked_negatives", c.masked_negatives);
    get("cv_folds", c.cv_folds);
    get("sigma_grid", c.sigma_grid);
    get("median_sample", c.median_sample);
    get("wall_clock", c.wall_clock);
    get("seed", c.seed);
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::format, std::string("engine config: ") + e.what());
  }
  c.validate();
  return c;
}

// ---------------------------------------------------------------------------
// Session

namespace {

std::ptrdiff_t confidence_slot(const ConfidenceSet& set, std::size_t pixel) {
  auto it = std::find(set.pixels.begin(), set.pixels.end(), pixel);
  return it == set.pixels.end() ? -1 : it - set.pixels.begin();
}

std::uint64_t tick(Session& s) {
  if (s.config.wall_clock) {
    using namespace std::chrono;
    return static_cast<std::uint64_t>(
        duration_cast<milliseconds>(system_clock::now().time_since_epoch()).count());
  }
  return ++s.clock;
}

}  // namespace

std::size_t Session::pool_size() const noexcept {
  return static_cast<std::size_t>(std::count(in_pool.begin(), in_pool.end(), std::uint8_t{1}));
}

std::size_t Session::presented_queries() const noexcept {
  std::size_t n = 0;
  for (const auto& r : log) n += r.outcome != Outcome::masked;
  return n;
}

bool Session::done() const noexcept {
  if (config.max_iterations > 0 && iteration > config.max_iterations) return true;
  if (config.max_queries > 0 && presented_queries() >= config.max_queries) return true;
  for (std::size_t p = 0; p < in_pool.size(); ++p)
    if (in_pool[p] && !excluded[p]) return false;
  return true;
}

void Session::check_invariants() const {
  auto fail = [](const std::string& what) { throw Error(Errc::invalid_argument, "session invariant: " + what); };
  const std::size_t n = in_pool.size();
  if (excluded.size() != n) fail("excluded map size");
  if (labeled.size() != labels.size()) fail("label count");
  if (batch.size() != batch_labels.size()) fail("batch label count");
  for (std::size_t p : labeled) {
    if (p >= n) fail("labeled pixel out of range");
    if (in_pool[p]) fail("X and U intersect at pixel " + std::to_string(p));
  }
  if (std::count(in_pool.begin(), in_pool.end(), std::uint8_t{1}) + labeled.size() != n)
    fail("U is not the complement of X");
  if (batch.size() > static_cast<std::size_t>(config.batch_size)) fail("|S| > m");
  if (labeled.size() > confidence.size()) fail("|X| > |X_theta|");
  std::size_t pos = 0, neg = 0;
  for (int t : confidence.targets) (t > 0 ? pos : neg)++;
  if (pos != confidence.positives || neg != confidence.negatives) fail("confidence counts");
  {
    std::vector<std::size_t> sorted = confidence.pixels;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) fail("duplicate pixel in X_theta");
  }
  for (std::size_t p : labeled) {
    const auto slot = confidence_slot(confidence, p);
    if (slot < 0 || confidence.targets[slot] != 1) fail("labeled pixel missing as a positive in X_theta");
  }
  std::vector<std::size_t> shown;
  for (const auto& r : log)
    if (r.outcome != Outcome::masked) shown.push_back(r.pixel);
  std::sort(shown.begin(), shown.end());
  if (std::adjacent_find(shown.begin(), shown.end()) != shown.end()) fail("pixel presented twice");
}

namespace {

Session blank_session(const FeatureStack& features, int omega, const EngineConfig& config) {
  config.validate();
  if (omega < 1) throw Error(Errc::invalid_argument, "omega must be >= 1");
  if (features.pixel_count() == 0) throw Error(Errc::invalid_argument, "empty feature stack");
  Session s;
  s.width = features.width;
  s.height = features.height;
  s.omega = omega;
  s.config = config;
  s.in_pool.assign(features.pixel_count(), 1);
  s.excluded.assign(features.pixel_count(), 0);
  s.features_fingerprint = fingerprint(features);
  return s;
}

}  // namespace

void add_seed(Session& s, std::size_t pixel, int label) {
  if (pixel >= s.pixel_count()) throw Error(Errc::invalid_argument, "seed pixel out of range");
  if (label < 1 || label > s.omega) throw Error(Errc::invalid_argument, "seed label out of range");
  if (!s.in_pool[pixel]) throw Error(Errc::duplicate, "pixel " + std::to_string(pixel) + " is already a seed");
  s.labeled.push_back(pixel);
  s.labels.push_back(label);
  s.in_pool[pixel] = 0;
  ++s.seed_count;
  record_confidence_example(s.confidence, pixel, Outcome::labeled);
}

Session init_session_interactive(const FeatureStack& features, int omega, const EngineConfig& config) {
  return blank_session(features, omega, config);
}

Session init_session(const FeatureStack& features, const LabelMap& truth, int omega, const EngineConfig& config) {
  if (truth.pixel_count() != features.pixel_count() || truth.width != features.width)
    throw Error(Errc::size_mismatch, "label map and feature stack dimensions differ");
  truth.validate(omega);
  Session s = blank_session(features, omega, config);
  Rng rng(derive_seed(config.seed, {0, stream::seeds}));
  for (int c = 1; c <= omega; ++c) {
    std::vector<std::size_t> members;
    for (std::size_t p = 0; p < truth.labels.size(); ++p)
      if (truth.labels[p] == c) members.push_back(p);
    if (members.empty()) throw Error(Errc::invalid_argument, "class " + std::to_string(c) + " has no ground-truth pixels");
    rng.shuffle(std::span<std::size_t>(members));
    const std::size_t take = std::min<std::size_t>(members.size(), static_cast<std::size_t>(config.seeds_per_class));
    if (take < static_cast<std::size_t>(config.seeds_per_class))
      logger().warn("class {} has only {} pixels; seeding with all of them", c, members.size());
    for (std::size_t i = 0; i < take; ++i) add_seed(s, members[i], c);
  }
  return s;
}

// ---------------------------------------------------------------------------
// Iteration

IterationPlan prepare_iteration(const Session& s, const FeatureStack& features) {
  if (features.pixel_count() != s.pixel_count()) throw Error(Errc::size_mismatch, "feature stack does not match session");
  if (s.labeled.empty()) throw Error(Errc::wrong_phase, "training set is empty");
  const EngineConfig& cfg = s.config;
  const auto it = static_cast<std::uint64_t>(s.iteration);
  IterationPlan plan;
  plan.iteration = s.iteration;

  LabeledSet train{features.samples.gather(s.labeled), s.labels};
  SmoOptions smo;
  smo.tol = cfg.tol;

  // Bandwidth of the main classifier.
  if (s.iteration == 1 || s.main_sigma <= 0.0) {
    plan.main_sigma = median_sigma(features.samples, cfg.median_sample, derive_seed(cfg.seed, {it, stream::median}));
  } else if (cfg.retune_sigma) {
    CvOptions cv{cfg.C, cfg.tol, s.omega};
    plan.main_sigma = select_sigma_cv(train, cfg.sigma_grid, cfg.cv_folds, derive_seed(cfg.seed, {it, stream::cv_main}), cv);
  } else {
    plan.main_sigma = s.main_sigma;
  }
  const KernelParams params{plan.main_sigma, cfg.C};
  plan.model = train_one_against_all(train, s.omega, params, smo);

  const std::vector<double> decisions = plan.model.decision_matrix(features.samples);
  const std::size_t n = s.pixel_count();
  const auto omega = static_cast<std::size_t>(s.omega);
  plan.predicted.resize(n);
  for (std::size_t p = 0; p < n; ++p)
    plan.predicted[p] = argmax_class(std::span<const double>(decisions.data() + p * omega, omega));

  // Confidence model, trained only once negatives can exist.
  if (cfg.gated && s.iteration >= 2) {
    ConfidenceTraining ct{cfg.sigma_grid, cfg.cv_folds, cfg.C, cfg.tol, derive_seed(cfg.seed, {it, stream::cv_confidence})};
    try {
      plan.confidence_model = train_confidence_model(s.confidence, features.samples, ct, s.iteration);
      plan.confidence = confidence_map(*plan.confidence_model, features.samples);
    } catch (const Error& e) {
      if (e.code() == Errc::untrainable) {
        logger().info("iteration {}: confidence model untrainable, mask bypassed", s.iteration);
      } else if (e.code() == Errc::not_converged) {
        logger().warn("iteration {}: confidence model did not converge ({}), mask bypassed", s.iteration, e.what());
        plan.confidence_model.reset();
        plan.confidence.clear();
      } else {
        throw;
      }
    }
  }

  // Candidates: U, optionally subsampled.
  std::vector<std::size_t> candidates;
  for (std::size_t p = 0; p < n; ++p)
    if (s.in_pool[p]) candidates.push_back(p);
  if (cfg.candidate_subsample > 0 && cfg.candidate_subsample < candidates.size()) {
    Rng rng(derive_seed(cfg.seed, {it, stream::subsample}));
    for (std::size_t i = 0; i < cfg.candidate_subsample; ++i) {
      const std::size_t j = i + static_cast<std::size_t>(rng.index(candidates.size() - i));
      std::swap(candidates[i], candidates[j]);
    }
    candidates.resize(cfg.candidate_subsample);
    std::sort(candidates.begin(), candidates.end());
  }

  HeuristicScores scores;
  switch (cfg.heuristic) {
    case Heuristic::rs:
      scores = score_random(candidates);
      break;
    case Heuristic::mclu: {
      std::vector<double> sub(candidates.size() * omega);
      for (std::size_t i = 0; i < candidates.size(); ++i)
        std::copy_n(decisions.begin() + static_cast<std::ptrdiff_t>(candidates[i] * omega), omega,
                    sub.begin() + static_cast<std::ptrdiff_t>(i * omega));
      scores = score_mclu(sub, s.omega, candidates);
      break;
    }
    case Heuristic::neqb: {
      const Committee committee = train_bagged_committee(train, cfg.committee_size, cfg.committee_fraction, s.omega,
                                                         params, smo, derive_seed(cfg.seed, {it, stream::committee}));
      scores = score_neqb(committee, features.samples.gather(candidates), candidates);
      break;
    }
  }
  plan.ranking = rank_candidates(scores, derive_seed(cfg.seed, {it, stream::rank}));
  std::vector<double> score_of(n, 0.0);
  for (std::size_t i = 0; i < scores.ids.size(); ++i) score_of[scores.ids[i]] = scores.scores[i];
  plan.ranked_scores.reserve(plan.ranking.size());
  for (std::size_t p : plan.ranking) plan.ranked_scores.push_back(score_of[p]);
  return plan;
}

bool batch_full(const Session& s) noexcept { return s.batch.size() >= static_cast<std::size_t>(s.config.batch_size); }

std::optional<std::size_t> next_query(Session& s, std::span<const std::size_t> ranking, std::span<const double> scores,
                                      std::span<const double> confidence, BatchWalk& walk) {
  if (walk.presented) return walk.presented;
  if (scores.size() != ranking.size()) throw Error(Errc::size_mismatch, "ranking and scores differ in length");
  const GateConfig gate{s.config.theta};
  while (!batch_full(s) && walk.position < ranking.size()) {
    const std::size_t idx = walk.position++;
    const std::size_t pixel = ranking[idx];
    if (pixel >= s.pixel_count()) throw Error(Errc::invalid_argument, "ranked pixel out of range");
    if (s.excluded[pixel] || !s.in_pool[pixel]) continue;
    if (std::find(s.batch.begin(), s.batch.end(), pixel) != s.batch.end()) continue;
    double p = 1.0;
    if (!confidence.empty()) {
      if (pixel >= confidence.size()) throw Error(Errc::size_mismatch, "confidence map too short");
      p = confidence[pixel];
    }
    if (!confidence.empty() && !passes_mask(p, gate)) {
      if (s.config.masked_negatives && confidence_slot(s.confidence, pixel) < 0)
        record_confidence_example(s.confidence, pixel, Outcome::masked);
      s.log.push_back({s.iteration, walk.order++, pixel, scores[idx], p, Outcome::masked, 0, tick(s)});
      continue;
    }
    walk.presented = pixel;
    walk.presented_score = scores[idx];
    walk.presented_confidence = p;
    return pixel;
  }
  walk.exhausted = walk.position >= ranking.size() && !batch_full(s);
  return std::nullopt;
}

void apply_answer(Session& s, BatchWalk& walk, std::size_t pixel, OracleAnswer answer) {
  if (!walk.presented || *walk.presented != pixel)
    throw Error(Errc::stale_query, "pixel " + std::to_string(pixel) + " is not the presented query");
  if (!answer.is_unknown() && (answer.label() < 1 || answer.label() > s.omega))
    throw Error(Errc::invalid_argument, "answer label out of range");
  const auto slot = confidence_slot(s.confidence, pixel);
  QueryRecord rec{s.iteration, walk.order++, pixel, walk.presented_score, walk.presented_confidence,
                  Outcome::labeled, 0, tick(s)};
  if (answer.is_unknown()) {
    rec.outcome = Outcome::refused;
    if (slot < 0) record_confidence_example(s.confidence, pixel, Outcome::refused);
    s.excluded[pixel] = 1;
  } else {
    rec.label = answer.label();
    if (slot < 0) {
      record_confidence_example(s.confidence, pixel, Outcome::labeled);
    } else if (s.confidence.targets[slot] < 0) {
      // masked in an earlier iteration, labeled now
      s.confidence.targets[slot] = 1;
      --s.confidence.negatives;
      ++s.confidence.positives;
    }
    s.batch.push_back(pixel);
    s.batch_labels.push_back(answer.label());
  }
  s.log.push_back(rec);
  walk.presented.reset();
}

BatchResult assemble_batch(Session& s, std::span<const std::size_t> ranking, std::span<const double> scores,
                           std::span<const double> confidence, Oracle& oracle) {
  if (ranking.empty()) throw Error(Errc::invalid_argument, "empty ranking");
  const std::size_t log_start = s.log.size();
  BatchWalk walk;
  while (auto pixel = next_query(s, ranking, scores, confidence, walk)) apply_answer(s, walk, *pixel, oracle.answer(*pixel));
  BatchResult r;
  for (std::size_t i = log_start; i < s.log.size(); ++i) {
    switch (s.log[i].outcome) {
      case Outcome::labeled: ++r.labeled; break;
      case Outcome::refused: ++r.refused; break;
      case Outcome::masked: ++r.masked; break;
    }
  }
  r.presented = r.labeled + r.refused;
  r.partial = !batch_full(s);
  if (r.partial)
    logger().warn("iteration {}: ranking exhausted with {} of {} labels", s.iteration, s.batch.size(), s.config.batch_size);
  return r;
}

void finish_iteration(Session& s, const IterationPlan& plan, bool partial) {
  for (std::size_t i = 0; i < s.batch.size(); ++i) {
    s.labeled.push_back(s.batch[i]);
    s.labels.push_back(s.batch_labels[i]);
    s.in_pool[s.batch[i]] = 0;
  }
  s.batch.clear();
  s.batch_labels.clear();
  s.main_sigma = plan.main_sigma;
  if (partial) s.partial_iterations.push_back(s.iteration);
  ++s.iteration;
}

IterationReport run_iteration(Session& s, const FeatureStack& features, Oracle& oracle) {
  if (s.done()) throw Error(Errc::wrong_phase, "stopping rule already met");
  if (!s.batch.empty()) throw Error(Errc::wrong_phase, "a batch is in progress");
  IterationReport report;
  report.plan = prepare_iteration(s, features);
  if (report.plan.ranking.empty()) {
    report.batch.partial = true;
  } else {
    report.batch = assemble_batch(s, report.plan.ranking, report.plan.ranked_scores, report.plan.confidence, oracle);
  }
  finish_iteration(s, report.plan, report.batch.partial);
  return report;
}

}  // namespace aluc
