// SPDX-License-Identifier: Apache-2.0
#include "aluc/oracle.hpp"

#include <algorithm>
#include <unordered_map>

#include "aluc/error.hpp"
#include "aluc/rng.hpp"

namespace aluc {

namespace {

void check_bounds(const LabelMap& labels, int row, int col) {
  if (row < 0 || col < 0 || row >= labels.height || col >= labels.width) {
    throw Error(Errc::invalid_argument, "pixel (" + std::to_string(col) + ", " + std::to_string(row) + ") out of bounds");
  }
}

}  // namespace

OracleAnswer answer_ground_truth(const LabelMap& labels, int row, int col) {
  check_bounds(labels, row, col);
  const int label = labels.at(row, col);
  return label == 0 ? OracleAnswer::unknown() : OracleAnswer::label(label);
}

void FallibleOracleConfig::validate() const {
  if (window < 0) throw Error(Errc::invalid_argument, "oracle window must be >= 0");
  if (!(purity > 0.0 && purity <= 1.0)) throw Error(Errc::invalid_argument, "oracle purity must lie in (0, 1]");
  if (!(refusal >= 0.0 && refusal < 1.0)) throw Error(Errc::invalid_argument, "oracle refusal must lie in [0, 1)");
}

FallibleOracleConfig FallibleOracleConfig::persona(const std::string& name) {
  if (name == "analyst") return FallibleOracleConfig{1, 1.0, 0.05, 0};
  if (name == "novice") return FallibleOracleConfig{1, 0.8, 0.15, 0};
  throw Error(Errc::invalid_argument, "unknown oracle persona '" + name + "'");
}

OracleAnswer answer_fallible(const LabelMap& labels, int row, int col, const FallibleOracleConfig& config) {
  check_bounds(labels, row, col);
  const int own = labels.at(row, col);
  if (own == 0) return OracleAnswer::unknown();

  std::unordered_map<int, int> counts;
  int total = 0;
  for (int r = std::max(0, row - config.window); r <= std::min(labels.height - 1, row + config.window); ++r) {
    for (int c = std::max(0, col - config.window); c <= std::min(labels.width - 1, col + config.window); ++c) {
      const int l = labels.at(r, c);
      if (l == 0) continue;
      ++counts[l];
      ++total;
    }
  }
  int modal = 0;
  for (const auto& [label, count] : counts) modal = std::max(modal, count);
  if (static_cast<double>(modal) < config.purity * static_cast<double>(total)) return OracleAnswer::unknown();

  if (config.refusal > 0.0) {
    const std::uint64_t pixel = static_cast<std::uint64_t>(row) * labels.width + col;
    if (to_unit(derive_seed(config.seed, {stream::refusal, pixel})) < config.refusal) return OracleAnswer::unknown();
  }
  return OracleAnswer::label(own);
}

OracleAnswer GroundTruthOracle::answer(std::size_t pixel) {
  return answer_ground_truth(labels_, static_cast<int>(pixel / labels_.width), static_cast<int>(pixel % labels_.width));
}

FallibleOracle::FallibleOracle(const LabelMap& labels, FallibleOracleConfig config)
    : labels_(labels), config_(config) {
  config_.validate();
}

OracleAnswer FallibleOracle::answer(std::size_t pixel) {
  return answer_fallible(labels_, static_cast<int>(pixel / labels_.width), static_cast<int>(pixel % labels_.width),
                         config_);
}

OracleAnswer ScriptedOracle::answer(std::size_t pixel) {
  ++calls_;
  const auto it = answers_.find(pixel);
  return it == answers_.end() ? OracleAnswer::unknown() : it->second;
}

void QueryBridge::present(std::size_t pixel) {
  std::lock_guard lock(mutex_);
  presented_ = pixel;
  answer_.reset();
}

void QueryBridge::submit(std::size_t pixel, OracleAnswer answer) {
  std::lock_guard lock(mutex_);
  if (!presented_) {
    if (last_answered_ == pixel) throw Error(Errc::duplicate, "query already answered");
    throw Error(Errc::stale_query, "no query is outstanding");
  }
  if (*presented_ != pixel) throw Error(Errc::stale_query, "pixel is not the current query");
  answer_ = std::make_pair(pixel, answer);
  last_answered_ = pixel;
  presented_.reset();
}

std::optional<std::pair<std::size_t, OracleAnswer>> QueryBridge::take() {
  std::lock_guard lock(mutex_);
  auto out = answer_;
  answer_.reset();
  return out;
}

std::optional<std::size_t> QueryBridge::outstanding() const {
  std::lock_guard lock(mutex_);
  return presented_;
}

}  // namespace aluc
