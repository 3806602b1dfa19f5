// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <map>
#include <mutex>
#include <optional>
#include <string>

#include "aluc/raster.hpp"

namespace aluc {

/// A class label 1..omega, or Unknown (the labeler declines: a bad state).
class OracleAnswer {
 public:
  static OracleAnswer unknown() noexcept { return OracleAnswer{0}; }
  static OracleAnswer label(int cls) noexcept { return OracleAnswer{cls}; }

  bool is_unknown() const noexcept { return label_ == 0; }
  int label() const noexcept { return label_; }
  bool operator==(const OracleAnswer&) const = default;

 private:
  explicit OracleAnswer(int label) noexcept : label_(label) {}
  int label_;
};

class Oracle {
 public:
  virtual ~Oracle() = default;
  virtual OracleAnswer answer(std::size_t pixel) = 0;
};

/// The infallible labeler: ground truth where labeled, Unknown on 0.
OracleAnswer answer_ground_truth(const LabelMap& labels, int row, int col);

struct FallibleOracleConfig {
  int window = 1;         // w: half-size of the (2w+1)^2 neighborhood
  double purity = 1.0;    // rho: minimum modal-label fraction in the window
  double refusal = 0.05;  // q: independent refusal probability
  std::uint64_t seed = 0;

  void validate() const;
  static FallibleOracleConfig persona(const std::string& name);  // "analyst" or "novice"
};

/// Refuses when the pixel is unlabeled, when the modal label covers less than `purity`
/// of the labeled pixels in the clipped window, or with probability `refusal` drawn from
/// a stream keyed by (seed, pixel) so outcomes do not depend on query order.
OracleAnswer answer_fallible(const LabelMap& labels, int row, int col, const FallibleOracleConfig& config);

class GroundTruthOracle final : public Oracle {
 public:
  explicit GroundTruthOracle(const LabelMap& labels) : labels_(labels) {}
  OracleAnswer answer(std::size_t pixel) override;

 private:
  const LabelMap& labels_;
};

class FallibleOracle final : public Oracle {
 public:
  FallibleOracle(const LabelMap& labels, FallibleOracleConfig config);
  OracleAnswer answer(std::size_t pixel) override;

 private:
  const LabelMap& labels_;
  FallibleOracleConfig config_;
};

/// Fixed answers per pixel (tests and replays). Pixels not listed answer Unknown.
class ScriptedOracle final : public Oracle {
 public:
  explicit ScriptedOracle(std::map<std::size_t, OracleAnswer> answers) : answers_(std::move(answers)) {}
  OracleAnswer answer(std::size_t pixel) override;
  std::size_t calls() const noexcept { return calls_; }

 private:
  std::map<std::size_t, OracleAnswer> answers_;
  std::size_t calls_ = 0;
};

/// Hand-off point between a presented query and a human answer: holds at most one
/// outstanding query and accepts exactly one answer for it.
class QueryBridge {
 public:
  void present(std::size_t pixel);
  /// Throws Errc::stale_query when `pixel` is not the outstanding query and
  /// Errc::duplicate when it was already answered.
  void submit(std::size_t pixel, OracleAnswer answer);
  /// The submitted answer, consumed once.
  std::optional<std::pair<std::size_t, OracleAnswer>> take();
  std::optional<std::size_t> outstanding() const;

 private:
  mutable std::mutex mutex_;
  std::optional<std::size_t> presented_;
  std::optional<std::size_t> last_answered_;
  std::optional<std::pair<std::size_t, OracleAnswer>> answer_;
};

}  // namespace aluc
