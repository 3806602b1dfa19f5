// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "aluc/matrix.hpp"
#include "aluc/svm.hpp"

namespace aluc {

enum class Outcome { labeled, refused, masked };

const char* to_string(Outcome outcome) noexcept;
Outcome parse_outcome(std::string_view text);

/// Confidence training set: pixels with +1 (the labeler could answer) or -1 (refused,
/// or masked by the gate).
struct ConfidenceSet {
  std::vector<std::size_t> pixels;
  std::vector<int> targets;
  std::size_t positives = 0;
  std::size_t negatives = 0;

  std::size_t size() const noexcept { return pixels.size(); }
  bool trainable() const noexcept { return positives > 0 && negatives > 0; }
  bool operator==(const ConfidenceSet&) const = default;
};

/// labeled -> (pixel, +1); refused or masked -> (pixel, -1).
void record_confidence_example(ConfidenceSet& set, std::size_t pixel, Outcome outcome);

struct ConfidenceModel {
  BinarySvm svm;
  PlattCalibration platt;
  int iteration = 0;
  std::vector<double> cv_accuracy;

  double probability(std::span<const double> x) const { return platt.probability(svm.decision(x)); }
};

struct ConfidenceTraining {
  std::vector<double> grid;  // bandwidths searched by cross-validation
  int folds = 4;
  double C = 100.0;
  double tol = 1e-3;
  std::uint64_t seed = 0;
};

/// CV-selected bandwidth, SMO fit, then Platt calibration on the model's own training
/// decisions. `features` holds one row per pixel id. Throws Errc::untrainable when the
/// set lacks either target.
ConfidenceModel train_confidence_model(const ConfidenceSet& set, const SampleMatrix& features,
                                       const ConfidenceTraining& training, int iteration);

/// p(y = +1 | x) for every row.
std::vector<double> confidence_map(const ConfidenceModel& model, const SampleMatrix& candidates);

struct GateConfig {
  double theta = 0.6;
  void validate() const;
};

/// true iff p > theta.
inline bool passes_mask(double p, const GateConfig& gate) noexcept { return p > gate.theta; }

}  // namespace aluc
