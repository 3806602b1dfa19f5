// SPDX-License-Identifier: Apache-2.0
#include "aluc/confidence.hpp"

#include "aluc/error.hpp"
#include "aluc/simd.hpp"

namespace aluc {

const char* to_string(Outcome outcome) noexcept {
  switch (outcome) {
    case Outcome::labeled: return "labeled";
    case Outcome::refused: return "refused";
    case Outcome::masked: return "masked";
  }
  return "labeled";
}

Outcome parse_outcome(std::string_view text) {
  if (text == "labeled") return Outcome::labeled;
  if (text == "refused") return Outcome::refused;
  if (text == "masked") return Outcome::masked;
  throw Error(Errc::format, "unknown outcome '" + std::string(text) + "'");
}

void record_confidence_example(ConfidenceSet& set, std::size_t pixel, Outcome outcome) {
  const int target = outcome == Outcome::labeled ? 1 : -1;
  set.pixels.push_back(pixel);
  set.targets.push_back(target);
  (target > 0 ? set.positives : set.negatives) += 1;
}

void GateConfig::validate() const {
  if (!(theta > 0.0 && theta < 1.0)) throw Error(Errc::invalid_argument, "gate threshold must lie in (0, 1)");
}

ConfidenceModel train_confidence_model(const ConfidenceSet& set, const SampleMatrix& features,
                                       const ConfidenceTraining& training, int iteration) {
  if (!set.trainable()) throw Error(Errc::untrainable, "confidence model untrainable: needs both positive and negative examples");
  LabeledSet data{features.gather(set.pixels), set.targets};
  const auto grid = training.grid.empty() ? default_sigma_grid() : training.grid;
  CvOptions cv{training.C, training.tol, 0};
  const auto selection = cross_validate_sigma(data, grid, training.folds, training.seed, cv);

  ConfidenceModel model;
  model.iteration = iteration;
  model.cv_accuracy = selection.mean_accuracy;
  SmoOptions smo;
  smo.tol = training.tol;
  model.svm = train_binary_smo(data, KernelParams{selection.sigma, training.C}, smo);
  std::vector<double> decisions(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) decisions[i] = model.svm.decision(data.x.row(i));
  model.platt = platt_calibrate(decisions, data.y);
  return model;
}

std::vector<double> confidence_map(const ConfidenceModel& model, const SampleMatrix& candidates) {
  const auto& svm = model.svm;
  std::vector<double> out(candidates.rows());
  std::vector<double> krow(svm.coef.size());
  for (std::size_t i = 0; i < candidates.rows(); ++i) {
    double f = svm.bias;
    if (!svm.constant) {
      simd::rbf_row(candidates.row(i), svm.support.data(), svm.params.gamma(), krow);
      f += simd::dot(svm.coef, krow);
    }
    out[i] = model.platt.probability(f);
  }
  return out;
}

}  // namespace aluc
