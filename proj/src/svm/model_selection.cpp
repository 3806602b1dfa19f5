// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "aluc/error.hpp"
#include "aluc/log.hpp"
#include "aluc/rng.hpp"
#include "aluc/svm.hpp"

namespace aluc {

std::vector<double> default_sigma_grid() {
  std::vector<double> grid;
  for (int k = 0; k <= 8; ++k) grid.push_back(std::pow(10.0, -1.0 + 0.5 * k));
  return grid;
}

std::vector<int> stratified_folds(std::span<const int> labels, int folds, std::uint64_t seed) {
  if (folds < 2) throw Error(Errc::invalid_argument, "cross-validation needs at least 2 folds");
  std::map<int, std::vector<std::size_t>> members;
  for (std::size_t i = 0; i < labels.size(); ++i) members[labels[i]].push_back(i);
  Rng rng(seed);
  std::vector<int> fold(labels.size(), 0);
  std::size_t deal = 0;
  for (auto& [label, idx] : members) {
    if (idx.size() < static_cast<std::size_t>(folds)) {
      logger().warn("class {} has {} members for {} folds; it is cross-validated leave-one-out", label,
                    idx.size(), folds);
    }
    rng.shuffle(std::span<std::size_t>(idx));
    for (std::size_t i : idx) fold[i] = static_cast<int>(deal++ % folds);
  }
  return fold;
}

namespace {

std::vector<int> fit_and_predict(const LabeledSet& train, const SampleMatrix& test, double sigma,
                                 const CvOptions& options) {
  std::map<int, std::size_t> counts;
  for (int y : train.y) ++counts[y];
  if (counts.size() < 2) {
    return std::vector<int>(test.rows(), counts.empty() ? 0 : counts.begin()->first);
  }
  KernelParams params{sigma, options.C};
  SmoOptions smo;
  smo.tol = options.tol;
  std::vector<int> out(test.rows());
  if (options.omega == 0) {
    const auto svm = train_binary_smo(train, params, smo);
    for (std::size_t i = 0; i < test.rows(); ++i) out[i] = svm.decision(test.row(i)) > 0 ? 1 : -1;
  } else {
    const auto model = train_one_against_all(train, options.omega, params, smo);
    out = model.predict_all(test);
  }
  return out;
}

}  // namespace

CvResult cross_validate_sigma(const LabeledSet& samples, std::span<const double> grid, int folds,
                              std::uint64_t seed, const CvOptions& options) {
  if (grid.empty()) throw Error(Errc::invalid_argument, "sigma grid is empty");
  if (samples.size() < 2) throw Error(Errc::invalid_argument, "cross-validation needs at least 2 samples");
  CvResult result;
  if (grid.size() == 1) {
    result.sigma = grid[0];
    result.mean_accuracy = {0.0};
    return result;
  }
  result.folds = stratified_folds(samples.y, folds, seed);

  std::vector<std::vector<std::size_t>> train_idx(folds), test_idx(folds);
  for (std::size_t i = 0; i < samples.size(); ++i) {
    for (int f = 0; f < folds; ++f) (result.folds[i] == f ? test_idx[f] : train_idx[f]).push_back(i);
  }

  result.mean_accuracy.assign(grid.size(), 0.0);
  for (std::size_t g = 0; g < grid.size(); ++g) {
    double acc_sum = 0.0;
    int used = 0;
    for (int f = 0; f < folds; ++f) {
      if (test_idx[f].empty()) continue;
      ++used;
      const LabeledSet train = samples.subset(train_idx[f]);
      const SampleMatrix test = samples.x.gather(test_idx[f]);
      try {
        const auto predicted = fit_and_predict(train, test, grid[g], options);
        std::size_t correct = 0;
        for (std::size_t k = 0; k < test_idx[f].size(); ++k) correct += predicted[k] == samples.y[test_idx[f][k]];
        acc_sum += static_cast<double>(correct) / static_cast<double>(test_idx[f].size());
      } catch (const Error& e) {
        if (e.code() != Errc::not_converged) throw;
        logger().debug("sigma {} fold {} did not converge; scored as 0", grid[g], f);
      }
    }
    result.mean_accuracy[g] = used ? acc_sum / used : 0.0;
  }
  std::size_t best = 0;
  for (std::size_t g = 1; g < grid.size(); ++g) {
    const bool better = result.mean_accuracy[g] > result.mean_accuracy[best] ||
                        (result.mean_accuracy[g] == result.mean_accuracy[best] && grid[g] > grid[best]);
    if (better) best = g;
  }
  result.sigma = grid[best];
  return result;
}

double select_sigma_cv(const LabeledSet& samples, std::span<const double> grid, int folds,
                       std::uint64_t seed, const CvOptions& options) {
  return cross_validate_sigma(samples, grid, folds, seed, options).sigma;
}

}  // namespace aluc
