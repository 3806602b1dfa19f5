// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include <nlohmann/json.hpp>

#include "aluc/matrix.hpp"

namespace aluc {

struct KernelParams {
  double sigma = 1.0;
  double C = 100.0;

  double gamma() const noexcept { return 1.0 / (2.0 * sigma * sigma); }
  void validate() const;
  bool operator==(const KernelParams&) const = default;
};

/// exp(-|x - z|^2 / (2 sigma^2))
double rbf_kernel(std::span<const double> x, std::span<const double> z, double sigma);

/// Median pairwise Euclidean distance over a seeded subsample of min(sample_size, n) rows.
double median_sigma(const SampleMatrix& pool, std::size_t sample_size, std::uint64_t seed);

struct SolverDiagnostics {
  std::size_t iterations = 0;
  std::size_t kernel_evaluations = 0;
  double max_violation = 0.0;   // m(alpha) - M(alpha) at exit
  double dual_objective = 0.0;  // sum(alpha) - 1/2 alpha' Q alpha
};

struct SmoOptions {
  double tol = 1e-3;
  std::size_t max_kernel_evaluations = 10'000'000;  // computed values, cache hits excluded
  std::size_t max_iterations = 10'000'000;
  std::size_t cache_bytes = std::size_t{256} << 20;
  /// Called after every working-set step with the current dual objective (tests only;
  /// costs O(n) per step when set).
  std::function<void(double)> on_step;
};

/// Binary RBF machine: f(x) = sum_i coef_i k(s_i, x) + bias, coef_i = alpha_i y_i.
struct BinarySvm {
  SampleMatrix support;
  std::vector<double> coef;
  std::vector<std::size_t> support_index;  // row of each support vector in the training set
  double bias = 0.0;
  KernelParams params;
  /// A machine for a class absent from training: decision is `bias` (= -1) everywhere.
  bool constant = false;
  SolverDiagnostics diagnostics;

  double decision(std::span<const double> x) const;
};

/// SMO with maximal-violating-pair working-set selection and an LRU kernel-row cache.
/// Labels must be -1/+1 with both present. Throws Errc::not_converged when the kernel
/// evaluation or iteration budget runs out.
BinarySvm train_binary_smo(const LabeledSet& samples, const KernelParams& params, const SmoOptions& options);
BinarySvm train_binary_smo(const LabeledSet& samples, const KernelParams& params, double tol);

/// One-against-all ensemble. Decision evaluation goes through a shared basis (union of
/// all machines' support vectors) so each kernel value is computed once per input.
struct OaaModel {
  int omega = 0;
  KernelParams params;
  std::vector<BinarySvm> machines;  // machines[c - 1] separates class c from the rest

  void compile();
  std::size_t basis_size() const noexcept { return basis_.rows(); }

  /// f(x, c) for c = 1..omega, written to out[c - 1].
  void decision_values(std::span<const double> x, std::span<double> out) const;
  std::vector<double> decision_values(std::span<const double> x) const;
  /// Row-major rows() x omega matrix of decision values.
  std::vector<double> decision_matrix(const SampleMatrix& x) const;
  /// argmax of the decision values, lowest class index on exact ties.
  int predict(std::span<const double> x) const;
  std::vector<int> predict_all(const SampleMatrix& x) const;

 private:
  SampleMatrix basis_;
  std::vector<double> basis_coef_;  // omega x basis
  std::vector<double> bias_;
};

/// Labels are class indices 1..omega. Absent classes get a constant -1 machine.
OaaModel train_one_against_all(const LabeledSet& samples, int omega, const KernelParams& params,
                               const SmoOptions& options);

/// argmax with lowest index on ties, returned 1-based.
int argmax_class(std::span<const double> values) noexcept;

struct PlattCalibration {
  double A = 0.0;
  double B = 0.0;
  double objective = 0.0;  // regularized negative log-likelihood at (A, B)
  int iterations = 0;

  /// 1 / (1 + exp(A f + B)), evaluated without overflow.
  double probability(double decision) const noexcept;
};

/// Newton iterations with backtracking on Platt's regularized targets.
PlattCalibration platt_calibrate(std::span<const double> decisions, std::span<const int> labels);

/// Nine logarithmically spaced bandwidths from 1e-1 to 1e3.
std::vector<double> default_sigma_grid();

/// Seeded stratified fold assignment: each class is shuffled and dealt round-robin, the
/// dealing position carrying over between classes.
std::vector<int> stratified_folds(std::span<const int> labels, int folds, std::uint64_t seed);

struct CvOptions {
  double C = 100.0;
  double tol = 1e-3;
  int omega = 0;  // 0: binary -1/+1 problem; otherwise one-against-all over 1..omega
};

struct CvResult {
  double sigma = 0.0;
  std::vector<double> mean_accuracy;  // per grid entry
  std::vector<int> folds;
};

/// Grid entry with the highest mean fold accuracy; ties go to the larger sigma.
CvResult cross_validate_sigma(const LabeledSet& samples, std::span<const double> grid, int folds,
                              std::uint64_t seed, const CvOptions& options);
double select_sigma_cv(const LabeledSet& samples, std::span<const double> grid, int folds,
                       std::uint64_t seed, const CvOptions& options);

nlohmann::json to_json(const BinarySvm& svm);
BinarySvm binary_svm_from_json(const nlohmann::json& j);
nlohmann::json to_json(const OaaModel& model);
OaaModel oaa_model_from_json(const nlohmann::json& j);
nlohmann::json to_json(const PlattCalibration& platt);
PlattCalibration platt_from_json(const nlohmann::json& j);

}  // namespace aluc
