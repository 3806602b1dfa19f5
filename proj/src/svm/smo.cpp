// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <cmath>
#include <limits>
#include <list>
#include <sstream>

#include "aluc/error.hpp"
#include "aluc/simd.hpp"
#include "aluc/svm.hpp"

namespace aluc {

double BinarySvm::decision(std::span<const double> x) const {
  if (constant || coef.empty()) return bias;
  std::vector<double> krow(coef.size());
  simd::rbf_row(x, support.data(), params.gamma(), krow);
  return simd::dot(coef, krow) + bias;
}

namespace {

// Kernel rows K(i, .) over the training set, least-recently-used rows evicted first.
// evaluations() counts computed kernel values (cache misses).
class KernelCache {
 public:
  KernelCache(const SampleMatrix& x, double gamma, std::size_t bytes)
      : x_(x), gamma_(gamma), n_(x.rows()), slots_(n_, lru_.end()) {
    const std::size_t row_bytes = std::max<std::size_t>(1, n_ * sizeof(double));
    capacity_ = std::max<std::size_t>(2, bytes / row_bytes);
  }

  std::span<const double> row(std::size_t i) {
    auto it = slots_[i];
    if (it != lru_.end()) {
      lru_.splice(lru_.begin(), lru_, it);
      return it->values;
    }
    std::vector<double> values;
    if (lru_.size() >= capacity_) {
      auto& victim = lru_.back();
      slots_[victim.index] = lru_.end();
      values = std::move(victim.values);
      lru_.pop_back();
    }
    values.resize(n_);
    evaluations_ += n_;
    simd::rbf_row(x_.row(i), x_.data(), gamma_, values);
    lru_.push_front(Entry{i, std::move(values)});
    slots_[i] = lru_.begin();
    return lru_.front().values;
  }

  std::size_t evaluations() const noexcept { return evaluations_; }

 private:
  struct Entry {
    std::size_t index;
    std::vector<double> values;
  };

  const SampleMatrix& x_;
  double gamma_;
  std::size_t n_;
  std::size_t capacity_ = 2;
  std::size_t evaluations_ = 0;
  std::list<Entry> lru_;
  std::vector<std::list<Entry>::iterator> slots_;
};

constexpr double kTau = 1e-12;

}  // namespace

BinarySvm train_binary_smo(const LabeledSet& samples, const KernelParams& params, double tol) {
  SmoOptions options;
  options.tol = tol;
  return train_binary_smo(samples, params, options);
}

BinarySvm train_binary_smo(const LabeledSet& samples, const KernelParams& params, const SmoOptions& options) {
  params.validate();
  const std::size_t n = samples.size();
  if (samples.x.rows() != n) throw Error(Errc::invalid_argument, "sample/label count mismatch");
  bool has_pos = false, has_neg = false;
  for (int y : samples.y) {
    if (y == 1) {
      has_pos = true;
    } else if (y == -1) {
      has_neg = true;
    } else {
      throw Error(Errc::invalid_argument, "binary labels must be -1 or +1");
    }
  }
  if (!has_pos || !has_neg) throw Error(Errc::invalid_argument, "binary training needs both labels");

  const double C = params.C;
  const auto& y = samples.y;
  KernelCache cache(samples.x, params.gamma(), options.cache_bytes);
  std::vector<double> diag(n);
  for (std::size_t i = 0; i < n; ++i) {
    diag[i] = std::exp(-params.gamma() * simd::squared_distance(samples.x.row(i), samples.x.row(i)));
    if (!std::isfinite(diag[i])) throw Error(Errc::non_finite, "non-finite kernel value");
  }

  std::vector<double> alpha(n, 0.0);
  std::vector<double> grad(n, -1.0);  // Q alpha - e
  auto is_upper = [&](std::size_t t) { return alpha[t] >= C; };
  auto is_lower = [&](std::size_t t) { return alpha[t] <= 0.0; };
  auto in_up = [&](std::size_t t) { return y[t] == 1 ? !is_upper(t) : !is_lower(t); };
  auto in_low = [&](std::size_t t) { return y[t] == 1 ? !is_lower(t) : !is_upper(t); };
  auto dual_objective = [&] {
    double s = 0.0;
    for (std::size_t t = 0; t < n; ++t) s += alpha[t] * (1.0 - grad[t]);
    return 0.5 * s;
  };

  SolverDiagnostics diag_out;
  double gap = 0.0;
  for (;;) {
    double gmax = -std::numeric_limits<double>::infinity();
    double gmin = std::numeric_limits<double>::infinity();
    std::size_t i = n, j = n;
    for (std::size_t t = 0; t < n; ++t) {
      const double v = -y[t] * grad[t];
      if (in_up(t) && v > gmax) {
        gmax = v;
        i = t;
      }
      if (in_low(t) && v < gmin) {
        gmin = v;
        j = t;
      }
    }
    gap = gmax - gmin;
    if (i == n || j == n || gap < options.tol) break;
    if (cache.evaluations() >= options.max_kernel_evaluations || diag_out.iterations >= options.max_iterations) {
      std::ostringstream msg;
      msg << "SMO stopped at " << cache.evaluations() << " kernel evaluations after "
          << diag_out.iterations << " iterations; max KKT violation " << gap << ", dual objective "
          << dual_objective();
      throw Error(Errc::not_converged, msg.str());
    }

    const auto row_i = cache.row(i);
    const auto row_j = cache.row(j);
    const double yi = y[i], yj = y[j];
    const double qij = yi * yj * row_i[j];
    const double old_ai = alpha[i], old_aj = alpha[j];
    double& ai = alpha[i];
    double& aj = alpha[j];
    if (y[i] != y[j]) {
      double quad = diag[i] + diag[j] + 2.0 * qij;
      if (quad <= 0) quad = kTau;
      const double delta = (-grad[i] - grad[j]) / quad;
      const double diff = ai - aj;
      ai += delta;
      aj += delta;
      if (diff > 0) {
        if (aj < 0) {
          aj = 0;
          ai = diff;
        }
      } else if (ai < 0) {
        ai = 0;
        aj = -diff;
      }
      if (diff > 0) {
        if (ai > C) {
          ai = C;
          aj = C - diff;
        }
      } else if (aj > C) {
        aj = C;
        ai = C + diff;
      }
    } else {
      double quad = diag[i] + diag[j] - 2.0 * qij;
      if (quad <= 0) quad = kTau;
      const double delta = (grad[i] - grad[j]) / quad;
      const double sum = ai + aj;
      ai -= delta;
      aj += delta;
      if (sum > C) {
        if (ai > C) {
          ai = C;
          aj = sum - C;
        }
      } else if (aj < 0) {
        aj = 0;
        ai = sum;
      }
      if (sum > C) {
        if (aj > C) {
          aj = C;
          ai = sum - C;
        }
      } else if (ai < 0) {
        ai = 0;
        aj = sum;
      }
    }

    const double dai = ai - old_ai;
    const double daj = aj - old_aj;
    for (std::size_t t = 0; t < n; ++t) {
      grad[t] += y[t] * (yi * row_i[t] * dai + yj * row_j[t] * daj);
    }
    ++diag_out.iterations;
    if (options.on_step) options.on_step(dual_objective());
  }

  // rho: mean of y G over free vectors, else midpoint of the feasible interval.
  double ub = std::numeric_limits<double>::infinity();
  double lb = -std::numeric_limits<double>::infinity();
  double sum_free = 0.0;
  std::size_t n_free = 0;
  for (std::size_t t = 0; t < n; ++t) {
    const double yg = y[t] * grad[t];
    if (is_upper(t)) {
      if (y[t] == -1) ub = std::min(ub, yg); else lb = std::max(lb, yg);
    } else if (is_lower(t)) {
      if (y[t] == 1) ub = std::min(ub, yg); else lb = std::max(lb, yg);
    } else {
      ++n_free;
      sum_free += yg;
    }
  }
  const double rho = n_free > 0 ? sum_free / static_cast<double>(n_free) : 0.5 * (ub + lb);

  BinarySvm svm;
  svm.params = params;
  svm.bias = -rho;
  svm.support = SampleMatrix(0, samples.x.cols());
  for (std::size_t t = 0; t < n; ++t) {
    if (alpha[t] > 0.0) {
      svm.support.append(samples.x.row(t));
      svm.coef.push_back(alpha[t] * y[t]);
      svm.support_index.push_back(t);
    }
  }
  diag_out.kernel_evaluations = cache.evaluations() + n;
  diag_out.max_violation = gap;
  diag_out.dual_objective = dual_objective();
  svm.diagnostics = diag_out;
  return svm;
}

}  // namespace aluc
