// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <cfloat>
#include <cmath>
#include <sstream>

#include "aluc/error.hpp"
#include "aluc/svm.hpp"

namespace aluc {

double PlattCalibration::probability(double decision) const noexcept {
  const double z = A * decision + B;
  const double p = z >= 0 ? std::exp(-z) / (1.0 + std::exp(-z)) : 1.0 / (1.0 + std::exp(z));
  return std::clamp(p, DBL_MIN, 1.0 - 0x1.0p-53);
}

namespace {

// sum_i t_i z_i + log(1 + exp(-z_i)), z_i = A f_i + B, in the overflow-safe split form.
double objective(std::span<const double> f, std::span<const double> t, double A, double B) {
  double value = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) {
    const double z = f[i] * A + B;
    value += z >= 0 ? t[i] * z + std::log1p(std::exp(-z)) : (t[i] - 1.0) * z + std::log1p(std::exp(z));
  }
  return value;
}

}  // namespace

PlattCalibration platt_calibrate(std::span<const double> decisions, std::span<const int> labels) {
  if (decisions.size() != labels.size()) throw Error(Errc::invalid_argument, "decision/label count mismatch");
  if (decisions.size() < 4) throw Error(Errc::invalid_argument, "Platt calibration needs at least 4 samples");
  double n_pos = 0, n_neg = 0;
  for (int y : labels) {
    if (y == 1) {
      ++n_pos;
    } else if (y == -1) {
      ++n_neg;
    } else {
      throw Error(Errc::invalid_argument, "calibration labels must be -1 or +1");
    }
  }
  if (n_pos == 0 || n_neg == 0) throw Error(Errc::invalid_argument, "calibration needs both labels");

  const double hi = (n_pos + 1.0) / (n_pos + 2.0);
  const double lo = 1.0 / (n_neg + 2.0);
  std::vector<double> t(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) t[i] = labels[i] == 1 ? hi : lo;

  constexpr int max_iter = 100;
  constexpr double min_step = 1e-10;
  constexpr double ridge = 1e-12;
  constexpr double eps = 1e-5;

  double A = 0.0;
  double B = std::log((n_neg + 1.0) / (n_pos + 1.0));
  double fval = objective(decisions, t, A, B);
  std::ostringstream trace;
  int iter = 0;
  for (; iter < max_iter; ++iter) {
    double h11 = ridge, h22 = ridge, h21 = 0.0, g1 = 0.0, g2 = 0.0;
    for (std::size_t i = 0; i < decisions.size(); ++i) {
      const double f = decisions[i];
      const double z = f * A + B;
      double p, q;
      if (z >= 0) {
        p = std::exp(-z) / (1.0 + std::exp(-z));
        q = 1.0 / (1.0 + std::exp(-z));
      } else {
        p = 1.0 / (1.0 + std::exp(z));
        q = std::exp(z) / (1.0 + std::exp(z));
      }
      const double d2 = p * q;
      h11 += f * f * d2;
      h22 += d2;
      h21 += f * d2;
      const double d1 = t[i] - p;
      g1 += f * d1;
      g2 += d1;
    }
    trace << "iter " << iter << ": A=" << A << " B=" << B << " f=" << fval << " |g|=" << std::hypot(g1, g2) << '\n';
    if (std::fabs(g1) < eps && std::fabs(g2) < eps) break;

    const double det = h11 * h22 - h21 * h21;
    const double dA = -(h22 * g1 - h21 * g2) / det;
    const double dB = -(-h21 * g1 + h11 * g2) / det;
    const double gd = g1 * dA + g2 * dB;
    double step = 1.0;
    while (step >= min_step) {
      const double nA = A + step * dA;
      const double nB = B + step * dB;
      const double nf = objective(decisions, t, nA, nB);
      if (nf < fval + 1e-4 * step * gd) {
        A = nA;
        B = nB;
        fval = nf;
        break;
      }
      step *= 0.5;
    }
    if (step < min_step) {
      throw Error(Errc::not_converged, "Platt line search failed to decrease the objective\n" + trace.str());
    }
  }
  return PlattCalibration{A, B, fval, iter};
}

}  // namespace aluc
