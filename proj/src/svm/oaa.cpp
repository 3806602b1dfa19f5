// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "aluc/error.hpp"
#include "aluc/log.hpp"
#include "aluc/simd.hpp"
#include "aluc/svm.hpp"

namespace aluc {

int argmax_class(std::span<const double> values) noexcept {
  std::size_t best = 0;
  for (std::size_t c = 1; c < values.size(); ++c) {
    if (values[c] > values[best]) best = c;
  }
  return static_cast<int>(best) + 1;
}

OaaModel train_one_against_all(const LabeledSet& samples, int omega, const KernelParams& params,
                               const SmoOptions& options) {
  if (omega < 2) throw Error(Errc::invalid_argument, "one-against-all needs at least 2 classes");
  std::set<int> present;
  for (int y : samples.y) {
    if (y < 1 || y > omega) throw Error(Errc::invalid_argument, "class label out of range");
    present.insert(y);
  }
  if (present.size() < 2) throw Error(Errc::invalid_argument, "fewer than 2 distinct classes in training set");

  OaaModel model;
  model.omega = omega;
  model.params = params;
  LabeledSet binary{samples.x, std::vector<int>(samples.size())};
  for (int c = 1; c <= omega; ++c) {
    if (!present.count(c)) {
      logger().debug("class {} absent from training set; constant machine", c);
      BinarySvm flat;
      flat.params = params;
      flat.constant = true;
      flat.bias = -1.0;
      flat.support = SampleMatrix(0, samples.x.cols());
      model.machines.push_back(std::move(flat));
      continue;
    }
    for (std::size_t i = 0; i < samples.size(); ++i) binary.y[i] = samples.y[i] == c ? 1 : -1;
    model.machines.push_back(train_binary_smo(binary, params, options));
  }
  model.compile();
  return model;
}

void OaaModel::compile() {
  std::size_t cols = 0;
  for (const auto& m : machines) cols = std::max(cols, m.support.cols());
  // Machines trained on the same set share support vectors; key them by training row.
  std::map<std::size_t, std::size_t> slot;
  basis_ = SampleMatrix(0, cols);
  for (const auto& m : machines) {
    if (m.support_index.size() != m.coef.size() || m.support.rows() != m.coef.size()) {
      throw Error(Errc::format, "machine support vectors, indices and coefficients differ in length");
    }
    for (std::size_t k = 0; k < m.coef.size(); ++k) {
      if (slot.emplace(m.support_index[k], basis_.rows()).second) basis_.append(m.support.row(k));
    }
  }
  const std::size_t nb = basis_.rows();
  basis_coef_.assign(static_cast<std::size_t>(omega) * nb, 0.0);
  bias_.assign(omega, -1.0);
  for (int c = 0; c < omega && c < static_cast<int>(machines.size()); ++c) {
    const auto& m = machines[c];
    bias_[c] = m.bias;
    if (m.constant) continue;
    for (std::size_t k = 0; k < m.coef.size(); ++k) {
      basis_coef_[c * nb + slot.at(m.support_index[k])] += m.coef[k];
    }
  }
}

void OaaModel::decision_values(std::span<const double> x, std::span<double> out) const {
  const std::size_t nb = basis_.rows();
  std::vector<double> krow(nb);
  simd::rbf_row(x, basis_.data(), params.gamma(), krow);
  for (int c = 0; c < omega; ++c) {
    out[c] = simd::dot(std::span<const double>(basis_coef_.data() + c * nb, nb), krow) + bias_[c];
  }
}

std::vector<double> OaaModel::decision_values(std::span<const double> x) const {
  std::vector<double> out(omega);
  decision_values(x, out);
  return out;
}

std::vector<double> OaaModel::decision_matrix(const SampleMatrix& x) const {
  const std::size_t nb = basis_.rows();
  std::vector<double> out(x.rows() * omega);
  std::vector<double> krow(nb);
  for (std::size_t i = 0; i < x.rows(); ++i) {
    simd::rbf_row(x.row(i), basis_.data(), params.gamma(), krow);
    for (int c = 0; c < omega; ++c) {
      out[i * omega + c] = simd::dot(std::span<const double>(basis_coef_.data() + c * nb, nb), krow) + bias_[c];
    }
  }
  return out;
}

int OaaModel::predict(std::span<const double> x) const { return argmax_class(decision_values(x)); }

std::vector<int> OaaModel::predict_all(const SampleMatrix& x) const {
  const auto values = decision_matrix(x);
  std::vector<int> out(x.rows());
  for (std::size_t i = 0; i < x.rows(); ++i) {
    out[i] = argmax_class(std::span<const double>(values.data() + i * omega, omega));
  }
  return out;
}

}  // namespace aluc
