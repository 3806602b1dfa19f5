// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>

#include "aluc/error.hpp"
#include "aluc/rng.hpp"
#include "aluc/svm.hpp"
#include "oracles.hpp"

using namespace aluc;

namespace {

LabeledSet blobs(std::size_t per_class, double separation, std::uint64_t seed, int dim = 2) {
  Rng rng(seed);
  LabeledSet s;
  for (int cls : {1, -1}) {
    for (std::size_t i = 0; i < per_class; ++i) {
      std::vector<double> x(dim);
      for (int c = 0; c < dim; ++c) x[c] = rng.normal() + (c == 0 ? cls * separation / 2 : 0.0);
      s.x.append(x);
      s.y.push_back(cls);
    }
  }
  return s;
}

LabeledSet xor_set() {
  LabeledSet s;
  s.x = SampleMatrix(4, 2, {0, 0, 1, 1, 0, 1, 1, 0});
  s.y = {1, 1, -1, -1};
  return s;
}

}  // namespace

TEST_CASE("rbf kernel values and Gram matrix positive semidefinite") {
  CHECK(rbf_kernel(std::vector<double>{0, 0}, std::vector<double>{3, 4}, 5.0) == doctest::Approx(std::exp(-25.0 / 50.0)));
  CHECK(rbf_kernel(std::vector<double>{1, 2}, std::vector<double>{1, 2}, 0.1) == 1.0);
  CHECK_THROWS_AS(rbf_kernel(std::vector<double>{1}, std::vector<double>{1, 2}, 1.0), Error);
  CHECK_THROWS_AS((KernelParams{0.0, 1.0}.validate()), Error);
  CHECK_THROWS_AS((KernelParams{1.0, -1.0}.validate()), Error);

  const auto data = blobs(30, 1.0, 4, 3);
  for (double sigma : {0.1, 1.0, 10.0}) {
    Eigen::MatrixXd K(data.size(), data.size());
    for (std::size_t i = 0; i < data.size(); ++i)
      for (std::size_t j = 0; j < data.size(); ++j) K(i, j) = rbf_kernel(data.x.row(i), data.x.row(j), sigma);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(K);
    CHECK(es.eigenvalues().minCoeff() > -1e-9);
  }
}

TEST_CASE("median bandwidth") {
  // points on a line at 0, 1, 3: distances 1, 2, 3 -> median 2
  SampleMatrix m(3, 1, {0, 1, 3});
  CHECK(median_sigma(m, 1000, 1) == 2.0);
  // four points: distances 1,1,2,2,3,1 -> sorted 1,1,1,2,2,3 -> median (1+2)/2
  SampleMatrix m4(4, 1, {0, 1, 2, 3});
  CHECK(median_sigma(m4, 1000, 1) == doctest::Approx(1.5));
  SampleMatrix same(3, 2, {1, 1, 1, 1, 1, 1});
  try {
    median_sigma(same, 10, 1);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::degenerate);
  }
}

TEST_CASE("two-point problem has the closed-form solution") {
  // x1 = (0), y = +1; x2 = (d), y = -1. With C large: alpha = 2 / (2 - 2k), bias 0.
  LabeledSet s;
  s.x = SampleMatrix(2, 1, {0.0, 2.0});
  s.y = {1, -1};
  const KernelParams p{1.0, 1000.0};
  const BinarySvm svm = train_binary_smo(s, p, 1e-9);
  const double k = std::exp(-2.0);
  const double alpha = 2.0 / (2.0 - 2.0 * k);
  REQUIRE(svm.coef.size() == 2);
  CHECK(std::abs(svm.coef[0]) == doctest::Approx(alpha).epsilon(1e-9));
  CHECK(std::abs(svm.coef[1]) == doctest::Approx(alpha).epsilon(1e-9));
  CHECK(svm.bias == doctest::Approx(0.0).scale(1.0).epsilon(1e-9));
  CHECK(svm.decision(std::vector<double>{0.0}) == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(svm.decision(std::vector<double>{1.0}) == doctest::Approx(0.0).scale(1.0).epsilon(1e-9));
}

TEST_CASE("XOR is fitted exactly") {
  const auto s = xor_set();
  const BinarySvm svm = train_binary_smo(s, KernelParams{0.5, 100.0}, 1e-3);
  for (std::size_t i = 0; i < s.size(); ++i) CHECK(svm.decision(s.x.row(i)) * s.y[i] > 0);
  CHECK(oracle::max_kkt_violation(svm, s) < 1e-3);
}

TEST_CASE("separated blobs: training accuracy, KKT and the dual objective") {
  const auto s = blobs(100, 6.0, 12);
  const BinarySvm svm = train_binary_smo(s, KernelParams{1.0, 100.0}, 1e-3);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < s.size(); ++i) correct += svm.decision(s.x.row(i)) * s.y[i] > 0;
  CHECK(correct == s.size());
  CHECK(oracle::max_kkt_violation(svm, s) < 1e-3);
  CHECK(svm.diagnostics.dual_objective == doctest::Approx(oracle::dual_objective(svm)).epsilon(1e-9));
  CHECK(std::abs(svm.diagnostics.dual_objective - oracle::dual_objective(svm)) < 1e-6);
  for (std::size_t i = 0; i < s.size(); i += 7)
    CHECK(svm.decision(s.x.row(i)) == doctest::Approx(oracle::decision(svm, s.x.row(i))).epsilon(1e-12));
  // sum alpha_i y_i = 0
  double eq = 0;
  for (double c : svm.coef) eq += c;
  CHECK(std::abs(eq) < 1e-9);
}

TEST_CASE("dual objective never decreases along SMO steps") {
  const auto s = blobs(40, 1.5, 3);
  SmoOptions opt;
  double last = -INFINITY;
  bool monotone = true;
  opt.on_step = [&](double v) {
    if (v < last - 1e-9) monotone = false;
    last = v;
  };
  const BinarySvm svm = train_binary_smo(s, KernelParams{0.7, 10.0}, opt);
  CHECK(monotone);
  CHECK(last == doctest::Approx(svm.diagnostics.dual_objective));
}

TEST_CASE("solver budget exhaustion reports diagnostics") {
  const auto s = blobs(60, 0.5, 8);
  SmoOptions opt;
  opt.max_iterations = 3;
  try {
    train_binary_smo(s, KernelParams{0.3, 1000.0}, opt);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::not_converged);
    CHECK(std::string(e.what()).find("KKT violation") != std::string::npos);
  }
}

TEST_CASE("binary training input validation") {
  LabeledSet one;
  one.x = SampleMatrix(2, 1, {0, 1});
  one.y = {1, 1};
  CHECK_THROWS_AS(train_binary_smo(one, KernelParams{}, 1e-3), Error);
  one.y = {1, 2};
  CHECK_THROWS_AS(train_binary_smo(one, KernelParams{}, 1e-3), Error);
}

TEST_CASE("one-against-all classifier") {
  Rng rng(2);
  LabeledSet s;
  const double centers[3][2] = {{0, 0}, {6, 0}, {0, 6}};
  for (int c = 0; c < 3; ++c)
    for (int i = 0; i < 20; ++i) {
      s.x.append(std::vector<double>{centers[c][0] + rng.normal(), centers[c][1] + rng.normal()});
      s.y.push_back(c + 1);
    }
  OaaModel m = train_one_against_all(s, 4, KernelParams{1.5, 100.0}, SmoOptions{});
  CHECK(m.machines.size() == 4);
  CHECK(m.machines[3].constant);
  for (std::size_t i = 0; i < s.size(); ++i) {
    const auto f = m.decision_values(s.x.row(i));
    CHECK(f[3] == -1.0);
    for (int c = 0; c < 3; ++c)
      CHECK(f[c] == doctest::Approx(m.machines[c].decision(s.x.row(i))).epsilon(1e-12));
    CHECK(m.predict(s.x.row(i)) == s.y[i]);
  }
  const auto dm = m.decision_matrix(s.x);
  CHECK(dm.size() == s.size() * 4);
  CHECK(m.predict_all(s.x) == s.y);

  const OaaModel back = oaa_model_from_json(to_json(m));
  for (std::size_t i = 0; i < s.size(); i += 5) CHECK(back.decision_values(s.x.row(i)) == m.decision_values(s.x.row(i)));
}

TEST_CASE("argmax ties go to the lowest class") {
  CHECK(argmax_class(std::vector<double>{0.5, 0.9, 0.9}) == 2);
  CHECK(argmax_class(std::vector<double>{-1, -1}) == 1);
}

TEST_CASE("binary machine json round trip") {
  const auto s = blobs(20, 3.0, 1);
  const BinarySvm svm = train_binary_smo(s, KernelParams{1.0, 10.0}, 1e-3);
  const BinarySvm back = binary_svm_from_json(to_json(svm));
  CHECK(back.coef == svm.coef);
  CHECK(back.bias == svm.bias);
  CHECK(back.decision(s.x.row(3)) == svm.decision(s.x.row(3)));
  CHECK_THROWS_AS(binary_svm_from_json(nlohmann::json{{"kind", "oaa_model"}}), Error);
}

TEST_CASE("Platt calibration") {
  SUBCASE("symmetric data gives a near-zero offset and the textbook objective") {
    std::vector<double> f;
    std::vector<int> y;
    Rng rng(6);
    for (int i = 0; i < 200; ++i) {
      const double v = rng.normal() + 1.0;
      f.push_back(v);
      y.push_back(1);
      f.push_back(-v);
      y.push_back(-1);
    }
    const PlattCalibration pc = platt_calibrate(f, y);
    CHECK(std::abs(pc.B) < 0.1);
    CHECK(pc.A < 0);
    CHECK(std::abs(pc.objective - oracle::platt_objective(f, y, pc.A, pc.B)) < 1e-8);
    // stationary point: nudging either parameter does not lower the objective
    for (double da : {-1e-4, 1e-4}) CHECK(oracle::platt_objective(f, y, pc.A + da, pc.B) >= pc.objective - 1e-9);
    for (double db : {-1e-4, 1e-4}) CHECK(oracle::platt_objective(f, y, pc.A, pc.B + db) >= pc.objective - 1e-9);
    double prev = -1;
    for (double d = -5; d <= 5; d += 0.01) {
      const double p = pc.probability(d);
      CHECK(p > prev);
      prev = p;
    }
  }
  SUBCASE("probabilities stay inside (0, 1) for extreme decisions") {
    PlattCalibration pc{-50.0, 0.0, 0.0, 0};
    CHECK(pc.probability(1e6) < 1.0);
    CHECK(pc.probability(-1e6) > 0.0);
    CHECK(pc.probability(0.0) == 0.5);
  }
  SUBCASE("input validation") {
    CHECK_THROWS_AS(platt_calibrate(std::vector<double>{1, 2, 3, 4}, std::vector<int>{1, 1, 1, 1}), Error);
    CHECK_THROWS_AS(platt_calibrate(std::vector<double>{1, 2}, std::vector<int>{1, -1}), Error);
  }
}

TEST_CASE("stratified folds") {
  std::vector<int> labels;
  for (int i = 0; i < 13; ++i) labels.push_back(1);
  for (int i = 0; i < 7; ++i) labels.push_back(2);
  const auto folds = stratified_folds(labels, 4, 9);
  CHECK(folds == stratified_folds(labels, 4, 9));
  for (int cls : {1, 2}) {
    std::vector<int> per(4, 0);
    for (std::size_t i = 0; i < labels.size(); ++i)
      if (labels[i] == cls) ++per[folds[i]];
    CHECK(*std::max_element(per.begin(), per.end()) - *std::min_element(per.begin(), per.end()) <= 1);
  }
  std::vector<int> sizes(4, 0);
  for (int f : folds) ++sizes[f];
  CHECK(*std::max_element(sizes.begin(), sizes.end()) - *std::min_element(sizes.begin(), sizes.end()) <= 1);
}

TEST_CASE("bandwidth grid and cross-validation") {
  const auto grid = default_sigma_grid();
  REQUIRE(grid.size() == 9);
  CHECK(grid.front() == doctest::Approx(0.1));
  CHECK(grid.back() == doctest::Approx(1000.0));
  for (std::size_t i = 1; i < grid.size(); ++i) CHECK(grid[i] / grid[i - 1] == doctest::Approx(std::sqrt(10.0)));

  const auto s = blobs(30, 4.0, 17);
  const CvResult r = cross_validate_sigma(s, grid, 4, 3, CvOptions{100.0, 1e-3, 0});
  CHECK(r.mean_accuracy.size() == grid.size());
  const auto best = *std::max_element(r.mean_accuracy.begin(), r.mean_accuracy.end());
  CHECK(best > 0.9);
  // ties resolve to the larger bandwidth
  for (std::size_t g = 0; g < grid.size(); ++g)
    if (grid[g] > r.sigma) CHECK(r.mean_accuracy[g] < best);
  CHECK(select_sigma_cv(s, std::vector<double>{2.5}, 4, 3, CvOptions{}) == 2.5);
}
