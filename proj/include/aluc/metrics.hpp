// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "aluc/engine.hpp"
#include "aluc/raster.hpp"

namespace aluc {

/// omega x omega counts, rows = reference class, columns = predicted class.
struct ConfusionMatrix {
  int omega = 0;
  std::vector<std::uint64_t> counts;
  std::uint64_t n = 0;

  std::uint64_t at(int reference, int predicted) const {
    return counts[static_cast<std::size_t>(reference - 1) * omega + (predicted - 1)];
  }
};

/// Counts pixels with a nonzero reference label. `skip` (optional, per pixel) drops
/// pixels from the evaluation, e.g. training pixels.
ConfusionMatrix confusion_matrix(std::span<const int> predicted, const LabelMap& reference, int omega,
                                 std::span<const std::uint8_t> skip = {});
ConfusionMatrix confusion_matrix(const LabelMap& predicted, const LabelMap& reference, int omega);
/// Row-major counts.
ConfusionMatrix confusion_from_counts(int omega, std::span<const std::uint64_t> counts);

double cohen_kappa(const ConfusionMatrix& cm);
double overall_accuracy(const ConfusionMatrix& cm);

struct CurvePoint {
  int iteration = 0;
  std::size_t labels_cum = 0;  // |X| used by the model of this iteration
  std::size_t effort_cum = 0;  // seeds + queries presented before this iteration
  double kappa = 0.0;
  double oa = 0.0;
  std::size_t queries_iter = 0;  // queries presented during this iteration
};

struct RunCurve {
  std::string method;
  std::uint64_t seed = 0;
  std::vector<CurvePoint> points;
};

/// Label and effort accounting of iterations 1..kappa.size() from the session log.
/// Masked candidates are never counted as effort.
std::vector<CurvePoint> curve_from_session(const Session& session, std::span<const double> kappa,
                                           std::span<const double> oa);

struct SummaryRow {
  std::string method;
  int iteration = 0;
  double kappa_mean = 0.0;
  double kappa_std = 0.0;  // population std over runs
  double effort_mean = 0.0;
  double queries_mean = 0.0;
  double queries_std = 0.0;
  std::size_t runs = 0;
};

/// Methods in order of first appearance, iterations ascending.
std::vector<SummaryRow> summarize(std::span<const RunCurve> runs);

void write_curves_csv(std::span<const RunCurve> runs, std::ostream& out);
std::vector<RunCurve> read_curves_csv(std::istream& in);
void write_summary_csv(std::span<const SummaryRow> rows, std::ostream& out);
/// method,iteration,queries_mean,queries_std
void write_queries_csv(std::span<const SummaryRow> rows, std::ostream& out);

/// Shortest text that parses back to the same double.
std::string format_number(double v);

}  // namespace aluc
