// SPDX-License-Identifier: Apache-2.0
#include "aluc/metrics.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

#include "aluc/error.hpp"

namespace aluc {

std::string format_number(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  if (ec != std::errc{}) throw Error(Errc::format, "number formatting failed");
  return std::string(buf, end);
}

ConfusionMatrix confusion_matrix(std::span<const int> predicted, const LabelMap& reference, int omega,
                                 std::span<const std::uint8_t> skip) {
  if (omega < 1) throw Error(Errc::invalid_argument, "omega must be >= 1");
  if (predicted.size() != reference.pixel_count()) throw Error(Errc::size_mismatch, "prediction and reference sizes differ");
  if (!skip.empty() && skip.size() != predicted.size()) throw Error(Errc::size_mismatch, "skip mask size differs");
  ConfusionMatrix cm{omega, std::vector<std::uint64_t>(static_cast<std::size_t>(omega) * omega, 0), 0};
  for (std::size_t p = 0; p < predicted.size(); ++p) {
    const int ref = reference.labels[p];
    if (ref == 0 || (!skip.empty() && skip[p])) continue;
    if (ref > omega) throw Error(Errc::invalid_argument, "reference label exceeds omega at pixel " + std::to_string(p));
    const int pred = predicted[p];
    if (pred < 1 || pred > omega) throw Error(Errc::invalid_argument, "predicted label out of range at pixel " + std::to_string(p));
    ++cm.counts[static_cast<std::size_t>(ref - 1) * omega + (pred - 1)];
    ++cm.n;
  }
  return cm;
}

ConfusionMatrix confusion_matrix(const LabelMap& predicted, const LabelMap& reference, int omega) {
  if (predicted.width != reference.width || predicted.height != reference.height)
    throw Error(Errc::size_mismatch, "label map dimensions differ");
  std::vector<int> pred(predicted.labels.begin(), predicted.labels.end());
  return confusion_matrix(pred, reference, omega);
}

ConfusionMatrix confusion_from_counts(int omega, std::span<const std::uint64_t> counts) {
  if (omega < 1 || counts.size() != static_cast<std::size_t>(omega) * omega)
    throw Error(Errc::size_mismatch, "counts must be omega x omega");
  ConfusionMatrix cm{omega, {counts.begin(), counts.end()}, 0};
  for (auto c : counts) cm.n += c;
  return cm;
}

double overall_accuracy(const ConfusionMatrix& cm) {
  if (cm.n == 0) throw Error(Errc::degenerate, "empty confusion matrix");
  std::uint64_t diag = 0;
  for (int c = 1; c <= cm.omega; ++c) diag += cm.at(c, c);
  return static_cast<double>(diag) / static_cast<double>(cm.n);
}

double cohen_kappa(const ConfusionMatrix& cm) {
  if (cm.n == 0) throw Error(Errc::degenerate, "kappa undefined: empty confusion matrix");
  // kappa = (n * diag - sum_c row_c col_c) / (n^2 - sum_c row_c col_c), exact in integers
  // so that only the final division rounds.
  __extension__ typedef unsigned __int128 wide;
  wide diag = 0, chance = 0;
  for (int c = 1; c <= cm.omega; ++c) {
    diag += cm.at(c, c);
    std::uint64_t row = 0, col = 0;
    for (int k = 1; k <= cm.omega; ++k) {
      row += cm.at(c, k);
      col += cm.at(k, c);
    }
    chance += static_cast<wide>(row) * col;
  }
  const wide n = cm.n;
  if (chance == n * n) {
    if (diag == n) return 1.0;
    throw Error(Errc::degenerate, "kappa undefined: chance agreement is 1 with disagreement");
  }
  const wide num_pos = n * diag, den = n * n - chance;
  const double num = num_pos >= chance ? static_cast<double>(num_pos - chance) : -static_cast<double>(chance - num_pos);
  return num / static_cast<double>(den);
}

std::vector<CurvePoint> curve_from_session(const Session& s, std::span<const double> kappa, std::span<const double> oa) {
  if (kappa.size() != oa.size()) throw Error(Errc::size_mismatch, "kappa and oa lengths differ");
  const std::size_t iters = kappa.size();
  std::vector<std::size_t> presented(iters + 2, 0), labeled(iters + 2, 0);
  for (const auto& r : s.log) {
    if (r.iteration < 1 || static_cast<std::size_t>(r.iteration) > iters) continue;
    if (r.outcome != Outcome::masked) ++presented[r.iteration];
    if (r.outcome == Outcome::labeled) ++labeled[r.iteration];
  }
  std::vector<CurvePoint> out;
  std::size_t effort = s.seed_count, labels = s.seed_count;
  for (std::size_t e = 1; e <= iters; ++e) {
    out.push_back({static_cast<int>(e), labels, effort, kappa[e - 1], oa[e - 1], presented[e]});
    effort += presented[e];
    labels += labeled[e];
  }
  return out;
}

std::vector<SummaryRow> summarize(std::span<const RunCurve> runs) {
  std::vector<std::string> order;
  std::map<std::pair<std::string, int>, std::vector<const CurvePoint*>> groups;
  for (const auto& run : runs) {
    if (std::find(order.begin(), order.end(), run.method) == order.end()) order.push_back(run.method);
    for (const auto& p : run.points) groups[{run.method, p.iteration}].push_back(&p);
  }
  auto mean_std = [](const std::vector<double>& v) {
    double m = 0.0;
    for (double x : v) m += x;
    m /= static_cast<double>(v.size());
    double var = 0.0;
    for (double x : v) var += (x - m) * (x - m);
    return std::pair{m, std::sqrt(var / static_cast<double>(v.size()))};
  };
  std::vector<SummaryRow> rows;
  for (const auto& method : order) {
    for (const auto& [key, pts] : groups) {
      if (key.first != method) continue;
      std::vector<double> k, e, q;
      for (const auto* p : pts) {
        k.push_back(p->kappa);
        e.push_back(static_cast<double>(p->effort_cum));
        q.push_back(static_cast<double>(p->queries_iter));
      }
      SummaryRow r;
      r.method = method;
      r.iteration = key.second;
      std::tie(r.kappa_mean, r.kappa_std) = mean_std(k);
      r.effort_mean = mean_std(e).first;
      std::tie(r.queries_mean, r.queries_std) = mean_std(q);
      r.runs = pts.size();
      rows.push_back(r);
    }
  }
  return rows;
}

void write_curves_csv(std::span<const RunCurve> runs, std::ostream& out) {
  out << "method,seed,iteration,labels_cum,effort_cum,kappa,oa,queries_iter\n";
  for (const auto& run : runs)
    for (const auto& p : run.points)
      out << run.method << ',' << run.seed << ',' << p.iteration << ',' << p.labels_cum << ',' << p.effort_cum << ','
          << format_number(p.kappa) << ',' << format_number(p.oa) << ',' << p.queries_iter << '\n';
}

std::vector<RunCurve> read_curves_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != "method,seed,iteration,labels_cum,effort_cum,kappa,oa,queries_iter")
    throw Error(Errc::format, "curves.csv: unexpected header");
  std::vector<RunCurve> runs;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    for (std::string cell; std::getline(ss, cell, ',');) f.push_back(cell);
    if (f.size() != 8) throw Error(Errc::format, "curves.csv line " + std::to_string(lineno) + ": expected 8 fields");
    try {
      const std::uint64_t seed = std::stoull(f[1]);
      if (runs.empty() || runs.back().method != f[0] || runs.back().seed != seed) runs.push_back({f[0], seed, {}});
      runs.back().points.push_back({std::stoi(f[2]), std::stoull(f[3]), std::stoull(f[4]), std::stod(f[5]),
                                    std::stod(f[6]), std::stoull(f[7])});
    } catch (const std::logic_error&) {
      throw Error(Errc::format, "curves.csv line " + std::to_string(lineno) + ": bad number");
    }
  }
  return runs;
}

void write_summary_csv(std::span<const SummaryRow> rows, std::ostream& out) {
  out << "method,iteration,kappa_mean,kappa_std,effort_mean\n";
  for (const auto& r : rows)
    out << r.method << ',' << r.iteration << ',' << format_number(r.kappa_mean) << ',' << format_number(r.kappa_std)
        << ',' << format_number(r.effort_mean) << '\n';
}

void write_queries_csv(std::span<const SummaryRow> rows, std::ostream& out) {
  out << "method,iteration,queries_mean,queries_std\n";
  for (const auto& r : rows)
    out << r.method << ',' << r.iteration << ',' << format_number(r.queries_mean) << ',' << format_number(r.queries_std)
        << '\n';
}

}  // namespace aluc
