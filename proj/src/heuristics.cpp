// SPDX-License-Identifier: Apache-2.0
#include "aluc/heuristics.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <set>

#include "aluc/error.hpp"
#include "aluc/rng.hpp"

namespace aluc {

std::string_view to_string(Heuristic h) noexcept {
  switch (h) {
    case Heuristic::rs: return "rs";
    case Heuristic::mclu: return "mclu";
    case Heuristic::neqb: return "neqb";
  }
  return "rs";
}

std::optional<Heuristic> parse_heuristic(std::string_view tag) noexcept {
  if (tag == "rs") return Heuristic::rs;
  if (tag == "mclu") return Heuristic::mclu;
  if (tag == "neqb") return Heuristic::neqb;
  return std::nullopt;
}

double mclu_margin(std::span<const double> decisions) noexcept {
  std::size_t top = 0;
  for (std::size_t c = 1; c < decisions.size(); ++c) {
    if (std::fabs(decisions[c]) > std::fabs(decisions[top])) top = c;
  }
  double second = -HUGE_VAL;
  for (std::size_t c = 0; c < decisions.size(); ++c) {
    if (c != top) second = std::max(second, std::fabs(decisions[c]));
  }
  return std::fabs(decisions[top]) - second;
}

HeuristicScores score_mclu(std::span<const double> decision_matrix, int omega,
                           std::span<const std::size_t> ids) {
  if (omega < 2) throw Error(Errc::invalid_argument, "MCLU needs at least 2 classes");
  HeuristicScores out{Heuristic::mclu, {ids.begin(), ids.end()}, std::vector<double>(ids.size())};
  for (std::size_t i = 0; i < ids.size(); ++i) {
    out.scores[i] = mclu_margin(decision_matrix.subspan(i * omega, omega));
  }
  return out;
}

HeuristicScores score_mclu(const OaaModel& model, const SampleMatrix& candidates,
                           std::span<const std::size_t> ids) {
  const auto values = model.decision_matrix(candidates);
  return score_mclu(values, model.omega, ids);
}

HeuristicScores score_random(std::span<const std::size_t> ids) {
  return HeuristicScores{Heuristic::rs, {ids.begin(), ids.end()}, std::vector<double>(ids.size(), 0.0)};
}

Committee train_bagged_committee(const LabeledSet& samples, int k, double fraction, int omega,
                                 const KernelParams& params, const SmoOptions& options, std::uint64_t seed) {
  if (k < 2) throw Error(Errc::invalid_argument, "committee needs at least 2 members");
  if (!(fraction > 0.0 && fraction <= 1.0)) throw Error(Errc::invalid_argument, "committee fraction must lie in (0, 1]");
  const std::size_t n = samples.size();
  const auto draw = static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(n) - 1e-9));
  if (draw < 2) throw Error(Errc::invalid_argument, "committee members would train on fewer than 2 samples");

  Committee committee;
  committee.fraction = fraction;
  committee.seed = seed;
  Rng rng(seed);
  std::vector<std::size_t> idx(n);
  for (int m = 0; m < k; ++m) {
    constexpr int max_redraws = 20;
    std::vector<std::size_t> subset;
    for (int attempt = 0;; ++attempt) {
      std::iota(idx.begin(), idx.end(), std::size_t{0});
      for (std::size_t i = 0; i < draw; ++i) {
        const std::size_t j = i + static_cast<std::size_t>(rng.index(n - i));
        std::swap(idx[i], idx[j]);
      }
      subset.assign(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(draw));
      std::set<int> classes;
      for (std::size_t i : subset) classes.insert(samples.y[i]);
      if (classes.size() >= 2) break;
      if (attempt >= max_redraws) {
        throw Error(Errc::degenerate, "committee redraw cap exceeded: subsets keep missing classes");
      }
    }
    std::sort(subset.begin(), subset.end());
    committee.members.push_back(train_one_against_all(samples.subset(subset), omega, params, options));
    committee.subsets.push_back(std::move(subset));
  }
  return committee;
}

double normalized_vote_entropy(std::span<const int> votes_per_class, int committee_size) {
  std::vector<int> votes;
  for (int v : votes_per_class) {
    if (v > 0) votes.push_back(v);
  }
  if (votes.size() <= 1) return 0.0;
  std::sort(votes.begin(), votes.end());
  const double k = committee_size;
  double h = 0.0;
  for (int v : votes) {
    const double p = v / k;
    h -= p * std::log(p);
  }
  // Uniform votes are exactly 1; rounding in the sum would otherwise overshoot.
  if (votes.front() == votes.back()) return 1.0;
  return std::min(1.0, h / std::log(static_cast<double>(votes.size())));
}

HeuristicScores score_neqb(const Committee& committee, const SampleMatrix& candidates,
                           std::span<const std::size_t> ids) {
  if (committee.members.empty()) throw Error(Errc::invalid_argument, "empty committee");
  const int omega = committee.members.front().omega;
  const int k = static_cast<int>(committee.members.size());
  std::vector<std::vector<int>> predictions;
  predictions.reserve(committee.members.size());
  for (const auto& member : committee.members) predictions.push_back(member.predict_all(candidates));
  HeuristicScores out{Heuristic::neqb, {ids.begin(), ids.end()}, std::vector<double>(ids.size())};
  std::vector<int> votes(omega);
  for (std::size_t i = 0; i < candidates.rows(); ++i) {
    std::fill(votes.begin(), votes.end(), 0);
    for (const auto& p : predictions) ++votes[p[i] - 1];
    out.scores[i] = normalized_vote_entropy(votes, k);
  }
  return out;
}

std::vector<std::size_t> rank_candidates(const HeuristicScores& scores, std::uint64_t seed) {
  const std::size_t n = scores.ids.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  // A seeded shuffle followed by a stable sort leaves every tie group in random order.
  Rng rng(seed);
  rng.shuffle(std::span<std::size_t>(order));
  switch (scores.heuristic) {
    case Heuristic::mclu:
      std::stable_sort(order.begin(), order.end(),
                       [&](std::size_t a, std::size_t b) { return scores.scores[a] < scores.scores[b]; });
      break;
    case Heuristic::neqb:
      std::stable_sort(order.begin(), order.end(),
                       [&](std::size_t a, std::size_t b) { return scores.scores[a] > scores.scores[b]; });
      break;
    case Heuristic::rs:
      break;
  }
  std::vector<std::size_t> ranked(n);
  for (std::size_t i = 0; i < n; ++i) ranked[i] = scores.ids[order[i]];
  return ranked;
}

std::uint64_t partitions_exact(int n, int k) {
  if (n < 0 || k < 0) throw Error(Errc::invalid_argument, "partition arguments must be non-negative");
  if (k == 0) return n == 0 ? 1 : 0;
  if (n < k) return 0;
  // table[a][b] = p(a, b), filled with p(a,b) = p(a-1,b-1) + p(a-b,b), p(a,1) = p(a,a) = 1.
  std::vector<std::vector<std::uint64_t>> table(n + 1, std::vector<std::uint64_t>(k + 1, 0));
  for (int a = 1; a <= n; ++a) {
    for (int b = 1; b <= std::min(a, k); ++b) {
      if (b == 1 || b == a) {
        table[a][b] = 1;
      } else {
        table[a][b] = table[a - 1][b - 1] + table[a - b][b];
      }
    }
  }
  return table[n][k];
}

std::uint64_t count_entropy_levels(int n, int K) {
  if (n < 1 || K < 1) throw Error(Errc::invalid_argument, "committee size and class count must be positive");
  std::uint64_t total = 0;
  for (int k = 1; k <= std::min(n, K); ++k) total += partitions_exact(n, k);
  return total;
}

}  // namespace aluc
