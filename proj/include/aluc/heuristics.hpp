// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "aluc/matrix.hpp"
#include "aluc/svm.hpp"

namespace aluc {

enum class Heuristic { rs, mclu, neqb };

std::string_view to_string(Heuristic h) noexcept;
/// Accepts the tags "rs", "mclu" and "neqb".
std::optional<Heuristic> parse_heuristic(std::string_view tag) noexcept;

/// One score per candidate. MCLU: lower is more desirable. nEQB: higher is more
/// desirable. RS: all zeros.
struct HeuristicScores {
  Heuristic heuristic = Heuristic::rs;
  std::vector<std::size_t> ids;
  std::vector<double> scores;
};

/// max_c |f(x,c)| - max_{c != c+} |f(x,c)|, where c+ attains the first maximum.
double mclu_margin(std::span<const double> decisions) noexcept;

HeuristicScores score_mclu(const OaaModel& model, const SampleMatrix& candidates,
                           std::span<const std::size_t> ids);
/// Same scores from a precomputed row-major (candidates x omega) decision matrix.
HeuristicScores score_mclu(std::span<const double> decision_matrix, int omega,
                           std::span<const std::size_t> ids);

HeuristicScores score_random(std::span<const std::size_t> ids);

struct Committee {
  std::vector<OaaModel> members;
  double fraction = 0.75;
  std::uint64_t seed = 0;
  std::vector<std::vector<std::size_t>> subsets;  // sorted training rows of each member
};

/// k members, each trained on ceil(fraction * n) rows drawn without replacement. A draw
/// with fewer than two classes is redrawn, at most 20 times per member.
Committee train_bagged_committee(const LabeledSet& samples, int k, double fraction, int omega,
                                 const KernelParams& params, const SmoOptions& options, std::uint64_t seed);

/// Vote entropy over the N classes receiving votes, divided by log N; 0 when N = 1.
/// Vote counts are sorted before summation so equal vote profiles give identical bits.
double normalized_vote_entropy(std::span<const int> votes_per_class, int committee_size);

HeuristicScores score_neqb(const Committee& committee, const SampleMatrix& candidates,
                           std::span<const std::size_t> ids);

/// Candidate ids in order of desirability; exact ties are in seeded random order.
std::vector<std::size_t> rank_candidates(const HeuristicScores& scores, std::uint64_t seed);

/// Number of partitions of n into exactly k parts.
std::uint64_t partitions_exact(int n, int k);
/// Number of partitions of n into at most K parts: the count of distinct vote profiles
/// (hence entropy values) of an n-member committee over at most K classes.
std::uint64_t count_entropy_levels(int n, int K);

}  // namespace aluc
