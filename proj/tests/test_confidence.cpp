// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include "aluc/confidence.hpp"
#include "aluc/error.hpp"
#include "aluc/rng.hpp"

using namespace aluc;

TEST_CASE("confidence set bookkeeping") {
  ConfidenceSet s;
  CHECK_FALSE(s.trainable());
  record_confidence_example(s, 4, Outcome::labeled);
  CHECK_FALSE(s.trainable());
  record_confidence_example(s, 9, Outcome::refused);
  record_confidence_example(s, 2, Outcome::masked);
  CHECK(s.trainable());
  CHECK(s.pixels == std::vector<std::size_t>{4, 9, 2});
  CHECK(s.targets == std::vector<int>{1, -1, -1});
  CHECK(s.positives == 1);
  CHECK(s.negatives == 2);

  for (auto o : {Outcome::labeled, Outcome::refused, Outcome::masked}) CHECK(parse_outcome(to_string(o)) == o);
  CHECK_THROWS_AS(parse_outcome("skipped"), Error);
}

TEST_CASE("gate threshold") {
  const GateConfig g{0.6};
  CHECK_FALSE(passes_mask(0.6, g));
  CHECK(passes_mask(0.6000001, g));
  CHECK_FALSE(passes_mask(0.2, g));
  CHECK_THROWS_AS((GateConfig{0.0}.validate()), Error);
  CHECK_THROWS_AS((GateConfig{1.0}.validate()), Error);
  GateConfig{0.5}.validate();
}

TEST_CASE("confidence model separates answerable from refused pixels") {
  // pixels 0..79: answerable ones sit near the origin, refused ones on a ring
  Rng rng(31);
  SampleMatrix features;
  ConfidenceSet set;
  for (std::size_t i = 0; i < 80; ++i) {
    const bool good = i % 2 == 0;
    const double radius = good ? 0.5 * rng.uniform() : 2.0 + rng.uniform();
    const double angle = 6.283185307179586 * rng.uniform();
    features.append(std::vector<double>{radius * std::cos(angle), radius * std::sin(angle)});
    record_confidence_example(set, i, good ? Outcome::labeled : Outcome::refused);
  }
  ConfidenceTraining t;
  t.seed = 3;
  const ConfidenceModel m = train_confidence_model(set, features, t, 2);
  CHECK(m.iteration == 2);
  CHECK(m.cv_accuracy.size() == default_sigma_grid().size());

  const auto map = confidence_map(m, features);
  REQUIRE(map.size() == 80);
  for (std::size_t i = 0; i < 80; ++i) {
    CHECK(map[i] > 0.0);
    CHECK(map[i] < 1.0);
    CHECK(map[i] == m.probability(features.row(i)));
    CHECK((map[i] > 0.5) == (i % 2 == 0));
  }
  const ConfidenceModel again = train_confidence_model(set, features, t, 2);
  CHECK(confidence_map(again, features) == map);

  ConfidenceSet only_pos;
  record_confidence_example(only_pos, 0, Outcome::labeled);
  try {
    train_confidence_model(only_pos, features, t, 2);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::untrainable);
  }
}
