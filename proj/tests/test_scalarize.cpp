#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "prefbo/rng.hpp"
#include "prefbo/scalarize.hpp"
#include "test_util.hpp"

using namespace prefbo;

TEST_CASE("augmented tchebychev worked examples") {
  CHECK(tchebychev_asf({2.0, 4.0}, {0.5, 0.5}, 0.05) ==
        doctest::Approx(2.15).epsilon(1e-12));
  CHECK(tchebychev_asf({2.0, 4.0}, {0.5, 0.5}, 0.0) ==
        doctest::Approx(2.0).epsilon(1e-12));
  // A zero weight removes that objective from both the max and the sum.
  CHECK(tchebychev_asf({2.0, 4.0}, {1.0, 0.0}, 0.05) ==
        doctest::Approx(2.1).epsilon(1e-12));
  CHECK(tchebychev_asf({-1.0, 3.0}, {0.25, 0.75}, 0.05) ==
        doctest::Approx(2.25 + 0.05 * 2.0).epsilon(1e-12));
}

TEST_CASE("asf is positively homogeneous in y") {
  RngStream rng(21, "asf");
  for (int trial = 0; trial < 200; ++trial) {
    Theta theta = sample_theta(3, rng);
    ObjectiveVector y = {rng.uniform(-5, 5), rng.uniform(-5, 5),
                         rng.uniform(-5, 5)};
    const double c = rng.uniform(0.1, 10.0);
    ObjectiveVector cy = y;
    for (double& v : cy) v *= c;
    CHECK(tchebychev_asf(cy, theta, 0.05) ==
          doctest::Approx(c * tchebychev_asf(y, theta, 0.05)).epsilon(1e-9));
  }
}

TEST_CASE("asf rejects malformed arguments") {
  CHECK_THROWS_AS((void)tchebychev_asf({1.0, 2.0}, {0.5}, 0.05),
                  std::invalid_argument);
  CHECK_THROWS((void)tchebychev_asf({}, {}, 0.05));
}

TEST_CASE("utility worked examples and monotonicity") {
  UtilityModel tch{UtilityKind::Tchebychev, {0.5, 0.5}, 0.05};
  CHECK(utility({2.0, 4.0}, tch) == doctest::Approx(-2.15).epsilon(1e-12));

  UtilityModel lin{UtilityKind::Linear, {0.5, 0.5}, 0.05};
  CHECK(utility({2.0, 4.0}, lin) == doctest::Approx(-3.0).epsilon(1e-12));

  // Strict improvement in one objective never decreases utility, and with
  // positive weights strictly increases it.
  for (const UtilityModel& m : {tch, lin}) {
    const double base = utility({2.0, 4.0}, m);
    CHECK(utility({1.9, 4.0}, m) > base);
    CHECK(utility({2.0, 3.9}, m) > base);
  }
}

TEST_CASE("utility agrees with the dominance order") {
  RngStream rng(4, "mono");
  for (int trial = 0; trial < 500; ++trial) {
    UtilityModel m{trial % 2 == 0 ? UtilityKind::Tchebychev
                                  : UtilityKind::Linear,
                   sample_theta(2, rng), 0.05};
    ObjectiveVector a = {rng.uniform(-3, 3), rng.uniform(-3, 3)};
    ObjectiveVector b = {a[0] + rng.uniform(0, 2), a[1] + rng.uniform(0, 2)};
    CHECK(utility(a, m) >= utility(b, m));
  }
}

TEST_CASE("sample_theta lands on the simplex with uniform marginals") {
  RngStream rng(7, "simplex");
  const int n = 100000;
  double sum1 = 0.0;
  double sumsq1 = 0.0;
  for (int i = 0; i < n; ++i) {
    const Theta t = sample_theta(2, rng);
    REQUIRE(t.size() == 2);
    CHECK(t[0] >= 0.0);
    CHECK(t[1] >= 0.0);
    CHECK(std::abs(t[0] + t[1] - 1.0) < 1e-12);
    sum1 += t[0];
    sumsq1 += t[0] * t[0];
  }
  // For K = 2 the first coordinate is uniform on [0, 1]: mean 1/2,
  // variance 1/12.
  const double mean = sum1 / n;
  const double var = sumsq1 / n - mean * mean;
  CHECK(std::abs(mean - 0.5) < 0.01);
  CHECK(std::abs(var - 1.0 / 12.0) < 0.005);
}

TEST_CASE("sample_theta in higher dimensions sums to one") {
  RngStream rng(8, "simplex5");
  for (int i = 0; i < 1000; ++i) {
    const Theta t = sample_theta(5, rng);
    REQUIRE(t.size() == 5);
    double total = 0.0;
    for (double v : t) {
      CHECK(v >= 0.0);
      total += v;
    }
    CHECK(std::abs(total - 1.0) < 1e-12);
  }
  CHECK_THROWS((void)sample_theta(0, rng));
}

TEST_CASE("estimate_theta worked examples") {
  const Theta even = estimate_theta({1.0, 1.0});
  CHECK(even[0] == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(even[1] == doctest::Approx(0.5).epsilon(1e-12));

  const Theta skew = estimate_theta({1.0, 3.0});
  CHECK(skew[0] == doctest::Approx(0.75).epsilon(1e-12));
  CHECK(skew[1] == doctest::Approx(0.25).epsilon(1e-12));

  const Theta three = estimate_theta({2.0, 4.0, 8.0});
  CHECK(three[0] == doctest::Approx(4.0 / 7.0).epsilon(1e-12));
  CHECK(three[1] == doctest::Approx(2.0 / 7.0).epsilon(1e-12));
  CHECK(three[2] == doctest::Approx(1.0 / 7.0).epsilon(1e-12));
}

TEST_CASE("estimate_theta ratio identity and scale invariance") {
  RngStream rng(12, "est");
  for (int trial = 0; trial < 300; ++trial) {
    ObjectiveVector y = {rng.uniform(0.01, 10), rng.uniform(0.01, 10),
                         rng.uniform(0.01, 10)};
    const Theta t = estimate_theta(y);
    double total = 0.0;
    for (double v : t) total += v;
    CHECK(std::abs(total - 1.0) < 1e-12);
    // theta_i * y_i is constant across components.
    const double c0 = t[0] * y[0];
    CHECK(std::abs(t[1] * y[1] - c0) < 1e-9);
    CHECK(std::abs(t[2] * y[2] - c0) < 1e-9);

    ObjectiveVector scaled = y;
    const double c = rng.uniform(0.5, 4.0);
    for (double& v : scaled) v *= c;
    const Theta ts = estimate_theta(scaled);
    for (std::size_t i = 0; i < t.size(); ++i) {
      CHECK(std::abs(ts[i] - t[i]) < 1e-12);
    }
  }
}

TEST_CASE("estimate_theta clamps tiny and negative components") {
  // Components at or below the floor all receive the same (largest)
  // un-normalized weight.
  const Theta t = estimate_theta({-2.0, 1e-9, 1.0});
  CHECK(t[0] == doctest::Approx(t[1]).epsilon(1e-12));
  CHECK(t[0] > t[2]);
  double total = 0.0;
  for (double v : t) total += v;
  CHECK(std::abs(total - 1.0) < 1e-12);
}

TEST_CASE("estimated weights make the picked point a weighted-max argmin") {
  // theta_i y_i is equalized at the pick, so any candidate that fails to
  // beat the pick in every component has an unaugmented asf at least as
  // large. Checked against an independent asf implementation.
  RngStream rng(33, "argmin");
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<ObjectiveVector> cands;
    for (int i = 0; i < 20; ++i) {
      cands.push_back({rng.uniform(0.1, 10), rng.uniform(0.1, 10)});
    }
    const ObjectiveVector& pick = cands[0];
    const Theta theta = estimate_theta(pick);

    const double pick_val = testutil::asf_reference(pick, theta, 0.0);
    for (const ObjectiveVector& c : cands) {
      bool everywhere_better = true;
      for (std::size_t j = 0; j < c.size(); ++j) {
        everywhere_better = everywhere_better && (c[j] < pick[j]);
      }
      if (!everywhere_better) {
        CHECK(testutil::asf_reference(c, theta, 0.0) >= pick_val - 1e-9);
      }
    }
  }
}

TEST_CASE("utility kind names round-trip") {
  CHECK(to_string(UtilityKind::Tchebychev) == "tchebychev");
  CHECK(to_string(UtilityKind::Linear) == "linear");
  CHECK(utility_kind_from_string("tchebychev") == UtilityKind::Tchebychev);
  CHECK(utility_kind_from_string("linear") == UtilityKind::Linear);
  CHECK_THROWS((void)utility_kind_from_string("quadratic"));
}
