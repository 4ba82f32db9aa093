// Copyright 2026 The jetclust Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <cmath>
#include <stdexcept>

#include "doctest.h"
#include "jetclust/kinematics.hpp"
#include "jetclust/rng.hpp"
#include "jetclust/shower.hpp"

using namespace jetclust;

TEST_CASE("invariant mass examples") {
  CHECK(invariant_mass_sq({2, 0, 0, 0}) == 4.0);
  CHECK(invariant_mass_sq({1, 0, 0, 1}) == 0.0);
  CHECK(invariant_mass_sq({5, 3, 0, 0}) == 16.0);
}

TEST_CASE("small negative masses clamp, larger ones throw") {
  const double e = 1.0;
  const double pz = std::sqrt(1.0 + 5e-10);
  CHECK(invariant_mass_sq({e, 0, 0, pz}) == 0.0);
  CHECK_THROWS_AS(invariant_mass_sq({1, 0, 0, 1.001}), std::domain_error);
  CHECK_THROWS_AS(check_physical({-1, 0, 0, 0}), std::domain_error);
}

TEST_CASE("two-body decay at rest") {
  auto [a, b] = two_body_decay({2, 0, 0, 0}, 0.0, 0.0, {0, 0, 1});
  CHECK(a.e == doctest::Approx(1.0));
  CHECK(a.pz == doctest::Approx(1.0));
  CHECK(b.e == doctest::Approx(1.0));
  CHECK(b.pz == doctest::Approx(-1.0));
  CHECK(std::abs(a.px) < 1e-15);

  auto [c, d] = two_body_decay({2, 0, 0, 0}, 1.0, 0.0, {0, 0, 1});
  CHECK(c.e == doctest::Approx(1.25).epsilon(1e-14));
  CHECK(c.pz == doctest::Approx(0.75).epsilon(1e-14));
  CHECK(d.e == doctest::Approx(0.75).epsilon(1e-14));
  CHECK(d.pz == doctest::Approx(-0.75).epsilon(1e-14));
}

TEST_CASE("two-body decay rejects kinematically forbidden masses") {
  CHECK_THROWS_AS(two_body_decay({2, 0, 0, 0}, 1.5, 1.0, {0, 0, 1}), std::invalid_argument);
}

TEST_CASE("boosted decays conserve momentum and hit the requested masses") {
  Rng rng(123);
  for (int k = 0; k < 1000; ++k) {
    const double m = 1.0 + 20.0 * rng.uniform();
    const Vec3 dir = isotropic_direction(rng);
    const double p = 50.0 * rng.uniform();
    FourMomentum parent{std::sqrt(m * m + p * p), p * dir.x, p * dir.y, p * dir.z};
    const double t_p = invariant_mass_sq(parent);
    const double t_a = t_p * 0.3 * rng.uniform();
    const double bound = std::sqrt(t_p) - std::sqrt(t_a);
    const double t_b = bound * bound * rng.uniform();
    auto [a, b] = two_body_decay(parent, t_a, t_b, isotropic_direction(rng));
    const FourMomentum sum = a + b;
    const double scale = parent.e;
    CHECK(std::abs(sum.e - parent.e) <= 1e-6 * scale);
    CHECK(std::abs(sum.px - parent.px) <= 1e-6 * scale);
    CHECK(std::abs(sum.py - parent.py) <= 1e-6 * scale);
    CHECK(std::abs(sum.pz - parent.pz) <= 1e-6 * scale);
    // Masses are recovered up to cancellation in E^2 - p^2.
    const double tol = 1e-6 * std::max(1.0, scale * scale * 1e-6);
    CHECK(std::abs(invariant_mass_sq(a) - t_a) <= std::max(1e-6 * t_a, tol));
    CHECK(std::abs(invariant_mass_sq(b) - t_b) <= std::max(1e-6 * t_b, tol));
  }
}

TEST_CASE("rng streams are reproducible and independent") {
  Rng a(5), b(5), c(6);
  for (int k = 0; k < 100; ++k) {
    const auto x = a.next_u64();
    CHECK(x == b.next_u64());
    CHECK(x != c.next_u64());
  }
  Rng parent(9);
  Rng s1 = parent.split(1), s1_again = parent.split(1), s2 = parent.split(2);
  CHECK(s1.next_u64() == s1_again.next_u64());
  CHECK(s1.next_u64() != s2.next_u64());
  CHECK(parent.counter() == 0);
  for (int k = 0; k < 1000; ++k) {
    const double u = parent.uniform();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
    CHECK(parent.below(7) < 7);
  }
}
