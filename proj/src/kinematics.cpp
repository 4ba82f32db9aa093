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

#include "jetclust/kinematics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace jetclust {

double invariant_mass_sq(const FourMomentum& p) {
  const double t = p.e * p.e - p.px * p.px - p.py * p.py - p.pz * p.pz;
  if (t >= 0.0) return t;
  if (t >= -kMassEpsilon) return 0.0;
  throw std::domain_error("spacelike four-momentum (t = " + std::to_string(t) + ")");
}

void check_physical(const FourMomentum& p) {
  if (!(p.e >= 0.0)) throw std::domain_error("negative energy");
  (void)invariant_mass_sq(p);
}

std::pair<FourMomentum, FourMomentum> two_body_decay(const FourMomentum& parent, double t_a,
                                                     double t_b, const Vec3& direction) {
  const double t_p = invariant_mass_sq(parent);
  if (!(t_p > 0.0) || t_a < 0.0 || t_b < 0.0) {
    throw std::invalid_argument("two_body_decay: parent must be massive, children non-negative");
  }
  const double m_p = std::sqrt(t_p);
  if (m_p < std::sqrt(t_a) + std::sqrt(t_b)) {
    throw std::invalid_argument("two_body_decay: children heavier than parent");
  }

  // Rest-frame kinematics.
  const double disc = (t_p - t_a - t_b) * (t_p - t_a - t_b) - 4.0 * t_a * t_b;
  const double p_star = std::sqrt(std::max(disc, 0.0)) / (2.0 * m_p);
  const double e_a = (t_p + t_a - t_b) / (2.0 * m_p);
  const Vec3 pa{p_star * direction.x, p_star * direction.y, p_star * direction.z};

  // Boost with velocity beta = p_parent / E_parent.
  const double bx = parent.px / parent.e;
  const double by = parent.py / parent.e;
  const double bz = parent.pz / parent.e;
  const double b2 = bx * bx + by * by + bz * bz;
  const double gamma = parent.e / m_p;
  const double k = b2 > 0.0 ? (gamma - 1.0) / b2 : 0.0;

  auto boost = [&](double e, double x, double y, double z) {
    const double bp = bx * x + by * y + bz * z;
    return FourMomentum{gamma * (e + bp), x + (k * bp + gamma * e) * bx,
                        y + (k * bp + gamma * e) * by, z + (k * bp + gamma * e) * bz};
  };
  FourMomentum a = boost(e_a, pa.x, pa.y, pa.z);
  // child_b = parent - child_a keeps conservation exact up to one rounding.
  FourMomentum b{parent.e - a.e, parent.px - a.px, parent.py - a.py, parent.pz - a.pz};
  return {a, b};
}

}  // namespace jetclust
