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

#pragma once

#include <utility>

namespace jetclust {

// Tolerance below zero tolerated for squared masses before they are
// treated as unphysical.
inline constexpr double kMassEpsilon = 1e-9;

struct FourMomentum {
  double e = 0.0;
  double px = 0.0;
  double py = 0.0;
  double pz = 0.0;

  FourMomentum& operator+=(const FourMomentum& o) {
    e += o.e;
    px += o.px;
    py += o.py;
    pz += o.pz;
    return *this;
  }
  friend FourMomentum operator+(FourMomentum a, const FourMomentum& b) { return a += b; }
  friend bool operator==(const FourMomentum&, const FourMomentum&) = default;
};

struct Vec3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
};

// E^2 - |p|^2, clamped to 0 when it lies within kMassEpsilon below zero.
// Throws std::domain_error for anything more negative.
double invariant_mass_sq(const FourMomentum& p);

// Throws std::domain_error on negative energy or a spacelike momentum.
void check_physical(const FourMomentum& p);

// Decays `parent` into children of squared masses t_a and t_b. In the
// parent rest frame child_a travels along `direction` (a unit vector) and
// child_b opposite to it; both are then boosted back to the lab frame.
// Throws std::invalid_argument when sqrt(t_parent) < sqrt(t_a) + sqrt(t_b).
std::pair<FourMomentum, FourMomentum> two_body_decay(const FourMomentum& parent, double t_a,
                                                     double t_b, const Vec3& direction);

}  // namespace jetclust
