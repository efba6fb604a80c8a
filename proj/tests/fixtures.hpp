#pragma once

#include "emi/geometry.hpp"

namespace emi::testing {

// A Kuhn tetrahedron T = {x >= y >= z >= 0, x <= 2} embedded in a voxel grid
// on [-2,4]^2 x [0,4]. T meets three neighbours (2, 3, 4) across its three
// slanted faces; its bottom lies on the domain boundary.
inline constexpr int kTet = 1;

inline Mesh tetrahedron_in_box(int voxels_per_unit = 2) {
  const double h = 1.0 / voxels_per_unit;
  const int n = 6 * voxels_per_unit;
  auto label = [](std::array<int, 3>, const Point3& c) {
    const double x = c[0], y = c[1], z = c[2];
    if (x > y && y > z && x < 2.0) return kTet;
    if (y < z) return 2;
    if (x > 2.0) return 3;
    return 0;  // x < y
  };
  return build_voxel_mesh({n, n, 4 * voxels_per_unit}, h, {-2.0, -2.0, 0.0}, label);
}

}  // namespace emi::testing
