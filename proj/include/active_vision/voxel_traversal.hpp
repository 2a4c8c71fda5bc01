#pragma once

#include "active_vision/core.hpp"

#include <cmath>
#include <limits>
#include <optional>

namespace active_vision {

/// Cells the ray crosses along a chord shorter than this (in units of t) are
/// stepped over: the ray merely grazes them at an edge, corner or face.
inline constexpr double kMinChord = 1e-6;

struct RayHit {
  VoxelKey key;
  double t_entry = 0.0;  // ray parameter where the voxel is entered
};

/// Amanatides-Woo traversal of the grid of cell size `resolution` along
/// origin + t * direction for t in [t_min, t_max]. Returns the first voxel
/// the ray passes through for which `occupied(key)` holds. `direction` need
/// not be normalized; t is measured in units of it (a camera ray with unit z
/// component yields z-depth).
template <class Occupied>
std::optional<RayHit> first_occupied_voxel(const Vec3& origin, const Vec3& direction,
                                           double t_min, double t_max, double resolution,
                                           Occupied&& occupied) {
  constexpr double kInf = std::numeric_limits<double>::infinity();
  const Vec3 start = origin + t_min * direction;
  VoxelKey key = voxel_key_of(start, resolution);

  int step[3];
  double t_next[3];
  double t_delta[3];
  for (int a = 0; a < 3; ++a) {
    if (direction[a] > 0.0) {
      step[a] = 1;
      t_next[a] = ((key[a] + 1) * resolution - origin[a]) / direction[a];
      t_delta[a] = resolution / direction[a];
    } else if (direction[a] < 0.0) {
      step[a] = -1;
      t_next[a] = (key[a] * resolution - origin[a]) / direction[a];
      t_delta[a] = -resolution / direction[a];
    } else {
      step[a] = 0;
      t_next[a] = kInf;
      t_delta[a] = kInf;
    }
  }

  double t = t_min;
  while (t <= t_max) {
    int axis = 0;
    if (t_next[1] < t_next[axis]) axis = 1;
    if (t_next[2] < t_next[axis]) axis = 2;
    if (t_next[axis] - t > kMinChord && occupied(key)) return RayHit{key, t};
    if (t_next[axis] == kInf) break;
    t = std::max(t, t_next[axis]);
    key[axis] += step[axis];
    t_next[axis] += t_delta[axis];
  }
  return std::nullopt;
}

/// Ray through pixel (u, v) in the camera frame, scaled so its z component is 1.
inline Vec3 pixel_ray(int u, int v, const CameraIntrinsics& intr) {
  return {(u - intr.cx) / intr.fx, (v - intr.cy) / intr.fy, 1.0};
}

}  // namespace active_vision
