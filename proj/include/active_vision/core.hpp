#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <compare>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <string_view>

namespace active_vision {

using Vec3 = Eigen::Vector3d;

/// Camera pose in the world frame. Camera axes: +Z optical axis, +X image
/// right, +Y image down.
struct Pose {
  Vec3 position = Vec3::Zero();
  Eigen::Quaterniond orientation = Eigen::Quaterniond::Identity();

  Vec3 to_world(const Vec3& camera_point) const { return orientation * camera_point + position; }
  Vec3 to_camera(const Vec3& world_point) const {
    return orientation.conjugate() * (world_point - position);
  }
  Vec3 optical_axis() const { return orientation * Vec3::UnitZ(); }

  /// Throws InvalidInput unless the orientation has unit norm (1e-9) and
  /// the position is finite.
  void validate() const;
};

struct CameraIntrinsics {
  double fx = 120.0;
  double fy = 120.0;
  double cx = 80.0;
  double cy = 60.0;
  int width = 160;
  int height = 120;
  double z_near = 0.1;
  double z_far = 2.0;

  void validate() const;
  bool operator==(const CameraIntrinsics&) const = default;
};

struct VoxelKey {
  std::int32_t i = 0;
  std::int32_t j = 0;
  std::int32_t k = 0;

  std::int32_t& operator[](int axis) { return axis == 0 ? i : (axis == 1 ? j : k); }
  std::int32_t operator[](int axis) const { return axis == 0 ? i : (axis == 1 ? j : k); }

  auto operator<=>(const VoxelKey&) const = default;
};

struct VoxelKeyHash {
  std::size_t operator()(const VoxelKey& key) const noexcept {
    auto h = static_cast<std::uint64_t>(static_cast<std::uint32_t>(key.i)) * 73856093ULL;
    h ^= static_cast<std::uint64_t>(static_cast<std::uint32_t>(key.j)) * 19349663ULL;
    h ^= static_cast<std::uint64_t>(static_cast<std::uint32_t>(key.k)) * 83492791ULL;
    return static_cast<std::size_t>(h ^ (h >> 29));
  }
};

/// Closed axis-aligned box.
struct Box {
  Vec3 min = Vec3::Zero();
  Vec3 max = Vec3::Zero();

  bool contains(const Vec3& p) const {
    return (p.array() >= min.array()).all() && (p.array() <= max.array()).all();
  }
  Vec3 center() const { return 0.5 * (min + max); }
  Vec3 size() const { return max - min; }
  bool degenerate() const { return !((max.array() > min.array()).all()); }
  Box dilated(double margin) const {
    return {min - Vec3::Constant(margin), max + Vec3::Constant(margin)};
  }
  bool operator==(const Box& other) const { return min == other.min && max == other.max; }
};

struct Projection {
  double u = 0.0;
  double v = 0.0;
  double depth = 0.0;
};

/// Pinhole back-projection of pixel (u, v) at z-depth `depth`.
Vec3 deproject(int u, int v, double depth, const CameraIntrinsics& intr);

/// Pinhole projection of a camera-frame point. Throws InvalidInput for z <= 0.
Projection project(const Vec3& camera_point, const CameraIntrinsics& intr);

/// Camera pose at `eye` whose optical axis points at `target`; image-up
/// follows `up` as closely as possible.
Pose look_at(const Vec3& eye, const Vec3& target, const Vec3& up);

VoxelKey voxel_key_of(const Vec3& point, double resolution);

inline Vec3 key_center(const VoxelKey& key, double resolution) {
  return {(key.i + 0.5) * resolution, (key.j + 0.5) * resolution, (key.k + 0.5) * resolution};
}

/// Angle in radians between the pose's optical axis and the direction to `target`.
double aim_error(const Pose& pose, const Vec3& target);

/// Runs fn(i) for i in [0, count) on up to `threads` workers. Each index is
/// visited exactly once; callers write results into per-index slots.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& fn,
                  unsigned threads = 0);

/// Whole-file text I/O; throw std::runtime_error naming the path.
std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, std::string_view text);

}  // namespace active_vision
