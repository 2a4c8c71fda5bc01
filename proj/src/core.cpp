#include "active_vision/core.hpp"

#include "active_vision/errors.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>
#include <vector>

namespace active_vision {

const char* to_string(TransportFailure kind) {
  switch (kind) {
    case TransportFailure::timeout: return "timeout";
    case TransportFailure::connection_refused: return "connection refused";
    case TransportFailure::connection_closed: return "connection closed";
    case TransportFailure::malformed_frame: return "malformed frame";
    case TransportFailure::io: return "i/o error";
  }
  return "unknown";
}

void Pose::validate() const {
  if (!position.allFinite()) throw InvalidInput("pose position is not finite");
  if (std::abs(orientation.norm() - 1.0) > 1e-9) throw InvalidInput("pose orientation is not unit norm");
}

void CameraIntrinsics::validate() const {
  if (!(fx > 0.0 && fy > 0.0)) throw InvalidInput("focal lengths must be positive");
  if (!(z_near > 0.0 && z_near < z_far)) throw InvalidInput("clip range must satisfy 0 < z_near < z_far");
  if (width < 1 || height < 1) throw InvalidInput("image size must be at least 1x1");
}

Vec3 deproject(int u, int v, double depth, const CameraIntrinsics& intr) {
  if (u < 0 || v < 0 || u >= intr.width || v >= intr.height) {
    throw InvalidInput("pixel (" + std::to_string(u) + "," + std::to_string(v) + ") outside image");
  }
  if (!std::isfinite(depth)) throw InvalidInput("depth is not finite");
  return {(u - intr.cx) * depth / intr.fx, (v - intr.cy) * depth / intr.fy, depth};
}

Projection project(const Vec3& camera_point, const CameraIntrinsics& intr) {
  const double z = camera_point.z();
  if (!(z > 0.0)) throw InvalidInput("point is behind the camera");
  return {intr.fx * camera_point.x() / z + intr.cx, intr.fy * camera_point.y() / z + intr.cy, z};
}

Pose look_at(const Vec3& eye, const Vec3& target, const Vec3& up) {
  const Vec3 forward = target - eye;
  if (!eye.allFinite() || !target.allFinite() || forward.norm() < 1e-12) {
    throw InvalidInput("look_at: eye and target coincide");
  }
  const Vec3 z = forward.normalized();
  // Image +Y points down, i.e. against the up hint.
  const Vec3 down = -(up - up.dot(z) * z);
  if (down.norm() < 1e-9 * std::max(1.0, up.norm())) {
    throw InvalidInput("look_at: up is parallel to the viewing direction");
  }
  const Vec3 y = down.normalized();
  const Vec3 x = y.cross(z);

  Eigen::Matrix3d rotation;
  rotation.col(0) = x;
  rotation.col(1) = y;
  rotation.col(2) = z;
  Pose pose;
  pose.position = eye;
  pose.orientation = Eigen::Quaterniond(rotation).normalized();
  return pose;
}

VoxelKey voxel_key_of(const Vec3& point, double resolution) {
  if (!(resolution > 0.0)) throw InvalidInput("resolution must be positive");
  if (!point.allFinite()) throw InvalidInput("point is not finite");
  return {static_cast<std::int32_t>(std::floor(point.x() / resolution)),
          static_cast<std::int32_t>(std::floor(point.y() / resolution)),
          static_cast<std::int32_t>(std::floor(point.z() / resolution))};
}

double aim_error(const Pose& pose, const Vec3& target) {
  const Vec3 direction = (target - pose.position).normalized();
  const double c = std::clamp(pose.optical_axis().dot(direction), -1.0, 1.0);
  return std::acos(c);
}

void parallel_for(std::size_t count, const std::function<void(std::size_t)>& fn, unsigned threads) {
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, count));
  if (threads <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  {
    std::vector<std::jthread> workers;
    workers.reserve(threads);
    for (unsigned w = 0; w < threads; ++w) {
      workers.emplace_back([&] {
        try {
          for (std::size_t i = next++; i < count; i = next++) fn(i);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
          next = count;
        }
      });
    }
  }
  if (failure) std::rethrow_exception(failure);
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void write_text_file(const std::string& path, std::string_view text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw std::runtime_error("cannot write " + path);
}

}  // namespace active_vision
