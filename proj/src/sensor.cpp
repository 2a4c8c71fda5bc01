#include "active_vision/sensor.hpp"

#include "active_vision/errors.hpp"
#include "active_vision/voxel_traversal.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>

namespace active_vision {

RenderedView render_view(const GroundTruthScene& scene, const Pose& pose, const CameraIntrinsics& intr,
                         unsigned threads) {
  intr.validate();
  RenderedView view{DepthImage(intr.width, intr.height), LabelImage(intr.width, intr.height)};
  const double r = scene.resolution();
  auto occupied = [&](const VoxelKey& key) { return scene.occupied(key); };

  parallel_for(
      static_cast<std::size_t>(intr.height),
      [&](std::size_t row) {
        const int v = static_cast<int>(row);
        for (int u = 0; u < intr.width; ++u) {
          const Vec3 dir = pose.orientation * pixel_ray(u, v, intr);
          const auto hit = first_occupied_voxel(pose.position, dir, intr.z_near, intr.z_far, r, occupied);
          if (hit) {
            view.depth.at(u, v) = hit->t_entry;
            view.labels.at(u, v) = *scene.at(hit->key);
          }
        }
      },
      threads);
  return view;
}

std::vector<CloudPoint> depth_to_cloud(const DepthImage& depth, const LabelImage* labels, const Pose& pose,
                                       const CameraIntrinsics& intr, int stride) {
  if (stride < 1) throw InvalidInput("stride must be at least 1");
  if (depth.width != intr.width || depth.height != intr.height) {
    throw InvalidInput("depth image does not match the intrinsics");
  }
  if (labels && (labels->width != depth.width || labels->height != depth.height)) {
    throw InvalidInput("label image dimensions differ from depth image");
  }
  std::vector<CloudPoint> cloud;
  for (int v = 0; v < depth.height; v += stride) {
    for (int u = 0; u < depth.width; u += stride) {
      const double z = depth.at(u, v);
      if (z <= 0.0) continue;
      CloudPoint p;
      p.position = pose.to_world(deproject(u, v, z, intr));
      if (labels) p.label = labels->at(u, v);
      p.u = u;
      p.v = v;
      cloud.push_back(p);
    }
  }
  return cloud;
}

DepthImage apply_depth_noise(const DepthImage& depth, const CameraIntrinsics& intr, double sigma,
                             double dropout_p, std::uint64_t seed) {
  if (sigma < 0.0) throw InvalidInput("sigma must be non-negative");
  if (!(dropout_p >= 0.0 && dropout_p <= 1.0)) throw InvalidInput("dropout_p must lie in [0,1]");
  DepthImage out = depth;
  if (sigma == 0.0 && dropout_p == 0.0) return out;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, sigma > 0.0 ? sigma : 1.0);
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  for (double& z : out.data) {
    const double n = noise(rng);
    const double c = coin(rng);
    if (z <= 0.0) continue;
    if (c < dropout_p) {
      z = 0.0;
      continue;
    }
    if (sigma > 0.0) z = std::clamp(z + n, intr.z_near, intr.z_far);
  }
  return out;
}

void write_depth_pgm(const DepthImage& depth, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "P5\n" << depth.width << " " << depth.height << "\n65535\n";
  for (double z : depth.data) {
    const auto mm = static_cast<std::uint16_t>(std::clamp(std::lround(z * 1000.0), 0L, 65535L));
    const char bytes[2] = {static_cast<char>(mm >> 8), static_cast<char>(mm & 0xff)};
    out.write(bytes, 2);
  }
}

void write_label_ppm(const LabelImage& labels, const std::string& path) {
  static constexpr unsigned char kPalette[6][3] = {
      {0, 0, 0}, {220, 30, 40}, {40, 170, 60}, {140, 90, 40}, {100, 60, 20}, {200, 120, 60}};
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "P6\n" << labels.width << " " << labels.height << "\n255\n";
  for (SemanticClass c : labels.data) {
    out.write(reinterpret_cast<const char*>(kPalette[static_cast<int>(c)]), 3);
  }
}

}  // namespace active_vision
