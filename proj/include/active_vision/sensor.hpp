#pragma once

#include "active_vision/core.hpp"
#include "active_vision/scene.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace active_vision {

/// Row-major z-depth in meters; 0 means no return.
struct DepthImage {
  int width = 0;
  int height = 0;
  std::vector<double> data;

  DepthImage() = default;
  DepthImage(int w, int h) : width(w), height(h), data(static_cast<std::size_t>(w) * h, 0.0) {}
  double& at(int u, int v) { return data[static_cast<std::size_t>(v) * width + u]; }
  double at(int u, int v) const { return data[static_cast<std::size_t>(v) * width + u]; }
  bool operator==(const DepthImage&) const = default;
};

struct LabelImage {
  int width = 0;
  int height = 0;
  std::vector<SemanticClass> data;

  LabelImage() = default;
  LabelImage(int w, int h)
      : width(w), height(h), data(static_cast<std::size_t>(w) * h, SemanticClass::background) {}
  SemanticClass& at(int u, int v) { return data[static_cast<std::size_t>(v) * width + u]; }
  SemanticClass at(int u, int v) const { return data[static_cast<std::size_t>(v) * width + u]; }
  bool operator==(const LabelImage&) const = default;
};

struct RenderedView {
  DepthImage depth;
  LabelImage labels;
};

/// Casts one ray per pixel through the scene; the first occupied voxel in
/// [z_near, z_far] gives the z-depth of its entry point and its class.
RenderedView render_view(const GroundTruthScene& scene, const Pose& pose, const CameraIntrinsics& intr,
                         unsigned threads = 0);

struct CloudPoint {
  Vec3 position;
  std::optional<SemanticClass> label;
  int u = 0;
  int v = 0;
};

/// One world-frame point per sampled pixel with a return. Throws InvalidInput
/// on stride < 1 or a label image of different size.
std::vector<CloudPoint> depth_to_cloud(const DepthImage& depth, const LabelImage* labels, const Pose& pose,
                                       const CameraIntrinsics& intr, int stride = 1);

/// Additive Gaussian noise (clamped to the clip range) plus per-pixel dropout.
/// Pixels without a return stay empty.
DepthImage apply_depth_noise(const DepthImage& depth, const CameraIntrinsics& intr, double sigma,
                             double dropout_p, std::uint64_t seed);

/// 16-bit binary PGM with depth in millimeters.
void write_depth_pgm(const DepthImage& depth, const std::string& path);

/// Binary PPM with a fixed color per class.
void write_label_ppm(const LabelImage& labels, const std::string& path);

}  // namespace active_vision
