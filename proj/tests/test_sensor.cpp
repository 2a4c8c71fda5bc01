#include "active_vision/errors.hpp"
#include "active_vision/sensor.hpp"
#include "active_vision/voxel_traversal.hpp"

#include "test_support.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

using namespace av_test;

namespace {

GroundTruthScene scene_of(std::initializer_list<std::pair<VoxelKey, SemanticClass>> voxels, double r = 0.02) {
  VoxelLabels labels;
  for (const auto& [k, c] : voxels) labels.emplace(k, c);
  return GroundTruthScene(r, Box{Vec3(-2, -2, -2), Vec3(2, 2, 2)}, std::move(labels));
}

// Pose at `eye` looking along +z with image-down = +y.
Pose axis_pose(const Vec3& eye) {
  Pose p;
  p.position = eye;
  return p;
}

struct SlabHit {
  double t = 0.0;
  std::set<SemanticClass> labels;  // every voxel entered at that depth
};

// Exact first hit by slab-testing every scene voxel against the pixel ray.
std::optional<SlabHit> slab_first_hit(const GroundTruthScene& scene, const Pose& pose, int u, int v,
                                      const CameraIntrinsics& intr) {
  const Vec3 dir = pose.orientation * pixel_ray(u, v, intr);
  const double r = scene.resolution();
  std::optional<SlabHit> best;
  for (const auto& [key, cls] : scene.voxels()) {
    const Box box{Vec3(key.i * r, key.j * r, key.k * r), Vec3((key.i + 1) * r, (key.j + 1) * r, (key.k + 1) * r)};
    auto [lo, hi] = clip_to_box(pose.position, dir, box);
    lo = std::max(lo, intr.z_near);
    hi = std::min(hi, intr.z_far);
    if (hi - lo <= kMinChord) continue;
    if (!best || lo < best->t - 1e-9) {
      best = SlabHit{lo, {cls}};
    } else if (std::abs(lo - best->t) <= 1e-9) {
      best->labels.insert(cls);
    }
  }
  return best;
}

}  // namespace

TEST(RenderView, EmptyRegionGivesZeroDepthAndBackground) {
  const GroundTruthScene scene = scene_of({{{0, 0, -30}, SemanticClass::leaf}});
  const CameraIntrinsics intr;
  const RenderedView view = render_view(scene, axis_pose(Vec3::Zero()), intr);
  for (double d : view.depth.data) ASSERT_EQ(d, 0.0);
  for (SemanticClass c : view.labels.data) ASSERT_EQ(c, SemanticClass::background);
}

TEST(RenderView, FruitVoxelOnAxisAtHalfMeter) {
  const double r = 0.02;
  const GroundTruthScene scene = scene_of({{{0, 0, 24}, SemanticClass::fruit}}, r);
  const CameraIntrinsics intr;
  // Voxel center (0.01, 0.01, 0.49) sits on the optical axis.
  const RenderedView view = render_view(scene, axis_pose(Vec3(0.01, 0.01, 0.0)), intr);
  const double d = view.depth.at(80, 60);
  EXPECT_GE(d, 0.49 - r);
  EXPECT_LE(d, 0.49);
  EXPECT_NEAR(d, 0.48, 1e-12);
  EXPECT_EQ(view.labels.at(80, 60), SemanticClass::fruit);
}

TEST(RenderView, LeafInFrontHidesFruit) {
  const GroundTruthScene scene =
      scene_of({{{0, 0, 24}, SemanticClass::fruit}, {{0, 0, 20}, SemanticClass::leaf}});
  const RenderedView view = render_view(scene, axis_pose(Vec3(0.01, 0.01, 0.0)), CameraIntrinsics{});
  EXPECT_EQ(view.labels.at(80, 60), SemanticClass::leaf);
  EXPECT_NEAR(view.depth.at(80, 60), 0.40, 1e-12);
}

TEST(RenderView, RespectsClipRange) {
  CameraIntrinsics intr;
  intr.z_far = 0.3;
  const GroundTruthScene scene = scene_of({{{0, 0, 24}, SemanticClass::fruit}});
  EXPECT_EQ(render_view(scene, axis_pose(Vec3(0.01, 0.01, 0.0)), intr).depth.at(80, 60), 0.0);
  intr = CameraIntrinsics{};
  intr.z_near = 0.485;
  const RenderedView inside = render_view(scene, axis_pose(Vec3(0.01, 0.01, 0.0)), intr);
  EXPECT_NEAR(inside.depth.at(80, 60), 0.485, 1e-12);
}

TEST(RenderView, MatchesExactSlabRenderer) {
  const GroundTruthScene scene = generate_scenario(ScenarioSpec::defaults(ScenarioKind::multiple_clusters, 4));
  CameraIntrinsics intr;
  intr.width = 40;
  intr.height = 30;
  intr.fx = intr.fy = 30;
  intr.cx = 20;
  intr.cy = 15;
  std::mt19937_64 rng(21);
  for (int n = 0; n < 3; ++n) {
    const Pose pose = random_view(rng, scene.bounds().center(), 0.6, 1.0);
    const RenderedView view = render_view(scene, pose, intr);
    for (int v = 0; v < intr.height; ++v) {
      for (int u = 0; u < intr.width; ++u) {
        const auto hit = slab_first_hit(scene, pose, u, v, intr);
        if (!hit) {
          ASSERT_EQ(view.depth.at(u, v), 0.0);
          ASSERT_EQ(view.labels.at(u, v), SemanticClass::background);
          continue;
        }
        ASSERT_NEAR(view.depth.at(u, v), hit->t, 1e-9) << u << "," << v;
        ASSERT_TRUE(hit->labels.contains(view.labels.at(u, v))) << u << "," << v;
      }
    }
  }
}

TEST(RenderView, EveryReturnLandsOnItsVoxelOrTheRayEntryNeighbor) {
  const GroundTruthScene scene = generate_scenario(ScenarioSpec::defaults(ScenarioKind::full_occlusion, 9));
  const CameraIntrinsics intr;
  std::mt19937_64 rng(22);
  for (int n = 0; n < 4; ++n) {
    const Pose pose = random_view(rng, scene.bounds().center(), 0.5, 1.0);
    const RenderedView view = render_view(scene, pose, intr);
    for (int v = 0; v < intr.height; ++v) {
      for (int u = 0; u < intr.width; ++u) {
        const double d = view.depth.at(u, v);
        if (d == 0.0) continue;
        const Vec3 p = pose.to_world(deproject(u, v, d, intr));
        const Vec3 dir = p - pose.position;
        const VoxelKey key = voxel_key_of(p, scene.resolution());
        // The entry point sits on the faces shared with the free cells in
        // front, so floor() may land up to one key short on each axis the
        // ray advances along.
        bool found = false;
        for (int mask = 0; mask < 8 && !found; ++mask) {
          VoxelKey k = key;
          for (int a = 0; a < 3; ++a) {
            if (mask & (1 << a)) k[a] += dir[a] > 0 ? 1 : (dir[a] < 0 ? -1 : 0);
          }
          found = scene.occupied(k);
        }
        ASSERT_TRUE(found) << u << "," << v;
      }
    }
  }
}

TEST(RenderView, IsPureAndIndependentOfThreadCount) {
  const GroundTruthScene scene = generate_scenario(ScenarioSpec::defaults(ScenarioKind::single_cluster, 3));
  const Pose pose = facing_start_pose(scene.bounds());
  const RenderedView a = render_view(scene, pose, CameraIntrinsics{}, 1);
  const RenderedView b = render_view(scene, pose, CameraIntrinsics{}, 4);
  const RenderedView c = render_view(scene, pose, CameraIntrinsics{}, 1);
  EXPECT_TRUE(a.depth == b.depth && a.labels == b.labels);
  EXPECT_TRUE(a.depth == c.depth && a.labels == c.labels);
}

TEST(DepthToCloud, AllZeroDepthGivesEmptyCloud) {
  EXPECT_TRUE(depth_to_cloud(DepthImage(160, 120), nullptr, Pose{}, CameraIntrinsics{}).empty());
}

TEST(DepthToCloud, PrincipalPointPixelAtUnitDepth) {
  CameraIntrinsics intr;
  intr.width = 160;
  intr.height = 120;
  DepthImage depth(160, 120);
  depth.at(80, 60) = 1.0;
  const auto cloud = depth_to_cloud(depth, nullptr, Pose{}, intr);
  ASSERT_EQ(cloud.size(), 1u);
  EXPECT_NEAR((cloud[0].position - Vec3(0, 0, 1)).norm(), 0.0, 1e-12);
  EXPECT_FALSE(cloud[0].label.has_value());
}

TEST(DepthToCloud, StrideTwoOnFourByFour) {
  CameraIntrinsics intr;
  intr.width = intr.height = 4;
  intr.cx = intr.cy = 2;
  DepthImage depth(4, 4);
  std::fill(depth.data.begin(), depth.data.end(), 1.0);
  EXPECT_EQ(depth_to_cloud(depth, nullptr, Pose{}, intr, 2).size(), 4u);
}

TEST(DepthToCloud, CountBoundAndWorldTransformOnRandomImages) {
  std::mt19937_64 rng(23);
  CameraIntrinsics intr;
  intr.width = 13;
  intr.height = 7;
  intr.cx = 6;
  intr.cy = 3;
  for (int trial = 0; trial < 200; ++trial) {
    DepthImage depth(13, 7);
    LabelImage labels(13, 7);
    for (std::size_t i = 0; i < depth.data.size(); ++i) {
      if (uniform(rng, 0, 1) < 0.7) depth.data[i] = uniform(rng, intr.z_near, intr.z_far);
      labels.data[i] = random_class(rng);
    }
    const int stride = uniform_int(rng, 1, 5);
    const Pose pose = look_at(Vec3(uniform(rng, -1, 1), -2, uniform(rng, 0, 1)), Vec3::Zero(), Vec3::UnitZ());
    const auto cloud = depth_to_cloud(depth, &labels, pose, intr, stride);
    const std::size_t bound = ((13 + stride - 1) / stride) * ((7 + stride - 1) / stride);
    ASSERT_LE(cloud.size(), bound);
    std::size_t expected = 0;
    for (int v = 0; v < 7; v += stride) {
      for (int u = 0; u < 13; u += stride) expected += depth.at(u, v) > 0.0;
    }
    ASSERT_EQ(cloud.size(), expected);
    for (const CloudPoint& p : cloud) {
      const Vec3 cam = pose.to_camera(p.position);
      ASSERT_NEAR(cam.z(), depth.at(p.u, p.v), 1e-9);
      ASSERT_EQ(*p.label, labels.at(p.u, p.v));
    }
  }
}

TEST(DepthToCloud, RejectsBadStrideAndMismatchedLabels) {
  DepthImage depth(4, 4);
  LabelImage labels(3, 4);
  EXPECT_THROW(depth_to_cloud(depth, &labels, Pose{}, CameraIntrinsics{}), InvalidInput);
  EXPECT_THROW(depth_to_cloud(depth, nullptr, Pose{}, CameraIntrinsics{}, 0), InvalidInput);
}

TEST(DepthNoise, ZeroNoiseIsIdentity) {
  DepthImage depth(5, 5);
  depth.at(2, 2) = 0.7;
  depth.at(1, 3) = 1.2;
  EXPECT_TRUE(apply_depth_noise(depth, CameraIntrinsics{}, 0.0, 0.0, 1) == depth);
}

TEST(DepthNoise, FullDropoutClearsTheImage) {
  DepthImage depth(5, 5);
  std::fill(depth.data.begin(), depth.data.end(), 0.5);
  for (double d : apply_depth_noise(depth, CameraIntrinsics{}, 0.0, 1.0, 1).data) ASSERT_EQ(d, 0.0);
}

TEST(DepthNoise, DeterministicPerSeedAndClampedToClipRange) {
  const CameraIntrinsics intr;
  DepthImage depth(40, 30);
  for (std::size_t i = 0; i < depth.data.size(); ++i) depth.data[i] = i % 3 == 0 ? 0.0 : (i % 2 ? 0.1 : 2.0);
  const DepthImage a = apply_depth_noise(depth, intr, 0.005, 0.0, 42);
  const DepthImage b = apply_depth_noise(depth, intr, 0.005, 0.0, 42);
  EXPECT_TRUE(a == b);
  EXPECT_FALSE(a == apply_depth_noise(depth, intr, 0.005, 0.0, 43));
  for (std::size_t i = 0; i < a.data.size(); ++i) {
    if (depth.data[i] == 0.0) {
      ASSERT_EQ(a.data[i], 0.0);
    } else {
      ASSERT_GE(a.data[i], intr.z_near);
      ASSERT_LE(a.data[i], intr.z_far);
    }
  }
}

TEST(DepthNoise, NoiseIsRoughlyZeroMeanWithRequestedSpread) {
  DepthImage depth(200, 200);
  std::fill(depth.data.begin(), depth.data.end(), 1.0);
  const DepthImage noisy = apply_depth_noise(depth, CameraIntrinsics{}, 0.01, 0.0, 5);
  double sum = 0.0, sq = 0.0;
  for (double d : noisy.data) {
    sum += d - 1.0;
    sq += (d - 1.0) * (d - 1.0);
  }
  const double n = static_cast<double>(noisy.data.size());
  EXPECT_NEAR(sum / n, 0.0, 0.0005);
  EXPECT_NEAR(std::sqrt(sq / n), 0.01, 0.0005);
}

TEST(ImageDump, WritesPortableMapHeaders) {
  const auto dir = std::filesystem::temp_directory_path() / "av_sensor_dump";
  std::filesystem::create_directories(dir);
  DepthImage depth(4, 3);
  depth.at(1, 1) = 1.5;
  LabelImage labels(4, 3);
  labels.at(2, 2) = SemanticClass::fruit;
  write_depth_pgm(depth, (dir / "d.pgm").string());
  write_label_ppm(labels, (dir / "l.ppm").string());
  const std::string pgm = read_text_file((dir / "d.pgm").string());
  const std::string ppm = read_text_file((dir / "l.ppm").string());
  EXPECT_EQ(pgm.rfind("P5\n4 3\n65535\n", 0), 0u);
  EXPECT_EQ(pgm.size(), std::string("P5\n4 3\n65535\n").size() + 4 * 3 * 2);
  EXPECT_EQ(ppm.rfind("P6\n4 3\n255\n", 0), 0u);
  EXPECT_EQ(ppm.size(), std::string("P6\n4 3\n255\n").size() + 4 * 3 * 3);
  // Big-endian millimeters at (1,1).
  const std::size_t at = std::string("P5\n4 3\n65535\n").size() + (1 * 4 + 1) * 2;
  EXPECT_EQ((static_cast<unsigned char>(pgm[at]) << 8) | static_cast<unsigned char>(pgm[at + 1]), 1500);
  std::filesystem::remove_all(dir);
}
