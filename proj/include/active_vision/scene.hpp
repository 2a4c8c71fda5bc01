#pragma once

#include "active_vision/core.hpp"

#include <array>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace active_vision {

enum class SemanticClass : std::uint8_t { background = 0, fruit, leaf, branch, trunk, pot };

inline constexpr std::array kAllClasses = {SemanticClass::background, SemanticClass::fruit,
                                           SemanticClass::leaf,       SemanticClass::branch,
                                           SemanticClass::trunk,      SemanticClass::pot};

std::string_view to_string(SemanticClass c);
std::optional<SemanticClass> parse_semantic_class(std::string_view name);

using VoxelLabels = std::unordered_map<VoxelKey, SemanticClass, VoxelKeyHash>;

/// 26-connected components of a voxel set. Components are ordered by their
/// smallest key and each component's keys are sorted.
std::vector<std::vector<VoxelKey>> connected_components_26(const std::vector<VoxelKey>& keys);

/// Labeled voxel world: what the simulated sensor sees and what the
/// reconstruction is scored against. Immutable after construction.
class GroundTruthScene {
 public:
  /// Throws ValidationError if empty, a key lies outside `bounds`, or the
  /// resolution is not positive.
  GroundTruthScene(double resolution, Box bounds, VoxelLabels voxels);

  double resolution() const { return resolution_; }
  const Box& bounds() const { return bounds_; }
  const VoxelLabels& voxels() const { return voxels_; }
  int fruit_cluster_count() const { return fruit_cluster_count_; }

  std::optional<SemanticClass> at(const VoxelKey& key) const;
  bool occupied(const VoxelKey& key) const { return voxels_.contains(key); }
  std::vector<VoxelKey> keys_of(SemanticClass c) const;
  std::vector<VoxelKey> sorted_keys() const;

  bool operator==(const GroundTruthScene& other) const;

 private:
  double resolution_;
  Box bounds_;
  VoxelLabels voxels_;
  int fruit_cluster_count_ = 0;
};

enum class ScenarioKind { full_occlusion, multiple_clusters, single_cluster, unoriented_start };

std::string_view to_string(ScenarioKind kind);
std::optional<ScenarioKind> parse_scenario_kind(std::string_view name);

struct ScenarioSpec {
  ScenarioKind kind = ScenarioKind::multiple_clusters;
  std::uint64_t seed = 7;
  double resolution = 0.02;
  Vec3 plant_size{0.8, 0.5, 1.0};  // width (x), depth (y), height (z)
  int cluster_count = 6;
  double cluster_radius = 0.045;
  int fruit_per_cluster = 8;
  double occluder_density = 0.4;

  /// Defaults tuned per scenario kind.
  static ScenarioSpec defaults(ScenarioKind kind, std::uint64_t seed = 7);
  void validate() const;
  bool operator==(const ScenarioSpec&) const = default;
};

/// Deterministic procedural plant. Throws GenerationError naming the
/// violated constraint when the spec cannot be satisfied.
GroundTruthScene generate_scenario(const ScenarioSpec& spec);

/// Plant bounds implied by a plant size: centered on x/y, base at z = 0.
Box plant_bounds(const Vec3& plant_size);

/// Standoff of the default start pose in front of the plant (-y side).
inline constexpr double kDefaultStandoff = 0.6;

/// Start pose facing the plant centroid from the front.
Pose facing_start_pose(const Box& bounds, double standoff = kDefaultStandoff);

/// Start pose off to one side and aimed mostly away from the plant.
Pose unoriented_start_pose(const Box& bounds);

/// True if the straight segment from `eye` to the center of `target`, sampled
/// at `step`, meets an occupied non-fruit voxel before any fruit voxel.
bool line_blocked_before_fruit(const GroundTruthScene& scene, const Vec3& eye,
                               const VoxelKey& target, double step);

/// Text scene format:
///   resolution <r>
///   bounds <x0> <y0> <z0> <x1> <y1> <z1>
///   <i> <j> <k> <class>      (one line per voxel, sorted by key)
std::string save_scene(const GroundTruthScene& scene);
GroundTruthScene load_scene(std::string_view text);
void save_scene_file(const GroundTruthScene& scene, const std::string& path);
GroundTruthScene load_scene_file(const std::string& path);

struct SceneStats {
  std::map<SemanticClass, std::size_t> counts;
  std::size_t total = 0;
  int fruit_cluster_count = 0;
  Box bounds;
};

SceneStats scene_stats(const GroundTruthScene& scene);

/// Shortest round-trip decimal representation.
std::string format_double(double value);

}  // namespace active_vision
