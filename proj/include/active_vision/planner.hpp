#pragma once

#include "active_vision/core.hpp"
#include "active_vision/semantic_map.hpp"

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace active_vision {

/// Binary entropy in bits of a voxel's confidence; 0*log2(0) is taken as 0.
/// Throws InvalidInput outside [0,1].
double semantic_information(double p);

enum class AttentionMode { fixed, automatic };

struct AttentionRegion {
  Box box;  // fixed box, and the fallback in automatic mode
  AttentionMode mode = AttentionMode::fixed;
  double margin = 0.10;
};

/// Box used for this planning step. Automatic mode takes the bounding box of
/// `target`-labeled voxels dilated by the margin, or the fixed box if none.
Box effective_region(const AttentionRegion& region, const SemanticOccupancyMap& map,
                     SemanticClass target = SemanticClass::fruit);

struct ViewpointCandidate {
  Pose pose;
  int id = 0;
  double utility = 0.0;
  std::size_t visible_count = 0;      // |X|
  std::size_t visible_in_region = 0;  // |X ∩ B|
};

struct PlannerConfig {
  int candidates = 32;
  double radius_min = 0.4;
  double radius_max = 0.8;
  double azimuth_span_deg = 75.0;  // about the front direction (-y)
  double elevation_min_deg = -10.0;
  double elevation_max_deg = 45.0;
  Box workspace{Vec3(-1.2, -1.4, 0.0), Vec3(1.2, -0.3, 1.6)};
  int ray_stride = 4;
  int max_steps = 8;
  std::uint64_t seed = 7;
  double early_stop_epsilon = 0.0;  // <= 0 disables early stopping
  unsigned threads = 0;             // 0: hardware concurrency
  /// Candidates closer than this to an already visited pose (the current one
  /// included) are scored and logged but not selected, unless nothing else
  /// is left. Re-rendering from where the camera has been adds almost no
  /// surface to a map that stores only observed voxels. 0 disables.
  double revisit_radius = 0.4;

  void validate() const;
  bool operator==(const PlannerConfig&) const = default;
};

/// Candidate 0 is `current`; then `cfg.candidates` poses sampled on the
/// spherical sector around the region centroid, aimed at it, and restricted
/// to the workspace. Throws InvalidInput if no sample lands in the workspace.
std::vector<ViewpointCandidate> sample_candidates(const PlannerConfig& cfg, const Box& region, const Pose& current,
                                                  std::mt19937_64& rng);

struct Visibility {
  std::vector<VoxelKey> in_region;  // X ∩ B, sorted, unique
  std::size_t visible_count = 0;    // |X|
};

/// First stored-occupied voxel along each sampled pixel ray within the clip
/// range. Unknown space is transparent.
Visibility raycast_visible(const SemanticOccupancyMap& map, const Pose& pose, const CameraIntrinsics& intr,
                           int stride, const Box& region);

/// Sum of semantic_information(effective_confidence) over `keys`.
double expected_gain(const SemanticOccupancyMap& map, std::span<const VoxelKey> keys);

/// Index of the best candidate: highest utility, then shorter travel from
/// `current`, then smaller id.
std::size_t best_candidate(std::span<const ViewpointCandidate> candidates, const Pose& current);

struct Selection {
  ViewpointCandidate chosen;
  std::vector<ViewpointCandidate> evaluated;  // sorted by id
};

/// Scores every candidate against a read-only map snapshot (in parallel) and
/// picks the best among those outside `cfg.revisit_radius` of `current` and
/// `visited`. Throws InvalidInput on an empty candidate list.
Selection select_nbv(const SemanticOccupancyMap& map, std::vector<ViewpointCandidate> candidates,
                     const CameraIntrinsics& intr, const PlannerConfig& cfg, const Box& region, const Pose& current,
                     const std::vector<Pose>& visited = {});

struct ZigzagConfig {
  int columns = 4;
  int rows = 2;
  double standoff = 0.85;  // distance of the pose plane in front of the centroid
  Vec3 centroid{0.0, 0.0, 0.5};
  double width = 0.8;
  double height = 0.6;
};

/// Serpentine sweep over a columns x rows grid on the vertical plane in front
/// of the plant (-y side), every pose aimed at the centroid.
std::vector<Pose> zigzag_poses(const ZigzagConfig& cfg);

/// `step,candidate,px,py,pz,qw,qx,qy,qz,utility,visible_count,chosen`
std::string planner_log_header();
std::string planner_log_rows(int step, const Selection& selection);

}  // namespace active_vision
