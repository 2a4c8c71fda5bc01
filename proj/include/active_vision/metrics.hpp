#pragma once

#include "active_vision/scene.hpp"
#include "active_vision/semantic_map.hpp"

namespace active_vision {

struct DetectionScores {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::size_t true_positives = 0;
  std::size_t false_positives = 0;
  std::size_t false_negatives = 0;
};

/// Precision/recall/F1 from raw counts, zero-guarded.
DetectionScores scores_from_counts(std::size_t tp, std::size_t fp, std::size_t fn);

/// Voxel-level scores of `target`-labeled map voxels against the scene's
/// `target` voxels. Throws InvalidInput if the resolutions differ.
DetectionScores f1_metrics(const SemanticOccupancyMap& map, const GroundTruthScene& scene,
                           SemanticClass target = SemanticClass::fruit);

/// 26-connected components of fruit-labeled map voxels with at least
/// `min_cluster` voxels.
int count_fruit_clusters(const SemanticOccupancyMap& map, int min_cluster = 3);

/// Fruit clusters found, judged against the scene: map components of at
/// least `min_cluster` voxels are credited to the ground-truth clusters they
/// overlap, so fragments of one partly seen cluster count once. Components
/// overlapping no ground-truth fruit count individually. Throws InvalidInput
/// if the resolutions differ.
int count_found_fruit_clusters(const SemanticOccupancyMap& map, const GroundTruthScene& scene, int min_cluster = 3);

}  // namespace active_vision
