#include "active_vision/metrics.hpp"

#include "active_vision/errors.hpp"

#include <cmath>
#include <map>
#include <set>

namespace active_vision {

DetectionScores scores_from_counts(std::size_t tp, std::size_t fp, std::size_t fn) {
  DetectionScores s;
  s.true_positives = tp;
  s.false_positives = fp;
  s.false_negatives = fn;
  s.precision = tp + fp > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 0.0;
  s.recall = tp + fn > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fn) : 0.0;
  s.f1 = s.precision + s.recall > 0.0 ? 2.0 * s.precision * s.recall / (s.precision + s.recall) : 0.0;
  return s;
}

DetectionScores f1_metrics(const SemanticOccupancyMap& map, const GroundTruthScene& scene, SemanticClass target) {
  if (std::abs(map.resolution() - scene.resolution()) > 1e-12) {
    throw InvalidInput("map and scene resolutions differ");
  }
  std::size_t tp = 0;
  std::size_t fp = 0;
  for (const auto& key : map.keys_labeled(target)) {
    if (scene.at(key) == target) {
      ++tp;
    } else {
      ++fp;
    }
  }
  const std::size_t truth = scene.keys_of(target).size();
  return scores_from_counts(tp, fp, truth - tp);
}

int count_fruit_clusters(const SemanticOccupancyMap& map, int min_cluster) {
  int count = 0;
  for (const auto& comp : connected_components_26(map.keys_labeled(SemanticClass::fruit))) {
    if (static_cast<int>(comp.size()) >= min_cluster) ++count;
  }
  return count;
}

int count_found_fruit_clusters(const SemanticOccupancyMap& map, const GroundTruthScene& scene, int min_cluster) {
  if (std::abs(map.resolution() - scene.resolution()) > 1e-12) {
    throw InvalidInput("map and scene resolutions differ");
  }
  std::map<VoxelKey, std::size_t> truth_cluster;
  const auto truth = connected_components_26(scene.keys_of(SemanticClass::fruit));
  for (std::size_t c = 0; c < truth.size(); ++c) {
    for (const auto& key : truth[c]) truth_cluster[key] = c;
  }
  std::set<std::size_t> matched;
  int unmatched = 0;
  for (const auto& comp : connected_components_26(map.keys_labeled(SemanticClass::fruit))) {
    if (static_cast<int>(comp.size()) < min_cluster) continue;
    bool hit = false;
    for (const auto& key : comp) {
      if (auto it = truth_cluster.find(key); it != truth_cluster.end()) {
        matched.insert(it->second);
        hit = true;
      }
    }
    if (!hit) ++unmatched;
  }
  return static_cast<int>(matched.size()) + unmatched;
}

}  // namespace active_vision
