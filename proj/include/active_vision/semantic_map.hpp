#pragma once

#include "active_vision/core.hpp"
#include "active_vision/rle.hpp"
#include "active_vision/scene.hpp"
#include "active_vision/sensor.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

namespace active_vision {

/// Confidences of labeled records never drop below this floor.
inline constexpr double kConfidenceFloor = 0.01;

struct SemanticRecord {
  std::optional<SemanticClass> label;  // nullopt: unlabeled
  double confidence = 0.0;             // p_s, meaningful when labeled
  std::optional<std::int64_t> instance_id;
  std::uint32_t labeled_hits = 0;
  std::uint32_t unlabeled_observations = 0;  // k

  bool labeled() const { return label.has_value(); }
  bool operator==(const SemanticRecord&) const = default;
};

struct SemanticObservation {
  SemanticClass label;
  double confidence = 0.0;
  std::optional<std::int64_t> instance_id;
};

/// Max fusion. Same class: keep the larger confidence. Different class: the
/// strictly more confident hypothesis wins, ties keep the existing one.
/// Unlabeled records adopt the observation. Any labeled fuse resets k.
SemanticRecord fuse_record(const SemanticRecord& existing, const SemanticObservation& incoming);

/// Prior for voxels no mask has claimed, decaying with each unlabeled sighting.
struct UnlabeledPrior {
  double decay = 0.6;
  double floor = 0.05;
  bool operator==(const UnlabeledPrior&) const = default;
};

/// p_s for labeled records, clamp(0.5 * decay^k, floor, 0.5) otherwise.
double effective_confidence(const SemanticRecord& record, const UnlabeledPrior& prior = {});

struct MaskPoint {
  Vec3 position;
  double depth = 0.0;
};

/// Median/MAD depth gate: keeps points with |z - median| <= max(3 * 1.4826 * MAD, 2r).
std::vector<MaskPoint> outlier_filter(const std::vector<MaskPoint>& points, double resolution);

struct DecodedMask {
  Mask bits;  // row-major, same size as the depth image
  SemanticClass label = SemanticClass::fruit;
  double confidence = 0.0;
  std::optional<std::int64_t> instance_id;
};

struct IntegrationSummary {
  std::size_t new_voxels = 0;
  std::size_t updated_voxels = 0;
  std::size_t outliers_rejected = 0;
};

/// Sparse store of occupied voxels with one semantic record each. Voxels are
/// never removed. Not synchronized: integrate with exclusive access, read
/// concurrently otherwise.
class SemanticOccupancyMap {
 public:
  using Records = std::unordered_map<VoxelKey, SemanticRecord, VoxelKeyHash>;

  explicit SemanticOccupancyMap(double resolution, UnlabeledPrior prior = {});

  double resolution() const { return resolution_; }
  const UnlabeledPrior& prior() const { return prior_; }
  std::size_t size() const { return records_.size(); }
  std::uint64_t observation_epoch() const { return epoch_; }
  const Records& records() const { return records_; }

  bool occupied(const VoxelKey& key) const { return records_.contains(key); }
  const SemanticRecord* find(const VoxelKey& key) const;
  double effective_confidence(const VoxelKey& key) const;

  /// Inserts (or keeps) an occupied voxel; returns true if it was new.
  bool insert(const VoxelKey& key);
  /// Fuses into the record at `key`, inserting it first if needed.
  void fuse(const VoxelKey& key, const SemanticObservation& obs);
  /// Overwrites a record directly (fixtures and map loading).
  void set(const VoxelKey& key, const SemanticRecord& record);

  /// Adds the cloud (surface points measured from `pose`), fuses every mask's
  /// filtered 3D points, and bumps k on observed voxels no mask claimed.
  /// Masks must be sized like `depth`.
  IntegrationSummary integrate_observation(const std::vector<Vec3>& cloud, const std::vector<DecodedMask>& masks,
                                           const DepthImage& depth, const Pose& pose,
                                           const CameraIntrinsics& intr);

  /// Stored voxels whose centers lie inside the closed box, sorted by key.
  std::vector<std::pair<VoxelKey, SemanticRecord>> voxels_in_region(const Box& box) const;

  std::vector<VoxelKey> keys_labeled(SemanticClass c) const;
  std::vector<VoxelKey> sorted_keys() const;

 private:
  double resolution_;
  UnlabeledPrior prior_;
  Records records_;
  std::uint64_t epoch_ = 0;
};

/// Map dump: scene-style header, then `i j k class p_s k instance_id` per
/// voxel (class "unlabeled", instance -1 when absent).
std::string save_map(const SemanticOccupancyMap& map);
SemanticOccupancyMap load_map(std::string_view text);

}  // namespace active_vision
