#pragma once

#include "active_vision/metrics.hpp"
#include "active_vision/oracle.hpp"
#include "active_vision/planner.hpp"
#include "active_vision/scene.hpp"
#include "active_vision/semantic_map.hpp"
#include "active_vision/sensor.hpp"
#include "active_vision/transport.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace active_vision {

enum class PlannerKind { nbv, zigzag };
enum class StartKind { facing, unoriented };

std::string_view to_string(PlannerKind kind);
std::string_view to_string(StartKind kind);

struct SensorNoise {
  double sigma = 0.0;
  double dropout_p = 0.0;
  bool operator==(const SensorNoise&) const = default;
};

struct EpisodeConfig {
  ScenarioSpec scenario = ScenarioSpec::defaults(ScenarioKind::full_occlusion);
  PlannerKind planner = PlannerKind::nbv;
  PlannerConfig planner_cfg;
  AttentionMode attention = AttentionMode::automatic;
  double attention_margin = 0.10;
  OracleNoiseConfig oracle{0.5, 0.95, 0.0, 0, 0};
  double box_threshold = 0.0;
  double text_threshold = 0.0;
  std::string prompt = "fruit";
  PromptAliases aliases = default_prompt_aliases();
  SensorNoise sensor;
  CameraIntrinsics intrinsics;
  int cloud_stride = 1;
  UnlabeledPrior prior;
  int min_cluster = 3;
  StartKind start = StartKind::facing;
  int steps = 8;
  std::uint64_t seed = 7;
  bool record_wall_time = false;
  std::string output;

  /// Throws ConfigError naming the offending key.
  void validate() const;
  bool operator==(const EpisodeConfig&) const = default;
};

struct StepMetrics {
  int step = 0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  int fruit_clusters_found = 0;
  std::size_t map_size = 0;
  double utility_chosen = 0.0;
  std::int64_t wall_ms = 0;
};

struct EpisodeResult {
  std::vector<StepMetrics> steps;
  std::vector<Pose> visited;  // pose rendered at each step
  std::vector<Pose> planned;  // pose chosen at the end of each step
  SemanticOccupancyMap map{0.02};
  std::string planner_log;  // CSV, nbv only
  int total_fruit_clusters = 0;
  std::optional<int> failed_step;
  std::string failure;
};

/// Pose the episode starts from.
Pose start_pose(const EpisodeConfig& cfg, const Box& bounds);

/// Zig-zag sweep sized for a plant with these bounds. The sweep is laid out
/// around the point the start pose looks at, at the nominal standoff, since
/// a predefined path cannot know where the plant really is. For the facing
/// start that point is the plant centroid.
ZigzagConfig zigzag_config_for(const Box& bounds, const Pose& start);

/// Runs perceive -> segment -> integrate -> score -> plan for cfg.steps
/// iterations. A TransportError or ProtocolError from the backend ends the
/// episode early with `failed_step` set; completed steps are kept.
/// Called once per step with the rendered view and the (noisy) depth used.
using ViewObserver = std::function<void(int step, const RenderedView& view, const DepthImage& depth)>;

EpisodeResult run_episode(const EpisodeConfig& cfg, const GroundTruthScene& scene, SegmentationBackend& backend,
                          const ViewObserver& observer = {});

/// Convenience overload generating the scene from cfg.scenario with cfg.seed.
EpisodeResult run_episode(const EpisodeConfig& cfg, SegmentationBackend& backend);

GroundTruthScene scene_for(const EpisodeConfig& cfg);

/// Oracle noise for an in-process backend, seeded from the episode seed.
OracleNoiseConfig episode_oracle_noise(const EpisodeConfig& cfg);

inline constexpr const char* kMetricsHeader = "step,precision,recall,f1,clusters,map_size,utility,wall_ms";

std::string metrics_csv(const std::vector<StepMetrics>& steps);

/// git-style blob hash (SHA-1 of "blob <size>\0" + content), hex.
std::string content_hash(std::string_view content);

/// Manifest text object: config echo, seed, scene hash, outcome.
std::string episode_manifest(const EpisodeConfig& cfg, const GroundTruthScene& scene, const EpisodeResult& result);

/// Writes metrics.csv, map.txt, manifest.json (and planner_log.csv for nbv)
/// into `directory`, creating it if needed.
void persist_episode(const std::string& directory, const EpisodeConfig& cfg, const GroundTruthScene& scene,
                     const EpisodeResult& result);

struct ComparisonRow {
  PlannerKind planner;
  double final_f1 = 0.0;
  int clusters_found = 0;
  int total_fruit = 0;
};

/// `planner,final_f1,clusters_found,total_fruit`
std::string comparison_csv(const std::vector<ComparisonRow>& rows);

}  // namespace active_vision
