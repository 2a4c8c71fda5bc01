#include "active_vision/episode.hpp"

#include "active_vision/config.hpp"
#include "active_vision/errors.hpp"

#include <openssl/evp.h>

#include <json.hpp>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>

namespace active_vision {

namespace {

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
  std::uint64_t x = seed ^ (salt * 0x9e3779b97f4a7c15ULL);
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t kPlannerSalt = 1;
constexpr std::uint64_t kOracleSalt = 2;
constexpr std::uint64_t kDepthSalt = 3;

void write_text(const std::filesystem::path& path, const std::string& text) { write_text_file(path.string(), text); }

}  // namespace

std::string_view to_string(PlannerKind kind) { return kind == PlannerKind::nbv ? "nbv" : "zigzag"; }
std::string_view to_string(StartKind kind) { return kind == StartKind::facing ? "facing" : "unoriented"; }

Pose start_pose(const EpisodeConfig& cfg, const Box& bounds) {
  return cfg.start == StartKind::facing ? facing_start_pose(bounds) : unoriented_start_pose(bounds);
}

ZigzagConfig zigzag_config_for(const Box& bounds, const Pose& start) {
  ZigzagConfig zz;
  zz.standoff = kDefaultStandoff + 0.5 * bounds.size().y();
  zz.centroid = start.position + zz.standoff * start.optical_axis();
  zz.width = bounds.size().x();
  zz.height = 0.6 * bounds.size().z();
  return zz;
}

OracleNoiseConfig episode_oracle_noise(const EpisodeConfig& cfg) {
  OracleNoiseConfig noise = cfg.oracle;
  noise.seed = mix_seed(cfg.seed, kOracleSalt);
  return noise;
}

GroundTruthScene scene_for(const EpisodeConfig& cfg) {
  ScenarioSpec spec = cfg.scenario;
  spec.seed = cfg.seed;
  return generate_scenario(spec);
}

EpisodeResult run_episode(const EpisodeConfig& cfg, SegmentationBackend& backend) {
  return run_episode(cfg, scene_for(cfg), backend);
}

EpisodeResult run_episode(const EpisodeConfig& cfg, const GroundTruthScene& scene, SegmentationBackend& backend,
                          const ViewObserver& observer) {
  cfg.validate();
  if (std::abs(cfg.scenario.resolution - scene.resolution()) > 1e-12) {
    throw ConfigError("scene.resolution", "does not match the scene's resolution");
  }
  using Clock = std::chrono::steady_clock;
  const CameraIntrinsics& intr = cfg.intrinsics;
  const Box bounds = scene.bounds();

  EpisodeResult result;
  result.map = SemanticOccupancyMap(scene.resolution(), cfg.prior);
  result.total_fruit_clusters = scene.fruit_cluster_count();
  if (cfg.planner == PlannerKind::nbv) result.planner_log = planner_log_header();

  PlannerConfig planner_cfg = cfg.planner_cfg;
  std::mt19937_64 planner_rng(mix_seed(cfg.seed, kPlannerSalt));

  const AttentionRegion attention{bounds, cfg.attention, cfg.attention_margin};
  Pose current = start_pose(cfg, bounds);
  const std::vector<Pose> zigzag = zigzag_poses(zigzag_config_for(bounds, current));

  for (int step = 1; step <= cfg.steps; ++step) {
    const auto t0 = Clock::now();
    RenderedView view = render_view(scene, current, intr, planner_cfg.threads);
    const DepthImage depth =
        apply_depth_noise(view.depth, intr, cfg.sensor.sigma, cfg.sensor.dropout_p, mix_seed(cfg.seed, kDepthSalt + 16 * step));
    if (observer) observer(step, view, depth);

    SegmentationRequest req = make_label_request(static_cast<std::uint64_t>(step), view.labels, cfg.prompt,
                                                 cfg.box_threshold, cfg.text_threshold);
    SegmentationResponse resp;
    try {
      resp = backend.segment(req);
    } catch (const TransportError& e) {
      result.failed_step = step;
      result.failure = e.what();
      break;
    } catch (const ProtocolError& e) {
      result.failed_step = step;
      result.failure = e.what();
      break;
    }

    std::vector<DecodedMask> masks;
    for (const auto& m : resp.masks) {
      const auto cls = resolve_prompt(m.class_name, cfg.aliases);
      if (!cls) continue;
      masks.push_back({rle_decode(m.rle, req.width, req.height), *cls, m.confidence, m.instance_id});
    }
    std::vector<Vec3> cloud;
    for (const auto& p : depth_to_cloud(depth, nullptr, current, intr, cfg.cloud_stride)) cloud.push_back(p.position);
    result.map.integrate_observation(cloud, masks, depth, current, intr);
    result.visited.push_back(current);

    StepMetrics metrics;
    metrics.step = step;
    const DetectionScores scores = f1_metrics(result.map, scene);
    metrics.precision = scores.precision;
    metrics.recall = scores.recall;
    metrics.f1 = scores.f1;
    metrics.fruit_clusters_found = count_found_fruit_clusters(result.map, scene, cfg.min_cluster);
    metrics.map_size = result.map.size();

    const Box region = effective_region(attention, result.map);
    Pose next = current;
    bool stop = false;
    if (cfg.planner == PlannerKind::nbv) {
      if (step <= planner_cfg.max_steps) {
        auto candidates = sample_candidates(planner_cfg, region, current, planner_rng);
        const Selection sel =
            select_nbv(result.map, std::move(candidates), intr, planner_cfg, region, current, result.visited);
        result.planner_log += planner_log_rows(step, sel);
        next = sel.chosen.pose;
        metrics.utility_chosen = sel.chosen.utility;
        stop = planner_cfg.early_stop_epsilon > 0.0 && sel.chosen.utility < planner_cfg.early_stop_epsilon;
      }
    } else {
      next = zigzag[static_cast<std::size_t>(step - 1) % zigzag.size()];
      const Visibility vis = raycast_visible(result.map, next, intr, planner_cfg.ray_stride, region);
      metrics.utility_chosen = expected_gain(result.map, vis.in_region);
    }
    result.planned.push_back(next);
    if (cfg.record_wall_time) {
      metrics.wall_ms = std::chrono::duration_cast<std::chrono::milliseconds>(Clock::now() - t0).count();
    }
    result.steps.push_back(metrics);
    current = next;
    if (stop) break;
  }
  return result;
}

std::string metrics_csv(const std::vector<StepMetrics>& steps) {
  std::string out = std::string(kMetricsHeader) + "\n";
  char buf[256];
  for (const auto& s : steps) {
    std::snprintf(buf, sizeof(buf), "%d,%.6f,%.6f,%.6f,%d,%zu,%.6f,%lld\n", s.step, s.precision, s.recall, s.f1,
                  s.fruit_clusters_found, s.map_size, s.utility_chosen, static_cast<long long>(s.wall_ms));
    out += buf;
  }
  return out;
}

std::string content_hash(std::string_view content) {
  const std::string header = "blob " + std::to_string(content.size()) + '\0';
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int length = 0;
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  EVP_DigestInit_ex(ctx, EVP_sha1(), nullptr);
  EVP_DigestUpdate(ctx, header.data(), header.size());
  EVP_DigestUpdate(ctx, content.data(), content.size());
  EVP_DigestFinal_ex(ctx, digest, &length);
  EVP_MD_CTX_free(ctx);
  static constexpr char kHex[] = "0123456789abcdef";
  std::string hex;
  for (unsigned int n = 0; n < length; ++n) {
    hex.push_back(kHex[digest[n] >> 4]);
    hex.push_back(kHex[digest[n] & 0xf]);
  }
  return hex;
}

std::string episode_manifest(const EpisodeConfig& cfg, const GroundTruthScene& scene, const EpisodeResult& result) {
  nlohmann::ordered_json obj;
  obj["config"] = dump_config(cfg);
  obj["seed"] = cfg.seed;
  obj["scene_hash"] = content_hash(save_scene(scene));
  obj["planner"] = std::string(to_string(cfg.planner));
  obj["steps_completed"] = result.steps.size();
  obj["total_fruit_clusters"] = result.total_fruit_clusters;
  if (result.failed_step) {
    obj["failed_step"] = *result.failed_step;
    obj["failure"] = result.failure;
  }
  return obj.dump(2) + "\n";
}

void persist_episode(const std::string& directory, const EpisodeConfig& cfg, const GroundTruthScene& scene,
                     const EpisodeResult& result) {
  const std::filesystem::path dir(directory);
  std::filesystem::create_directories(dir);
  write_text(dir / "metrics.csv", metrics_csv(result.steps));
  write_text(dir / "map.txt", save_map(result.map));
  write_text(dir / "manifest.json", episode_manifest(cfg, scene, result));
  if (!result.planner_log.empty()) write_text(dir / "planner_log.csv", result.planner_log);
}

std::string comparison_csv(const std::vector<ComparisonRow>& rows) {
  std::string out = "planner,final_f1,clusters_found,total_fruit\n";
  char buf[128];
  for (const auto& row : rows) {
    std::snprintf(buf, sizeof(buf), "%s,%.6f,%d,%d\n", std::string(to_string(row.planner)).c_str(), row.final_f1,
                  row.clusters_found, row.total_fruit);
    out += buf;
  }
  return out;
}

}  // namespace active_vision
