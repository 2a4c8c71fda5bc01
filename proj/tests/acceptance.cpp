// Acceptance runner: prints one PASS/FAIL line per criterion and exits
// nonzero if any criterion fails.

#include "active_vision/config.hpp"
#include "active_vision/episode.hpp"
#include "active_vision/errors.hpp"
#include "active_vision/transport.hpp"

#include "test_support.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iostream>
#include <string>
#include <vector>

#include <unistd.h>

using namespace av_test;
namespace fs = std::filesystem;

namespace {

constexpr std::array kScenarios = {ScenarioKind::full_occlusion, ScenarioKind::unoriented_start,
                                   ScenarioKind::multiple_clusters, ScenarioKind::single_cluster};
constexpr int kSeeds = 5;

struct Outcome {
  bool pass = true;
  std::string detail;
};

std::string fmt(const char* format, double a) {
  char buf[96];
  std::snprintf(buf, sizeof(buf), format, a);
  return buf;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

GroundTruthScene bundled_scene(ScenarioKind kind, int seed) {
  return load_scene_file(std::string(AV_SCENE_DIR) + "/" + std::string(to_string(kind)) + "_seed" +
                         std::to_string(seed) + ".scene");
}

EpisodeConfig episode_config(ScenarioKind kind, int seed) {
  return parse_config("", {"scenario=" + std::string(to_string(kind)), "seed=" + std::to_string(seed)}).config;
}

struct EpisodeRun {
  EpisodeResult result;
  double seconds = 0.0;
};

EpisodeRun run(const EpisodeConfig& cfg, const GroundTruthScene& scene) {
  InProcessOracle oracle(episode_oracle_noise(cfg), cfg.aliases);
  const auto start = std::chrono::steady_clock::now();
  EpisodeRun out{run_episode(cfg, scene, oracle)};
  out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return out;
}

struct TrendRow {
  double nbv = 0.0;
  double zigzag = 0.0;
  double slowest_s = 0.0;
};

// Median final F1 per planner over the bundled seeds.
TrendRow trend(ScenarioKind kind) {
  std::vector<double> nbv, zigzag;
  TrendRow row;
  for (int seed = 1; seed <= kSeeds; ++seed) {
    const GroundTruthScene scene = bundled_scene(kind, seed);
    for (PlannerKind planner : {PlannerKind::nbv, PlannerKind::zigzag}) {
      EpisodeConfig cfg = episode_config(kind, seed);
      cfg.planner = planner;
      const EpisodeRun r = run(cfg, scene);
      if (r.result.failed_step || static_cast<int>(r.result.steps.size()) != cfg.steps) {
        throw std::runtime_error("episode did not complete: " + r.result.failure);
      }
      (planner == PlannerKind::nbv ? nbv : zigzag).push_back(r.result.steps.back().f1);
      row.slowest_s = std::max(row.slowest_s, r.seconds);
    }
  }
  row.nbv = median(nbv);
  row.zigzag = median(zigzag);
  return row;
}

Outcome trend_hard() {
  Outcome o;
  double slowest = 0.0;
  for (ScenarioKind kind : {ScenarioKind::full_occlusion, ScenarioKind::unoriented_start}) {
    const TrendRow row = trend(kind);
    const double margin = row.nbv - row.zigzag;
    o.pass = o.pass && margin >= 0.05;
    slowest = std::max(slowest, row.slowest_s);
    o.detail += std::string(to_string(kind)) + " nbv " + fmt("%.3f", row.nbv) + " zigzag " + fmt("%.3f", row.zigzag) +
                " (margin " + fmt("%+.3f", margin) + " >= 0.05); ";
  }
  o.pass = o.pass && slowest < 60.0;
  o.detail += "slowest episode " + fmt("%.2f", slowest) + " s (< 60)";
  return o;
}

Outcome trend_close() {
  Outcome o;
  for (ScenarioKind kind : {ScenarioKind::multiple_clusters, ScenarioKind::single_cluster}) {
    const TrendRow row = trend(kind);
    o.pass = o.pass && row.nbv >= row.zigzag;
    o.detail += std::string(to_string(kind)) + " nbv " + fmt("%.3f", row.nbv) + " >= zigzag " +
                fmt("%.3f", row.zigzag) + "; ";
  }
  return o;
}

Outcome entropy_exactness() {
  Outcome o;
  const double peak = semantic_information(0.5);
  const bool bounds = semantic_information(0.0) == 0.0 && semantic_information(1.0) == 0.0;
  std::mt19937_64 rng(17);
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const double p = uniform(rng, 0.0, 1.0);
    worst = std::max(worst, std::abs(semantic_information(p) - semantic_information(1.0 - p)));
  }
  o.pass = std::abs(peak - 1.0) < 1e-12 && bounds && worst < 1e-12;
  o.detail = "I(0.5) = " + fmt("%.15f", peak) + ", I(0) = I(1) = 0: " + (bounds ? "yes" : "no") +
             ", max |I(p) - I(1-p)| over 1000 p = " + fmt("%.2e", worst) + " (< 1e-12)";
  return o;
}

struct OracleFixtures {
  double worst_gain_error = 0.0;
  double worst_set_difference = 0.0;
  std::size_t views = 0;
};

// Five random 16^3 maps with 20 random viewpoints each. The gain oracle marches
// rays at r/100; the visibility comparison uses the r/4 sampler on the union
// of visible sets over each map's viewpoints.
OracleFixtures compute_oracle_fixtures() {
  OracleFixtures out;
  const CameraIntrinsics intr;
  const PlannerConfig planner;
  std::mt19937_64 rng(2024);
  for (int m = 0; m < 5; ++m) {
    const SemanticOccupancyMap map = random_cube_map(rng);
    const double r = map.resolution();
    const Box cube{Vec3::Zero(), Vec3::Constant(16 * r)};
    std::set<VoxelKey> dda_union, sampled_union;
    for (int v = 0; v < 20; ++v) {
      const Pose pose = random_view(rng, cube.center(), 0.4, 0.9);
      const Visibility dda = raycast_visible(map, pose, intr, planner.ray_stride, cube);
      const Visibility fine = fine_sampled_visible(map, pose, intr, planner.ray_stride, cube, r / 100, cube);
      const Visibility coarse = fine_sampled_visible(map, pose, intr, planner.ray_stride, cube, r / 4, cube);
      const double g = expected_gain(map, dda.in_region);
      const double g_ref = fine_sampled_gain(map, fine.in_region);
      const double err = g_ref > 0.0 ? std::abs(g - g_ref) / g_ref : (g == 0.0 ? 0.0 : 1.0);
      out.worst_gain_error = std::max(out.worst_gain_error, err);
      dda_union.insert(dda.in_region.begin(), dda.in_region.end());
      sampled_union.insert(coarse.in_region.begin(), coarse.in_region.end());
      ++out.views;
    }
    const double diff = symmetric_difference_ratio({dda_union.begin(), dda_union.end()},
                                                   {sampled_union.begin(), sampled_union.end()});
    out.worst_set_difference = std::max(out.worst_set_difference, diff);
  }
  return out;
}

const OracleFixtures& oracle_fixtures() {
  static const OracleFixtures fixtures = compute_oracle_fixtures();
  return fixtures;
}

Outcome gain_oracle(const OracleFixtures& f) {
  return {f.worst_gain_error <= 0.02, "worst relative error " + fmt("%.4f", f.worst_gain_error) + " over " +
                                          std::to_string(f.views) + " viewpoints on 5 maps (<= 0.02)"};
}

Outcome raycast_oracle(const OracleFixtures& f) {
  return {f.worst_set_difference <= 0.02,
          "worst |DDA xor sampled| / |DDA u sampled| " + fmt("%.4f", f.worst_set_difference) +
              " over 20 poses per map, 5 maps (<= 0.02)"};
}

Outcome max_fusion_grid() {
  Outcome o;
  std::size_t checks = 0, failures = 0;
  auto expect = [&](bool ok) {
    ++checks;
    if (!ok) ++failures;
  };
  auto same_semantics = [](const SemanticRecord& a, const SemanticRecord& b) {
    return a.label == b.label && a.confidence == b.confidence && a.instance_id == b.instance_id;
  };
  for (SemanticClass a : kAllClasses) {
    for (SemanticClass b : kAllClasses) {
      for (int i = 1; i <= 20; ++i) {
        for (int j = 1; j <= 20; ++j) {
          const double ca = i / 20.0;
          const double cb = j / 20.0;
          SemanticRecord existing;
          existing.label = a;
          existing.confidence = ca;
          existing.labeled_hits = 1;
          const SemanticObservation obs{b, cb, std::nullopt};
          const SemanticRecord once = fuse_record(existing, obs);
          expect(same_semantics(fuse_record(once, obs), once));
          if (a == b) {
            expect(once.label == a && once.confidence == std::max(ca, cb) && once.confidence >= ca);
          } else if (ca == cb) {
            expect(once.label == a && once.confidence == ca);
          } else {
            expect(once.label == (cb > ca ? b : a) && once.confidence == std::max(ca, cb));
          }
        }
      }
    }
  }
  o.pass = failures == 0;
  o.detail = std::to_string(checks - failures) + "/" + std::to_string(checks) +
             " grid checks hold (idempotence, same-class monotonicity, tie keeps existing)";
  return o;
}

Outcome monotone_recall() {
  Outcome o;
  std::size_t episodes = 0, violations = 0;
  for (ScenarioKind kind : kScenarios) {
    for (int seed = 1; seed <= kSeeds; ++seed) {
      const GroundTruthScene scene = bundled_scene(kind, seed);
      for (PlannerKind planner : {PlannerKind::nbv, PlannerKind::zigzag}) {
        EpisodeConfig cfg = episode_config(kind, seed);
        cfg.planner = planner;
        cfg.oracle = OracleNoiseConfig::exact();
        cfg.sensor = SensorNoise{};
        InProcessOracle oracle(cfg.oracle, cfg.aliases);
        const EpisodeResult result = run_episode(cfg, scene, oracle);
        ++episodes;
        for (std::size_t t = 1; t < result.steps.size(); ++t) {
          if (result.steps[t].recall < result.steps[t - 1].recall) {
            ++violations;
            o.detail += std::string(to_string(kind)) + " seed " + std::to_string(seed) + " step " +
                        std::to_string(t) + "; ";
          }
        }
      }
    }
  }
  o.pass = violations == 0;
  o.detail += std::to_string(episodes) + " exact-oracle episodes, " + std::to_string(violations) +
              " recall decreases (4 scenarios x 5 seeds x 2 planners)";
  return o;
}

Outcome compare_determinism() {
  Outcome o;
  const fs::path root = fs::temp_directory_path() / ("av_acceptance_" + std::to_string(::getpid()));
  fs::remove_all(root);
  std::vector<std::string> outputs;
  for (const char* run_name : {"a", "b"}) {
    const fs::path out = root / run_name;
    const std::string cmd = std::string("\"") + AV_BENCH + "\" compare -s scenario=full_occlusion -s seed=3 -s output=\"" +
                            out.string() + "\" > \"" + (root / (std::string(run_name) + ".stdout")).string() + "\"";
    fs::create_directories(root);
    if (std::system(cmd.c_str()) != 0) {
      o.pass = false;
      o.detail = "compare exited nonzero";
      fs::remove_all(root);
      return o;
    }
    outputs.push_back(read_text_file((out / "nbv" / "metrics.csv").string()) +
                      read_text_file((out / "zigzag" / "metrics.csv").string()) +
                      read_text_file((out / "summary.csv").string()) +
                      read_text_file((root / (std::string(run_name) + ".stdout")).string()));
  }
  fs::remove_all(root);
  o.pass = outputs[0] == outputs[1] && !outputs[0].empty();
  o.detail = std::string("two compare runs: metrics CSVs and summary ") + (o.pass ? "byte-identical" : "differ") +
             " (" + std::to_string(outputs[0].size()) + " bytes)";
  return o;
}

Outcome protocol_goldens() {
  Outcome o;
  const std::vector<ProtocolFixture> fixtures = load_protocol_fixtures();
  std::size_t byte_exact = 0, in_process = 0, over_tcp = 0;
  for (const ProtocolFixture& f : fixtures) {
    const std::string req_payload = unframe(f.request_frame);
    const std::string resp_payload = unframe(f.response_frame);
    const SegmentationRequest req = decode_request(req_payload);
    const SegmentationResponse resp = decode_response(resp_payload);
    if (frame(encode_request(req)) == f.request_frame && frame(encode_response(resp)) == f.response_frame) {
      ++byte_exact;
    }
    if (canonical_response(oracle_segment(req, f.noise)) == resp_payload) ++in_process;
    FrameServer server(0, oracle_handler(f.noise));
    SegmentationClient client(Endpoint{"127.0.0.1", server.port()});
    if (canonical_response(decode_response(client.round_trip(req_payload))) == resp_payload) ++over_tcp;
    server.stop();
  }
  const std::size_t n = fixtures.size();
  o.pass = n == 10 && byte_exact == n && in_process == n && over_tcp == n;
  o.detail = std::to_string(n) + " fixtures; byte-exact decode/encode " + std::to_string(byte_exact) +
             ", in-process oracle match " + std::to_string(in_process) + ", TCP oracle match " +
             std::to_string(over_tcp);
  return o;
}

// Independent flood fill over 26-neighborhoods.
int count_components(const std::vector<VoxelKey>& keys) {
  std::set<VoxelKey> left(keys.begin(), keys.end());
  int count = 0;
  while (!left.empty()) {
    ++count;
    std::vector<VoxelKey> frontier{*left.begin()};
    left.erase(left.begin());
    while (!frontier.empty()) {
      const VoxelKey k = frontier.back();
      frontier.pop_back();
      for (int di = -1; di <= 1; ++di) {
        for (int dj = -1; dj <= 1; ++dj) {
          for (int dk = -1; dk <= 1; ++dk) {
            auto it = left.find(VoxelKey{k.i + di, k.j + dj, k.k + dk});
            if (it == left.end()) continue;
            frontier.push_back(*it);
            left.erase(it);
          }
        }
      }
    }
  }
  return count;
}

// True if the first occupied voxel met walking from `eye` to the target's
// center in steps of `step` is not fruit.
bool occluded_from(const GroundTruthScene& scene, const Vec3& eye, const VoxelKey& target, double step) {
  const Vec3 goal = key_center(target, scene.resolution());
  const Vec3 dir = (goal - eye).normalized();
  const double length = (goal - eye).norm();
  for (double s = 0.0; s <= length + step; s += step) {
    const auto cls = scene.at(voxel_key_of(eye + std::min(s, length) * dir, scene.resolution()));
    if (cls) return *cls != SemanticClass::fruit;
  }
  return false;
}

Outcome scene_contracts() {
  Outcome o;
  std::size_t fruit_checked = 0, visible_fruit = 0, count_mismatches = 0, scenes = 0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    for (ScenarioKind kind : kScenarios) {
      const ScenarioSpec spec = ScenarioSpec::defaults(kind, seed);
      const GroundTruthScene scene = generate_scenario(spec);
      ++scenes;
      const std::vector<VoxelKey> fruit = scene.keys_of(SemanticClass::fruit);
      const int expected = kind == ScenarioKind::single_cluster ? 1 : spec.cluster_count;
      if (count_components(fruit) != expected) {
        ++count_mismatches;
        o.detail += std::string(to_string(kind)) + " seed " + std::to_string(seed) + " component count; ";
      }
      if (kind != ScenarioKind::full_occlusion) continue;
      const Vec3 eye = facing_start_pose(scene.bounds()).position;
      for (const VoxelKey& key : fruit) {
        ++fruit_checked;
        if (!occluded_from(scene, eye, key, scene.resolution() / 4)) ++visible_fruit;
      }
    }
  }
  o.pass = count_mismatches == 0 && visible_fruit == 0 && fruit_checked > 0;
  o.detail += std::to_string(scenes) + " scenes over 20 seeds: " + std::to_string(count_mismatches) +
              " component-count mismatches; full_occlusion " + std::to_string(fruit_checked - visible_fruit) + "/" +
              std::to_string(fruit_checked) + " fruit voxels occluded from the start pose";
  return o;
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"trend_full_occlusion_unoriented_start", trend_hard},
      {"trend_multiple_clusters_single_cluster", trend_close},
      {"semantic_information_exactness", entropy_exactness},
      {"expected_gain_matches_fine_sampling", [] { return gain_oracle(oracle_fixtures()); }},
      {"raycast_matches_fine_sampling", [] { return raycast_oracle(oracle_fixtures()); }},
      {"max_fusion_grid_properties", max_fusion_grid},
      {"monotone_recall_exact_oracle", monotone_recall},
      {"compare_determinism", compare_determinism},
      {"protocol_golden_fixtures", protocol_goldens},
      {"scene_generator_contracts", scene_contracts},
  };
  int failed = 0;
  for (const auto& [name, check] : criteria) {
    Outcome o;
    try {
      o = check();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    if (!o.pass) ++failed;
    std::cout << (o.pass ? "PASS " : "FAIL ") << name << ": " << o.detail << std::endl;
  }
  std::cout << (criteria.size() - failed) << "/" << criteria.size() << " criteria passed" << std::endl;
  return failed == 0 ? 0 : 1;
}
