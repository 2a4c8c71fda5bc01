#include "active_vision/planner.hpp"

#include "active_vision/errors.hpp"
#include "active_vision/voxel_traversal.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <iterator>
#include <numbers>
#include <set>

namespace active_vision {

double semantic_information(double p) {
  if (!(p >= 0.0 && p <= 1.0)) throw InvalidInput("confidence must lie in [0,1]");
  auto term = [](double x) { return x > 0.0 ? -x * std::log2(x) : 0.0; };
  return term(p) + term(1.0 - p);
}

Box effective_region(const AttentionRegion& region, const SemanticOccupancyMap& map, SemanticClass target) {
  if (region.mode == AttentionMode::fixed) return region.box;
  const auto keys = map.keys_labeled(target);
  if (keys.empty()) return region.box;
  const double r = map.resolution();
  Box box{key_center(keys.front(), r), key_center(keys.front(), r)};
  for (const auto& key : keys) {
    const Vec3 c = key_center(key, r);
    box.min = box.min.cwiseMin(c - Vec3::Constant(r / 2));
    box.max = box.max.cwiseMax(c + Vec3::Constant(r / 2));
  }
  return box.dilated(region.margin);
}

void PlannerConfig::validate() const {
  if (candidates < 1) throw InvalidInput("candidates must be at least 1");
  if (!(radius_min > 0.0 && radius_min <= radius_max)) throw InvalidInput("radius range must satisfy 0 < r_min <= r_max");
  if (ray_stride < 1) throw InvalidInput("ray_stride must be at least 1");
  if (max_steps < 1) throw InvalidInput("max_steps must be at least 1");
  if (elevation_min_deg > elevation_max_deg) throw InvalidInput("elevation range is inverted");
  if (azimuth_span_deg < 0.0) throw InvalidInput("azimuth span must be non-negative");
  if (workspace.degenerate()) throw InvalidInput("workspace box is degenerate");
  if (revisit_radius < 0.0) throw InvalidInput("revisit radius must be non-negative");
}

std::vector<ViewpointCandidate> sample_candidates(const PlannerConfig& cfg, const Box& region, const Pose& current,
                                                  std::mt19937_64& rng) {
  cfg.validate();
  constexpr double kDeg = std::numbers::pi / 180.0;
  const Vec3 centroid = region.center();
  std::uniform_real_distribution<double> radius(cfg.radius_min, cfg.radius_max);
  std::uniform_real_distribution<double> azimuth(-cfg.azimuth_span_deg * kDeg, cfg.azimuth_span_deg * kDeg);
  std::uniform_real_distribution<double> elevation(cfg.elevation_min_deg * kDeg, cfg.elevation_max_deg * kDeg);

  std::vector<ViewpointCandidate> out;
  out.push_back({current, 0});
  const int max_draws = 50 * cfg.candidates;
  int accepted = 0;
  for (int draw = 0; draw < max_draws && accepted < cfg.candidates; ++draw) {
    const double rad = radius(rng);
    const double az = azimuth(rng);
    const double el = elevation(rng);
    // Azimuth 0 is straight in front of the plant (-y).
    const Vec3 offset(rad * std::cos(el) * std::sin(az), -rad * std::cos(el) * std::cos(az), rad * std::sin(el));
    const Vec3 eye = centroid + offset;
    if (!cfg.workspace.contains(eye)) continue;
    ++accepted;
    out.push_back({look_at(eye, centroid, Vec3::UnitZ()), accepted});
  }
  if (accepted == 0) {
    throw InvalidInput("no candidate viewpoint falls inside the workspace; revise the workspace box or radius range");
  }
  return out;
}

Visibility raycast_visible(const SemanticOccupancyMap& map, const Pose& pose, const CameraIntrinsics& intr,
                           int stride, const Box& region) {
  if (stride < 1) throw InvalidInput("stride must be at least 1");
  Visibility result;
  if (map.size() == 0) return result;
  const double r = map.resolution();
  auto occupied = [&](const VoxelKey& key) { return map.occupied(key); };
  std::set<VoxelKey> visible;
  for (int v = 0; v < intr.height; v += stride) {
    for (int u = 0; u < intr.width; u += stride) {
      const Vec3 dir = pose.orientation * pixel_ray(u, v, intr);
      if (auto hit = first_occupied_voxel(pose.position, dir, intr.z_near, intr.z_far, r, occupied)) {
        visible.insert(hit->key);
      }
    }
  }
  result.visible_count = visible.size();
  for (const auto& key : visible) {
    if (region.contains(key_center(key, r))) result.in_region.push_back(key);
  }
  return result;
}

double expected_gain(const SemanticOccupancyMap& map, std::span<const VoxelKey> keys) {
  double gain = 0.0;
  for (const auto& key : keys) gain += semantic_information(map.effective_confidence(key));
  return gain;
}

std::size_t best_candidate(std::span<const ViewpointCandidate> candidates, const Pose& current) {
  if (candidates.empty()) throw InvalidInput("no candidates to choose from");
  constexpr double kUtilityTie = 1e-9;
  constexpr double kDistanceTie = 1e-12;
  auto better = [&](const ViewpointCandidate& a, const ViewpointCandidate& b) {
    if (std::abs(a.utility - b.utility) > kUtilityTie) return a.utility > b.utility;
    const double da = (a.pose.position - current.position).norm();
    const double db = (b.pose.position - current.position).norm();
    if (std::abs(da - db) > kDistanceTie) return da < db;
    return a.id < b.id;
  };
  std::size_t best = 0;
  for (std::size_t n = 1; n < candidates.size(); ++n) {
    if (better(candidates[n], candidates[best])) best = n;
  }
  return best;
}

Selection select_nbv(const SemanticOccupancyMap& map, std::vector<ViewpointCandidate> candidates,
                     const CameraIntrinsics& intr, const PlannerConfig& cfg, const Box& region, const Pose& current,
                     const std::vector<Pose>& visited) {
  if (candidates.empty()) throw InvalidInput("select_nbv needs at least one candidate");
  parallel_for(
      candidates.size(),
      [&](std::size_t n) {
        auto& c = candidates[n];
        const Visibility vis = raycast_visible(map, c.pose, intr, cfg.ray_stride, region);
        c.visible_count = vis.visible_count;
        c.visible_in_region = vis.in_region.size();
        c.utility = expected_gain(map, vis.in_region);
      },
      cfg.threads);
  std::sort(candidates.begin(), candidates.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
  auto near_visited = [&](const ViewpointCandidate& c) {
    if ((c.pose.position - current.position).norm() < cfg.revisit_radius) return true;
    return std::any_of(visited.begin(), visited.end(), [&](const Pose& p) {
      return (c.pose.position - p.position).norm() < cfg.revisit_radius;
    });
  };
  std::vector<ViewpointCandidate> eligible;
  std::copy_if(candidates.begin(), candidates.end(), std::back_inserter(eligible),
               [&](const ViewpointCandidate& c) { return !near_visited(c); });
  const ViewpointCandidate chosen =
      eligible.empty() ? candidates[best_candidate(candidates, current)] : eligible[best_candidate(eligible, current)];
  return {chosen, std::move(candidates)};
}

std::vector<Pose> zigzag_poses(const ZigzagConfig& cfg) {
  if (cfg.columns < 1 || cfg.rows < 1) throw InvalidInput("zig-zag grid needs at least one row and column");
  std::vector<Pose> poses;
  poses.reserve(static_cast<std::size_t>(cfg.columns * cfg.rows));
  auto fraction = [](int index, int count) { return count == 1 ? 0.0 : static_cast<double>(index) / (count - 1) - 0.5; };
  for (int row = 0; row < cfg.rows; ++row) {
    for (int n = 0; n < cfg.columns; ++n) {
      const int col = row % 2 == 0 ? n : cfg.columns - 1 - n;
      // Row 0 is the top row.
      const Vec3 eye(cfg.centroid.x() + fraction(col, cfg.columns) * cfg.width, cfg.centroid.y() - cfg.standoff,
                     cfg.centroid.z() - fraction(row, cfg.rows) * cfg.height);
      poses.push_back(look_at(eye, cfg.centroid, Vec3::UnitZ()));
    }
  }
  return poses;
}

std::string planner_log_header() { return "step,candidate,px,py,pz,qw,qx,qy,qz,utility,visible_count,chosen\n"; }

std::string planner_log_rows(int step, const Selection& selection) {
  std::string out;
  char buf[512];
  for (const auto& c : selection.evaluated) {
    const auto& p = c.pose.position;
    const auto& q = c.pose.orientation;
    std::snprintf(buf, sizeof(buf), "%d,%d,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f,%zu,%d\n", step, c.id, p.x(), p.y(),
                  p.z(), q.w(), q.x(), q.y(), q.z(), c.utility, c.visible_count, c.id == selection.chosen.id ? 1 : 0);
    out += buf;
  }
  return out;
}

}  // namespace active_vision
