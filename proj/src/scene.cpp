#include "active_vision/scene.hpp"

#include "active_vision/errors.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <random>
#include <set>
#include <sstream>

namespace active_vision {

namespace {

constexpr std::array<std::string_view, 6> kClassNames = {"background", "fruit",  "leaf",
                                                          "branch",     "trunk", "pot"};
constexpr std::array<std::string_view, 4> kScenarioNames = {"full_occlusion", "multiple_clusters",
                                                            "single_cluster", "unoriented_start"};

}  // namespace

std::string_view to_string(SemanticClass c) { return kClassNames[static_cast<std::size_t>(c)]; }

std::optional<SemanticClass> parse_semantic_class(std::string_view name) {
  for (std::size_t i = 0; i < kClassNames.size(); ++i) {
    if (kClassNames[i] == name) return static_cast<SemanticClass>(i);
  }
  return std::nullopt;
}

std::string_view to_string(ScenarioKind kind) { return kScenarioNames[static_cast<std::size_t>(kind)]; }

std::optional<ScenarioKind> parse_scenario_kind(std::string_view name) {
  for (std::size_t i = 0; i < kScenarioNames.size(); ++i) {
    if (kScenarioNames[i] == name) return static_cast<ScenarioKind>(i);
  }
  return std::nullopt;
}

std::string format_double(double value) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, end);
}

std::vector<std::vector<VoxelKey>> connected_components_26(const std::vector<VoxelKey>& keys) {
  std::vector<VoxelKey> sorted = keys;
  std::sort(sorted.begin(), sorted.end());
  sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());

  std::unordered_map<VoxelKey, int, VoxelKeyHash> label;
  label.reserve(sorted.size());
  for (const auto& key : sorted) label.emplace(key, -1);

  std::vector<std::vector<VoxelKey>> components;
  std::vector<VoxelKey> stack;
  for (const auto& seed : sorted) {
    if (label[seed] >= 0) continue;
    const int id = static_cast<int>(components.size());
    components.emplace_back();
    label[seed] = id;
    stack.push_back(seed);
    while (!stack.empty()) {
      const VoxelKey cur = stack.back();
      stack.pop_back();
      components[id].push_back(cur);
      for (int di = -1; di <= 1; ++di) {
        for (int dj = -1; dj <= 1; ++dj) {
          for (int dk = -1; dk <= 1; ++dk) {
            if (di == 0 && dj == 0 && dk == 0) continue;
            const VoxelKey n{cur.i + di, cur.j + dj, cur.k + dk};
            auto it = label.find(n);
            if (it != label.end() && it->second < 0) {
              it->second = id;
              stack.push_back(n);
            }
          }
        }
      }
    }
    std::sort(components[id].begin(), components[id].end());
  }
  return components;
}

// ---------------------------------------------------------------------------
// GroundTruthScene

GroundTruthScene::GroundTruthScene(double resolution, Box bounds, VoxelLabels voxels)
    : resolution_(resolution), bounds_(bounds), voxels_(std::move(voxels)) {
  if (!(resolution_ > 0.0) || !std::isfinite(resolution_)) {
    throw ValidationError("scene resolution must be positive");
  }
  if (bounds_.degenerate()) throw ValidationError("scene bounds are degenerate");
  if (voxels_.empty()) throw ValidationError("scene has no voxels");
  const double slack = 1e-9;
  const Box loose = bounds_.dilated(slack);
  for (const auto& [key, cls] : voxels_) {
    if (!loose.contains(key_center(key, resolution_))) {
      throw ValidationError("voxel " + std::to_string(key.i) + " " + std::to_string(key.j) + " " +
                            std::to_string(key.k) + " lies outside the declared bounds at resolution " +
                            format_double(resolution_));
    }
    if (cls == SemanticClass::background) throw ValidationError("background voxels cannot be stored");
  }
  fruit_cluster_count_ = static_cast<int>(connected_components_26(keys_of(SemanticClass::fruit)).size());
}

std::optional<SemanticClass> GroundTruthScene::at(const VoxelKey& key) const {
  auto it = voxels_.find(key);
  if (it == voxels_.end()) return std::nullopt;
  return it->second;
}

std::vector<VoxelKey> GroundTruthScene::keys_of(SemanticClass c) const {
  std::vector<VoxelKey> out;
  for (const auto& [key, cls] : voxels_) {
    if (cls == c) out.push_back(key);
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<VoxelKey> GroundTruthScene::sorted_keys() const {
  std::vector<VoxelKey> out;
  out.reserve(voxels_.size());
  for (const auto& entry : voxels_) out.push_back(entry.first);
  std::sort(out.begin(), out.end());
  return out;
}

bool GroundTruthScene::operator==(const GroundTruthScene& other) const {
  return resolution_ == other.resolution_ && bounds_ == other.bounds_ && voxels_ == other.voxels_;
}

// ---------------------------------------------------------------------------
// Scenario generation

ScenarioSpec ScenarioSpec::defaults(ScenarioKind kind, std::uint64_t seed) {
  ScenarioSpec spec;
  spec.kind = kind;
  spec.seed = seed;
  switch (kind) {
    case ScenarioKind::full_occlusion:
      spec.cluster_count = 4;
      spec.occluder_density = 0.5;
      break;
    case ScenarioKind::multiple_clusters:
      spec.cluster_count = 6;
      spec.occluder_density = 0.3;
      break;
    case ScenarioKind::single_cluster:
      spec.cluster_count = 1;
      spec.occluder_density = 0.7;
      break;
    case ScenarioKind::unoriented_start:
      spec.cluster_count = 6;
      spec.occluder_density = 0.4;
      break;
  }
  return spec;
}

void ScenarioSpec::validate() const {
  if (!(occluder_density >= 0.0 && occluder_density <= 1.0)) {
    throw InvalidInput("occluder_density must lie in [0,1]");
  }
  if (cluster_count < 1) throw InvalidInput("cluster_count must be at least 1");
  if (kind == ScenarioKind::single_cluster && cluster_count != 1) {
    throw InvalidInput("single_cluster requires cluster_count = 1");
  }
  if (fruit_per_cluster < 1) throw InvalidInput("fruit_per_cluster must be at least 1");
  if (!(resolution > 0.0)) throw InvalidInput("resolution must be positive");
  if (!(cluster_radius > 0.0)) throw InvalidInput("cluster_radius must be positive");
  if (!((plant_size.array() > 0.0).all())) throw InvalidInput("plant dimensions must be positive");
}

Box plant_bounds(const Vec3& plant_size) {
  return {Vec3(-plant_size.x() / 2, -plant_size.y() / 2, 0.0),
          Vec3(plant_size.x() / 2, plant_size.y() / 2, plant_size.z())};
}

Pose facing_start_pose(const Box& bounds, double standoff) {
  const Vec3 centroid = bounds.center();
  const Vec3 eye(centroid.x(), bounds.min.y() - standoff, centroid.z());
  return look_at(eye, centroid, Vec3::UnitZ());
}

Pose unoriented_start_pose(const Box& bounds) {
  const Vec3 size = bounds.size();
  // Off to the side and low, yawed 45 degrees away from the plant: the
  // frustum catches at most a corner of the canopy.
  const double yaw = std::numbers::pi / 4;
  const Vec3 eye(bounds.center().x() + 0.5 * size.x(), bounds.min.y() - kDefaultStandoff,
                 bounds.min.z() + 0.3 * size.z());
  const Vec3 dir(std::sin(yaw), std::cos(yaw), 0.0);
  return look_at(eye, eye + dir, Vec3::UnitZ());
}

bool line_blocked_before_fruit(const GroundTruthScene& scene, const Vec3& eye, const VoxelKey& target,
                               double step) {
  const double r = scene.resolution();
  const Vec3 goal = key_center(target, r);
  const Vec3 delta = goal - eye;
  const double length = delta.norm();
  const Vec3 dir = delta / length;
  for (double s = 0.0; s <= length; s += step) {
    const VoxelKey key = voxel_key_of(eye + s * dir, r);
    if (key == target) return false;
    if (auto cls = scene.at(key)) return *cls != SemanticClass::fruit;
  }
  return false;
}

namespace {

class SceneBuilder {
 public:
  SceneBuilder(const ScenarioSpec& spec, Box bounds)
      : r_(spec.resolution), bounds_(bounds), rng_(spec.seed) {}

  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng_); }

  Vec3 unit_vector() {
    const double z = uniform(-1.0, 1.0);
    const double phi = uniform(0.0, 2.0 * std::numbers::pi);
    const double s = std::sqrt(1.0 - z * z);
    return {s * std::cos(phi), s * std::sin(phi), z};
  }

  bool inside(const VoxelKey& key) const { return bounds_.contains(key_center(key, r_)); }

  /// Sets the class unless the cell is outside the bounds or already holds a
  /// class of equal or higher priority.
  void put(const VoxelKey& key, SemanticClass cls) {
    if (!inside(key)) return;
    auto [it, inserted] = voxels_.emplace(key, cls);
    if (!inserted && priority(cls) > priority(it->second)) it->second = cls;
  }

  void put_point(const Vec3& p, SemanticClass cls) { put(voxel_key_of(p, r_), cls); }

  void ball(const Vec3& center, double radius, SemanticClass cls) {
    const VoxelKey lo = voxel_key_of(center - Vec3::Constant(radius), r_);
    const VoxelKey hi = voxel_key_of(center + Vec3::Constant(radius), r_);
    for (int i = lo.i; i <= hi.i; ++i)
      for (int j = lo.j; j <= hi.j; ++j)
        for (int k = lo.k; k <= hi.k; ++k) {
          const VoxelKey key{i, j, k};
          if ((key_center(key, r_) - center).norm() <= radius) put(key, cls);
        }
  }

  void segment(const Vec3& a, const Vec3& b, double radius, SemanticClass cls) {
    const double length = (b - a).norm();
    const int n = std::max(1, static_cast<int>(std::ceil(length / (0.5 * r_))));
    for (int s = 0; s <= n; ++s) {
      const Vec3 p = a + (b - a) * (static_cast<double>(s) / n);
      if (radius > 0.0) {
        ball(p, radius, cls);
      } else {
        put_point(p, cls);
      }
    }
  }

  /// Quadratic arc from `a` to `b` sagging by `lift` along +z at the midpoint.
  void arc(const Vec3& a, const Vec3& b, double lift, SemanticClass cls) {
    const Vec3 mid = 0.5 * (a + b) + Vec3(0, 0, lift);
    const double length = (b - a).norm() + std::abs(lift);
    const int n = std::max(2, static_cast<int>(std::ceil(length / (0.5 * r_))));
    for (int s = 0; s <= n; ++s) {
      const double t = static_cast<double>(s) / n;
      const Vec3 p = (1 - t) * (1 - t) * a + 2 * (1 - t) * t * mid + t * t * b;
      put_point(p, cls);
    }
  }

  /// One-voxel-thick elliptic disc with the given normal.
  void disc(const Vec3& center, const Vec3& normal, double radius_u, double radius_v, SemanticClass cls) {
    const Vec3 n = normal.normalized();
    Vec3 u = n.unitOrthogonal();
    const Vec3 v = n.cross(u);
    const double step = 0.5 * r_;
    for (double a = -radius_u; a <= radius_u; a += step) {
      for (double b = -radius_v; b <= radius_v; b += step) {
        if ((a * a) / (radius_u * radius_u) + (b * b) / (radius_v * radius_v) > 1.0) continue;
        put_point(center + a * u + b * v, cls);
      }
    }
  }

  VoxelLabels& voxels() { return voxels_; }
  double resolution() const { return r_; }
  std::mt19937_64& rng() { return rng_; }

 private:
  static int priority(SemanticClass c) {
    switch (c) {
      case SemanticClass::fruit: return 5;
      case SemanticClass::trunk: return 4;
      case SemanticClass::pot: return 4;
      case SemanticClass::branch: return 3;
      case SemanticClass::leaf: return 2;
      case SemanticClass::background: return 0;
    }
    return 0;
  }

  double r_;
  Box bounds_;
  std::mt19937_64 rng_;
  VoxelLabels voxels_;
};

constexpr double kBerryRadius = 0.022;

struct Cluster {
  Vec3 center;
  double extent = 0.0;
};

std::vector<Cluster> place_clusters(SceneBuilder& b, const ScenarioSpec& spec, const Box& bounds) {
  const double extent = spec.cluster_radius + kBerryRadius;
  const double margin = extent + spec.resolution;
  const Vec3 lo(bounds.min.x() + margin, bounds.min.y() + margin, bounds.min.z() + 0.25 * spec.plant_size.z());
  // Clusters sit in the front half of the canopy, where a camera can reach them.
  const Vec3 hi(bounds.max.x() - margin, std::min(bounds.max.y() - margin, bounds.center().y() + 0.05),
                bounds.min.z() + 0.85 * spec.plant_size.z());
  if (!(hi.array() > lo.array()).all()) {
    throw GenerationError("clusters exceed bounds: cluster extent " + format_double(extent) +
                          " m does not fit the plant dimensions");
  }
  const double min_separation = 2.0 * extent + 3.0 * spec.resolution;
  std::vector<Cluster> clusters;
  constexpr int kMaxAttempts = 5000;
  for (int c = 0; c < spec.cluster_count; ++c) {
    bool placed = false;
    for (int attempt = 0; attempt < kMaxAttempts && !placed; ++attempt) {
      const Vec3 p(b.uniform(lo.x(), hi.x()), b.uniform(lo.y(), hi.y()), b.uniform(lo.z(), hi.z()));
      // Keep clusters off the trunk column.
      if (std::hypot(p.x(), p.y()) < extent + 0.04) continue;
      placed = std::all_of(clusters.begin(), clusters.end(),
                           [&](const Cluster& other) { return (other.center - p).norm() >= min_separation; });
      if (placed) clusters.push_back({p, extent});
    }
    if (!placed) {
      throw GenerationError("clusters exceed bounds: cannot place " + std::to_string(spec.cluster_count) +
                            " clusters with separation " + format_double(min_separation) + " m");
    }
  }
  return clusters;
}

/// Berries grown as a chain inside the cluster sphere; only the connected
/// component holding the first berry is kept.
std::vector<VoxelKey> grow_cluster(SceneBuilder& b, const ScenarioSpec& spec, const Cluster& cluster) {
  const double r = spec.resolution;
  std::vector<Vec3> berries{cluster.center};
  for (int n = 1; n < spec.fruit_per_cluster; ++n) {
    for (int attempt = 0; attempt < 50; ++attempt) {
      const std::size_t parent =
          std::uniform_int_distribution<std::size_t>(0, berries.size() - 1)(b.rng());
      const Vec3 p = berries[parent] + b.unit_vector() * (1.3 * kBerryRadius);
      if ((p - cluster.center).norm() <= spec.cluster_radius) {
        berries.push_back(p);
        break;
      }
    }
  }
  std::set<VoxelKey> cells;
  for (const auto& c : berries) {
    const VoxelKey lo = voxel_key_of(c - Vec3::Constant(kBerryRadius), r);
    const VoxelKey hi = voxel_key_of(c + Vec3::Constant(kBerryRadius), r);
    for (int i = lo.i; i <= hi.i; ++i)
      for (int j = lo.j; j <= hi.j; ++j)
        for (int k = lo.k; k <= hi.k; ++k) {
          const VoxelKey key{i, j, k};
          if ((key_center(key, r) - c).norm() <= kBerryRadius) cells.insert(key);
        }
  }
  const auto components = connected_components_26({cells.begin(), cells.end()});
  const VoxelKey anchor = voxel_key_of(cluster.center, r);
  for (const auto& comp : components) {
    if (std::binary_search(comp.begin(), comp.end(), anchor)) return comp;
  }
  return components.front();
}

void add_leaves(SceneBuilder& b, const std::vector<Vec3>& anchors, int count, double size_lo, double size_hi) {
  for (int n = 0; n < count; ++n) {
    const std::size_t idx = std::uniform_int_distribution<std::size_t>(0, anchors.size() - 1)(b.rng());
    const Vec3 center = anchors[idx] + b.unit_vector() * b.uniform(0.02, 0.08);
    Vec3 normal = b.unit_vector();
    normal.z() *= 0.5;
    b.disc(center, normal, b.uniform(size_lo, size_hi), b.uniform(size_lo * 0.6, size_hi * 0.8),
           SemanticClass::leaf);
  }
}

/// Partial leaf shell around a cluster: discs on a sphere just outside the
/// berries, covering a cap centred on a front-biased random axis. Density
/// widens the cap, so denser plants leave a narrower opening.
void add_leaf_shell(SceneBuilder& b, const Cluster& cluster, double density, double r) {
  const Vec3 axis = (Vec3(0, -1, 0) + 0.7 * b.unit_vector()).normalized();
  const double cap = (70.0 + 60.0 * density) * std::numbers::pi / 180.0;
  const double min_cos = std::cos(cap);
  const int patches = static_cast<int>(std::round(8.0 + 16.0 * density));
  const double radius = cluster.extent + 1.5 * r;
  for (int n = 0, tries = 0; n < patches && tries < 100 * patches; ++tries) {
    const Vec3 dir = b.unit_vector();
    if (dir.dot(axis) < min_cos) continue;
    ++n;
    const double size = b.uniform(0.6, 1.0) * 0.045;
    b.disc(cluster.center + dir * radius, dir, size, size, SemanticClass::leaf);
  }
}

}  // namespace

GroundTruthScene generate_scenario(const ScenarioSpec& spec) {
  spec.validate();
  const Box bounds = plant_bounds(spec.plant_size);
  const double r = spec.resolution;
  SceneBuilder b(spec, bounds);
  const double height = spec.plant_size.z();

  // Pot and trunk.
  const double pot_radius = std::min({0.1, spec.plant_size.x() / 4, spec.plant_size.y() / 4});
  const double pot_height = 0.1 * height;
  for (double z = r / 2; z < pot_height; z += r) {
    b.segment(Vec3(0, 0, z), Vec3(0, 0, z), pot_radius, SemanticClass::pot);
  }
  const Vec3 trunk_top(0, 0, 0.92 * height);
  b.segment(Vec3(0, 0, pot_height), trunk_top, r, SemanticClass::trunk);

  // Fruit clusters hang from branch arcs leaving the trunk.
  const auto clusters = place_clusters(b, spec, bounds);
  std::vector<Vec3> leaf_anchors{trunk_top};
  for (const auto& cluster : clusters) {
    for (const auto& key : grow_cluster(b, spec, cluster)) b.put(key, SemanticClass::fruit);
    const Vec3 tip = cluster.center + Vec3(0, 0, cluster.extent + r);
    const Vec3 root(0, 0, std::clamp(tip.z() - 0.12, pot_height + r, trunk_top.z()));
    b.arc(root, tip, 0.06, SemanticClass::branch);
    leaf_anchors.push_back(0.5 * (root + tip) + Vec3(0, 0, 0.04));
    leaf_anchors.push_back(tip);
  }
  // A few bare branches give foliage somewhere to hang.
  const int bare = 3 + static_cast<int>(std::round(4 * spec.occluder_density));
  for (int n = 0; n < bare; ++n) {
    const double z = b.uniform(0.3 * height, 0.85 * height);
    const double angle = b.uniform(0.0, 2.0 * std::numbers::pi);
    const double reach = b.uniform(0.15, 0.5) * spec.plant_size.x();
    const Vec3 tip(reach * std::cos(angle), 0.5 * reach * std::sin(angle), z + b.uniform(-0.05, 0.1));
    const Vec3 root(0, 0, z - 0.05);
    b.arc(root, tip, 0.05, SemanticClass::branch);
    leaf_anchors.push_back(tip);
    leaf_anchors.push_back(0.5 * (root + tip));
  }
  const int leaves = static_cast<int>(std::round(10 + 60 * spec.occluder_density));
  add_leaves(b, leaf_anchors, leaves, 0.03, 0.07);
  for (const auto& cluster : clusters) add_leaf_shell(b, cluster, spec.occluder_density, r);

  if (spec.kind == ScenarioKind::full_occlusion) {
    // Curtain in front of every cluster, then patch any line of sight that
    // still reaches fruit from the start pose.
    const Vec3 eye = facing_start_pose(bounds).position;
    for (const auto& cluster : clusters) {
      const Vec3 toward = (eye - cluster.center).normalized();
      b.disc(cluster.center + toward * (cluster.extent + 2.0 * r), toward, cluster.extent * 1.25,
             cluster.extent * 1.25, SemanticClass::leaf);
    }
    constexpr int kMaxRounds = 50;
    for (int round = 0;; ++round) {
      GroundTruthScene probe(r, bounds, b.voxels());
      std::vector<VoxelKey> exposed;
      for (const auto& key : probe.keys_of(SemanticClass::fruit)) {
        if (!line_blocked_before_fruit(probe, eye, key, r / 4)) exposed.push_back(key);
      }
      if (exposed.empty()) break;
      if (round == kMaxRounds) {
        throw GenerationError("occlusion contract: " + std::to_string(exposed.size()) +
                              " fruit voxels remain visible from the start pose");
      }
      for (const auto& key : exposed) {
        const Vec3 c = key_center(key, r);
        const Vec3 toward = (eye - c).normalized();
        b.disc(c + toward * (2.5 * r + b.uniform(0.0, r)), toward, 1.5 * r, 1.5 * r, SemanticClass::leaf);
      }
    }
  }

  GroundTruthScene scene(r, bounds, std::move(b.voxels()));
  const int expected = spec.kind == ScenarioKind::single_cluster ? 1 : spec.cluster_count;
  if (scene.fruit_cluster_count() != expected) {
    throw GenerationError("cluster count: generated " + std::to_string(scene.fruit_cluster_count()) +
                          " fruit components, expected " + std::to_string(expected));
  }
  return scene;
}

// ---------------------------------------------------------------------------
// Text format

std::string save_scene(const GroundTruthScene& scene) {
  std::string out;
  const Box& b = scene.bounds();
  out += "resolution " + format_double(scene.resolution()) + "\n";
  out += "bounds";
  for (double v : {b.min.x(), b.min.y(), b.min.z(), b.max.x(), b.max.y(), b.max.z()}) {
    out += " " + format_double(v);
  }
  out += "\n";
  for (const auto& key : scene.sorted_keys()) {
    out += std::to_string(key.i) + " " + std::to_string(key.j) + " " + std::to_string(key.k) + " ";
    out += to_string(*scene.at(key));
    out += "\n";
  }
  return out;
}

namespace {

std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
    const std::size_t start = i;
    while (i < line.size() && line[i] != ' ' && line[i] != '\t') ++i;
    if (i > start) out.push_back(line.substr(start, i - start));
  }
  return out;
}

template <class T>
T parse_number(std::string_view token, std::size_t line, const char* what) {
  T value{};
  auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
  if (ec != std::errc() || ptr != token.data() + token.size()) {
    throw ParseError(std::string("expected ") + what + ", got '" + std::string(token) + "'", line);
  }
  return value;
}

}  // namespace

GroundTruthScene load_scene(std::string_view text) {
  std::optional<double> resolution;
  std::optional<Box> bounds;
  VoxelLabels voxels;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t eol = text.find('\n', pos);
    if (eol == std::string_view::npos) eol = text.size();
    std::string_view line = text.substr(pos, eol - pos);
    pos = eol + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    const auto tokens = split_ws(line);
    if (tokens.empty() || tokens[0].starts_with('#')) continue;

    if (tokens[0] == "resolution") {
      if (tokens.size() != 2) throw ParseError("resolution takes one value", line_no);
      resolution = parse_number<double>(tokens[1], line_no, "a real number");
    } else if (tokens[0] == "bounds") {
      if (tokens.size() != 7) throw ParseError("bounds takes six values", line_no);
      double v[6];
      for (int n = 0; n < 6; ++n) v[n] = parse_number<double>(tokens[n + 1], line_no, "a real number");
      bounds = Box{Vec3(v[0], v[1], v[2]), Vec3(v[3], v[4], v[5])};
    } else {
      if (!resolution || !bounds) throw ParseError("voxel line before resolution/bounds header", line_no);
      if (tokens.size() != 4) throw ParseError("voxel line needs 'i j k class'", line_no);
      const VoxelKey key{parse_number<std::int32_t>(tokens[0], line_no, "an integer"),
                         parse_number<std::int32_t>(tokens[1], line_no, "an integer"),
                         parse_number<std::int32_t>(tokens[2], line_no, "an integer")};
      const auto cls = parse_semantic_class(tokens[3]);
      if (!cls || *cls == SemanticClass::background) {
        throw ParseError("unknown voxel class '" + std::string(tokens[3]) + "'", line_no);
      }
      auto [it, inserted] = voxels.emplace(key, *cls);
      if (!inserted && it->second != *cls) {
        throw ParseError("duplicate key with conflicting class", line_no);
      }
    }
  }
  if (!resolution) throw ParseError("missing 'resolution' header", 0);
  if (!bounds) throw ParseError("missing 'bounds' header", 0);
  return GroundTruthScene(*resolution, *bounds, std::move(voxels));
}

void save_scene_file(const GroundTruthScene& scene, const std::string& path) {
  write_text_file(path, save_scene(scene));
}

GroundTruthScene load_scene_file(const std::string& path) {
  return load_scene(read_text_file(path));
}

SceneStats scene_stats(const GroundTruthScene& scene) {
  SceneStats stats;
  for (const auto& [key, cls] : scene.voxels()) ++stats.counts[cls];
  stats.total = scene.voxels().size();
  stats.fruit_cluster_count = scene.fruit_cluster_count();
  stats.bounds = scene.bounds();
  return stats;
}

}  // namespace active_vision
