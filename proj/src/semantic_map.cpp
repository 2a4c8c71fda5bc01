#include "active_vision/semantic_map.hpp"

#include "active_vision/errors.hpp"
#include "active_vision/voxel_traversal.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <set>

namespace active_vision {

SemanticRecord fuse_record(const SemanticRecord& existing, const SemanticObservation& incoming) {
  if (!(incoming.confidence >= 0.0 && incoming.confidence <= 1.0)) {
    throw InvalidInput("confidence must lie in [0,1]");
  }
  const double confidence = std::max(incoming.confidence, kConfidenceFloor);
  SemanticRecord out = existing;
  out.unlabeled_observations = 0;
  if (!existing.labeled()) {
    out.label = incoming.label;
    out.confidence = confidence;
    out.instance_id = incoming.instance_id;
    out.labeled_hits = existing.labeled_hits + 1;
  } else if (*existing.label == incoming.label) {
    if (confidence > existing.confidence) {
      out.confidence = confidence;
      if (incoming.instance_id) out.instance_id = incoming.instance_id;
    }
    out.labeled_hits = existing.labeled_hits + 1;
  } else if (confidence > existing.confidence) {
    out.label = incoming.label;
    out.confidence = confidence;
    out.instance_id = incoming.instance_id;
    out.labeled_hits = 1;
  }
  return out;
}

double effective_confidence(const SemanticRecord& record, const UnlabeledPrior& prior) {
  if (record.labeled()) return record.confidence;
  const double p = 0.5 * std::pow(prior.decay, static_cast<double>(record.unlabeled_observations));
  return std::clamp(p, prior.floor, 0.5);
}

std::vector<MaskPoint> outlier_filter(const std::vector<MaskPoint>& points, double resolution) {
  if (points.empty()) return {};
  auto median = [](std::vector<double> v) {
    const std::size_t mid = v.size() / 2;
    std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
    const double upper = v[mid];
    if (v.size() % 2 == 1) return upper;
    const double lower = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid));
    return 0.5 * (lower + upper);
  };
  std::vector<double> depths;
  depths.reserve(points.size());
  for (const auto& p : points) depths.push_back(p.depth);
  const double m = median(depths);
  for (double& d : depths) d = std::abs(d - m);
  const double mad = median(depths);
  const double tolerance = std::max(3.0 * 1.4826 * mad, 2.0 * resolution);

  std::vector<MaskPoint> kept;
  kept.reserve(points.size());
  for (const auto& p : points) {
    if (std::abs(p.depth - m) <= tolerance) kept.push_back(p);
  }
  return kept;
}

SemanticOccupancyMap::SemanticOccupancyMap(double resolution, UnlabeledPrior prior)
    : resolution_(resolution), prior_(prior) {
  if (!(resolution_ > 0.0)) throw InvalidInput("map resolution must be positive");
}

const SemanticRecord* SemanticOccupancyMap::find(const VoxelKey& key) const {
  auto it = records_.find(key);
  return it == records_.end() ? nullptr : &it->second;
}

double SemanticOccupancyMap::effective_confidence(const VoxelKey& key) const {
  const SemanticRecord* rec = find(key);
  if (!rec) throw InvalidInput("voxel is not in the map");
  return active_vision::effective_confidence(*rec, prior_);
}

bool SemanticOccupancyMap::insert(const VoxelKey& key) { return records_.try_emplace(key).second; }

void SemanticOccupancyMap::fuse(const VoxelKey& key, const SemanticObservation& obs) {
  auto& rec = records_[key];
  rec = fuse_record(rec, obs);
}

void SemanticOccupancyMap::set(const VoxelKey& key, const SemanticRecord& record) { records_[key] = record; }

IntegrationSummary SemanticOccupancyMap::integrate_observation(const std::vector<Vec3>& cloud,
                                                               const std::vector<DecodedMask>& masks,
                                                               const DepthImage& depth, const Pose& pose,
                                                               const CameraIntrinsics& intr) {
  IntegrationSummary summary;
  const std::size_t pixels = static_cast<std::size_t>(depth.width) * depth.height;
  for (const auto& m : masks) {
    if (m.bits.size() != pixels) throw InvalidInput("mask size differs from the depth image");
  }
  if (cloud.empty() && masks.empty()) return summary;
  ++epoch_;

  // Depth is measured to a voxel's entry face, so a surface point sits on the
  // boundary it shares with the free voxel in front. Nudging it along the
  // viewing ray by less than any chord the renderer counts as a hit keys it
  // to the voxel that was hit.
  const double nudge = 0.5 * kMinChord;
  auto surface_key = [&](const Vec3& p) {
    const Vec3 ray = p - pose.position;
    const double length = ray.norm();
    return voxel_key_of(length > 0.0 ? Vec3(p + ray * (nudge / length)) : p, resolution_);
  };

  std::set<VoxelKey> observed;
  std::set<VoxelKey> touched;
  for (const Vec3& p : cloud) {
    const VoxelKey key = surface_key(p);
    observed.insert(key);
    if (insert(key)) {
      ++summary.new_voxels;
      touched.insert(key);
    }
  }

  std::set<VoxelKey> claimed;
  for (const auto& m : masks) {
    std::vector<MaskPoint> points;
    for (int v = 0; v < depth.height; ++v) {
      for (int u = 0; u < depth.width; ++u) {
        const std::size_t idx = static_cast<std::size_t>(v) * depth.width + u;
        const double z = depth.data[idx];
        if (!m.bits[idx] || z <= 0.0) continue;
        points.push_back({pose.to_world(deproject(u, v, z, intr)), z});
      }
    }
    const auto kept = outlier_filter(points, resolution_);
    summary.outliers_rejected += points.size() - kept.size();
    std::set<VoxelKey> keys;
    for (const auto& p : kept) keys.insert(surface_key(p.position));
    for (const auto& key : keys) {
      if (insert(key)) ++summary.new_voxels;
      fuse(key, {m.label, m.confidence, m.instance_id});
      claimed.insert(key);
      touched.insert(key);
    }
  }

  for (const auto& key : observed) {
    if (claimed.contains(key)) continue;
    ++records_[key].unlabeled_observations;
    touched.insert(key);
  }
  // Every touched voxel that existed before this call counts as updated.
  summary.updated_voxels = touched.size() - std::min(touched.size(), summary.new_voxels);
  return summary;
}

std::vector<std::pair<VoxelKey, SemanticRecord>> SemanticOccupancyMap::voxels_in_region(const Box& box) const {
  std::vector<std::pair<VoxelKey, SemanticRecord>> out;
  for (const auto& [key, rec] : records_) {
    if (box.contains(key_center(key, resolution_))) out.emplace_back(key, rec);
  }
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  return out;
}

std::vector<VoxelKey> SemanticOccupancyMap::keys_labeled(SemanticClass c) const {
  std::vector<VoxelKey> out;
  for (const auto& [key, rec] : records_) {
    if (rec.label == c) out.push_back(key);
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<VoxelKey> SemanticOccupancyMap::sorted_keys() const {
  std::vector<VoxelKey> out;
  out.reserve(records_.size());
  for (const auto& entry : records_) out.push_back(entry.first);
  std::sort(out.begin(), out.end());
  return out;
}

// ---------------------------------------------------------------------------
// Dump format

std::string save_map(const SemanticOccupancyMap& map) {
  const double r = map.resolution();
  const auto keys = map.sorted_keys();
  Box bounds;
  if (!keys.empty()) {
    bounds.min = bounds.max = key_center(keys.front(), r);
    for (const auto& key : keys) {
      const Vec3 lo = key_center(key, r) - Vec3::Constant(r / 2);
      const Vec3 hi = key_center(key, r) + Vec3::Constant(r / 2);
      bounds.min = bounds.min.cwiseMin(lo);
      bounds.max = bounds.max.cwiseMax(hi);
    }
  }
  std::string out = "resolution " + format_double(r) + "\nbounds";
  for (double v : {bounds.min.x(), bounds.min.y(), bounds.min.z(), bounds.max.x(), bounds.max.y(), bounds.max.z()}) {
    out += " " + format_double(v);
  }
  out += "\n";
  for (const auto& key : keys) {
    const SemanticRecord& rec = *map.find(key);
    out += std::to_string(key.i) + " " + std::to_string(key.j) + " " + std::to_string(key.k) + " ";
    out += rec.labeled() ? std::string(to_string(*rec.label)) : std::string("unlabeled");
    out += " " + format_double(rec.labeled() ? rec.confidence : 0.0);
    out += " " + std::to_string(rec.unlabeled_observations);
    out += " " + std::to_string(rec.instance_id.value_or(-1));
    out += "\n";
  }
  return out;
}

namespace {

template <class T>
T parse_token(std::string_view token, std::size_t line) {
  T value{};
  auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
  if (ec != std::errc() || ptr != token.data() + token.size()) {
    throw ParseError("bad number '" + std::string(token) + "'", line);
  }
  return value;
}

}  // namespace

SemanticOccupancyMap load_map(std::string_view text) {
  std::optional<SemanticOccupancyMap> map;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t eol = text.find('\n', pos);
    if (eol == std::string_view::npos) eol = text.size();
    std::string_view line = text.substr(pos, eol - pos);
    pos = eol + 1;
    ++line_no;
    std::vector<std::string_view> tok;
    for (std::size_t i = 0; i < line.size();) {
      while (i < line.size() && (line[i] == ' ' || line[i] == '\r')) ++i;
      const std::size_t s = i;
      while (i < line.size() && line[i] != ' ' && line[i] != '\r') ++i;
      if (i > s) tok.push_back(line.substr(s, i - s));
    }
    if (tok.empty() || tok[0].starts_with('#')) continue;
    if (tok[0] == "resolution") {
      if (tok.size() != 2) throw ParseError("resolution takes one value", line_no);
      map.emplace(parse_token<double>(tok[1], line_no));
      continue;
    }
    if (tok[0] == "bounds") continue;
    if (!map) throw ParseError("voxel line before resolution header", line_no);
    if (tok.size() != 7) throw ParseError("map line needs 'i j k class p_s k instance_id'", line_no);
    const VoxelKey key{parse_token<std::int32_t>(tok[0], line_no), parse_token<std::int32_t>(tok[1], line_no),
                       parse_token<std::int32_t>(tok[2], line_no)};
    SemanticRecord rec;
    if (tok[3] != "unlabeled") {
      auto cls = parse_semantic_class(tok[3]);
      if (!cls) throw ParseError("unknown class '" + std::string(tok[3]) + "'", line_no);
      rec.label = *cls;
      rec.confidence = parse_token<double>(tok[4], line_no);
    }
    rec.unlabeled_observations = parse_token<std::uint32_t>(tok[5], line_no);
    const auto instance = parse_token<std::int64_t>(tok[6], line_no);
    if (instance >= 0) rec.instance_id = instance;
    if (rec.labeled()) rec.labeled_hits = 1;
    if (map->occupied(key)) throw ParseError("duplicate voxel key", line_no);
    map->set(key, rec);
  }
  if (!map) throw ParseError("missing 'resolution' header", 0);
  return std::move(*map);
}

}  // namespace active_vision
