#include "active_vision/oracle.hpp"

#include "active_vision/errors.hpp"

#include <algorithm>
#include <fstream>
#include <random>
#include <sstream>

namespace active_vision {

void OracleNoiseConfig::validate() const {
  if (!(confidence_min > 0.0 && confidence_min <= confidence_max && confidence_max <= 1.0)) {
    throw InvalidInput("confidence range must satisfy 0 < c_min <= c_max <= 1");
  }
  if (!(instance_dropout_p >= 0.0 && instance_dropout_p <= 1.0)) {
    throw InvalidInput("instance_dropout_p must lie in [0,1]");
  }
  if (erosion_radius < 0) throw InvalidInput("erosion_radius must be non-negative");
}

PromptAliases default_prompt_aliases() {
  return {{"tomato", SemanticClass::fruit},  {"mature tomato", SemanticClass::fruit},
          {"apple", SemanticClass::fruit},   {"green apple", SemanticClass::fruit},
          {"grape", SemanticClass::fruit},   {"berry", SemanticClass::fruit},
          {"foliage", SemanticClass::leaf},  {"stem", SemanticClass::branch}};
}

std::optional<SemanticClass> resolve_prompt(const std::string& prompt, const PromptAliases& aliases) {
  if (auto c = parse_semantic_class(prompt); c && *c != SemanticClass::background) return c;
  if (auto it = aliases.find(prompt); it != aliases.end()) return it->second;
  return std::nullopt;
}

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// 8-connected components of `target` pixels in row-major discovery order.
std::vector<std::vector<int>> pixel_components(const LabelImage& labels, SemanticClass target) {
  const int w = labels.width;
  const int h = labels.height;
  std::vector<int> comp(labels.data.size(), -1);
  std::vector<std::vector<int>> out;
  std::vector<int> stack;
  for (int idx = 0; idx < static_cast<int>(labels.data.size()); ++idx) {
    if (labels.data[idx] != target || comp[idx] >= 0) continue;
    const int id = static_cast<int>(out.size());
    out.emplace_back();
    comp[idx] = id;
    stack.push_back(idx);
    while (!stack.empty()) {
      const int cur = stack.back();
      stack.pop_back();
      out[id].push_back(cur);
      const int u = cur % w;
      const int v = cur / w;
      for (int dv = -1; dv <= 1; ++dv) {
        for (int du = -1; du <= 1; ++du) {
          const int nu = u + du;
          const int nv = v + dv;
          if (nu < 0 || nv < 0 || nu >= w || nv >= h) continue;
          const int n = nv * w + nu;
          if (labels.data[n] == target && comp[n] < 0) {
            comp[n] = id;
            stack.push_back(n);
          }
        }
      }
    }
    std::sort(out[id].begin(), out[id].end());
  }
  return out;
}

Mask erode(const Mask& mask, int width, int height, int radius) {
  if (radius == 0) return mask;
  Mask out(mask.size(), false);
  for (int v = 0; v < height; ++v) {
    for (int u = 0; u < width; ++u) {
      if (!mask[static_cast<std::size_t>(v) * width + u]) continue;
      bool keep = true;
      for (int dv = -radius; dv <= radius && keep; ++dv) {
        for (int du = -radius; du <= radius && keep; ++du) {
          const int nu = u + du;
          const int nv = v + dv;
          keep = nu >= 0 && nv >= 0 && nu < width && nv < height &&
                 mask[static_cast<std::size_t>(nv) * width + nu];
        }
      }
      out[static_cast<std::size_t>(v) * width + u] = keep;
    }
  }
  return out;
}

}  // namespace

SegmentationResponse oracle_segment(const SegmentationRequest& req, const OracleNoiseConfig& noise,
                                    const PromptAliases& aliases) {
  noise.validate();
  SegmentationResponse resp;
  resp.image_id = req.image_id;
  resp.backend = "oracle";
  const LabelImage labels = decode_label_payload(req);
  const auto target = resolve_prompt(req.prompt, aliases);
  if (!target) {
    resp.warning = "unknown prompt '" + req.prompt + "'";
    return resp;
  }

  std::mt19937_64 rng(splitmix64(noise.seed ^ splitmix64(req.image_id)));
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  std::int64_t next_id = 1;
  for (const auto& pixels : pixel_components(labels, *target)) {
    // Both draws happen for every component so the stream does not depend
    // on which instances survive.
    const double confidence =
        noise.confidence_min + (noise.confidence_max - noise.confidence_min) * coin(rng);
    const bool dropped = coin(rng) < noise.instance_dropout_p;
    if (dropped || confidence < req.box_threshold) continue;

    Mask mask(labels.data.size(), false);
    for (int p : pixels) mask[static_cast<std::size_t>(p)] = true;
    mask = erode(mask, labels.width, labels.height, noise.erosion_radius);
    if (std::none_of(mask.begin(), mask.end(), [](bool b) { return b; })) continue;

    resp.masks.push_back({req.prompt, confidence, next_id++, rle_encode(mask, labels.width, labels.height)});
  }
  return resp;
}

OracleNoiseConfig load_noise_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path, "cannot read noise config");
  OracleNoiseConfig cfg;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const auto eq = line.find('=');
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t\r");
      const auto e = s.find_last_not_of(" \t\r");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    if (trim(line).empty()) continue;
    if (eq == std::string::npos) throw ConfigError(trim(line), "expected 'key = value'", line_no);
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    std::istringstream vs(value);
    bool ok = false;
    if (key == "confidence_min") ok = static_cast<bool>(vs >> cfg.confidence_min);
    else if (key == "confidence_max") ok = static_cast<bool>(vs >> cfg.confidence_max);
    else if (key == "instance_dropout_p") ok = static_cast<bool>(vs >> cfg.instance_dropout_p);
    else if (key == "erosion_radius") ok = static_cast<bool>(vs >> cfg.erosion_radius);
    else if (key == "seed") ok = static_cast<bool>(vs >> cfg.seed);
    else throw ConfigError(key, "unknown key", line_no);
    if (!ok || !(vs >> std::ws).eof()) throw ConfigError(key, "invalid value '" + value + "'", line_no);
  }
  try {
    cfg.validate();
  } catch (const InvalidInput& e) {
    throw ConfigError(path, e.what());
  }
  return cfg;
}

}  // namespace active_vision
