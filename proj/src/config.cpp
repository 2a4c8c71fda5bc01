#include "active_vision/config.hpp"

#include "active_vision/errors.hpp"

#include <algorithm>
#include <charconv>
#include <functional>
#include <optional>
#include <sstream>

namespace active_vision {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

template <class T>
T parse_number(const std::string& key, const std::string& value, const char* what) {
  T out{};
  auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc() || ptr != value.data() + value.size()) {
    throw ConfigError(key, std::string("expected ") + what + ", got '" + value + "'");
  }
  return out;
}

double parse_real(const std::string& key, const std::string& value) {
  return parse_number<double>(key, value, "a real number");
}
int parse_int(const std::string& key, const std::string& value) { return parse_number<int>(key, value, "an integer"); }

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true") return true;
  if (value == "false") return false;
  throw ConfigError(key, "expected true or false, got '" + value + "'");
}

Box parse_box(const std::string& key, const std::string& value) {
  std::istringstream in(value);
  std::string tok;
  double v[6];
  for (double& x : v) {
    if (!(in >> tok)) throw ConfigError(key, "expected six numbers 'x0 y0 z0 x1 y1 z1'");
    x = parse_real(key, tok);
  }
  if (in >> tok) throw ConfigError(key, "expected six numbers 'x0 y0 z0 x1 y1 z1'");
  return {Vec3(v[0], v[1], v[2]), Vec3(v[3], v[4], v[5])};
}

std::string box_string(const Box& b) {
  std::string out;
  for (double v : {b.min.x(), b.min.y(), b.min.z(), b.max.x(), b.max.y(), b.max.z()}) {
    if (!out.empty()) out += ' ';
    out += format_double(v);
  }
  return out;
}

struct Field {
  std::string name;  // qualified: "key" or "section.key"
  std::function<std::string(const EpisodeConfig&)> get;
  std::function<void(EpisodeConfig&, const std::string&)> set;
};

#define REAL_FIELD(NAME, MEMBER)                                                   \
  Field {                                                                          \
    NAME, [](const EpisodeConfig& c) { return format_double(c.MEMBER); },         \
        [](EpisodeConfig& c, const std::string& v) { c.MEMBER = parse_real(NAME, v); } \
  }
#define INT_FIELD(NAME, MEMBER)                                                   \
  Field {                                                                         \
    NAME, [](const EpisodeConfig& c) { return std::to_string(c.MEMBER); },        \
        [](EpisodeConfig& c, const std::string& v) { c.MEMBER = parse_int(NAME, v); } \
  }

const std::vector<Field>& fields() {
  static const std::vector<Field> table = {
      {"scenario", [](const EpisodeConfig& c) { return std::string(to_string(c.scenario.kind)); },
       [](EpisodeConfig& c, const std::string& v) {
         auto kind = parse_scenario_kind(v);
         if (!kind) throw ConfigError("scenario", "unknown scenario '" + v + "'");
         c.scenario.kind = *kind;
       }},
      {"seed", [](const EpisodeConfig& c) { return std::to_string(c.seed); },
       [](EpisodeConfig& c, const std::string& v) {
         c.seed = parse_number<std::uint64_t>("seed", v, "an unsigned integer");
         c.planner_cfg.seed = c.seed;
         c.scenario.seed = c.seed;
       }},
      INT_FIELD("steps", steps),
      {"planner", [](const EpisodeConfig& c) { return std::string(to_string(c.planner)); },
       [](EpisodeConfig& c, const std::string& v) {
         if (v == "nbv") c.planner = PlannerKind::nbv;
         else if (v == "zigzag") c.planner = PlannerKind::zigzag;
         else throw ConfigError("planner", "expected nbv or zigzag, got '" + v + "'");
       }},
      {"start", [](const EpisodeConfig& c) { return std::string(to_string(c.start)); },
       [](EpisodeConfig& c, const std::string& v) {
         if (v == "facing") c.start = StartKind::facing;
         else if (v == "unoriented") c.start = StartKind::unoriented;
         else throw ConfigError("start", "expected facing or unoriented, got '" + v + "'");
       }},
      {"prompt", [](const EpisodeConfig& c) { return c.prompt; },
       [](EpisodeConfig& c, const std::string& v) { c.prompt = v; }},
      {"output", [](const EpisodeConfig& c) { return c.output; },
       [](EpisodeConfig& c, const std::string& v) { c.output = v; }},
      {"record_wall_time", [](const EpisodeConfig& c) { return std::string(c.record_wall_time ? "true" : "false"); },
       [](EpisodeConfig& c, const std::string& v) { c.record_wall_time = parse_bool("record_wall_time", v); }},

      REAL_FIELD("scene.resolution", scenario.resolution),
      REAL_FIELD("scene.plant_width", scenario.plant_size.x()),
      REAL_FIELD("scene.plant_depth", scenario.plant_size.y()),
      REAL_FIELD("scene.plant_height", scenario.plant_size.z()),
      INT_FIELD("scene.cluster_count", scenario.cluster_count),
      REAL_FIELD("scene.cluster_radius", scenario.cluster_radius),
      INT_FIELD("scene.fruit_per_cluster", scenario.fruit_per_cluster),
      REAL_FIELD("scene.occluder_density", scenario.occluder_density),

      INT_FIELD("planner.candidates", planner_cfg.candidates),
      REAL_FIELD("planner.radius_min", planner_cfg.radius_min),
      REAL_FIELD("planner.radius_max", planner_cfg.radius_max),
      REAL_FIELD("planner.azimuth_span_deg", planner_cfg.azimuth_span_deg),
      REAL_FIELD("planner.elevation_min_deg", planner_cfg.elevation_min_deg),
      REAL_FIELD("planner.elevation_max_deg", planner_cfg.elevation_max_deg),
      {"planner.workspace", [](const EpisodeConfig& c) { return box_string(c.planner_cfg.workspace); },
       [](EpisodeConfig& c, const std::string& v) { c.planner_cfg.workspace = parse_box("planner.workspace", v); }},
      INT_FIELD("planner.ray_stride", planner_cfg.ray_stride),
      INT_FIELD("planner.max_steps", planner_cfg.max_steps),
      {"planner.attention", [](const EpisodeConfig& c) {
         return std::string(c.attention == AttentionMode::fixed ? "fixed" : "auto");
       },
       [](EpisodeConfig& c, const std::string& v) {
         if (v == "fixed") c.attention = AttentionMode::fixed;
         else if (v == "auto") c.attention = AttentionMode::automatic;
         else throw ConfigError("planner.attention", "expected fixed or auto, got '" + v + "'");
       }},
      REAL_FIELD("planner.attention_margin", attention_margin),
      REAL_FIELD("planner.early_stop_epsilon", planner_cfg.early_stop_epsilon),
      REAL_FIELD("planner.revisit_radius", planner_cfg.revisit_radius),
      {"planner.threads", [](const EpisodeConfig& c) { return std::to_string(c.planner_cfg.threads); },
       [](EpisodeConfig& c, const std::string& v) {
         c.planner_cfg.threads = parse_number<unsigned>("planner.threads", v, "an unsigned integer");
       }},

      REAL_FIELD("oracle.confidence_min", oracle.confidence_min),
      REAL_FIELD("oracle.confidence_max", oracle.confidence_max),
      REAL_FIELD("oracle.instance_dropout_p", oracle.instance_dropout_p),
      INT_FIELD("oracle.erosion_radius", oracle.erosion_radius),
      REAL_FIELD("oracle.box_threshold", box_threshold),
      REAL_FIELD("oracle.text_threshold", text_threshold),

      REAL_FIELD("sensor.depth_sigma", sensor.sigma),
      REAL_FIELD("sensor.depth_dropout", sensor.dropout_p),
      INT_FIELD("sensor.cloud_stride", cloud_stride),
      REAL_FIELD("sensor.fx", intrinsics.fx),
      REAL_FIELD("sensor.fy", intrinsics.fy),
      REAL_FIELD("sensor.cx", intrinsics.cx),
      REAL_FIELD("sensor.cy", intrinsics.cy),
      INT_FIELD("sensor.width", intrinsics.width),
      INT_FIELD("sensor.height", intrinsics.height),
      REAL_FIELD("sensor.z_near", intrinsics.z_near),
      REAL_FIELD("sensor.z_far", intrinsics.z_far),

      REAL_FIELD("map.unlabeled_decay", prior.decay),
      REAL_FIELD("map.unlabeled_floor", prior.floor),
      INT_FIELD("map.min_cluster", min_cluster),
  };
  return table;
}

#undef REAL_FIELD
#undef INT_FIELD

const Field* find_field(const std::string& name) {
  for (const auto& f : fields()) {
    if (f.name == name) return &f;
  }
  return nullptr;
}

struct Entry {
  std::string value;
  std::size_t line = 0;  // 0 for command-line overrides
};

void add_entry(std::map<std::string, Entry>& entries, const std::string& key, Entry entry) {
  if (!key.starts_with("aliases.") && !find_field(key)) throw ConfigError(key, "unknown key", entry.line);
  if (key == "aliases.") throw ConfigError(key, "empty alias name", entry.line);
  auto [it, inserted] = entries.emplace(key, entry);
  if (!inserted) {
    if (entry.line > 0) throw ConfigError(key, "duplicate key", entry.line);
    it->second = std::move(entry);  // overrides win over the file
  }
}

}  // namespace

void EpisodeConfig::validate() const {
  auto require = [](bool ok, const char* key, const char* what) {
    if (!ok) throw ConfigError(key, what);
  };
  require(steps >= 1, "steps", "must be at least 1");
  require(!prompt.empty(), "prompt", "must not be empty");
  require(scenario.resolution > 0.0, "scene.resolution", "must be positive");
  require((scenario.plant_size.array() > 0.0).all(), "scene.plant_width", "plant dimensions must be positive");
  require(scenario.cluster_count >= 1, "scene.cluster_count", "must be at least 1");
  require(scenario.kind != ScenarioKind::single_cluster || scenario.cluster_count == 1, "scene.cluster_count",
          "single_cluster requires 1");
  require(scenario.cluster_radius > 0.0, "scene.cluster_radius", "must be positive");
  require(scenario.fruit_per_cluster >= 1, "scene.fruit_per_cluster", "must be at least 1");
  require(scenario.occluder_density >= 0.0 && scenario.occluder_density <= 1.0, "scene.occluder_density",
          "must lie in [0,1]");
  require(planner_cfg.candidates >= 1, "planner.candidates", "must be at least 1");
  require(planner_cfg.radius_min > 0.0 && planner_cfg.radius_min <= planner_cfg.radius_max, "planner.radius_min",
          "must satisfy 0 < radius_min <= radius_max");
  require(planner_cfg.elevation_min_deg <= planner_cfg.elevation_max_deg, "planner.elevation_min_deg",
          "must not exceed elevation_max_deg");
  require(planner_cfg.azimuth_span_deg >= 0.0, "planner.azimuth_span_deg", "must be non-negative");
  require(!planner_cfg.workspace.degenerate(), "planner.workspace", "box is degenerate");
  require(planner_cfg.ray_stride >= 1, "planner.ray_stride", "must be at least 1");
  require(planner_cfg.max_steps >= 1, "planner.max_steps", "must be at least 1");
  require(planner_cfg.revisit_radius >= 0.0, "planner.revisit_radius", "must be non-negative");
  require(attention_margin >= 0.0, "planner.attention_margin", "must be non-negative");
  require(oracle.confidence_min > 0.0 && oracle.confidence_min <= oracle.confidence_max, "oracle.confidence_min",
          "must satisfy 0 < confidence_min <= confidence_max");
  require(oracle.confidence_max <= 1.0, "oracle.confidence_max", "must not exceed 1");
  require(oracle.instance_dropout_p >= 0.0 && oracle.instance_dropout_p <= 1.0, "oracle.instance_dropout_p",
          "must lie in [0,1]");
  require(oracle.erosion_radius >= 0, "oracle.erosion_radius", "must be non-negative");
  require(box_threshold >= 0.0 && box_threshold <= 1.0, "oracle.box_threshold", "must lie in [0,1]");
  require(text_threshold >= 0.0 && text_threshold <= 1.0, "oracle.text_threshold", "must lie in [0,1]");
  require(sensor.sigma >= 0.0, "sensor.depth_sigma", "must be non-negative");
  require(sensor.dropout_p >= 0.0 && sensor.dropout_p <= 1.0, "sensor.depth_dropout", "must lie in [0,1]");
  require(cloud_stride >= 1, "sensor.cloud_stride", "must be at least 1");
  require(intrinsics.fx > 0.0, "sensor.fx", "must be positive");
  require(intrinsics.fy > 0.0, "sensor.fy", "must be positive");
  require(intrinsics.width >= 1, "sensor.width", "must be at least 1");
  require(intrinsics.height >= 1, "sensor.height", "must be at least 1");
  require(intrinsics.z_near > 0.0, "sensor.z_near", "must be positive");
  require(intrinsics.z_near < intrinsics.z_far, "sensor.z_far", "must exceed z_near");
  require(prior.decay > 0.0 && prior.decay <= 1.0, "map.unlabeled_decay", "must lie in (0,1]");
  require(prior.floor > 0.0 && prior.floor <= 0.5, "map.unlabeled_floor", "must lie in (0,0.5]");
  require(min_cluster >= 1, "map.min_cluster", "must be at least 1");
}

ResolvedConfig parse_config(std::string_view text, const std::vector<std::string>& overrides) {
  std::map<std::string, Entry> entries;
  std::string section;
  std::size_t line_no = 0;
  std::istringstream in{std::string(text)};
  std::string raw;
  while (std::getline(in, raw)) {
    ++line_no;
    if (auto hash = raw.find('#'); hash != std::string::npos) raw.erase(hash);
    const std::string line = trim(raw);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError(line, "malformed section header", line_no);
      section = trim(std::string_view(line).substr(1, line.size() - 2));
      static const std::vector<std::string> kSections = {"scene", "planner", "oracle", "sensor", "map", "aliases"};
      if (std::find(kSections.begin(), kSections.end(), section) == kSections.end()) {
        throw ConfigError("[" + section + "]", "unknown section", line_no);
      }
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(line, "expected 'key = value'", line_no);
    const std::string key = trim(std::string_view(line).substr(0, eq));
    const std::string value = trim(std::string_view(line).substr(eq + 1));
    add_entry(entries, section.empty() ? key : section + "." + key, {value, line_no});
  }
  for (const auto& ov : overrides) {
    const auto eq = ov.find('=');
    if (eq == std::string::npos) throw ConfigError(ov, "override must look like key=value");
    add_entry(entries, trim(std::string_view(ov).substr(0, eq)), {trim(std::string_view(ov).substr(eq + 1)), 0});
  }

  ResolvedConfig resolved;
  EpisodeConfig& cfg = resolved.config;
  // Scenario-dependent defaults come first; explicit keys override them.
  if (auto it = entries.find("scenario"); it != entries.end()) {
    try {
      find_field("scenario")->set(cfg, it->second.value);
    } catch (const ConfigError& e) {
      throw ConfigError("scenario", e.what(), it->second.line);
    }
  }
  cfg.scenario = ScenarioSpec::defaults(cfg.scenario.kind);
  cfg.start = cfg.scenario.kind == ScenarioKind::unoriented_start ? StartKind::unoriented : StartKind::facing;

  bool aliases_given = false;
  for (const auto& f : fields()) {
    auto it = entries.find(f.name);
    if (it == entries.end()) {
      resolved.provenance[f.name] = Provenance::default_value;
      continue;
    }
    try {
      f.set(cfg, it->second.value);
    } catch (const ConfigError& e) {
      // Re-throw with the line number attached.
      const std::string msg = e.what();
      const auto colon = msg.find("': ");
      throw ConfigError(f.name, colon == std::string::npos ? msg : msg.substr(colon + 3), it->second.line);
    }
    resolved.provenance[f.name] = Provenance::user;
  }
  for (const auto& [key, entry] : entries) {
    if (!key.starts_with("aliases.")) continue;
    if (!aliases_given) {
      cfg.aliases.clear();
      aliases_given = true;
    }
    const auto cls = parse_semantic_class(entry.value);
    if (!cls || *cls == SemanticClass::background) {
      throw ConfigError(key, "unknown class '" + entry.value + "'", entry.line);
    }
    cfg.aliases[key.substr(8)] = *cls;
    resolved.provenance[key] = Provenance::user;
  }
  cfg.planner_cfg.seed = cfg.seed;
  cfg.scenario.seed = cfg.seed;

  try {
    cfg.validate();
  } catch (const ConfigError& e) {
    auto it = entries.find(e.key());
    if (it == entries.end() || it->second.line == 0) throw;
    const std::string msg = e.what();
    const auto colon = msg.find("': ");
    throw ConfigError(e.key(), colon == std::string::npos ? msg : msg.substr(colon + 3), it->second.line);
  }
  return resolved;
}

ResolvedConfig parse_config_file(const std::string& path, const std::vector<std::string>& overrides) {
  std::string text;
  try {
    text = read_text_file(path);
  } catch (const std::runtime_error&) {
    throw ConfigError(path, "cannot read config file");
  }
  return parse_config(text, overrides);
}

namespace {

std::string render(const EpisodeConfig& cfg, const std::map<std::string, Provenance>* provenance) {
  std::string out;
  std::string section;
  auto annotate = [&](const std::string& key) -> std::string {
    if (!provenance) return "";
    auto it = provenance->find(key);
    const bool user = it != provenance->end() && it->second == Provenance::user;
    return user ? "  # user" : "  # default";
  };
  for (const auto& f : fields()) {
    const auto dot = f.name.find('.');
    const std::string sec = dot == std::string::npos ? "" : f.name.substr(0, dot);
    const std::string key = dot == std::string::npos ? f.name : f.name.substr(dot + 1);
    if (sec != section) {
      out += "\n[" + sec + "]\n";
      section = sec;
    }
    out += key + " = " + f.get(cfg) + annotate(f.name) + "\n";
  }
  out += "\n[aliases]\n";
  for (const auto& [alias, cls] : cfg.aliases) {
    out += alias + " = " + std::string(to_string(cls)) + annotate("aliases." + alias) + "\n";
  }
  return out;
}

}  // namespace

std::string dump_config(const EpisodeConfig& cfg) { return render(cfg, nullptr); }

std::string config_echo(const ResolvedConfig& resolved) { return render(resolved.config, &resolved.provenance); }

}  // namespace active_vision
