#pragma once

#include "active_vision/episode.hpp"

#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace active_vision {

enum class Provenance { default_value, user };

struct ResolvedConfig {
  EpisodeConfig config;
  std::map<std::string, Provenance> provenance;  // qualified key -> origin
};

/// Parses the run configuration:
///
///     # top-level keys
///     scenario = full_occlusion
///     planner = nbv
///     [planner]
///     candidates = 32
///
/// Keys are addressed as `section.key` in overrides (`planner.candidates=16`)
/// and plain `key` at top level. Unknown keys, malformed values and
/// invariant violations throw ConfigError naming the key and line.
ResolvedConfig parse_config(std::string_view text, const std::vector<std::string>& overrides = {});
ResolvedConfig parse_config_file(const std::string& path, const std::vector<std::string>& overrides = {});

/// Every key with its resolved value; parse_config(dump_config(c)).config == c.
std::string dump_config(const EpisodeConfig& cfg);

/// dump_config annotated with `# default` / `# user` per key.
std::string config_echo(const ResolvedConfig& resolved);

}  // namespace active_vision
