#pragma once

#include "active_vision/protocol.hpp"
#include "active_vision/scene.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <string>

namespace active_vision {

/// Knobs that make the ground-truth oracle behave like an imperfect
/// open-vocabulary segmenter.
struct OracleNoiseConfig {
  double confidence_min = 1.0;
  double confidence_max = 1.0;
  double instance_dropout_p = 0.0;
  int erosion_radius = 0;
  std::uint64_t seed = 0;

  static OracleNoiseConfig exact() { return {}; }
  void validate() const;
  bool operator==(const OracleNoiseConfig&) const = default;
};

/// Text prompt -> scene class. Class names always resolve to themselves.
using PromptAliases = std::map<std::string, SemanticClass>;

PromptAliases default_prompt_aliases();
std::optional<SemanticClass> resolve_prompt(const std::string& prompt, const PromptAliases& aliases);

/// One mask per 8-connected component of the prompted class, eroded,
/// randomly dropped and given a random confidence; masks under the box
/// threshold are removed. Deterministic in (request, noise).
SegmentationResponse oracle_segment(const SegmentationRequest& req, const OracleNoiseConfig& noise,
                                    const PromptAliases& aliases = default_prompt_aliases());

/// Reads `key = value` lines (confidence_min, confidence_max,
/// instance_dropout_p, erosion_radius, seed).
OracleNoiseConfig load_noise_config(const std::string& path);

}  // namespace active_vision
