// Regenerates the golden request/response frames under tests/fixtures/protocol.
// Usage: make_protocol_fixtures <output-dir>

#include "active_vision/episode.hpp"
#include "active_vision/oracle.hpp"
#include "active_vision/protocol.hpp"

#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>

namespace av = active_vision;

namespace {

struct Case {
  std::string name;
  av::SegmentationRequest request;
  av::OracleNoiseConfig noise;
};

void paint(av::LabelImage& img, int u0, int v0, int u1, int v1, av::SemanticClass cls) {
  for (int v = v0; v <= v1; ++v) {
    for (int u = u0; u <= u1; ++u) img.at(u, v) = cls;
  }
}

av::LabelImage blobs_16x12() {
  av::LabelImage img(16, 12);
  paint(img, 0, 0, 15, 1, av::SemanticClass::leaf);
  paint(img, 2, 3, 5, 6, av::SemanticClass::fruit);
  paint(img, 9, 6, 13, 10, av::SemanticClass::fruit);
  paint(img, 7, 2, 7, 11, av::SemanticClass::branch);
  return img;
}

av::OracleNoiseConfig noise(double cmin, double cmax, double dropout, int erosion, std::uint64_t seed) {
  return {cmin, cmax, dropout, erosion, seed};
}

std::vector<Case> cases() {
  std::vector<Case> out;
  const av::LabelImage blobs = blobs_16x12();

  out.push_back({"two_blobs_exact", av::make_label_request(101, blobs, "fruit"), av::OracleNoiseConfig::exact()});

  av::LabelImage diagonal(8, 8);
  paint(diagonal, 1, 1, 3, 3, av::SemanticClass::fruit);
  paint(diagonal, 4, 4, 6, 6, av::SemanticClass::fruit);
  out.push_back({"diagonal_touch", av::make_label_request(102, diagonal, "fruit"), av::OracleNoiseConfig::exact()});

  out.push_back({"alias_tomato", av::make_label_request(103, blobs, "tomato"), av::OracleNoiseConfig::exact()});

  av::EpisodeConfig cfg;
  cfg.scenario = av::ScenarioSpec::defaults(av::ScenarioKind::single_cluster);
  const av::GroundTruthScene scene = av::scene_for(cfg);
  const av::RenderedView view = av::render_view(scene, av::start_pose(cfg, scene.bounds()), cfg.intrinsics, 1);
  out.push_back({"rendered_view", av::make_label_request(104, view.labels, "fruit"), noise(0.5, 0.95, 0.0, 0, 1)});

  out.push_back({"unknown_prompt", av::make_label_request(105, blobs, "banana"), av::OracleNoiseConfig::exact()});

  out.push_back({"empty_image", av::make_label_request(106, av::LabelImage(6, 4), "fruit"), av::OracleNoiseConfig::exact()});

  av::LabelImage three(20, 10);
  paint(three, 1, 1, 4, 4, av::SemanticClass::fruit);
  paint(three, 8, 2, 11, 7, av::SemanticClass::fruit);
  paint(three, 15, 5, 18, 8, av::SemanticClass::fruit);
  out.push_back({"confidence_noise", av::make_label_request(107, three, "fruit"), noise(0.4, 0.9, 0.0, 0, 11)});
  out.push_back({"instance_dropout", av::make_label_request(108, three, "fruit"), noise(1.0, 1.0, 0.5, 0, 5)});

  av::LabelImage erosion(12, 10);
  paint(erosion, 1, 1, 6, 6, av::SemanticClass::fruit);
  paint(erosion, 9, 8, 10, 8, av::SemanticClass::fruit);
  out.push_back({"erosion", av::make_label_request(109, erosion, "fruit"), noise(1.0, 1.0, 0.0, 1, 0)});

  out.push_back({"box_threshold", av::make_label_request(110, three, "fruit", 0.6, 0.25), noise(0.3, 0.9, 0.0, 0, 3)});
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  if (argc != 2) {
    std::cerr << "usage: make_protocol_fixtures <output-dir>\n";
    return 1;
  }
  const std::filesystem::path dir(argv[1]);
  std::filesystem::create_directories(dir);
  nlohmann::ordered_json manifest = nlohmann::ordered_json::array();
  int index = 1;
  for (const Case& c : cases()) {
    char prefix[64];
    std::snprintf(prefix, sizeof(prefix), "%02d_%s", index++, c.name.c_str());
    const std::string request_file = std::string(prefix) + ".request.bin";
    const std::string response_file = std::string(prefix) + ".response.bin";
    const av::SegmentationResponse resp = av::oracle_segment(c.request, c.noise);
    av::write_text_file((dir / request_file).string(), av::frame(av::encode_request(c.request)));
    av::write_text_file((dir / response_file).string(), av::frame(av::canonical_response(resp)));
    manifest.push_back({{"name", c.name},
                        {"request", request_file},
                        {"response", response_file},
                        {"masks", resp.masks.size()},
                        {"noise",
                         {{"confidence_min", c.noise.confidence_min},
                          {"confidence_max", c.noise.confidence_max},
                          {"instance_dropout_p", c.noise.instance_dropout_p},
                          {"erosion_radius", c.noise.erosion_radius},
                          {"seed", c.noise.seed}}}});
  }
  av::write_text_file((dir / "manifest.json").string(), manifest.dump(2) + "\n");
  std::cout << "wrote " << manifest.size() << " fixtures to " << dir.string() << "\n";
  return 0;
}
