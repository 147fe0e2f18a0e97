#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cstring>
#include <fstream>
#include <string>

#include "doctest.h"
#include "homctx/homctx.h"
#include "json.hpp"
#include "test_util.hpp"

namespace {

struct SpaceHandle {
  homctx_label_space* ptr = nullptr;
  ~SpaceHandle() { homctx_label_space_free(ptr); }
};

struct ParamsHandle {
  homctx_params* ptr = nullptr;
  ~ParamsHandle() { homctx_params_free(ptr); }
};

}  // namespace

TEST_CASE("status names and version are exposed") {
  CHECK(std::string(homctx_version()) == "0.1.0");
  CHECK(std::string(homctx_status_name(HOMCTX_OK)) == "ok");
  CHECK(std::string(homctx_status_name(HOMCTX_ERR_SCHEMA)) == "schema");
}

TEST_CASE("builtin label space reports the GTEA counts") {
  SpaceHandle space;
  REQUIRE(homctx_label_space_gtea(&space.ptr) == HOMCTX_OK);
  int na = 0, ng = 0, no = 0;
  REQUIRE(homctx_label_space_counts(space.ptr, &na, &ng, &no) == HOMCTX_OK);
  CHECK(na == 10);
  CHECK(ng == 13);
  CHECK(no == 9);
  char fp[64];
  REQUIRE(homctx_label_space_fingerprint(space.ptr, fp, sizeof(fp)) == HOMCTX_OK);
  CHECK(std::strlen(fp) == 16);
}

TEST_CASE("label spaces and params round-trip through files") {
  homctx::test::TempDir dir("capi");
  SpaceHandle space;
  REQUIRE(homctx_label_space_gtea(&space.ptr) == HOMCTX_OK);
  const std::string labels = dir.file("labels.json").string();
  REQUIRE(homctx_label_space_save(space.ptr, labels.c_str()) == HOMCTX_OK);

  SpaceHandle loaded;
  REQUIRE(homctx_label_space_load(labels.c_str(), &loaded.ptr) == HOMCTX_OK);
  char fp1[64], fp2[64];
  homctx_label_space_fingerprint(space.ptr, fp1, sizeof(fp1));
  homctx_label_space_fingerprint(loaded.ptr, fp2, sizeof(fp2));
  CHECK(std::string(fp1) == fp2);

  ParamsHandle params;
  REQUIRE(homctx_params_zeros(space.ptr, &params.ptr) == HOMCTX_OK);
  const std::string path = dir.file("params.json").string();
  REQUIRE(homctx_params_save(params.ptr, space.ptr, path.c_str()) == HOMCTX_OK);
  ParamsHandle back;
  REQUIRE(homctx_params_load(path.c_str(), space.ptr, &back.ptr) == HOMCTX_OK);
}

TEST_CASE("failures return status codes and a message") {
  SpaceHandle space;
  CHECK(homctx_label_space_load("/nonexistent/labels.json", &space.ptr) == HOMCTX_ERR_IO);
  CHECK(std::strlen(homctx_last_error()) > 0);
  CHECK(homctx_label_space_load(nullptr, &space.ptr) == HOMCTX_ERR_INVALID_ARGUMENT);

  homctx::test::TempDir dir("capierr");
  std::ofstream(dir.file("garbage.json")) << "not json";
  CHECK(homctx_label_space_load(dir.file("garbage.json").string().c_str(), &space.ptr) ==
        HOMCTX_ERR_SCHEMA);
}

TEST_CASE("synth, fit, infer and eval compose through the C API") {
  homctx::test::TempDir dir("capie2e");
  homctx_synth_config synth;
  homctx_synth_config_init(&synth);
  synth.num_actions = 3;
  synth.num_grasps = 4;
  synth.num_attributes = 3;
  synth.num_frames = 120;
  synth.seed = 5;
  const std::string data = dir.file("data").string();
  REQUIRE(homctx_synth_run(&synth, data.c_str()) == HOMCTX_OK);
  const std::string manifest = data + "/manifest.json";

  homctx_fit_config fit;
  homctx_fit_config_init(&fit);
  fit.max_epochs = 50;
  const std::string params_path = dir.file("params.json").string();
  REQUIRE(homctx_fit_run(manifest.c_str(), &fit, params_path.c_str()) == HOMCTX_OK);

  homctx_infer_config infer;
  homctx_infer_config_init(&infer);
  const std::string preds = dir.file("preds.jsonl").string();
  REQUIRE(homctx_infer_run(manifest.c_str(), params_path.c_str(), &infer, "test", preds.c_str()) ==
          HOMCTX_OK);
  std::ifstream in(preds);
  std::string line;
  size_t lines = 0;
  while (std::getline(in, line))
    if (!line.empty()) ++lines;
  CHECK(lines == 24);  // 20% of 120

  // invalid threshold rejected before any work happens
  infer.hand_detection_threshold = 1.5;
  CHECK(homctx_infer_run(manifest.c_str(), params_path.c_str(), &infer, "test", preds.c_str()) ==
        HOMCTX_ERR_INVALID_ARGUMENT);
  CHECK(std::string(homctx_last_error()).find("threshold") != std::string::npos);
  infer.hand_detection_threshold = 0.8;
  CHECK(homctx_infer_run(manifest.c_str(), params_path.c_str(), &infer, "bogus", preds.c_str()) ==
        HOMCTX_ERR_INVALID_ARGUMENT);

  homctx_eval_config eval;
  homctx_eval_config_init(&eval);
  eval.fit.max_epochs = 40;
  const std::string report = dir.file("report").string();
  REQUIRE(homctx_eval_run(manifest.c_str(), params_path.c_str(), &eval, report.c_str()) == HOMCTX_OK);
  CHECK(std::filesystem::exists(report + "/summary.json"));
  CHECK(std::filesystem::exists(report + "/accuracy_grasp_full.csv"));

  const std::string ctx = dir.file("ctx").string();
  REQUIRE(homctx_export_context(params_path.c_str(), (data + "/labels.json").c_str(), 1, 5,
                                ctx.c_str()) == HOMCTX_OK);
  CHECK(std::filesystem::exists(ctx + "/context_grasp_attribute.csv"));
  CHECK(std::filesystem::exists(ctx + "/context_top_combinations.csv"));
}

TEST_CASE("single frames round-trip through the JSON inference entry point") {
  homctx::test::TempDir dir("capiframe");
  homctx_synth_config synth;
  homctx_synth_config_init(&synth);
  synth.num_actions = 2;
  synth.num_grasps = 3;
  synth.num_attributes = 2;
  synth.num_frames = 4;
  synth.seed = 9;
  const std::string data = dir.file("data").string();
  REQUIRE(homctx_synth_run(&synth, data.c_str()) == HOMCTX_OK);

  SpaceHandle space;
  REQUIRE(homctx_label_space_load((data + "/labels.json").c_str(), &space.ptr) == HOMCTX_OK);
  ParamsHandle params;
  REQUIRE(homctx_params_load((data + "/generating_params.json").c_str(), space.ptr, &params.ptr) ==
          HOMCTX_OK);

  std::ifstream frames(data + "/frames.jsonl");
  std::string header, frame_line;
  REQUIRE(std::getline(frames, header));
  REQUIRE(std::getline(frames, frame_line));

  homctx_infer_config cfg;
  homctx_infer_config_init(&cfg);
  char* result = nullptr;
  REQUIRE(homctx_infer_frame_json(space.ptr, params.ptr, frame_line.c_str(), &cfg, &result) ==
          HOMCTX_OK);
  REQUIRE(result != nullptr);
  const auto parsed = nlohmann::json::parse(result);
  CHECK(parsed.contains("action"));
  CHECK(parsed.contains("potential"));
  CHECK(parsed["frame_id"] == "f000000");
  homctx_string_free(result);

  CHECK(homctx_infer_frame_json(space.ptr, params.ptr, "{broken", &cfg, &result) ==
        HOMCTX_ERR_SCHEMA);
}

TEST_CASE("oracle suite runs through the C API") {
  homctx_oracle_config cfg;
  homctx_oracle_config_init(&cfg);
  cfg.count = 40;
  cfg.seed = 3;
  homctx_oracle_stats stats;
  REQUIRE(homctx_oracle_run(&cfg, &stats, nullptr) == HOMCTX_OK);
  CHECK(stats.count == 40);
  CHECK(stats.match_fraction >= 0.9);
  CHECK(stats.trace_violations == 0);
}

TEST_CASE("probability-map box extraction through the C API") {
  homctx::test::TempDir dir("capipgm");
  // tiny vertical bar blob in a 40x40 map
  const int w = 40, h = 40;
  std::ofstream pgm(dir.file("map.pgm"), std::ios::binary);
  pgm << "P5\n" << w << " " << h << "\n255\n";
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) pgm.put((x >= 18 && x < 23 && y >= 5 && y < 35) ? char(255) : char(0));
  pgm.close();

  const std::string out = dir.file("boxes.json").string();
  REQUIRE(homctx_extract_hand_boxes(dir.file("map.pgm").string().c_str(), 0.5, 0.01, 0.9,
                                    out.c_str()) == HOMCTX_OK);
  std::ifstream in(out);
  const auto boxes = nlohmann::json::parse(in);
  REQUIRE(boxes.is_array());
  CHECK(boxes.size() == 1);
  CHECK(homctx_extract_hand_boxes(dir.file("map.pgm").string().c_str(), 2.0, 0.01, 0.9,
                                  out.c_str()) == HOMCTX_ERR_INVALID_ARGUMENT);
}
