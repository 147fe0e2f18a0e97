#include "evidence_io.hpp"

#include <cmath>
#include <sstream>

#include "json.hpp"

namespace homctx {

using nlohmann::json;

namespace {

constexpr int kSchemaVersion = 1;

[[noreturn]] void schema_fail(const std::string& where, const std::string& what) {
  fail(ErrorCode::schema, where + ": " + what);
}

json box_to_json(const BoundingBox& b) {
  return json{{"cx", b.cx}, {"cy", b.cy}, {"w", b.w}, {"h", b.h}};
}

BoundingBox box_from_json(const json& j, const std::string& where) {
  if (!j.is_object() || !j.contains("cx") || !j.contains("cy") || !j.contains("w") || !j.contains("h"))
    schema_fail(where, "box needs {cx, cy, w, h}");
  BoundingBox b{j["cx"].get<double>(), j["cy"].get<double>(), j["w"].get<double>(),
                j["h"].get<double>()};
  if (!valid_box(b)) schema_fail(where, "box fields must be finite with w > 0, h > 0");
  return b;
}

json offset_to_json(const OffsetVector& o) {
  return json{{"nx", o.nx}, {"ny", o.ny}, {"nw", o.nw}, {"nh", o.nh}};
}

OffsetVector offset_from_json(const json& j, const std::string& where) {
  if (!j.is_object() || !j.contains("nx") || !j.contains("ny") || !j.contains("nw") || !j.contains("nh"))
    schema_fail(where, "offset needs {nx, ny, nw, nh}");
  OffsetVector o{j["nx"].get<double>(), j["ny"].get<double>(), j["nw"].get<double>(),
                 j["nh"].get<double>()};
  if (!std::isfinite(o.nx) || !std::isfinite(o.ny) || !(o.nw > 0) || !(o.nh > 0))
    schema_fail(where, "offset fields must be finite with nw > 0, nh > 0");
  return o;
}

std::vector<double> vector_from_json(const json& j, size_t expected, const std::string& where,
                                     const std::string& field) {
  if (!j.is_array())
    schema_fail(where, field + " must be an array");
  if (j.size() != expected) {
    std::ostringstream msg;
    msg << field << " length " << j.size() << " does not match the label space (expected " << expected
        << ")";
    schema_fail(where, msg.str());
  }
  std::vector<double> out;
  out.reserve(j.size());
  for (const auto& v : j) {
    const double x = v.get<double>();
    if (!std::isfinite(x)) schema_fail(where, field + " has a non-finite entry");
    out.push_back(x);
  }
  return out;
}

json side_truth_to_json(const SideState& side) {
  json j{{"grasp", side.grasp}, {"attribute", side.attribute}};
  if (side.hand_box) j["hand_box"] = box_to_json(*side.hand_box);
  if (side.object_box) j["object_box"] = box_to_json(*side.object_box);
  return j;
}

}  // namespace

std::string frame_to_json_line(const FrameRecord& frame) {
  json j;
  j["frame_id"] = frame.frame_id;
  j["phi_a"] = frame.evidence.phi_a;
  for (Side s : kSides) {
    json side;
    json hands = json::array();
    for (const HandCandidate& c : frame.evidence.hand_candidates(s))
      hands.push_back(json{{"box", box_to_json(c.box)},
                           {"phi_h", c.phi_h},
                           {"phi_g", c.phi_g},
                           {"offset", offset_to_json(c.offset)}});
    json objects = json::array();
    for (const ObjectCandidate& c : frame.evidence.object_candidates(s))
      objects.push_back(json{{"box", box_to_json(c.box)}, {"phi_o", c.phi_o}});
    side["hand_candidates"] = std::move(hands);
    side["object_candidates"] = std::move(objects);
    j[side_name(s)] = std::move(side);
  }
  if (frame.truth) {
    json t;
    t["action"] = frame.truth->action;
    t["left"] = side_truth_to_json(frame.truth->side(Side::left));
    t["right"] = side_truth_to_json(frame.truth->side(Side::right));
    j["truth"] = std::move(t);
  }
  return j.dump();
}

FrameRecord frame_from_json_line(const std::string& line, const LabelSpace& space) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::exception& e) {
    schema_fail("frame record", std::string("invalid JSON: ") + e.what());
  }
  const std::string where = "frame " + j.value("frame_id", std::string("<missing id>"));
  if (!j.contains("frame_id") || !j["frame_id"].is_string()) schema_fail(where, "missing frame_id");

  FrameRecord frame;
  frame.frame_id = j["frame_id"].get<std::string>();
  if (!j.contains("phi_a")) schema_fail(where, "missing phi_a");
  frame.evidence.phi_a = vector_from_json(j["phi_a"], space.num_actions(), where, "phi_a");

  for (Side s : kSides) {
    if (!j.contains(side_name(s))) schema_fail(where, std::string("missing side ") + side_name(s));
    const json& side = j[side_name(s)];
    for (const auto& c : side.value("hand_candidates", json::array())) {
      HandCandidate hc;
      hc.box = box_from_json(c.at("box"), where);
      const auto phi_h = vector_from_json(c.at("phi_h"), 3, where, "phi_h");
      for (int i = 0; i < 3; ++i) {
        if (!(phi_h[i] >= 0.0 && phi_h[i] <= 1.0)) schema_fail(where, "phi_h entry outside [0,1]");
        hc.phi_h[i] = phi_h[i];
      }
      hc.phi_g = vector_from_json(c.at("phi_g"), space.num_grasps(), where, "phi_g");
      hc.offset = offset_from_json(c.at("offset"), where);
      frame.evidence.hands[side_index(s)].push_back(std::move(hc));
    }
    for (const auto& c : side.value("object_candidates", json::array())) {
      ObjectCandidate oc;
      oc.box = box_from_json(c.at("box"), where);
      oc.phi_o = vector_from_json(c.at("phi_o"), space.num_attributes(), where, "phi_o");
      frame.evidence.objects[side_index(s)].push_back(std::move(oc));
    }
  }

  if (j.contains("truth")) {
    const json& t = j["truth"];
    SceneState truth;
    if (!t.contains("action")) schema_fail(where, "truth missing action");
    truth.action = t["action"].get<int>();
    for (Side s : kSides) {
      if (!t.contains(side_name(s))) schema_fail(where, "truth missing a side");
      const json& ts = t[side_name(s)];
      SideState& side = truth.side(s);
      side.grasp = ts.value("grasp", 0);
      side.attribute = ts.value("attribute", 0);
      if (ts.contains("hand_box")) side.hand_box = box_from_json(ts["hand_box"], where);
      if (ts.contains("object_box")) side.object_box = box_from_json(ts["object_box"], where);
    }
    try {
      validate_state(truth, space);
    } catch (const Error& e) {
      schema_fail(where, std::string("truth: ") + e.what());
    }
    frame.truth = truth;
  }
  return frame;
}

FrameReader::FrameReader(const std::filesystem::path& path, const LabelSpace& space)
    : path_(path), space_(space), in_(path) {
  if (!in_) fail(ErrorCode::io, "cannot open frames file: " + path.string());
  std::string header_line;
  if (!std::getline(in_, header_line)) return;  // empty file: empty stream
  ++line_;
  json header;
  try {
    header = json::parse(header_line);
  } catch (const json::exception& e) {
    schema_fail(path_.string() + ":1", std::string("invalid header JSON: ") + e.what());
  }
  if (header.value("type", std::string()) != "homctx-frames")
    schema_fail(path_.string() + ":1", "not a homctx-frames file");
  if (header.value("schema_version", -1) != kSchemaVersion)
    schema_fail(path_.string() + ":1", "unsupported schema_version");
  const std::string fp = header.value("label_space_fingerprint", std::string());
  if (fp != space_.fingerprint())
    fail(ErrorCode::fingerprint_mismatch,
         path_.string() + ": label-space fingerprint " + fp + " does not match " + space_.fingerprint());
}

bool FrameReader::next(FrameRecord& out) {
  std::string line;
  while (std::getline(in_, line)) {
    ++line_;
    if (line.empty()) continue;
    try {
      out = frame_from_json_line(line, space_);
    } catch (const Error& e) {
      std::ostringstream msg;
      msg << path_.string() << ":" << line_ << ": " << e.what();
      fail(e.code(), msg.str());
    }
    return true;
  }
  return false;
}

void write_frames(const std::vector<FrameRecord>& frames, const LabelSpace& space,
                  const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::io, "cannot write frames file: " + path.string());
  json header{{"schema_version", kSchemaVersion},
              {"type", "homctx-frames"},
              {"label_space_fingerprint", space.fingerprint()},
              {"num_actions", space.num_actions()},
              {"num_grasps", space.num_grasps()},
              {"num_attributes", space.num_attributes()}};
  out << header.dump() << "\n";
  for (const FrameRecord& f : frames) out << frame_to_json_line(f) << "\n";
}

std::vector<FrameRecord> read_all_frames(const DatasetManifest& manifest, const LabelSpace& space,
                                         const std::filesystem::path& base_dir) {
  std::vector<FrameRecord> out;
  for (const auto& file : manifest.frame_files) {
    FrameReader reader(file.is_absolute() ? file : base_dir / file, space);
    FrameRecord frame;
    while (reader.next(frame)) out.push_back(std::move(frame));
  }
  return out;
}

DatasetManifest read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::io, "cannot open manifest: " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    schema_fail(path.string(), std::string("invalid JSON: ") + e.what());
  }
  if (j.value("type", std::string()) != "homctx-manifest")
    schema_fail(path.string(), "not a homctx-manifest file");
  if (j.value("schema_version", -1) != kSchemaVersion)
    schema_fail(path.string(), "unsupported schema_version");
  DatasetManifest m;
  if (!j.contains("labels")) schema_fail(path.string(), "missing labels path");
  m.labels_path = j["labels"].get<std::string>();
  if (!j.contains("frames") || !j["frames"].is_array() || j["frames"].empty())
    schema_fail(path.string(), "missing frames list");
  for (const auto& f : j["frames"]) m.frame_files.emplace_back(f.get<std::string>());
  if (j.contains("probability_map_dir") && !j["probability_map_dir"].is_null())
    m.probability_map_dir = j["probability_map_dir"].get<std::string>();
  if (j.contains("splits")) {
    for (const auto& id : j["splits"].value("train", json::array()))
      m.train_ids.insert(id.get<std::string>());
    for (const auto& id : j["splits"].value("test", json::array()))
      m.test_ids.insert(id.get<std::string>());
  }
  for (const std::string& id : m.train_ids)
    if (m.test_ids.count(id))
      schema_fail(path.string(), "frame id \"" + id + "\" assigned to both splits");

  const auto base = path.parent_path();
  auto must_exist = [&](const std::filesystem::path& p) {
    const auto full = p.is_absolute() ? p : base / p;
    if (!std::filesystem::exists(full))
      fail(ErrorCode::io, path.string() + ": referenced file does not exist: " + full.string());
  };
  must_exist(m.labels_path);
  for (const auto& f : m.frame_files) must_exist(f);
  if (m.probability_map_dir) must_exist(*m.probability_map_dir);
  return m;
}

void write_manifest(const DatasetManifest& manifest, const std::filesystem::path& path) {
  json j;
  j["schema_version"] = kSchemaVersion;
  j["type"] = "homctx-manifest";
  j["labels"] = manifest.labels_path.generic_string();
  json frames = json::array();
  for (const auto& f : manifest.frame_files) frames.push_back(f.generic_string());
  j["frames"] = std::move(frames);
  j["probability_map_dir"] =
      manifest.probability_map_dir ? json(manifest.probability_map_dir->generic_string()) : json();
  j["splits"]["train"] = manifest.train_ids;
  j["splits"]["test"] = manifest.test_ids;
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::io, "cannot write manifest: " + path.string());
  out << j.dump(2) << "\n";
}

// ---------------------------------------------------------------------------
// Parameters

namespace {

json nested_from_flat(const std::vector<double>& flat, const std::vector<size_t>& dims, size_t level,
                      size_t& pos) {
  json arr = json::array();
  if (level + 1 == dims.size()) {
    for (size_t i = 0; i < dims[level]; ++i) arr.push_back(flat[pos++]);
  } else {
    for (size_t i = 0; i < dims[level]; ++i) arr.push_back(nested_from_flat(flat, dims, level + 1, pos));
  }
  return arr;
}

void flat_from_nested(const json& j, const std::vector<size_t>& dims, size_t level,
                      std::vector<double>& out, const std::string& field) {
  if (!j.is_array() || j.size() != dims[level])
    schema_fail("params", field + " has the wrong shape");
  if (level + 1 == dims.size()) {
    for (const auto& v : j) {
      const double x = v.get<double>();
      if (!std::isfinite(x)) schema_fail("params", field + " has a non-finite entry");
      out.push_back(x);
    }
  } else {
    for (const auto& sub : j) flat_from_nested(sub, dims, level + 1, out, field);
  }
}

}  // namespace

void write_params(const ModelParams& params, const LabelSpace& space,
                  const std::filesystem::path& path) {
  if (!params.dims_match(space))
    fail(ErrorCode::invalid_argument, "write_params: params do not match the label space");
  params.check_finite();
  const size_t g = params.ng + 1, o = params.no + 1;
  json j;
  j["schema_version"] = kSchemaVersion;
  j["type"] = "homctx-params";
  j["label_space_fingerprint"] = space.fingerprint();
  j["num_actions"] = params.na;
  j["num_grasps"] = params.ng;
  j["num_attributes"] = params.no;
  size_t pos = 0;
  j["alpha"] = nested_from_flat(params.alpha, {static_cast<size_t>(params.na), g, g, o, o}, 0, pos);
  pos = 0;
  j["beta"] = nested_from_flat(params.beta, {static_cast<size_t>(params.ng), static_cast<size_t>(params.no)},
                               0, pos);
  j["gamma"] = {{"left", params.gamma[0]}, {"right", params.gamma[1]}};
  j["zeta"] = {{"left", params.zeta[0]}, {"right", params.zeta[1]}};
  pos = 0;
  j["eta"] = nested_from_flat(params.eta, {static_cast<size_t>(params.ng), static_cast<size_t>(params.ng)},
                              0, pos);
  pos = 0;
  j["lambda"] =
      nested_from_flat(params.lambda, {static_cast<size_t>(params.no), static_cast<size_t>(params.no)}, 0,
                       pos);
  pos = 0;
  j["xi"] = nested_from_flat(params.xi, {static_cast<size_t>(params.na), static_cast<size_t>(params.na)},
                             0, pos);
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::io, "cannot write params file: " + path.string());
  out << j.dump() << "\n";
}

ModelParams read_params(const std::filesystem::path& path, const LabelSpace& space) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::io, "cannot open params file: " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    schema_fail(path.string(), std::string("invalid JSON: ") + e.what());
  }
  if (j.value("type", std::string()) != "homctx-params")
    schema_fail(path.string(), "not a homctx-params file");
  if (j.value("schema_version", -1) != kSchemaVersion)
    schema_fail(path.string(), "unsupported schema_version");
  const std::string fp = j.value("label_space_fingerprint", std::string());
  if (fp != space.fingerprint())
    fail(ErrorCode::fingerprint_mismatch, path.string() + ": label-space fingerprint " + fp +
                                              " does not match " + space.fingerprint());
  if (j.value("num_actions", -1) != space.num_actions() ||
      j.value("num_grasps", -1) != space.num_grasps() ||
      j.value("num_attributes", -1) != space.num_attributes())
    schema_fail(path.string(), "tensor dimensions do not match the label space");

  ModelParams p = ModelParams::zeros(space);
  const size_t g = p.ng + 1, o = p.no + 1;
  auto read_tensor = [&](const char* field, const std::vector<size_t>& dims, std::vector<double>& out) {
    if (!j.contains(field)) schema_fail(path.string(), std::string("missing tensor ") + field);
    out.clear();
    flat_from_nested(j[field], dims, 0, out, field);
  };
  read_tensor("alpha", {static_cast<size_t>(p.na), g, g, o, o}, p.alpha);
  read_tensor("beta", {static_cast<size_t>(p.ng), static_cast<size_t>(p.no)}, p.beta);
  read_tensor("eta", {static_cast<size_t>(p.ng), static_cast<size_t>(p.ng)}, p.eta);
  read_tensor("lambda", {static_cast<size_t>(p.no), static_cast<size_t>(p.no)}, p.lambda);
  read_tensor("xi", {static_cast<size_t>(p.na), static_cast<size_t>(p.na)}, p.xi);
  if (!j.contains("gamma") || !j.contains("zeta")) schema_fail(path.string(), "missing gamma or zeta");
  p.gamma[0] = j["gamma"].at("left").get<double>();
  p.gamma[1] = j["gamma"].at("right").get<double>();
  for (int s = 0; s < 2; ++s) {
    const json& z = j["zeta"].at(s == 0 ? "left" : "right");
    if (!z.is_array() || z.size() != 3) schema_fail(path.string(), "zeta must hold 3 weights per side");
    for (int i = 0; i < 3; ++i) p.zeta[s][i] = z[i].get<double>();
  }
  p.check_finite();
  return p;
}

// ---------------------------------------------------------------------------
// Result tables

void TaskTally::add(int truth, int predicted) {
  truths.push_back(truth);
  predictions.push_back(predicted);
}

int TaskTally::correct() const {
  int n = 0;
  for (size_t i = 0; i < truths.size(); ++i)
    if (truths[i] == predictions[i]) ++n;
  return n;
}

double TaskTally::overall_accuracy() const {
  return truths.empty() ? 0.0 : static_cast<double>(correct()) / truths.size();
}

double TaskTally::class_accuracy(int label, int* correct_out, int* total_out) const {
  int n = 0, ok = 0;
  for (size_t i = 0; i < truths.size(); ++i) {
    if (truths[i] != label) continue;
    ++n;
    if (predictions[i] == label) ++ok;
  }
  if (correct_out) *correct_out = ok;
  if (total_out) *total_out = n;
  return n == 0 ? 0.0 : static_cast<double>(ok) / n;
}

std::vector<std::vector<int>> TaskTally::confusion() const {
  const int classes = static_cast<int>(class_names.size());
  const int cols = first_label + classes;  // predicted labels start at 0 (null) for sided tasks
  std::vector<std::vector<int>> m(classes, std::vector<int>(cols, 0));
  for (size_t i = 0; i < truths.size(); ++i) {
    const int row = truths[i] - first_label;
    if (row < 0 || row >= classes) continue;
    const int col = predictions[i];
    if (col >= 0 && col < cols) ++m[row][col];
  }
  return m;
}

namespace {

std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  out += "\"";
  return out;
}

void write_accuracy_csv(const TaskTally& tally, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::io, "cannot write " + path.string());
  out << "# schema_version,1\n";
  out << "label,name,correct,total,accuracy\n";
  char buf[64];
  for (size_t i = 0; i < tally.class_names.size(); ++i) {
    const int label = tally.first_label + static_cast<int>(i);
    int ok = 0, n = 0;
    const double acc = tally.class_accuracy(label, &ok, &n);
    out << label << "," << csv_escape(tally.class_names[i]) << "," << ok << "," << n << ",";
    if (n > 0) {
      std::snprintf(buf, sizeof(buf), "%.6f", acc);
      out << buf;
    }
    out << "\n";
  }
  std::snprintf(buf, sizeof(buf), "%.6f", tally.overall_accuracy());
  out << "Overall,," << tally.correct() << "," << tally.total() << "," << buf << "\n";
}

void write_confusion_csv(const TaskTally& tally, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::io, "cannot write " + path.string());
  out << "# schema_version,1\n";
  out << "truth\\predicted";
  if (tally.first_label == 1) out << ",null";
  for (const std::string& name : tally.class_names) out << "," << csv_escape(name);
  out << "\n";
  const auto m = tally.confusion();
  for (size_t r = 0; r < m.size(); ++r) {
    out << csv_escape(tally.class_names[r]);
    for (int v : m[r]) out << "," << v;
    out << "\n";
  }
}

}  // namespace

void write_context_tables(const std::vector<ContextTable>& tables,
                          const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);
  char buf[64];
  for (const ContextTable& table : tables) {
    std::ofstream out(out_dir / ("context_" + table.name + ".csv"), std::ios::binary);
    if (!out) fail(ErrorCode::io, "cannot write context table");
    out << "# schema_version,1\n";
    for (const std::string& c : table.col_names) out << "," << csv_escape(c);
    out << "\n";
    for (size_t r = 0; r < table.row_names.size(); ++r) {
      out << csv_escape(table.row_names[r]);
      for (size_t c = 0; c < table.col_names.size(); ++c) {
        std::snprintf(buf, sizeof(buf), "%.17g", table.values[r * table.col_names.size() + c]);
        out << "," << buf;
      }
      out << "\n";
    }
  }
}

void write_results(const EvalReport& report, const std::filesystem::path& out_dir) {
  if (report.per_mode.empty()) fail(ErrorCode::invalid_argument, "write_results: empty report");
  std::filesystem::create_directories(out_dir);
  for (const auto& [mode, tallies] : report.per_mode) {
    for (const TaskTally& tally : tallies) {
      write_accuracy_csv(tally, out_dir / ("accuracy_" + tally.task + "_" + mode + ".csv"));
      write_confusion_csv(tally, out_dir / ("confusion_" + tally.task + "_" + mode + ".csv"));
    }
  }
  write_context_tables(report.context_tables, out_dir);
  char buf[64];
  if (!report.downsizing_rows.empty()) {
    std::ofstream out(out_dir / "downsizing.csv", std::ios::binary);
    out << "# schema_version,1\n";
    out << "task,fraction,mode,accuracy\n";
    for (const auto& [task, fraction, mode, acc] : report.downsizing_rows) {
      std::snprintf(buf, sizeof(buf), "%g", fraction);
      out << task << "," << buf << "," << mode << ",";
      std::snprintf(buf, sizeof(buf), "%.6f", acc);
      out << buf << "\n";
    }
  }
  if (!report.summary_json.empty()) {
    std::ofstream out(out_dir / "summary.json", std::ios::binary);
    out << report.summary_json;
  }
}

}  // namespace homctx
