#include "labels.hpp"

#include <cstdint>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

namespace homctx {

using nlohmann::json;

namespace {

constexpr int kLabelSchemaVersion = 1;

// FNV-1a over a canonical serialization of the ordered class lists.
uint64_t fnv1a(const std::string& text) {
  uint64_t h = 1469598103934665603ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

std::string hash_lists(const std::vector<LabelEntry>& actions, const std::vector<LabelEntry>& grasps,
                       const std::vector<LabelEntry>& attributes) {
  std::string buf;
  auto feed = [&buf](const char* tag, const std::vector<LabelEntry>& list) {
    buf += tag;
    buf += '\x1d';
    for (const auto& e : list) {
      buf += e.id;
      buf += '\x1e';
      buf += e.name;
      buf += '\x1f';
    }
  };
  feed("actions", actions);
  feed("grasps", grasps);
  feed("attributes", attributes);
  char out[17];
  std::snprintf(out, sizeof(out), "%016llx", static_cast<unsigned long long>(fnv1a(buf)));
  return std::string(out);
}

void check_list(const char* what, const std::vector<LabelEntry>& list, bool has_null) {
  if (list.empty()) fail(ErrorCode::schema, std::string("label space: empty ") + what + " list");
  if (has_null && list.size() < 2)
    fail(ErrorCode::schema, std::string("label space: ") + what + " needs at least one non-null class");
  std::set<std::string> names, ids;
  for (const auto& e : list) {
    if (e.id.empty() || e.name.empty())
      fail(ErrorCode::schema, std::string("label space: blank id or name in ") + what);
    if (!names.insert(e.name).second)
      fail(ErrorCode::schema, std::string("label space: duplicate name \"") + e.name + "\" in " + what);
    if (!ids.insert(e.id).second)
      fail(ErrorCode::schema, std::string("label space: duplicate id \"") + e.id + "\" in " + what);
  }
}

std::vector<LabelEntry> parse_list(const json& doc, const char* key, bool wants_null) {
  if (!doc.contains(key) || !doc[key].is_array())
    fail(ErrorCode::schema, std::string("label space: missing \"") + key + "\" list");
  std::vector<LabelEntry> out;
  bool saw_null = false;
  size_t idx = 0;
  for (const auto& item : doc[key]) {
    if (!item.is_object() || !item.contains("id") || !item.contains("name"))
      fail(ErrorCode::schema, std::string("label space: ") + key + " entries need {id, name}");
    bool is_null = item.value("null", false);
    if (is_null) {
      if (!wants_null) fail(ErrorCode::schema, std::string("label space: ") + key + " cannot declare a null class");
      if (idx != 0) fail(ErrorCode::schema, std::string("label space: null class of ") + key + " must be first");
      saw_null = true;
    }
    out.push_back({item["id"].get<std::string>(), item["name"].get<std::string>()});
    ++idx;
  }
  if (wants_null && !saw_null)
    fail(ErrorCode::schema,
         std::string("label space: missing null-class declaration at index 0 of ") + key);
  return out;
}

}  // namespace

LabelSpace::LabelSpace(std::vector<LabelEntry> actions, std::vector<LabelEntry> grasps,
                       std::vector<LabelEntry> attributes)
    : actions_(std::move(actions)), grasps_(std::move(grasps)), attributes_(std::move(attributes)) {
  check_list("actions", actions_, false);
  check_list("grasps", grasps_, true);
  check_list("attributes", attributes_, true);
  fingerprint_ = hash_lists(actions_, grasps_, attributes_);
}

LabelSpace LabelSpace::from_json_text(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    fail(ErrorCode::schema, std::string("label space: invalid JSON: ") + e.what());
  }
  if (doc.value("schema_version", kLabelSchemaVersion) != kLabelSchemaVersion)
    fail(ErrorCode::schema, "label space: unsupported schema_version");
  return LabelSpace(parse_list(doc, "actions", false), parse_list(doc, "grasps", true),
                    parse_list(doc, "attributes", true));
}

LabelSpace LabelSpace::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::io, "cannot open label space file: " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return from_json_text(ss.str());
}

std::string LabelSpace::to_json_text() const {
  json doc;
  doc["schema_version"] = kLabelSchemaVersion;
  doc["type"] = "homctx-labels";
  auto dump_list = [](const std::vector<LabelEntry>& list, bool has_null) {
    json arr = json::array();
    size_t idx = 0;
    for (const auto& e : list) {
      json item = {{"id", e.id}, {"name", e.name}};
      if (has_null && idx == 0) item["null"] = true;
      arr.push_back(item);
      ++idx;
    }
    return arr;
  };
  doc["actions"] = dump_list(actions_, false);
  doc["grasps"] = dump_list(grasps_, true);
  doc["attributes"] = dump_list(attributes_, true);
  return doc.dump(2) + "\n";
}

void LabelSpace::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::io, "cannot write label space file: " + path.string());
  out << to_json_text();
}

LabelSpace LabelSpace::gtea() {
  std::vector<LabelEntry> actions = {
      {"a01", "close"}, {"a02", "fold"},   {"a03", "open"}, {"a04", "pour"}, {"a05", "put"},
      {"a06", "scoop"}, {"a07", "shake"},  {"a08", "spread"}, {"a09", "stir"}, {"a10", "take"},
  };
  std::vector<LabelEntry> grasps = {
      {"g00", "no hand"},
      {"g01", "power wrap"},
      {"g02", "precision wrap"},
      {"g03", "parallel extension"},
      {"g04", "platform"},
      {"g05", "precision sphere"},
      {"g06", "power sphere"},
      {"g07", "index finger extension"},
      {"g08", "writing tripod"},
      {"g09", "lateral pinch"},
      {"g10", "thumb-4 finger"},
      {"g11", "thumb-2 finger"},
      {"g12", "tip pinch"},
      {"g13", "inferior pincer"},
  };
  std::vector<LabelEntry> attributes = {
      {"o00", "no object"},
      {"o01", "rigid-prismatic"},
      {"o02", "deformable-prismatic"},
      {"o03", "rigid-flat"},
      {"o04", "deformable-flat"},
      {"o05", "rigid-round"},
      {"o06", "deformable-round"},
      {"o07", "rigid-prismatic-flat"},
      {"o08", "rigid-flat-small"},
      {"o09", "deformable-flat-small"},
  };
  return LabelSpace(std::move(actions), std::move(grasps), std::move(attributes));
}

ShapeSet classify_shape(const ObjectDimensions& dims) {
  if (!(dims.c > 0) || !(dims.a >= dims.b) || !(dims.b >= dims.c))
    fail(ErrorCode::invalid_argument, "object dimensions must satisfy a >= b >= c > 0");
  ShapeSet out;
  out.prismatic = dims.a > 2 * dims.b;
  out.round = (dims.b <= dims.a && dims.a < 2 * dims.b) && (dims.c <= dims.a && dims.a < 2 * dims.c);
  out.flat = dims.b > 2 * dims.c;
  return out;
}

}  // namespace homctx
