#ifndef HOMCTX_LABELS_HPP
#define HOMCTX_LABELS_HPP

#include <array>
#include <filesystem>
#include <string>
#include <vector>

#include "error.hpp"

namespace homctx {

enum class Side { left = 0, right = 1 };
constexpr std::array<Side, 2> kSides{Side::left, Side::right};
inline int side_index(Side s) { return static_cast<int>(s); }
inline const char* side_name(Side s) { return s == Side::left ? "left" : "right"; }

struct LabelEntry {
  std::string id;
  std::string name;
};

/// Discrete taxonomies of actions, grasp types and object attributes.
///
/// Grasp and attribute lists carry an explicit null class ("no hand" /
/// "no object") at index 0; label values therefore range over 0..N_g and
/// 0..N_o, with 0 meaning absent. Actions have no null class and are
/// indexed 0..N_a-1. Immutable after construction.
class LabelSpace {
 public:
  LabelSpace(std::vector<LabelEntry> actions, std::vector<LabelEntry> grasps,
             std::vector<LabelEntry> attributes);

  static LabelSpace load(const std::filesystem::path& path);
  static LabelSpace from_json_text(const std::string& text);
  /// The GTEA taxonomy: 10 actions, 13 grasp types, 9 object attributes.
  static LabelSpace gtea();

  void save(const std::filesystem::path& path) const;
  std::string to_json_text() const;

  int num_actions() const { return static_cast<int>(actions_.size()); }
  int num_grasps() const { return static_cast<int>(grasps_.size()) - 1; }
  int num_attributes() const { return static_cast<int>(attributes_.size()) - 1; }

  const LabelEntry& action(int k) const { return actions_.at(k); }
  const LabelEntry& grasp(int i) const { return grasps_.at(i); }          // 0 = null
  const LabelEntry& attribute(int m) const { return attributes_.at(m); }  // 0 = null

  /// Content hash over the ordered class ids and names. Files carrying
  /// label-indexed data embed it so taxonomy drift is caught on load.
  const std::string& fingerprint() const { return fingerprint_; }

 private:
  std::vector<LabelEntry> actions_, grasps_, attributes_;
  std::string fingerprint_;
};

/// Object extents along its three major axes, a >= b >= c > 0.
struct ObjectDimensions {
  double a = 0, b = 0, c = 0;
};

/// Shape classes an object can satisfy; the criteria are not mutually
/// exclusive, so classification yields a set.
struct ShapeSet {
  bool prismatic = false;
  bool round = false;
  bool flat = false;
  bool none() const { return !prismatic && !round && !flat; }
  bool operator==(const ShapeSet&) const = default;
};

/// prismatic iff a > 2b; round iff b <= a < 2b and c <= a < 2c; flat iff b > 2c.
ShapeSet classify_shape(const ObjectDimensions& dims);

}  // namespace homctx

#endif
