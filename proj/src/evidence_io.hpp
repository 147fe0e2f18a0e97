#ifndef HOMCTX_EVIDENCE_IO_HPP
#define HOMCTX_EVIDENCE_IO_HPP

#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "model.hpp"

namespace homctx {

struct FrameRecord {
  std::string frame_id;
  EvidenceBundle evidence;
  std::optional<SceneState> truth;
};

struct DatasetManifest {
  std::filesystem::path labels_path;
  std::vector<std::filesystem::path> frame_files;
  std::optional<std::filesystem::path> probability_map_dir;
  std::set<std::string> train_ids, test_ids;
};

DatasetManifest read_manifest(const std::filesystem::path& path);
void write_manifest(const DatasetManifest& manifest, const std::filesystem::path& path);

/// Streaming reader over one JSON-lines frame file. The first line is a
/// header carrying the schema version and the label-space fingerprint; every
/// record is validated against the space before it is handed out.
class FrameReader {
 public:
  FrameReader(const std::filesystem::path& path, const LabelSpace& space);
  bool next(FrameRecord& out);
  size_t line() const { return line_; }

 private:
  std::filesystem::path path_;
  const LabelSpace& space_;
  std::ifstream in_;
  size_t line_ = 0;
};

std::vector<FrameRecord> read_all_frames(const DatasetManifest& manifest, const LabelSpace& space,
                                         const std::filesystem::path& base_dir);
void write_frames(const std::vector<FrameRecord>& frames, const LabelSpace& space,
                  const std::filesystem::path& path);

std::string frame_to_json_line(const FrameRecord& frame);
FrameRecord frame_from_json_line(const std::string& line, const LabelSpace& space);

ModelParams read_params(const std::filesystem::path& path, const LabelSpace& space);
void write_params(const ModelParams& params, const LabelSpace& space,
                  const std::filesystem::path& path);

/// Per-task prediction/truth tallies feeding the report files.
struct TaskTally {
  std::string task;                      // "grasp" | "attribute" | "action"
  std::vector<std::string> class_names;  // real classes, index 0 <-> label 1 (actions: label 0)
  int first_label = 1;                   // 0 for actions, 1 for grasp/attribute
  std::vector<int> truths, predictions;  // parallel; labels may include 0 = null prediction

  void add(int truth, int predicted);
  int total() const { return static_cast<int>(truths.size()); }
  int correct() const;
  double overall_accuracy() const;
  double class_accuracy(int label, int* correct_out = nullptr, int* total_out = nullptr) const;
  /// rows = truth classes, cols = predicted labels including null.
  std::vector<std::vector<int>> confusion() const;
};

struct ContextTable {
  std::string name;
  std::vector<std::string> row_names, col_names;
  std::vector<double> values;  // row-major
};

struct EvalReport {
  std::vector<std::pair<std::string, std::vector<TaskTally>>> per_mode;  // mode name -> 3 tallies
  std::vector<ContextTable> context_tables;
  // task -> rows of (fraction, mode, accuracy) for the downsizing study
  std::vector<std::tuple<std::string, double, std::string, double>> downsizing_rows;
  std::string summary_json;
};

void write_results(const EvalReport& report, const std::filesystem::path& out_dir);
void write_context_tables(const std::vector<ContextTable>& tables,
                          const std::filesystem::path& out_dir);

}  // namespace homctx

#endif
