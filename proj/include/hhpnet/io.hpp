#pragma once

// File formats. Data files are JSON lines; models are a small binary container
// (layout below); reports are single JSON documents. All writers go through a
// temp file and rename so readers never see a partial file.
//
// ModelFile layout, all integers little-endian:
//   offset 0   8 bytes   magic "HHPNETMF"
//   offset 8   uint32    format_version (currently 1)
//   offset 12  uint32    header byte length H
//   offset 16  H bytes   UTF-8 JSON: {"format_version", "model_config", "tensors": [{"name", "shape"}], "param_count"}
//   then       4 * param_count bytes: IEEE-754 binary32, little-endian, tensors in
//              Slot order, each row-major.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "hhpnet/dataset.hpp"
#include "hhpnet/evaluation.hpp"
#include "hhpnet/laeo.hpp"
#include "hhpnet/model.hpp"
#include "hhpnet/training.hpp"

namespace hhpnet::io {

/// Malformed input. line() is 1-based for line-delimited files, 0 otherwise.
class FormatError : public std::runtime_error {
 public:
  FormatError(const std::string& path, std::size_t line, const std::string& what);
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

constexpr std::uint32_t kModelFormatVersion = 1;
inline constexpr char kModelMagic[8] = {'H', 'H', 'P', 'N', 'E', 'T', 'M', 'F'};

/// Writes to "<path>.tmp" then renames over `path`.
void write_file_atomic(const std::filesystem::path& path, std::string_view bytes);
std::string read_file(const std::filesystem::path& path);

// --- datasets ---------------------------------------------------------------

/// One record per line: {"id", "keypoints": [[x1, x2, c] x 5], "pose": [y, p, r]?, "meta": any?}.
/// Blank lines are skipped.
Dataset parse_dataset(std::string_view text, const std::string& source = "<memory>");
std::string format_dataset(const Dataset& data);
Dataset load_dataset(const std::filesystem::path& path);
void save_dataset(const std::filesystem::path& path, const Dataset& data);

// --- models -----------------------------------------------------------------

nlohmann::json config_to_json(const ModelConfig& config);
ModelConfig config_from_json(const nlohmann::json& j);

std::string encode_model(const ModelParams& params);
ModelParams decode_model(std::string_view bytes, const std::string& source = "<memory>");
void save_model(const std::filesystem::path& path, const ModelParams& params);
ModelParams load_model(const std::filesystem::path& path);

// --- LAEO frames ------------------------------------------------------------

struct FrameHead {
  std::string id;
  std::optional<laeo::Point2> centroid;  // defaults to the mean of present keypoints
  std::optional<KeypointSet> keypoints;
  std::optional<PoseEstimate> estimate;
};

struct FrameRecord {
  std::string frame_id;
  std::vector<FrameHead> heads;
  std::vector<std::pair<std::string, std::string>> laeo_pairs;
};

/// {"frame_id", "heads": [{"id", "centroid": [x, y]?, "keypoints"? | "estimate": {"pose", "log_var"}?}],
///  "laeo_pairs": [[id, id]]?}. Each head needs keypoints or an estimate.
std::vector<FrameRecord> parse_frames(std::string_view text, const std::string& source = "<memory>");
std::string format_frames(std::span<const FrameRecord> frames);

/// Fills missing estimates by running `model` on the keypoints. Heads that
/// carry an estimate keep it. Throws std::invalid_argument when a head needs
/// the model and none is given.
std::vector<laeo::Frame> resolve_frames(std::span<const FrameRecord> frames, const ModelParams* model);

// --- reports ----------------------------------------------------------------

nlohmann::json estimate_to_json(const PoseEstimate& e);
nlohmann::json mae_to_json(const MaeSummary& m);
nlohmann::json history_to_json(const TrainHistory& history, const TrainConfig& config);
/// MAE, cumulative error curve, the three pairwise uncertainty correlations and
/// per-keypoint-count statistics.
nlohmann::json eval_report(const EvalResult& result, std::size_t curve_steps = 21);
nlohmann::json laeo_report(const laeo::Report& report, std::span<const laeo::Frame> frames, double tau,
                           const laeo::Gate& gate);

/// Stable text form used for every report file.
std::string dump(const nlohmann::json& j);

}  // namespace hhpnet::io
