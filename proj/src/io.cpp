#include "hhpnet/io.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <set>
#include <sstream>
#include <system_error>

namespace hhpnet::io {

using nlohmann::json;

namespace {

std::string located(const std::string& path, std::size_t line, const std::string& what) {
  return line ? path + ":" + std::to_string(line) + ": " + what : path + ": " + what;
}

double number(const json& j, const char* what) {
  if (!j.is_number()) throw std::invalid_argument(std::string(what) + " must be a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) throw std::invalid_argument(std::string(what) + " must be finite");
  return v;
}

KeypointSet keypoints_from_json(const json& j) {
  if (!j.is_array() || j.size() != kNumKeypoints) {
    throw std::invalid_argument("keypoints must be an array of exactly 5 [x1, x2, c] triples");
  }
  KeypointSet set;
  for (std::size_t i = 0; i < kNumKeypoints; ++i) {
    const json& t = j[i];
    if (!t.is_array() || t.size() != 3) throw std::invalid_argument("keypoint " + std::to_string(i) + " is not a triple");
    Keypoint& k = set.points[i];
    k.x1 = number(t[0], "x1");
    k.x2 = number(t[1], "x2");
    k.c = number(t[2], "c");
    if (k.c < 0.0 || k.c > 1.0) throw std::invalid_argument("keypoint " + std::to_string(i) + " confidence outside [0, 1]");
  }
  return set;
}

json keypoints_to_json(const KeypointSet& set) {
  json out = json::array();
  for (const Keypoint& k : set.points) out.push_back({k.x1, k.x2, k.c});
  return out;
}

std::array<double, 3> triple(const json& j, const char* what) {
  if (!j.is_array() || j.size() != 3) throw std::invalid_argument(std::string(what) + " must have 3 numbers");
  return {number(j[0], what), number(j[1], what), number(j[2], what)};
}

std::string field_string(const json& rec, const char* key) {
  if (!rec.contains(key) || !rec[key].is_string()) throw std::invalid_argument(std::string("missing string field \"") + key + "\"");
  return rec[key].get<std::string>();
}

// Runs `fn` on each non-blank line, converting failures to FormatError.
template <typename Fn>
void for_each_line(std::string_view text, const std::string& source, Fn&& fn) {
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t end = std::min(text.find('\n', pos), text.size());
    std::string_view line = text.substr(pos, end - pos);
    ++line_no;
    pos = end + 1;
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) {
      if (end == text.size()) break;
      continue;
    }
    try {
      fn(json::parse(line));
    } catch (const json::exception& e) {
      throw FormatError(source, line_no, e.what());
    } catch (const std::invalid_argument& e) {
      throw FormatError(source, line_no, e.what());
    }
    if (end == text.size()) break;
  }
}

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFFu));
}

std::uint32_t get_u32(std::string_view bytes, std::size_t offset) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes[offset + i])) << (8 * i);
  return v;
}

json shape_json(const ad::Shape& s) {
  json out = json::array();
  for (std::size_t d : s) out.push_back(d);
  return out;
}

laeo::Point2 mean_of_present(const KeypointSet& set) {
  double x = 0.0, y = 0.0;
  std::size_t n = 0;
  for (const Keypoint& k : set.points) {
    if (!k.present()) continue;
    x += k.x1;
    y += k.x2;
    ++n;
  }
  if (n == 0) throw std::invalid_argument("head has no present keypoint to place its centroid");
  return {x / static_cast<double>(n), y / static_cast<double>(n)};
}

json box_json(const BoxStats& b) {
  return {{"min", b.min}, {"q1", b.q1}, {"median", b.median}, {"q3", b.q3}, {"max", b.max}, {"mean", b.mean}};
}

}  // namespace

FormatError::FormatError(const std::string& path, std::size_t line, const std::string& what)
    : std::runtime_error(located(path, line, what)), line_(line) {}

void write_file_atomic(const std::filesystem::path& path, std::string_view bytes) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + tmp.string() + " for writing");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    out.flush();
    if (!out) throw std::runtime_error("write failed: " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp);
    throw std::runtime_error("cannot rename " + tmp.string() + " to " + path.string() + ": " + ec.message());
  }
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Dataset parse_dataset(std::string_view text, const std::string& source) {
  Dataset out;
  for_each_line(text, source, [&](const json& rec) {
    if (!rec.is_object()) throw std::invalid_argument("record must be a JSON object");
    Sample s;
    s.id = field_string(rec, "id");
    if (!rec.contains("keypoints")) throw std::invalid_argument("missing field \"keypoints\"");
    s.keypoints = keypoints_from_json(rec["keypoints"]);
    if (rec.contains("pose") && !rec["pose"].is_null()) s.pose = EulerPose::from_array(triple(rec["pose"], "pose"));
    if (rec.contains("meta")) s.meta = rec["meta"].dump();
    out.push_back(std::move(s));
  });
  return out;
}

std::string format_dataset(const Dataset& data) {
  std::string out;
  for (const Sample& s : data) {
    json rec = {{"id", s.id}, {"keypoints", keypoints_to_json(s.keypoints)}};
    if (s.pose) rec["pose"] = s.pose->as_array();
    rec["meta"] = json::parse(s.meta, nullptr, false);
    if (rec["meta"].is_discarded()) rec["meta"] = s.meta;
    out += rec.dump();
    out += '\n';
  }
  return out;
}

Dataset load_dataset(const std::filesystem::path& path) { return parse_dataset(read_file(path), path.string()); }

void save_dataset(const std::filesystem::path& path, const Dataset& data) { write_file_atomic(path, format_dataset(data)); }

json config_to_json(const ModelConfig& c) {
  return {{"n_keypoints", c.n_keypoints}, {"conv_filters", c.conv_filters}, {"conv_kernel", c.conv_kernel},
          {"fc_base", c.fc_base},         {"alpha", c.alpha},               {"leaky_slope", c.leaky_slope},
          {"head", std::string(head_kind_name(c.head))}, {"n_bins", c.n_bins}};
}

ModelConfig config_from_json(const json& j) {
  ModelConfig c;
  c.n_keypoints = j.at("n_keypoints").get<int>();
  c.conv_filters = j.at("conv_filters").get<int>();
  c.conv_kernel = j.at("conv_kernel").get<int>();
  c.fc_base = j.at("fc_base").get<std::array<int, 3>>();
  c.alpha = j.at("alpha").get<double>();
  c.leaky_slope = j.at("leaky_slope").get<double>();
  const auto head = parse_head_kind(j.at("head").get<std::string>());
  if (!head) throw std::invalid_argument("unknown head kind " + j.at("head").dump());
  c.head = *head;
  c.n_bins = j.at("n_bins").get<int>();
  c.validate();
  return c;
}

std::string encode_model(const ModelParams& params) {
  const auto shapes = parameter_shapes(params.config);
  if (shapes.size() != params.tensors.size()) throw std::invalid_argument("encode_model: tensor count does not match config");
  json tensors = json::array();
  std::size_t count = 0;
  for (std::size_t i = 0; i < shapes.size(); ++i) {
    if (params.tensors[i].value.shape() != shapes[i]) {
      throw std::invalid_argument("encode_model: tensor " + params.tensors[i].name + " has the wrong shape");
    }
    tensors.push_back({{"name", params.tensors[i].name}, {"shape", shape_json(shapes[i])}});
    count += params.tensors[i].value.size();
  }
  const json header = {{"format_version", kModelFormatVersion},
                       {"model_config", config_to_json(params.config)},
                       {"tensors", tensors},
                       {"param_count", count}};
  const std::string h = header.dump();

  std::string out(kModelMagic, sizeof(kModelMagic));
  put_u32(out, kModelFormatVersion);
  put_u32(out, static_cast<std::uint32_t>(h.size()));
  out += h;
  out.reserve(out.size() + 4 * count);
  for (const auto& p : params.tensors) {
    for (double v : p.value.data()) put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
  }
  return out;
}

ModelParams decode_model(std::string_view bytes, const std::string& source) {
  auto fail = [&](const std::string& what) { return FormatError(source, 0, what); };
  if (bytes.size() < 16 || std::memcmp(bytes.data(), kModelMagic, sizeof(kModelMagic)) != 0) {
    throw fail("not a model file (bad magic)");
  }
  const std::uint32_t version = get_u32(bytes, 8);
  if (version != kModelFormatVersion) throw fail("unsupported model format_version " + std::to_string(version));
  const std::uint32_t header_len = get_u32(bytes, 12);
  if (bytes.size() < 16 + static_cast<std::size_t>(header_len)) throw fail("truncated header");

  ModelConfig config;
  std::size_t count = 0;
  try {
    const json header = json::parse(bytes.substr(16, header_len));
    if (header.at("format_version").get<std::uint32_t>() != version) throw fail("header version mismatch");
    config = config_from_json(header.at("model_config"));
    count = header.at("param_count").get<std::size_t>();
  } catch (const json::exception& e) {
    throw fail(std::string("bad header: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw fail(std::string("bad header: ") + e.what());
  }
  ModelParams params = zeros(config);
  if (count != params.scalar_count()) throw fail("param_count does not match model_config");
  const std::size_t offset = 16 + header_len;
  if (bytes.size() != offset + 4 * count) {
    throw fail("expected " + std::to_string(offset + 4 * count) + " bytes, found " + std::to_string(bytes.size()));
  }
  std::size_t at = offset;
  for (auto& p : params.tensors) {
    for (double& v : p.value.data()) {
      v = static_cast<double>(std::bit_cast<float>(get_u32(bytes, at)));
      at += 4;
    }
  }
  return params;
}

void save_model(const std::filesystem::path& path, const ModelParams& params) { write_file_atomic(path, encode_model(params)); }

ModelParams load_model(const std::filesystem::path& path) { return decode_model(read_file(path), path.string()); }

std::vector<FrameRecord> parse_frames(std::string_view text, const std::string& source) {
  std::vector<FrameRecord> out;
  for_each_line(text, source, [&](const json& rec) {
    if (!rec.is_object()) throw std::invalid_argument("frame must be a JSON object");
    FrameRecord f;
    f.frame_id = field_string(rec, "frame_id");
    if (!rec.contains("heads") || !rec["heads"].is_array()) throw std::invalid_argument("missing array field \"heads\"");
    std::set<std::string> ids;
    for (const json& h : rec["heads"]) {
      FrameHead head;
      head.id = field_string(h, "id");
      if (!ids.insert(head.id).second) throw std::invalid_argument("duplicate head id \"" + head.id + "\"");
      if (h.contains("centroid")) {
        const json& c = h["centroid"];
        if (!c.is_array() || c.size() != 2) throw std::invalid_argument("centroid must be [x, y]");
        head.centroid = laeo::Point2{number(c[0], "centroid"), number(c[1], "centroid")};
      }
      if (h.contains("keypoints")) head.keypoints = keypoints_from_json(h["keypoints"]);
      if (h.contains("estimate")) {
        const json& e = h["estimate"];
        PoseEstimate est;
        est.pose = EulerPose::from_array(triple(e.at("pose"), "estimate.pose"));
        if (e.contains("log_var")) est.log_var = triple(e["log_var"], "estimate.log_var");
        head.estimate = est;
      }
      if (!head.keypoints && !head.estimate) {
        throw std::invalid_argument("head \"" + head.id + "\" needs keypoints or an estimate");
      }
      if (!head.centroid && !head.keypoints) throw std::invalid_argument("head \"" + head.id + "\" has no centroid");
      f.heads.push_back(std::move(head));
    }
    if (rec.contains("laeo_pairs")) {
      for (const json& p : rec["laeo_pairs"]) {
        if (!p.is_array() || p.size() != 2 || !p[0].is_string() || !p[1].is_string()) {
          throw std::invalid_argument("laeo_pairs entries must be [id, id]");
        }
        const std::string a = p[0].get<std::string>(), b = p[1].get<std::string>();
        if (!ids.count(a) || !ids.count(b)) {
          throw std::invalid_argument("pair [" + a + ", " + b + "] references an undeclared head");
        }
        f.laeo_pairs.emplace_back(a, b);
      }
    }
    out.push_back(std::move(f));
  });
  return out;
}

std::string format_frames(std::span<const FrameRecord> frames) {
  std::string out;
  for (const FrameRecord& f : frames) {
    json heads = json::array();
    for (const FrameHead& h : f.heads) {
      json jh = {{"id", h.id}};
      if (h.centroid) jh["centroid"] = {h.centroid->x, h.centroid->y};
      if (h.keypoints) jh["keypoints"] = keypoints_to_json(*h.keypoints);
      if (h.estimate) jh["estimate"] = estimate_to_json(*h.estimate);
      heads.push_back(std::move(jh));
    }
    json pairs = json::array();
    for (const auto& [a, b] : f.laeo_pairs) pairs.push_back({a, b});
    out += json{{"frame_id", f.frame_id}, {"heads", heads}, {"laeo_pairs", pairs}}.dump();
    out += '\n';
  }
  return out;
}

std::vector<laeo::Frame> resolve_frames(std::span<const FrameRecord> frames, const ModelParams* model) {
  std::vector<laeo::Frame> out;
  out.reserve(frames.size());
  for (const FrameRecord& f : frames) {
    laeo::Frame frame{f.frame_id, {}, f.laeo_pairs};
    for (const FrameHead& h : f.heads) {
      laeo::HeadInstance head;
      head.id = h.id;
      head.centroid = h.centroid ? *h.centroid : mean_of_present(*h.keypoints);
      if (h.estimate) {
        head.estimate = *h.estimate;
      } else {
        if (!model) throw std::invalid_argument("frame " + f.frame_id + ": head " + h.id + " has keypoints but no model was given");
        head.estimate = forward(*model, normalize(*h.keypoints));
      }
      frame.heads.push_back(std::move(head));
    }
    out.push_back(std::move(frame));
  }
  return out;
}

json estimate_to_json(const PoseEstimate& e) { return {{"pose", e.pose.as_array()}, {"log_var", e.log_var}}; }

json mae_to_json(const MaeSummary& m) {
  return {{"yaw", m.yaw}, {"pitch", m.pitch}, {"roll", m.roll}, {"overall", m.overall}};
}

json history_to_json(const TrainHistory& history, const TrainConfig& config) {
  json epochs = json::array();
  for (const EpochRecord& e : history.epochs) {
    epochs.push_back({{"epoch", e.epoch}, {"train_loss", e.train_loss}, {"val_loss", e.val_loss}, {"val_mae", mae_to_json(e.val_mae)}});
  }
  return {{"loss", std::string(loss_kind_name(config.loss))},
          {"learning_rate", config.adam.learning_rate},
          {"batch_size", config.batch_size},
          {"epochs_requested", config.epochs},
          {"seed", config.seed},
          {"best_epoch", history.epochs.empty() ? 0 : history.best().epoch},
          {"epochs", epochs}};
}

json eval_report(const EvalResult& result, std::size_t curve_steps) {
  json report = {{"count", result.records.size()}, {"mae", mae_to_json(result.mae)}};

  const auto grid = uncertainty_grid(result.records, curve_steps);
  json curve = json::array();
  for (const CurvePoint& p : cumulative_error_curve(result.records, grid)) {
    curve.push_back({{"threshold", p.threshold},
                     {"mean_error", p.mean_error ? json(*p.mean_error) : json(nullptr)},
                     {"retained_fraction", p.retained_fraction},
                     {"count", p.count}});
  }
  report["cumulative_error_curve"] = curve;

  json corr = nullptr;
  try {
    const auto c = uncertainty_cross_correlation(result.records);
    corr = {{"yaw_pitch", c.yaw_pitch}, {"yaw_roll", c.yaw_roll}, {"pitch_roll", c.pitch_roll}};
  } catch (const std::invalid_argument&) {
    // Too few records or constant uncertainty (e.g. a head without s).
    corr = {{"yaw_pitch", nullptr}, {"yaw_roll", nullptr}, {"pitch_roll", nullptr}};
  }
  report["uncertainty_correlation"] = corr;

  json groups = json::array();
  for (const auto& [count, g] : error_by_keypoint_count(result.records)) {
    groups.push_back({{"keypoints", count}, {"count", g.count}, {"error", box_json(g.error)}, {"uncertainty", box_json(g.uncertainty)}});
  }
  report["by_keypoint_count"] = groups;
  return report;
}

json laeo_report(const laeo::Report& report, std::span<const laeo::Frame> frames, double tau, const laeo::Gate& gate) {
  json pairs = json::array();
  for (const laeo::ScoredPair& p : report.pairs) {
    const laeo::LaeoResult& r = p.result;
    pairs.push_back({{"frame_id", frames[p.frame_index].frame_id},
                     {"a", r.id_a},
                     {"b", r.id_b},
                     {"cos_a", r.cos_a},
                     {"cos_b", r.cos_b},
                     {"w_a", r.w_a},
                     {"w_b", r.w_b},
                     {"value", r.value},
                     {"laeo", r.is_laeo},
                     {"label", p.label}});
  }
  const laeo::Metrics& m = report.metrics;
  json summary = {{"pairs", m.pairs}, {"positives", m.positives}, {"true_positives", m.true_positives},
                  {"false_positives", m.false_positives}};
  if (m.positives > 0) {
    summary["precision"] = m.precision;
    summary["recall"] = m.recall;
    summary["f1"] = m.f1;
    summary["ap"] = m.ap;
  }
  const bool open = gate.interval == laeo::GateInterval::OpenBelow;
  return {{"tau", tau},
          {"delta", std::isfinite(gate.delta) ? json(gate.delta) : json("inf")},
          {"gate", open ? "open_below" : "closed"},
          {"pairs", pairs},
          {"summary", summary}};
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

}  // namespace hhpnet::io
