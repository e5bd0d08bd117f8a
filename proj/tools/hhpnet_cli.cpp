// hhpnet: synth | train | eval | infer | laeo | ablate

#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <limits>
#include <optional>
#include <sstream>
#include <string>

#include "hhpnet/evaluation.hpp"
#include "hhpnet/io.hpp"
#include "hhpnet/synthetic.hpp"
#include "hhpnet/training.hpp"

using namespace hhpnet;
using nlohmann::json;

namespace {

std::uint64_t default_seed() {
  if (const char* env = std::getenv("HHPNET_SEED")) {
    try {
      return std::stoull(env);
    } catch (const std::exception&) {
      throw std::invalid_argument(std::string("HHPNET_SEED is not an unsigned integer: ") + env);
    }
  }
  return 0;
}

LossKind loss_from(const std::string& name) {
  const auto k = parse_loss_kind(name);
  if (!k) throw std::invalid_argument("unknown loss " + name);
  return *k;
}

double delta_from(const std::string& text) {
  if (text == "inf" || text == "infinity") return std::numeric_limits<double>::infinity();
  std::size_t used = 0;
  const double d = std::stod(text, &used);
  if (used != text.size() || !(d > 0)) throw std::invalid_argument("--delta must be a positive number or inf");
  return d;
}

struct TrainArgs {
  std::string data, val, loss = "unc", out, history;
  double alpha = 1.0, lr = 1e-3;
  int epochs = 100;
  std::size_t batch = 64;
  std::uint64_t seed = 0;
  bool quiet = false;
};

TrainConfig train_config(const TrainArgs& a) {
  TrainConfig c;
  c.loss = loss_from(a.loss);
  c.epochs = a.epochs;
  c.batch_size = a.batch;
  c.adam.learning_rate = a.lr;
  c.seed = a.seed;
  return c;
}

ModelConfig model_config(double alpha) {
  ModelConfig m;
  m.alpha = alpha;
  m.validate();
  return m;
}

EpochCallback progress(bool quiet, const std::string& tag) {
  if (quiet) return {};
  return [tag](const EpochRecord& e) {
    std::fprintf(stderr, "%sepoch %d  train %.5g  val %.5g  mae %.3f\n", tag.c_str(), e.epoch, e.train_loss, e.val_loss,
                 e.val_mae.overall);
  };
}

int cmd_synth(std::size_t n, const std::string& noise, double base, double gain, std::size_t drop, std::uint64_t seed,
              const std::string& prefix, const std::string& out) {
  synth::GeneratorOptions o;
  if (noise == "hetero") o.noise = synth::heteroscedastic_noise();
  else if (noise != "none") throw std::invalid_argument("--noise must be none or hetero");
  if (base >= 0) o.noise.base_sigma = base;
  if (gain >= 0) o.noise.yaw_gain = gain;
  o.drop_min_keep = drop;
  const Dataset d = synth::generate_dataset(n, o, seed, prefix);
  io::save_dataset(out, d);
  std::cout << "wrote " << d.size() << " samples to " << out << "\n";
  return 0;
}

int cmd_train(const TrainArgs& a) {
  const Dataset tr = io::load_dataset(a.data), va = io::load_dataset(a.val);
  const TrainConfig cfg = train_config(a);
  const TrainResult r = train(model_config(a.alpha), tr, va, cfg, progress(a.quiet, ""));
  io::save_model(a.out, r.params);
  const std::string history = a.history.empty() ? a.out + ".history.json" : a.history;
  io::write_file_atomic(history, io::dump(io::history_to_json(r.history, cfg)));
  const auto& best = r.history.best();
  std::cout << "best epoch " << best.epoch << "  val mae " << best.val_mae.overall << "\n"
            << "model " << a.out << " (" << r.params.scalar_count() << " params)\n"
            << "history " << history << "\n";
  return 0;
}

int cmd_eval(const std::string& model, const std::string& data, const std::string& report, std::size_t steps) {
  const ModelParams p = io::load_model(model);
  const EvalResult r = evaluate(p, io::load_dataset(data));
  const json j = io::eval_report(r, steps);
  if (report.empty()) std::cout << io::dump(j);
  else io::write_file_atomic(report, io::dump(j));
  std::cerr << "mae yaw " << r.mae.yaw << "  pitch " << r.mae.pitch << "  roll " << r.mae.roll << "  overall "
            << r.mae.overall << "\n";
  return 0;
}

int cmd_infer(const std::string& model, const std::string& data, const std::string& out) {
  const ModelParams p = io::load_model(model);
  const Dataset d = io::load_dataset(data);
  std::vector<NormalizedInput> inputs;
  inputs.reserve(d.size());
  for (const Sample& s : d) inputs.push_back(normalize(s.keypoints));
  const auto estimates = forward_batch(p, inputs);
  std::string text;
  for (std::size_t i = 0; i < d.size(); ++i) {
    json rec = io::estimate_to_json(estimates[i]);
    rec["id"] = d[i].id;
    text += rec.dump() + "\n";
  }
  if (out.empty()) std::cout << text;
  else io::write_file_atomic(out, text);
  return 0;
}

int cmd_laeo(const std::string& frames_path, const std::string& model, double tau, const std::string& delta,
             const std::string& gate_name, const std::string& out) {
  const auto records = io::parse_frames(io::read_file(frames_path), frames_path);
  std::optional<ModelParams> params;
  if (!model.empty()) params = io::load_model(model);
  const auto frames = io::resolve_frames(records, params ? &*params : nullptr);

  laeo::Gate gate{delta_from(delta), laeo::GateInterval::Closed};
  if (gate_name == "open") gate.interval = laeo::GateInterval::OpenBelow;
  else if (gate_name != "closed") throw std::invalid_argument("--gate must be closed or open");
  const laeo::Gate baseline = laeo::Gate::disabled();

  const json j = {{"baseline", io::laeo_report(laeo::evaluate_laeo(frames, tau, baseline), frames, tau, baseline)},
                  {"with_uncertainty", io::laeo_report(laeo::evaluate_laeo(frames, tau, gate), frames, tau, gate)}};
  if (out.empty()) std::cout << io::dump(j);
  else io::write_file_atomic(out, io::dump(j));
  for (const char* k : {"baseline", "with_uncertainty"}) {
    const json& s = j[k]["summary"];
    std::cerr << k << ": " << s["pairs"] << " pairs";
    if (s.contains("ap")) std::cerr << "  prec " << s["precision"] << "  rec " << s["recall"] << "  f1 " << s["f1"] << "  ap " << s["ap"];
    std::cerr << "\n";
  }
  return 0;
}

int cmd_ablate(const TrainArgs& a) {
  const Dataset tr = io::load_dataset(a.data), va = io::load_dataset(a.val);
  json rows = json::array();
  std::ostringstream table;
  table << "loss    yaw     pitch   roll    MAE\n";
  for (const char* name : {"mse", "comb", "unc"}) {
    TrainArgs run = a;
    run.loss = name;
    const TrainConfig cfg = train_config(run);
    const TrainResult r = train(model_config(a.alpha), tr, va, cfg, progress(a.quiet, std::string(name) + " "));
    const MaeSummary m = evaluate(r.params, va).mae;
    rows.push_back({{"loss", name}, {"yaw", m.yaw}, {"pitch", m.pitch}, {"roll", m.roll}, {"mae", m.overall},
                    {"best_epoch", r.history.best().epoch}});
    char line[128];
    std::snprintf(line, sizeof line, "%-6s  %6.3f  %6.3f  %6.3f  %6.3f\n", name, m.yaw, m.pitch, m.roll, m.overall);
    table << line;
  }
  std::cout << table.str();
  if (!a.out.empty()) {
    const json j = {{"seed", a.seed}, {"epochs", a.epochs}, {"alpha", a.alpha}, {"columns", {"yaw", "pitch", "roll", "mae"}},
                    {"rows", rows}};
    io::write_file_atomic(a.out, io::dump(j));
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Keypoint head-pose estimation with per-angle uncertainty, and LAEO detection"};
  app.require_subcommand(1);

  std::uint64_t seed = 0;
  try {
    seed = default_seed();
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }

  auto* synth = app.add_subcommand("synth", "generate a synthetic labeled dataset");
  std::size_t n = 0, drop = 0;
  std::string noise = "none", prefix = "s", synth_out;
  double base = -1, gain = -1;
  synth->add_option("--n", n, "number of samples")->required();
  synth->add_option("--noise", noise, "none or hetero")->capture_default_str();
  synth->add_option("--base-sigma", base, "override the base pixel noise");
  synth->add_option("--yaw-gain", gain, "override the per-degree pixel noise");
  synth->add_option("--drop-min-keep", drop, "randomly keep between this many and all points (0 = off)");
  synth->add_option("--id-prefix", prefix)->capture_default_str();
  synth->add_option("--seed", seed, "default from HHPNET_SEED, else 0");
  synth->add_option("--out", synth_out)->required();

  TrainArgs ta;
  auto add_train_opts = [&](CLI::App* c, bool with_loss) {
    c->add_option("--data", ta.data, "training JSONL")->required();
    c->add_option("--val", ta.val, "validation JSONL")->required();
    if (with_loss) c->add_option("--loss", ta.loss, "unc, mse or comb")->capture_default_str();
    c->add_option("--alpha", ta.alpha, "width multiplier")->capture_default_str();
    c->add_option("--epochs", ta.epochs)->capture_default_str();
    c->add_option("--lr", ta.lr)->capture_default_str();
    c->add_option("--batch", ta.batch)->capture_default_str();
    c->add_option("--seed", ta.seed, "default from HHPNET_SEED, else 0");
    c->add_flag("--quiet", ta.quiet, "no per-epoch progress on stderr");
  };
  auto* train_cmd = app.add_subcommand("train", "train a model");
  add_train_opts(train_cmd, true);
  train_cmd->add_option("--out", ta.out, "model file")->required();
  train_cmd->add_option("--history", ta.history, "history log (default <out>.history.json)");

  auto* eval_cmd = app.add_subcommand("eval", "evaluate a model on a labeled dataset");
  std::string model, data, report;
  std::size_t steps = 21;
  eval_cmd->add_option("--model", model)->required();
  eval_cmd->add_option("--data", data)->required();
  eval_cmd->add_option("--report", report, "JSON report path (stdout if omitted)");
  eval_cmd->add_option("--curve-steps", steps)->capture_default_str();

  auto* infer_cmd = app.add_subcommand("infer", "stream pose estimates as JSONL");
  std::string infer_out;
  infer_cmd->add_option("--model", model)->required();
  infer_cmd->add_option("--data", data)->required();
  infer_cmd->add_option("--out", infer_out, "output path (stdout if omitted)");

  auto* laeo_cmd = app.add_subcommand("laeo", "score head pairs for mutual gaze");
  std::string frames, delta = "7", gate = "closed", laeo_out;
  double tau = laeo::kDefaultTau;
  laeo_cmd->add_option("--frames", frames)->required();
  laeo_cmd->add_option("--model", model, "needed when heads carry keypoints");
  laeo_cmd->add_option("--tau", tau)->capture_default_str();
  laeo_cmd->add_option("--delta", delta, "gate upper bound, or inf")->capture_default_str();
  laeo_cmd->add_option("--gate", gate, "closed = [0, delta], open = (-inf, delta]")->capture_default_str();
  laeo_cmd->add_option("--out", laeo_out, "report path (stdout if omitted)");

  auto* ablate_cmd = app.add_subcommand("ablate", "train MSE, COMB and UNC on one split and compare");
  add_train_opts(ablate_cmd, false);
  ablate_cmd->add_option("--out", ta.out, "JSON table path");

  ta.seed = seed;
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);  // prints help or the parse error
    return code == 0 ? 0 : 2;
  }

  try {
    if (*synth) return cmd_synth(n, noise, base, gain, drop, seed, prefix, synth_out);
    if (*train_cmd) return cmd_train(ta);
    if (*eval_cmd) return cmd_eval(model, data, report, steps);
    if (*infer_cmd) return cmd_infer(model, data, infer_out);
    if (*laeo_cmd) return cmd_laeo(frames, model, tau, delta, gate, laeo_out);
    if (*ablate_cmd) return cmd_ablate(ta);
  } catch (const io::FormatError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
