// cogat: train, evaluate, analyze and score confidence-masked graph attention
// fact verifiers.
//
//   cogat synth --seed 7 --n 500 --noise 0.5 --out-dir data
//   cogat train --config tools/synth.conf --set seed=3
//   cogat eval out/checkpoint.ckpt data/dev.jsonl --out-dir out/eval
//   cogat analyze out/checkpoint.ckpt data/dev.jsonl --sweep-alphas 0,0.5,1 --nei-curve
//   cogat score out/eval/records.jsonl data/dev.jsonl
//
// Exit codes: 0 success, 2 input error, 3 incompatible checkpoint, 4 numeric failure.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "cogat/analysis.hpp"
#include "cogat/checkpoint.hpp"
#include "cogat/config.hpp"
#include "cogat/data.hpp"
#include "cogat/errors.hpp"
#include "cogat/metrics.hpp"
#include "cogat/model.hpp"
#include "cogat/synth.hpp"
#include "cogat/training.hpp"

namespace fs = std::filesystem;
using namespace cogat;

namespace {

constexpr int kExitInput = 2;
constexpr int kExitCompat = 3;
constexpr int kExitNumeric = 4;

constexpr const char* kEntropyAggregation = "mean over heads, then nodes, then instances";

void require_file(const fs::path& path, const char* what) {
  if (path.empty()) throw InputError(std::string(what) + " path is not set");
  if (!fs::is_regular_file(path)) throw InputError(std::string(what) + " not found: " + path.string());
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw InputError("cannot write " + path.string());
  os << text;
  if (!os) throw InputError("write failed: " + path.string());
}

std::string read_text(const fs::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw InputError("cannot open " + path.string());
  std::stringstream buf;
  buf << is.rdbuf();
  return buf.str();
}

void make_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw InputError("cannot create directory " + dir.string() + ": " + ec.message());
}

// The mode a checkpoint was trained with, when recorded.
std::optional<MaskMode> trained_mode(const Checkpoint& ckpt) {
  auto it = ckpt.metadata.find("mode");
  if (it == ckpt.metadata.end() || !it->is_string()) return std::nullopt;
  return parse_mask_mode(it->get<std::string>());
}

// Checks the checkpoint against the architecture a config file asks for.
void check_architecture(const ModelConfig& have, const ModelConfig& want, const fs::path& ckpt_path) {
  auto field = [&](const char* name, std::size_t a, std::size_t b) {
    if (a != b) {
      throw CompatibilityError(ckpt_path.string() + ": checkpoint " + name + " " + std::to_string(a) +
                               " does not match configured " + std::to_string(b));
    }
  };
  field("hidden_dim", have.hidden_dim, want.hidden_dim);
  field("vocab_dim", have.vocab_dim, want.vocab_dim);
  field("heads", have.resolved_heads(), want.resolved_heads());
  field("layers", have.layers, want.layers);
  field("max_tokens", have.max_tokens, want.max_tokens);
}

struct TrainArgs {
  std::string config;
  std::vector<std::string> sets;
};

int cmd_train(const TrainArgs& args) {
  RunConfig cfg;
  if (!args.config.empty()) {
    require_file(args.config, "config");
    cfg = RunConfig::load(args.config);
  }
  for (const auto& kv : args.sets) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw InputError("--set expects key=value, got '" + kv + "'");
    cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
  }
  cfg.validate();
  require_file(cfg.train_path, "train data");
  require_file(cfg.dev_path, "dev data");

  const auto train_set = load_claims(cfg.train_path);
  const auto dev_set = load_claims(cfg.dev_path);
  make_dir(cfg.out_dir);
  write_text(cfg.out_dir / "config.resolved.txt", cfg.to_text());

  auto result = train(train_set, dev_set, cfg.model, cfg.train);
  Checkpoint ckpt = result.best.to_checkpoint();
  ckpt.metadata["mode"] = std::string(mask_mode_name(cfg.train.mode));
  ckpt.metadata["seed"] = cfg.train.seed;
  ckpt.metadata["steps"] = result.steps;
  save_checkpoint(cfg.out_dir / "checkpoint.ckpt", ckpt);
  write_text(cfg.out_dir / "train_log.csv", result.log.to_csv());

  double best = 0.0;
  for (const auto& e : result.log.entries) best = std::max(best, e.dev_fever);
  std::cout << "steps " << result.steps << ", evaluations " << result.log.entries.size() << ", best dev FEVER " << best
            << "\n";
  if (result.log_floor_events > 0) std::cout << "log floor hit " << result.log_floor_events << " times\n";
  std::cout << "wrote " << (cfg.out_dir / "checkpoint.ckpt").string() << "\n";
  return 0;
}

struct EvalArgs {
  std::string checkpoint;
  std::string data;
  std::string mode;
  double alpha = 1.0;
  std::size_t l_max = kDefaultMaxNodes;
  std::string out_dir = "eval_out";
  std::string config;
};

int cmd_eval(const EvalArgs& args) {
  require_file(args.checkpoint, "checkpoint");
  require_file(args.data, "data");
  if (!args.config.empty()) require_file(args.config, "config");
  if (!(args.alpha >= 0.0 && args.alpha <= 1.0)) throw InputError("--alpha must lie in [0,1]");
  std::optional<MaskMode> mode;
  if (!args.mode.empty()) {
    mode = parse_mask_mode(args.mode);
    if (!mode) throw InputError("--mode must be soft, hard or no_mask");
  }

  const Checkpoint ckpt = load_checkpoint(args.checkpoint);
  const ModelParams params = ModelParams::from_checkpoint(ckpt);
  if (!args.config.empty()) {
    RunConfig cfg = RunConfig::load(args.config);
    cfg.validate();
    check_architecture(params.config, cfg.model, args.checkpoint);
  }
  if (!mode) mode = trained_mode(ckpt).value_or(MaskMode::Soft);
  const auto data = load_claims(args.data);

  const auto ev = evaluate(params, data, {*mode, args.alpha, args.l_max});
  nlohmann::json metrics = summary_json(ev.scores);
  metrics["mode"] = std::string(mask_mode_name(*mode));
  metrics["alpha"] = args.alpha;
  metrics["nei_fraction"] = ev.nei_fraction;
  metrics["edge_entropy"] = ev.mean_edge_entropy;
  metrics["node_entropy"] = ev.mean_node_entropy;
  metrics["entropy_aggregation"] = kEntropyAggregation;

  const fs::path out(args.out_dir);
  make_dir(out);
  write_text(out / "metrics.json", metrics.dump(2) + "\n");
  std::string records;
  for (const auto& r : ev.records()) records += serialize_record(r) + "\n";
  write_text(out / "records.jsonl", records);
  std::cout << summary_text(ev.scores);
  return 0;
}

struct AnalyzeArgs {
  std::string checkpoint;
  std::string data;
  std::string sweep_alphas;
  std::string entropy_baseline;
  bool nei_curve = false;
  std::string mode;
  std::size_t l_max = kDefaultMaxNodes;
  std::string out_dir = "analysis_out";
};

int cmd_analyze(const AnalyzeArgs& args) {
  require_file(args.checkpoint, "checkpoint");
  require_file(args.data, "data");
  if (!args.entropy_baseline.empty()) require_file(args.entropy_baseline, "baseline checkpoint");
  std::vector<double> alphas;
  if (!args.sweep_alphas.empty()) {
    RunConfig probe;
    probe.set("alpha_grid", args.sweep_alphas);
    probe.validate();
    alphas = probe.alpha_grid;
  }
  std::optional<MaskMode> mode;
  if (!args.mode.empty()) {
    mode = parse_mask_mode(args.mode);
    if (!mode) throw InputError("--mode must be soft, hard or no_mask");
  }

  const Checkpoint ckpt = load_checkpoint(args.checkpoint);
  const ModelParams params = ModelParams::from_checkpoint(ckpt);
  if (!mode) mode = trained_mode(ckpt).value_or(MaskMode::Soft);
  std::optional<ModelParams> baseline;
  if (!args.entropy_baseline.empty()) baseline = ModelParams::from_checkpoint(load_checkpoint(args.entropy_baseline));
  const auto data = load_claims(args.data);

  const fs::path out(args.out_dir);
  make_dir(out);
  const auto ev = evaluate(params, data, {*mode, 1.0, args.l_max});
  std::cout << "edge entropy " << ev.mean_edge_entropy << ", node entropy " << ev.mean_node_entropy << " ("
            << kEntropyAggregation << ")\n";

  if (!alphas.empty()) {
    const auto sweep = scaling_sweep(params, data, alphas, args.l_max);
    write_text(out / "sweep.csv", sweep.to_csv());
    std::cout << "wrote " << (out / "sweep.csv").string() << "\n";
  }
  if (baseline) {
    const auto base = evaluate(*baseline, data, {MaskMode::NoMask, 1.0, args.l_max});
    std::ostringstream os;
    os << std::setprecision(10);
    os << "model,mode,edge_entropy,node_entropy,aggregation\n";
    os << "cogat," << mask_mode_name(*mode) << "," << ev.mean_edge_entropy << "," << ev.mean_node_entropy << ","
       << kEntropyAggregation << "\n";
    os << "baseline,no_mask," << base.mean_edge_entropy << "," << base.mean_node_entropy << "," << kEntropyAggregation
       << "\n";
    write_text(out / "entropy.csv", os.str());
    std::cout << "baseline edge entropy " << base.mean_edge_entropy << ", node entropy " << base.mean_node_entropy
              << "\n";
  }
  if (args.nei_curve) {
    const auto curve = nei_tendency(ev);
    write_text(out / "nei_curve.csv", curve.to_csv());
    std::cout << "misclassified non-NEI " << curve.misclassified_non_nei << ", predicted NEI "
              << curve.misclassified_as_nei << "\n";
  }
  return 0;
}

struct ScoreArgs {
  std::string predictions;
  std::string gold;
  bool json = false;
};

int cmd_score(const ScoreArgs& args) {
  require_file(args.predictions, "predictions");
  require_file(args.gold, "gold");
  auto preds = parse_predictions(read_text(args.predictions), args.predictions);
  const auto gold = load_claims(args.gold);
  const auto records = join_with_gold(std::move(preds), gold);
  const auto summary = score_records(records);
  if (args.json) std::cout << summary_json(summary).dump(2) << "\n";
  else std::cout << summary_text(summary);
  return 0;
}

struct SynthArgs {
  std::uint64_t seed = 7;
  std::size_t n = 500;
  double noise = 0.5;
  std::string out_dir = "data";
};

int cmd_synth(const SynthArgs& args) {
  if (args.n < 30) throw InputError("--n must be at least 30");
  if (!(args.noise >= 0.0 && args.noise <= 1.0)) throw InputError("--noise must lie in [0,1]");
  const auto splits = synth_dataset(args.seed, args.n, args.noise);
  const fs::path out(args.out_dir);
  make_dir(out);
  write_claims(out / "train.jsonl", splits.train);
  write_claims(out / "dev.jsonl", splits.dev);
  write_claims(out / "test.jsonl", splits.test);
  std::cout << "train " << splits.train.size() << ", dev " << splits.dev.size() << ", test " << splits.test.size()
            << " -> " << out.string() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"confidence-masked graph attention fact verification"};
  app.require_subcommand(1);

  TrainArgs train_args;
  auto* train_cmd = app.add_subcommand("train", "train a model from a config file");
  train_cmd->add_option("--config", train_args.config, "key = value config file");
  train_cmd->add_option("--set", train_args.sets, "override one config field (key=value)");

  EvalArgs eval_args;
  auto* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint on a JSONL dataset");
  eval_cmd->add_option("checkpoint", eval_args.checkpoint)->required();
  eval_cmd->add_option("data", eval_args.data)->required();
  eval_cmd->add_option("--mode", eval_args.mode, "soft, hard or no_mask (default: training mode)");
  eval_cmd->add_option("--alpha", eval_args.alpha, "confidence scale in [0,1]");
  eval_cmd->add_option("--l-max", eval_args.l_max, "evidence nodes per graph");
  eval_cmd->add_option("--out-dir", eval_args.out_dir);
  eval_cmd->add_option("--config", eval_args.config, "check the checkpoint against this config's architecture");

  AnalyzeArgs an_args;
  auto* an_cmd = app.add_subcommand("analyze", "entropy, scaling sweep and NEI tendency");
  an_cmd->add_option("checkpoint", an_args.checkpoint)->required();
  an_cmd->add_option("data", an_args.data)->required();
  an_cmd->add_option("--sweep-alphas", an_args.sweep_alphas, "comma-separated increasing alphas");
  an_cmd->add_option("--entropy", an_args.entropy_baseline, "no_mask baseline checkpoint to compare against");
  an_cmd->add_flag("--nei-curve", an_args.nei_curve);
  an_cmd->add_option("--mode", an_args.mode);
  an_cmd->add_option("--l-max", an_args.l_max);
  an_cmd->add_option("--out-dir", an_args.out_dir);

  ScoreArgs score_args;
  auto* score_cmd = app.add_subcommand("score", "score prediction records against gold data");
  score_cmd->add_option("predictions", score_args.predictions)->required();
  score_cmd->add_option("gold", score_args.gold)->required();
  score_cmd->add_flag("--json", score_args.json);

  SynthArgs synth_args;
  auto* synth_cmd = app.add_subcommand("synth", "write a synthetic train/dev/test corpus");
  synth_cmd->add_option("--seed", synth_args.seed);
  synth_cmd->add_option("--n", synth_args.n);
  synth_cmd->add_option("--noise", synth_args.noise);
  synth_cmd->add_option("--out-dir", synth_args.out_dir);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : kExitInput;
  }

  try {
    if (*train_cmd) return cmd_train(train_args);
    if (*eval_cmd) return cmd_eval(eval_args);
    if (*an_cmd) return cmd_analyze(an_args);
    if (*score_cmd) return cmd_score(score_args);
    if (*synth_cmd) return cmd_synth(synth_args);
  } catch (const CompatibilityError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitCompat;
  } catch (const InputError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInput;
  } catch (const NumericError& e) {
    std::cerr << "numeric failure: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
