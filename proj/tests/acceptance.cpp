// Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any fails.
// A comparison report for the ablation and entropy runs is written to
// acceptance_report.txt in the working directory.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "cogat/analysis.hpp"
#include "cogat/checkpoint.hpp"
#include "cogat/metrics.hpp"
#include "cogat/model.hpp"
#include "cogat/synth.hpp"
#include "cogat/training.hpp"
#include "support.hpp"

using namespace cogat;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

int failures = 0;

void verdict(int id, bool ok, const std::string& detail) {
  if (!ok) ++failures;
  std::cout << "criterion " << std::setw(2) << id << ' ' << (ok ? "PASS" : "FAIL") << "  " << detail << std::endl;
}

std::string fmt(double v, int precision = 4) {
  std::ostringstream os;
  os << std::setprecision(precision) << v;
  return os.str();
}

// The synthetic training setup shared by criteria 6, 7, 9 and 10.
ModelConfig synth_model() {
  ModelConfig m;
  m.hidden_dim = 64;
  m.heads = 4;
  return m;
}

TrainConfig synth_training(MaskMode mode, std::uint64_t seed) {
  TrainConfig t;
  t.learning_rate = 1e-2;
  t.eval_interval = 100;
  t.patience = 100;
  t.epochs = 1000;
  t.max_steps = 2000;
  t.mode = mode;
  t.seed = seed;
  return t;
}

// ---------------------------------------------------------------------------

void gradient_suite() {
  const auto t0 = Clock::now();
  std::size_t checked = 0, failed = 0;
  double worst = 0.0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    ModelConfig cfg;
    cfg.hidden_dim = 8;
    cfg.heads = 2;
    cfg.vocab_dim = 32;
    const ModelParams params = ModelParams::create(cfg, 100 + seed);
    std::mt19937_64 rng(seed);
    ReasoningGraph g;
    g.claim = "Velka plays the flute near the harbor .";
    g.evidence = {{"Velka", 2, "Velka plays the flute according to records .", true, false},
                  {"Orun", 5, "It is false that Orun speaks korean .", false, false},
                  {"Tesmo", 1, "Tesmo works as a pilot .", false, false}};
    std::shuffle(g.evidence.begin(), g.evidence.end(), rng);
    const auto features = featurize(g, cfg);
    const auto label = static_cast<Label>(seed % 3);
    auto loss = [&] {
      const auto out = forward(features, params, {MaskMode::Soft, 1.0, false});
      return multi_task_loss(out.label_probs, label, out.node_probs, features.relevance, true).total;
    };
    const auto r = cogat::testing::check_gradients(params.parameters(), loss, 1e-5, 1e-4);
    checked += r.checked;
    failed += r.failed;
    worst = std::max(worst, r.worst);
  }
  const double secs = seconds_since(t0);
  verdict(1, failed == 0 && secs < 30.0,
          std::to_string(checked) + " parameter entries over 10 seeds, " + std::to_string(failed) +
              " above 1e-4, worst relative error " + fmt(worst, 3) + ", " + fmt(secs, 3) + " s");
}

void masking_identities() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(42);
  std::uniform_real_distribution<double> u(0.0, 1.0), v(-3.0, 3.0);
  std::size_t violations = 0;
  for (int i = 0; i < 1000; ++i) {
    std::vector<double> hp(8), hb(8);
    for (auto& x : hp) x = v(rng);
    for (auto& x : hb) x = v(rng);
    if (i % 10 == 0) hb[3] = hp[3];
    const Tensor tp = Tensor::from({8}, hp), tb = Tensor::from({8}, hb);
    const double s = i % 50 == 0 ? (i % 100 == 0 ? 0.0 : 1.0) : u(rng);
    const double alpha = i % 7 == 0 ? 1.0 : u(rng);

    const Tensor full = mask_node(tp, tb, Tensor::scalar(1.0), 1.0);
    const Tensor zero = mask_node(tp, tb, Tensor::scalar(s), 0.0);
    const Tensor m = mask_node(tp, tb, Tensor::scalar(s), alpha);
    const Tensor hard = hard_mask(tp, tb, alpha * s);
    const Tensor thresholded = mask_node(tp, tb, Tensor::scalar(alpha * s >= 0.5 ? 1.0 : 0.0), 1.0);
    for (std::size_t k = 0; k < 8; ++k) {
      if (full.at(k) != hp[k]) ++violations;
      if (zero.at(k) != hb[k]) ++violations;
      if (m.at(k) < std::min(hp[k], hb[k]) || m.at(k) > std::max(hp[k], hb[k])) ++violations;
      if (hard.at(k) != thresholded.at(k)) ++violations;
    }
  }
  const double secs = seconds_since(t0);
  verdict(2, violations == 0 && secs < 1.0,
          "1000 tuples, " + std::to_string(violations) + " violations, " + fmt(secs, 3) + " s");
}

std::vector<ClaimInstance> pooled_instances(std::uint64_t seed, std::size_t n) {
  auto s = synth_dataset(seed, n, 0.7);
  std::vector<ClaimInstance> all = s.train;
  all.insert(all.end(), s.dev.begin(), s.dev.end());
  all.insert(all.end(), s.test.begin(), s.test.end());
  return all;
}

void attention_stochasticity() {
  const auto data = pooled_instances(11, 300);
  std::mt19937_64 rng(3);
  double worst = 0.0;
  std::size_t rows = 0;
  std::vector<ModelParams> models;
  for (std::uint64_t s = 0; s < 5; ++s) {
    ModelConfig cfg;
    cfg.hidden_dim = 16;
    cfg.heads = 4;
    cfg.vocab_dim = 256;
    cfg.layers = 1 + s % 2;
    models.push_back(ModelParams::create(cfg, s));
  }
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::uniform_int_distribution<std::size_t> pick(0, data.size() - 1), lmax(1, 5);
  for (int i = 0; i < 1000; ++i) {
    const auto& params = models[static_cast<std::size_t>(i) % models.size()];
    const auto g = build_graph(data[pick(rng)], lmax(rng));
    const auto mode = static_cast<MaskMode>(i % 3);
    const auto out = forward(g, params, {mode, u(rng), true});
    for (const auto& head : out.trace->edge_weights) {
      for (const auto& r : head) {
        worst = std::max(worst, std::abs(std::accumulate(r.begin(), r.end(), 0.0) - 1.0));
        ++rows;
      }
    }
    const auto& beta = out.trace->node_weights;
    worst = std::max(worst, std::abs(std::accumulate(beta.begin(), beta.end(), 0.0) - 1.0));
  }
  verdict(3, worst <= 1e-9,
          "1000 forwards, " + std::to_string(rows) + " edge rows and 1000 node vectors, max |sum - 1| = " + fmt(worst, 3));
}

void permutation_equivariance() {
  const auto data = pooled_instances(12, 300);
  ModelConfig cfg;
  cfg.hidden_dim = 16;
  cfg.heads = 2;
  cfg.vocab_dim = 256;
  const auto params = ModelParams::create(cfg, 77);
  std::mt19937_64 rng(4);
  double worst_label = 0.0, worst_trace = 0.0;
  int graphs = 0;
  for (const auto& inst : data) {
    if (graphs == 200) break;
    const auto g = build_graph(inst);
    const std::size_t l = g.evidence.size();
    if (l < 2) continue;
    ++graphs;
    std::vector<std::size_t> perm(l);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    ReasoningGraph pg = g;
    for (std::size_t p = 0; p < l; ++p) pg.evidence[p] = g.evidence[perm[p]];
    const auto mode = static_cast<MaskMode>(graphs % 3);
    const auto a = forward(g, params, {mode, 1.0, true});
    const auto b = forward(pg, params, {mode, 1.0, true});
    for (std::size_t i = 0; i < 3; ++i) worst_label = std::max(worst_label, std::abs(a.label_probs.at(i) - b.label_probs.at(i)));
    for (std::size_t p = 0; p < l; ++p) {
      worst_trace = std::max(worst_trace, std::abs(b.trace->co_scos[p] - a.trace->co_scos[perm[p]]));
      worst_trace = std::max(worst_trace, std::abs(b.trace->node_weights[p] - a.trace->node_weights[perm[p]]));
      for (std::size_t h = 0; h < a.trace->edge_weights.size(); ++h) {
        for (std::size_t s = 0; s < l; ++s) {
          worst_trace = std::max(worst_trace,
                                 std::abs(b.trace->edge_weights[h][p][s] - a.trace->edge_weights[h][perm[p]][perm[s]]));
        }
      }
    }
  }
  verdict(4, graphs == 200 && worst_label <= 1e-12 && worst_trace <= 1e-12,
          std::to_string(graphs) + " graphs, max label deviation " + fmt(worst_label, 3) + ", max trace deviation " +
              fmt(worst_trace, 3));
}

void fever_oracle() {
  std::vector<EvidenceKey> universe;
  for (int i = 0; i < 6; ++i) universe.push_back({i < 3 ? "Page_A" : "Page_B", i});
  std::vector<EvidenceGroup> groups;
  for (std::size_t i = 0; i < 6; ++i) {
    groups.push_back({universe[i]});
    for (std::size_t j = i + 1; j < 6; ++j) groups.push_back({universe[i], universe[j]});
  }
  std::vector<std::vector<EvidenceGroup>> configs;
  for (std::size_t a = 0; a < groups.size(); ++a) {
    configs.push_back({groups[a]});
    for (std::size_t b = a + 1; b < groups.size(); ++b) {
      configs.push_back({groups[a], groups[b]});
      for (std::size_t c = b + 1; c < groups.size(); ++c) configs.push_back({groups[a], groups[b], groups[c]});
    }
  }
  // Brute force: the scored prefix, as a bitmask, must contain some group's bitmask.
  auto bit = [](const EvidenceKey& k) { return 1u << k.sentence_id; };
  std::size_t cases = 0, mismatches = 0;
  const Label labels[] = {Label::Supports, Label::Refutes, Label::Nei};
  for (const auto& cfg : configs) {
    for (unsigned mask = 0; mask < 64; ++mask) {
      std::vector<EvidenceKey> predicted;
      for (std::size_t i = 0; i < 6; ++i)
        if (mask & (1u << i)) predicted.push_back(universe[i]);
      unsigned scored = 0;
      for (std::size_t i = 0; i < std::min<std::size_t>(predicted.size(), kMaxPredictedEvidence); ++i) scored |= bit(predicted[i]);
      bool covered = false;
      for (const auto& g : cfg) {
        unsigned need = 0;
        for (const auto& k : g) need |= bit(k);
        covered = covered || (scored & need) == need;
      }
      for (Label gold : {Label::Supports, Label::Refutes}) {
        for (Label pred : labels) {
          const EvalRecord r{0, pred, predicted, gold, cfg};
          const bool oracle = pred == gold && covered;
          ++cases;
          if (fever_correct(r) != oracle) ++mismatches;
        }
      }
    }
  }
  for (unsigned mask = 0; mask < 64; ++mask) {
    for (Label pred : labels) {
      std::vector<EvidenceKey> predicted;
      for (std::size_t i = 0; i < 6; ++i)
        if (mask & (1u << i)) predicted.push_back(universe[i]);
      ++cases;
      if (fever_correct({0, pred, predicted, Label::Nei, {}}) != (pred == Label::Nei)) ++mismatches;
    }
  }

  std::mt19937_64 rng(5);
  std::uniform_int_distribution<int> lab(0, 2), count(1, 30), sid(0, 5), len(0, 6), ngroups(1, 3), gsize(1, 2);
  std::size_t violations = 0;
  for (int set = 0; set < 500; ++set) {
    std::vector<EvalRecord> rs;
    const int n = count(rng);
    for (int i = 0; i < n; ++i) {
      EvalRecord r;
      r.id = i;
      r.gold_label = static_cast<Label>(lab(rng));
      r.predicted_label = static_cast<Label>(lab(rng));
      if (r.gold_label != Label::Nei) {
        const int ng = ngroups(rng);
        for (int g = 0; g < ng; ++g) {
          EvidenceGroup grp;
          const int gs = gsize(rng);
          for (int k = 0; k < gs; ++k) grp.push_back(universe[static_cast<std::size_t>(sid(rng))]);
          r.gold_evidence.push_back(grp);
        }
      }
      std::vector<EvidenceKey> shuffled = universe;
      std::shuffle(shuffled.begin(), shuffled.end(), rng);
      shuffled.resize(static_cast<std::size_t>(std::min(len(rng), 5)));
      r.predicted_evidence = shuffled;
      rs.push_back(r);
    }
    if (fever_score(rs) > label_accuracy(rs)) ++violations;
  }
  verdict(5, mismatches == 0 && violations == 0,
          std::to_string(configs.size()) + " gold configurations x 64 predicted subsets (" + std::to_string(cases) +
              " cases), " + std::to_string(mismatches) + " mismatches; FEVER > ACC on " + std::to_string(violations) +
              " of 500 random sets");
}

// ---------------------------------------------------------------------------
// Training-based criteria.

struct RunSummary {
  MaskMode mode{};
  std::uint64_t seed = 0;
  double seconds = 0.0;
  std::size_t steps = 0;
  double train_acc = 0.0;
  double dev_acc = 0.0;
  double dev_fever = 0.0;
  double edge_entropy = 0.0;
  double node_entropy = 0.0;
  double nei_ratio_misclassified = 0.0;
};

struct Stats {
  double mean = 0.0;
  double half_width = 0.0;  // 95% normal interval of the mean
};

Stats stats(const std::vector<double>& xs) {
  Stats s;
  s.mean = std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
  double var = 0.0;
  for (double x : xs) var += (x - s.mean) * (x - s.mean);
  var /= static_cast<double>(xs.size() > 1 ? xs.size() - 1 : 1);
  s.half_width = 1.96 * std::sqrt(var / static_cast<double>(xs.size()));
  return s;
}

std::string read_bytes(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(is), {});
}

}  // namespace

int main() {
  const auto start = Clock::now();
  gradient_suite();
  masking_identities();
  attention_stochasticity();
  permutation_equivariance();
  fever_oracle();

  const auto splits = synth_dataset(7, 500, 0.5);
  const MaskMode modes[] = {MaskMode::Soft, MaskMode::Hard, MaskMode::NoMask};
  std::vector<RunSummary> runs;
  std::optional<TrainResult> reference;  // soft, seed 0
  for (MaskMode mode : modes) {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      const auto t0 = Clock::now();
      auto result = train(splits.train, splits.dev, synth_model(), synth_training(mode, seed));
      RunSummary r;
      r.mode = mode;
      r.seed = seed;
      r.seconds = seconds_since(t0);
      r.steps = result.steps;
      const EvalOptions opts{mode, 1.0, kDefaultMaxNodes};
      r.train_acc = evaluate(result.best, splits.train, opts).scores.accuracy;
      const auto dev = evaluate(result.best, splits.dev, opts);
      r.dev_acc = dev.scores.accuracy;
      r.dev_fever = dev.scores.fever;
      r.edge_entropy = dev.mean_edge_entropy;
      r.node_entropy = dev.mean_node_entropy;
      r.nei_ratio_misclassified = nei_tendency(dev).nei_ratio_among_misclassified;
      runs.push_back(r);
      std::cout << "  trained " << mask_mode_name(mode) << " seed " << seed << ": " << r.steps << " steps, "
                << fmt(r.seconds, 3) << " s, train acc " << fmt(r.train_acc) << ", dev acc " << fmt(r.dev_acc)
                << ", dev FEVER " << fmt(r.dev_fever) << std::endl;
      if (mode == MaskMode::Soft && seed == 0) reference = std::move(result);
    }
  }
  auto column = [&](MaskMode mode, double RunSummary::*field) {
    std::vector<double> out;
    for (const auto& r : runs)
      if (r.mode == mode) out.push_back(r.*field);
    return out;
  };

  // 6. End-to-end learning on the soft model, seed 0.
  {
    const auto& r = runs.front();
    verdict(6, r.train_acc >= 0.95 && r.dev_acc >= 0.85 && r.steps <= 2000 && r.seconds < 300.0,
            "train acc " + fmt(r.train_acc) + " (>= 0.95), dev acc " + fmt(r.dev_acc) + " (>= 0.85), " +
                std::to_string(r.steps) + " steps, " + fmt(r.seconds, 3) + " s");
  }

  // 7. Ablation direction over five seeds.
  const Stats soft_f = stats(column(MaskMode::Soft, &RunSummary::dev_fever));
  const Stats hard_f = stats(column(MaskMode::Hard, &RunSummary::dev_fever));
  const Stats none_f = stats(column(MaskMode::NoMask, &RunSummary::dev_fever));
  const Stats soft_e = stats(column(MaskMode::Soft, &RunSummary::edge_entropy));
  const Stats none_e = stats(column(MaskMode::NoMask, &RunSummary::edge_entropy));
  const Stats soft_n = stats(column(MaskMode::Soft, &RunSummary::node_entropy));
  const Stats none_n = stats(column(MaskMode::NoMask, &RunSummary::node_entropy));
  {
    auto within = [](const Stats& hi, const Stats& lo) { return hi.mean >= lo.mean || hi.mean + hi.half_width >= lo.mean - lo.half_width; };
    const bool ordering = within(soft_f, hard_f) && within(hard_f, none_f);
    verdict(7, soft_f.mean >= none_f.mean,
            "dev FEVER means soft " + fmt(soft_f.mean) + " +- " + fmt(soft_f.half_width, 2) + ", hard " + fmt(hard_f.mean) +
                " +- " + fmt(hard_f.half_width, 2) + ", no_mask " + fmt(none_f.mean) + " +- " + fmt(none_f.half_width, 2) +
                "; full ordering " + (ordering ? "holds" : "inverted") + " within intervals");
  }

  // 8. Scaling sweep on the trained soft model.
  {
    const auto grid = default_alpha_grid();
    const auto sweep = scaling_sweep(reference->best, splits.dev, grid);
    const auto plain = evaluate(reference->best, splits.dev, {MaskMode::Soft, 1.0, kDefaultMaxNodes});
    const auto& top = sweep.rows.back();
    const bool identical = top.alpha == 1.0 && top.accuracy == plain.scores.accuracy && top.nei_fraction == plain.nei_fraction &&
                           top.mean_edge_entropy == plain.mean_edge_entropy &&
                           top.mean_node_entropy == plain.mean_node_entropy;
    const auto collapsed = evaluate(reference->best, splits.dev, {MaskMode::Soft, 0.0, kDefaultMaxNodes});
    double worst = 0.0;
    for (const auto& inst : collapsed.instances) {
      const double l = static_cast<double>(inst.trace.node_weights.size());
      worst = std::max(worst, std::abs(edge_entropy(inst.trace) - std::log(l)));
    }
    const double nei0 = sweep.rows.front().nei_fraction, nei1 = top.nei_fraction;
    verdict(8, nei0 >= nei1 && identical && worst <= 1e-9,
            "NEI fraction " + fmt(nei0) + " at alpha=0 vs " + fmt(nei1) + " at alpha=1; alpha=1 row " +
                (identical ? "bit-identical" : "differs") + "; max |H_edge - ln l| at alpha=0 " + fmt(worst, 3));
    std::cout << "  sweep:\n" << sweep.to_csv();
  }

  // 9. Entropy analysis over five seeds.
  {
    const double node_gap = std::abs(soft_n.mean - none_n.mean) / std::max(soft_n.mean, none_n.mean);
    verdict(9, soft_e.mean <= none_e.mean && node_gap <= 0.2,
            "edge entropy soft " + fmt(soft_e.mean) + " vs no_mask " + fmt(none_e.mean) + " (need <=); node entropy " +
                fmt(soft_n.mean) + " vs " + fmt(none_n.mean) + ", relative gap " + fmt(node_gap, 3) + " (need <= 0.2)");
  }

  // 10. Determinism: the reference configuration again, artifacts byte-compared.
  {
    const fs::path dir = fs::temp_directory_path() / "cogat_acceptance";
    fs::create_directories(dir);
    auto again = train(splits.train, splits.dev, synth_model(), synth_training(MaskMode::Soft, 0));
    auto write_artifacts = [&](const TrainResult& r, const std::string& tag) {
      std::ofstream(dir / (tag + "_log.csv"), std::ios::binary) << r.log.to_csv();
      save_checkpoint(dir / (tag + ".ckpt"), r.best.to_checkpoint());
      const auto ev = evaluate(r.best, splits.dev, {MaskMode::Soft, 1.0, kDefaultMaxNodes});
      std::ofstream(dir / (tag + "_metrics.json"), std::ios::binary) << summary_json(ev.scores).dump(2) << "\n";
    };
    write_artifacts(*reference, "first");
    write_artifacts(again, "second");
    const bool log = read_bytes(dir / "first_log.csv") == read_bytes(dir / "second_log.csv");
    const bool ckpt = read_bytes(dir / "first.ckpt") == read_bytes(dir / "second.ckpt");
    const bool metrics = read_bytes(dir / "first_metrics.json") == read_bytes(dir / "second_metrics.json");
    verdict(10, log && ckpt && metrics,
            std::string("train log ") + (log ? "identical" : "differs") + ", checkpoint " + (ckpt ? "identical" : "differs") +
                ", metrics " + (metrics ? "identical" : "differs"));
  }

  // Comparison report.
  {
    std::ostringstream os;
    os << "mode,seed,steps,seconds,train_acc,dev_acc,dev_fever,edge_entropy,node_entropy,nei_ratio_misclassified\n";
    os << std::setprecision(6);
    for (const auto& r : runs) {
      os << mask_mode_name(r.mode) << ',' << r.seed << ',' << r.steps << ',' << r.seconds << ',' << r.train_acc << ','
         << r.dev_acc << ',' << r.dev_fever << ',' << r.edge_entropy << ',' << r.node_entropy << ','
         << r.nei_ratio_misclassified << '\n';
    }
    os << "\n# five-seed means (95% interval half-width)\n";
    os << "dev_fever soft " << soft_f.mean << " (" << soft_f.half_width << "), hard " << hard_f.mean << " ("
       << hard_f.half_width << "), no_mask " << none_f.mean << " (" << none_f.half_width << ")\n";
    os << "edge_entropy soft " << soft_e.mean << " (" << soft_e.half_width << "), no_mask " << none_e.mean << " ("
       << none_e.half_width << ")\n";
    os << "node_entropy soft " << soft_n.mean << " (" << soft_n.half_width << "), no_mask " << none_n.mean << " ("
       << none_n.half_width << ")\n";
    const Stats soft_r = stats(column(MaskMode::Soft, &RunSummary::nei_ratio_misclassified));
    const Stats none_r = stats(column(MaskMode::NoMask, &RunSummary::nei_ratio_misclassified));
    os << "nei_ratio_among_misclassified soft " << soft_r.mean << ", no_mask " << none_r.mean << "\n";
    std::ofstream("acceptance_report.txt") << os.str();
    std::cout << "\n" << os.str();
  }

  std::cout << "\n" << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criteria failed") << " in "
            << fmt(seconds_since(start), 4) << " s" << std::endl;
  return failures == 0 ? 0 : 1;
}
