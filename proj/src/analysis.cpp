#include "cogat/analysis.hpp"

#include <cmath>
#include <iomanip>
#include <limits>
#include <sstream>

#include "cogat/errors.hpp"
#include "cogat/metrics.hpp"

namespace cogat {

double edge_entropy(const AttentionTrace& trace) {
  if (trace.edge_weights.empty()) return 0.0;
  double total = 0.0;
  for (const auto& head : trace.edge_weights) {
    double rows = 0.0;
    for (const auto& r : head) rows += attention_entropy(r);
    total += rows / static_cast<double>(head.size());
  }
  return total / static_cast<double>(trace.edge_weights.size());
}

double node_entropy(const AttentionTrace& trace) {
  return trace.node_weights.empty() ? 0.0 : attention_entropy(trace.node_weights);
}

NeiTendency nei_tendency(const Evaluation& evaluation, std::size_t bins, double max_cross_entropy) {
  if (bins == 0 || !(max_cross_entropy > 0.0)) throw ContractError("nei_tendency: invalid binning");
  const double width = max_cross_entropy / static_cast<double>(bins);
  std::vector<double> sums(bins + 1, 0.0);
  std::vector<std::size_t> counts(bins + 1, 0);
  NeiTendency out;
  for (const auto& inst : evaluation.instances) {
    const auto gold = static_cast<std::size_t>(inst.record.gold_label);
    const double ce = -std::log(std::max(inst.label_probs[gold], kLogFloor));
    auto bin = static_cast<std::size_t>(ce / width);
    if (ce >= max_cross_entropy) bin = bins;
    bin = std::min(bin, bins);
    sums[bin] += inst.label_probs[static_cast<std::size_t>(Label::Nei)];
    ++counts[bin];
    if (inst.record.gold_label != Label::Nei && inst.record.predicted_label != inst.record.gold_label) {
      ++out.misclassified_non_nei;
      if (inst.record.predicted_label == Label::Nei) ++out.misclassified_as_nei;
    }
  }
  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (std::size_t b = 0; b <= bins; ++b) {
    NeiBin bin;
    bin.lower = static_cast<double>(b) * width;
    bin.upper = b == bins ? std::numeric_limits<double>::infinity() : static_cast<double>(b + 1) * width;
    if (b == bins) bin.lower = max_cross_entropy;
    bin.count = counts[b];
    bin.mean_nei_probability = counts[b] ? sums[b] / static_cast<double>(counts[b]) : nan;
    out.bins.push_back(bin);
  }
  out.nei_ratio_among_misclassified =
      out.misclassified_non_nei ? static_cast<double>(out.misclassified_as_nei) / static_cast<double>(out.misclassified_non_nei)
                                : nan;
  return out;
}

std::string NeiTendency::to_csv() const {
  std::ostringstream os;
  os << std::setprecision(10);
  os << "ce_lower,ce_upper,count,mean_nei_probability\n";
  for (const auto& b : bins) os << b.lower << ',' << b.upper << ',' << b.count << ',' << b.mean_nei_probability << '\n';
  os << "# misclassified_non_nei=" << misclassified_non_nei << " predicted_nei=" << misclassified_as_nei
     << " ratio=" << nei_ratio_among_misclassified << '\n';
  return os.str();
}

SweepResult scaling_sweep(const ModelParams& params, std::span<const ClaimInstance> dataset,
                          std::span<const double> alphas, std::size_t l_max) {
  if (alphas.empty()) throw ContractError("scaling_sweep: empty alpha list");
  for (std::size_t i = 0; i < alphas.size(); ++i) {
    if (!(alphas[i] >= 0.0 && alphas[i] <= 1.0)) throw ContractError("scaling_sweep: alpha outside [0,1]");
    if (i > 0 && !(alphas[i] > alphas[i - 1])) throw ContractError("scaling_sweep: alphas must be strictly increasing");
  }
  SweepResult out;
  for (double alpha : alphas) {
    Evaluation ev = evaluate(params, dataset, EvalOptions{MaskMode::Soft, alpha, l_max});
    out.rows.push_back({alpha, ev.nei_fraction, ev.scores.accuracy, ev.mean_edge_entropy, ev.mean_node_entropy});
  }
  return out;
}

std::string SweepResult::to_csv() const {
  std::ostringstream os;
  os << std::setprecision(10);
  os << "alpha,nei_fraction,label_accuracy,edge_entropy,node_entropy\n";
  for (const auto& r : rows) {
    os << r.alpha << ',' << r.nei_fraction << ',' << r.accuracy << ',' << r.mean_edge_entropy << ',' << r.mean_node_entropy
       << '\n';
  }
  return os.str();
}

std::vector<double> default_alpha_grid() { return {0.0, 0.2, 0.4, 0.6, 0.8, 1.0}; }

}  // namespace cogat
