#pragma once

// Post-training analyses: attention entropy, NEI tendency against prediction
// cross entropy, and confidence-score scaling sweeps.

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "cogat/model.hpp"
#include "cogat/training.hpp"

namespace cogat {

// Mean over heads of the mean row entropy (0 without edge weights).
double edge_entropy(const AttentionTrace& trace);
double node_entropy(const AttentionTrace& trace);

struct NeiBin {
  double lower = 0.0;
  double upper = 0.0;  // +inf for the overflow bin
  std::size_t count = 0;
  double mean_nei_probability = 0.0;  // NaN for empty bins
};

struct NeiTendency {
  std::vector<NeiBin> bins;
  std::size_t misclassified_non_nei = 0;
  std::size_t misclassified_as_nei = 0;
  double nei_ratio_among_misclassified = 0.0;  // NaN when nothing was misclassified

  std::string to_csv() const;
};

// Ten equal-width cross-entropy bins over [0, 3] plus an overflow bin.
NeiTendency nei_tendency(const Evaluation& evaluation, std::size_t bins = 10, double max_cross_entropy = 3.0);

struct SweepRow {
  double alpha = 0.0;
  double nei_fraction = 0.0;
  double accuracy = 0.0;
  double mean_edge_entropy = 0.0;
  double mean_node_entropy = 0.0;
};

struct SweepResult {
  std::vector<SweepRow> rows;
  std::string to_csv() const;
};

SweepResult scaling_sweep(const ModelParams& params, std::span<const ClaimInstance> dataset,
                          std::span<const double> alphas, std::size_t l_max = kDefaultMaxNodes);

// 0.0, 0.2, ..., 1.0.
std::vector<double> default_alpha_grid();

}  // namespace cogat
