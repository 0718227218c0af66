#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "cogat/data.hpp"
#include "cogat/metrics.hpp"
#include "cogat/model.hpp"

namespace cogat {

struct TrainConfig {
  std::size_t epochs = 10;
  std::size_t eval_interval = 1000;  // steps between dev evaluations
  std::size_t patience = 5;
  std::size_t batch_size = 16;
  double learning_rate = 5e-5;
  std::uint64_t seed = 0;
  MaskMode mode = MaskMode::Soft;
  bool use_evidence_loss = true;
  std::size_t l_max = kDefaultMaxNodes;
  std::size_t max_steps = 0;  // 0: bounded by epochs only
  double grad_clip = 5.0;

  void validate() const;
};

struct TrainLogEntry {
  std::size_t step = 0;
  double loss = 0.0;  // mean training loss since the previous evaluation
  double dev_acc = 0.0;
  double dev_fever = 0.0;
  double mean_cosco_gold = 0.0;
  double mean_cosco_noise = 0.0;
};

struct TrainLog {
  std::vector<TrainLogEntry> entries;
  // step,loss,dev_acc,dev_fever,mean_cosco_gold,mean_cosco_noise
  std::string to_csv() const;
};

struct LossTerms {
  Tensor total;
  double fact = 0.0;
  double evidence = 0.0;
};

// L = L_fact + L_evi, L_evi the mean node cross entropy over nodes whose
// relevance is not kIgnoreRelevance (0 when there are none). Without the
// evidence term, L = L_fact.
LossTerms multi_task_loss(const Tensor& label_probs, Label gold_label, const Tensor& node_probs,
                          std::span<const int> gold_relevance, bool use_evidence_loss);

struct EvalOptions {
  MaskMode mode = MaskMode::Soft;
  double alpha = 1.0;
  std::size_t l_max = kDefaultMaxNodes;
};

struct InstanceResult {
  EvalRecord record;
  std::array<double, kNumLabels> label_probs{};
  std::vector<int> relevance;
  AttentionTrace trace;
};

struct Evaluation {
  std::vector<InstanceResult> instances;
  ScoreSummary scores;
  double nei_fraction = 0.0;
  double mean_cosco_gold = 0.0;   // NaN when no gold node was seen
  double mean_cosco_noise = 0.0;  // NaN when no non-gold node was seen
  double mean_edge_entropy = 0.0;
  double mean_node_entropy = 0.0;

  std::vector<EvalRecord> records() const;
};

// Predicted evidence: non-padded nodes with confidence ≥ 0.5, highest first, at most five.
std::vector<EvidenceKey> select_evidence(const ReasoningGraph& graph, std::span<const double> co_scos);

Evaluation evaluate(const ModelParams& params, std::span<const ClaimInstance> dataset, const EvalOptions& options);

struct TrainHooks {
  // Dev model-selection metric; dev FEVER score when empty.
  std::function<double(const Evaluation&)> selection_metric;
};

struct TrainResult {
  ModelParams best;
  TrainLog log;
  std::vector<double> step_losses;
  std::size_t steps = 0;
  std::uint64_t log_floor_events = 0;
};

TrainResult train(std::span<const ClaimInstance> train_set, std::span<const ClaimInstance> dev_set,
                  const ModelConfig& model_config, const TrainConfig& config, const TrainHooks& hooks = {});

}  // namespace cogat
