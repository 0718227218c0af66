#pragma once

// Confidence-masked graph attention reasoner over claim-evidence nodes.
//
// Per graph: every candidate is encoded together with the claim (h_p), the
// claim alone gives the blank node (h_b). A two-class relevance head scores
// each node; its positive probability (the confidence score) blends h_p
// toward h_b before multi-head edge attention. Node attention pools the
// updated node vectors and a three-way head predicts the label.

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

#include "cogat/checkpoint.hpp"
#include "cogat/data.hpp"
#include "cogat/encoder.hpp"
#include "cogat/tensor.hpp"

namespace cogat {

enum class MaskMode { Soft, Hard, NoMask };

std::string_view mask_mode_name(MaskMode mode);
std::optional<MaskMode> parse_mask_mode(std::string_view text);

struct ModelConfig {
  std::size_t hidden_dim = 64;
  std::size_t vocab_dim = 4096;
  std::size_t heads = 0;  // 0 picks default_heads(hidden_dim)
  std::size_t layers = 1;
  std::size_t max_tokens = 256;

  std::size_t resolved_heads() const;
  std::size_t head_dim() const { return hidden_dim / resolved_heads(); }
  void validate() const;
};

// hidden_dim / 64 for wide models, 4 heads below that.
std::size_t default_heads(std::size_t hidden_dim);

struct AttentionHead {
  Tensor query;  // d_m × d_k
  Tensor key;
  Tensor value;
};

struct ModelParams {
  ModelConfig config;
  HashEncoder encoder;
  std::vector<std::vector<AttentionHead>> layers;
  Tensor node_attention_weight;  // 1 × d_m
  Tensor node_attention_bias;    // {1}
  Tensor label_weight;           // 3 × d_m
  Tensor label_bias;             // {3}
  Tensor confidence_weight;      // 2 × d_m
  Tensor confidence_bias;        // {2}

  static ModelParams create(const ModelConfig& config, std::uint64_t seed);

  NamedTensors named() const;
  std::vector<Tensor> parameters() const;
  ModelParams clone() const;

  Checkpoint to_checkpoint() const;
  // Throws CompatibilityError when the manifest does not describe this architecture.
  static ModelParams from_checkpoint(const Checkpoint& ckpt);
};

// Hashed inputs of one graph, computed once and reused across epochs.
struct GraphFeatures {
  SparseCounts blank_claim;
  std::vector<SparseCounts> node_claim;  // claim counts after per-pair truncation
  std::vector<SparseCounts> node_evidence;
  std::vector<int> relevance;  // 1 / 0, or kIgnoreRelevance for padded nodes
};

inline constexpr int kIgnoreRelevance = -1;

GraphFeatures featurize(const ReasoningGraph& graph, const ModelConfig& config);

struct AttentionTrace {
  // Final layer, one l×l row-stochastic matrix per head: row p is node p's distribution over sources.
  std::vector<std::vector<std::vector<double>>> edge_weights;
  std::vector<double> node_weights;
  std::vector<double> co_scos;
};

struct ForwardOptions {
  MaskMode mode = MaskMode::Soft;
  double alpha = 1.0;
  bool capture_trace = false;
};

struct ForwardOutput {
  Tensor label_probs;  // {3}
  Tensor node_probs;   // l × 2, row p = P(y_{e_p} | c, e_p)
  std::vector<double> co_scos;
  std::optional<AttentionTrace> trace;
};

// Pipeline stages.
Tensor encode_node(std::string_view claim, const EvidenceNode& evidence, const ModelParams& params);
Tensor encode_blank_node(std::string_view claim, const ModelParams& params);

struct Confidence {
  Tensor probs;  // {2}
  Tensor score;  // {1}, probs[1]
};
Confidence confidence_score(const Tensor& node, const ModelParams& params);

Tensor mask_node(const Tensor& node, const Tensor& blank, const Tensor& co_sco, double alpha = 1.0);
Tensor hard_mask(const Tensor& node, const Tensor& blank, double co_sco);

// H: l × d_m. Captures per-head attention matrices when `edge_weights` is non-null.
Tensor edge_attention(const Tensor& nodes, const std::vector<AttentionHead>& heads,
                      std::vector<std::vector<std::vector<double>>>* edge_weights = nullptr);
// Returns β as an l × 1 column.
Tensor node_attention(const Tensor& updated, const ModelParams& params);
Tensor aggregate(const Tensor& updated, const Tensor& beta);
Tensor predict_label(const Tensor& pooled, const ModelParams& params);

ForwardOutput forward(const GraphFeatures& features, const ModelParams& params, const ForwardOptions& options);
ForwardOutput forward(const ReasoningGraph& graph, const ModelParams& params, const ForwardOptions& options);

// Argmax with ties toward the lowest index.
std::size_t argmax(std::span<const double> values);

}  // namespace cogat
