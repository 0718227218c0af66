#include "cogat/model.hpp"

#include <cmath>
#include <random>
#include <string>

#include "cogat/errors.hpp"

namespace cogat {

std::string_view mask_mode_name(MaskMode mode) {
  switch (mode) {
    case MaskMode::Soft: return "soft";
    case MaskMode::Hard: return "hard";
    case MaskMode::NoMask: return "no_mask";
  }
  return "?";
}

std::optional<MaskMode> parse_mask_mode(std::string_view text) {
  if (text == "soft") return MaskMode::Soft;
  if (text == "hard") return MaskMode::Hard;
  if (text == "no_mask") return MaskMode::NoMask;
  return std::nullopt;
}

std::size_t default_heads(std::size_t hidden_dim) { return hidden_dim > 64 ? hidden_dim / 64 : 4; }

std::size_t ModelConfig::resolved_heads() const { return heads == 0 ? default_heads(hidden_dim) : heads; }

void ModelConfig::validate() const {
  if (hidden_dim == 0 || vocab_dim == 0 || layers == 0 || max_tokens == 0) {
    throw ContractError("model dimensions must be positive");
  }
  const auto h = resolved_heads();
  if (h == 0 || hidden_dim % h != 0) {
    throw ContractError("hidden_dim " + std::to_string(hidden_dim) + " is not divisible by " + std::to_string(h) +
                        " heads");
  }
}

// ---------------------------------------------------------------------------
// Parameters

ModelParams ModelParams::create(const ModelConfig& config, std::uint64_t seed) {
  config.validate();
  std::mt19937_64 rng(seed);
  ModelParams p;
  p.config = config;
  p.encoder = HashEncoder::create(config.vocab_dim, config.hidden_dim, rng);
  p.encoder.max_tokens = config.max_tokens;
  const std::size_t dm = config.hidden_dim, dk = config.head_dim();
  for (std::size_t l = 0; l < config.layers; ++l) {
    std::vector<AttentionHead> heads;
    for (std::size_t h = 0; h < config.resolved_heads(); ++h) {
      AttentionHead head;
      head.query = glorot_uniform({dm, dk}, dm, dk, rng);
      head.key = glorot_uniform({dm, dk}, dm, dk, rng);
      head.value = glorot_uniform({dm, dk}, dm, dk, rng);
      heads.push_back(std::move(head));
    }
    p.layers.push_back(std::move(heads));
  }
  p.node_attention_weight = glorot_uniform({1, dm}, dm, 1, rng);
  p.node_attention_bias = Tensor::zeros({1}, true);
  p.label_weight = glorot_uniform({kNumLabels, dm}, dm, kNumLabels, rng);
  p.label_bias = Tensor::zeros({kNumLabels}, true);
  p.confidence_weight = glorot_uniform({2, dm}, dm, 2, rng);
  p.confidence_bias = Tensor::zeros({2}, true);
  return p;
}

NamedTensors ModelParams::named() const {
  NamedTensors out{{"encoder.claim_embedding", encoder.claim_embedding},
                   {"encoder.evidence_embedding", encoder.evidence_embedding},
                   {"encoder.segment_mix", encoder.segment_mix},
                   {"encoder.bias", encoder.bias}};
  for (std::size_t l = 0; l < layers.size(); ++l) {
    for (std::size_t h = 0; h < layers[l].size(); ++h) {
      const std::string prefix = "edge." + std::to_string(l) + "." + std::to_string(h) + ".";
      out.emplace_back(prefix + "query", layers[l][h].query);
      out.emplace_back(prefix + "key", layers[l][h].key);
      out.emplace_back(prefix + "value", layers[l][h].value);
    }
  }
  out.emplace_back("node_attention.weight", node_attention_weight);
  out.emplace_back("node_attention.bias", node_attention_bias);
  out.emplace_back("label.weight", label_weight);
  out.emplace_back("label.bias", label_bias);
  out.emplace_back("confidence.weight", confidence_weight);
  out.emplace_back("confidence.bias", confidence_bias);
  return out;
}

std::vector<Tensor> ModelParams::parameters() const {
  std::vector<Tensor> out;
  for (auto& [name, t] : named()) out.push_back(t);
  return out;
}

namespace {

Tensor copy_param(const Tensor& t) {
  auto c = t.detach();
  c.set_requires_grad(true);
  return c;
}

}  // namespace

ModelParams ModelParams::clone() const {
  ModelParams p = *this;
  p.encoder.claim_embedding = copy_param(encoder.claim_embedding);
  p.encoder.evidence_embedding = copy_param(encoder.evidence_embedding);
  p.encoder.segment_mix = copy_param(encoder.segment_mix);
  p.encoder.bias = copy_param(encoder.bias);
  for (auto& layer : p.layers) {
    for (auto& head : layer) {
      head.query = copy_param(head.query);
      head.key = copy_param(head.key);
      head.value = copy_param(head.value);
    }
  }
  p.node_attention_weight = copy_param(node_attention_weight);
  p.node_attention_bias = copy_param(node_attention_bias);
  p.label_weight = copy_param(label_weight);
  p.label_bias = copy_param(label_bias);
  p.confidence_weight = copy_param(confidence_weight);
  p.confidence_bias = copy_param(confidence_bias);
  return p;
}

Checkpoint ModelParams::to_checkpoint() const {
  Checkpoint ckpt;
  ckpt.metadata = {{"hidden_dim", config.hidden_dim},
                   {"vocab_dim", config.vocab_dim},
                   {"heads", config.resolved_heads()},
                   {"layers", config.layers},
                   {"max_tokens", config.max_tokens}};
  for (auto& [name, t] : named()) ckpt.params.emplace_back(name, t.detach());
  return ckpt;
}

ModelParams ModelParams::from_checkpoint(const Checkpoint& ckpt) {
  ModelConfig config;
  try {
    config.hidden_dim = ckpt.metadata.at("hidden_dim").get<std::size_t>();
    config.vocab_dim = ckpt.metadata.at("vocab_dim").get<std::size_t>();
    config.heads = ckpt.metadata.at("heads").get<std::size_t>();
    config.layers = ckpt.metadata.at("layers").get<std::size_t>();
    config.max_tokens = ckpt.metadata.at("max_tokens").get<std::size_t>();
    config.validate();
  } catch (const std::exception& e) {
    throw CompatibilityError(std::string("checkpoint metadata: ") + e.what());
  }
  ModelParams p = create(config, 0);
  auto slots = p.named();
  if (slots.size() != ckpt.params.size()) throw CompatibilityError("checkpoint parameter count does not match architecture");
  for (std::size_t i = 0; i < slots.size(); ++i) {
    auto& [name, slot] = slots[i];
    const auto& [ck_name, ck_tensor] = ckpt.params[i];
    if (name != ck_name || slot.shape() != ck_tensor.shape()) {
      throw CompatibilityError("checkpoint parameter " + ck_name + " " + shape_string(ck_tensor.shape()) +
                               " does not match " + name + " " + shape_string(slot.shape()));
    }
    auto dst = slot.mutable_values();
    auto src = ck_tensor.values();
    std::copy(src.begin(), src.end(), dst.begin());
  }
  return p;
}

// ---------------------------------------------------------------------------
// Features

GraphFeatures featurize(const ReasoningGraph& graph, const ModelConfig& config) {
  if (graph.claim.empty()) throw ContractError("graph " + std::to_string(graph.id) + ": empty claim");
  GraphFeatures f;
  auto claim_tokens = tokenize(graph.claim);
  {
    auto claim = claim_tokens;
    std::vector<std::string> none;
    truncate_pair(claim, none, config.max_tokens);
    f.blank_claim = hashed_counts(claim, config.vocab_dim);
  }
  for (const auto& node : graph.evidence) {
    auto claim = claim_tokens;
    std::vector<std::string> evidence;
    if (!node.padded) evidence = evidence_tokens(node.title, node.text);
    truncate_pair(claim, evidence, config.max_tokens);
    f.node_claim.push_back(hashed_counts(claim, config.vocab_dim));
    f.node_evidence.push_back(hashed_counts(evidence, config.vocab_dim));
    f.relevance.push_back(node.padded ? kIgnoreRelevance : (node.relevant ? 1 : 0));
  }
  return f;
}

// ---------------------------------------------------------------------------
// Stages

Tensor encode_node(std::string_view claim, const EvidenceNode& evidence, const ModelParams& params) {
  if (claim.empty()) throw ContractError("encode_node: empty claim");
  std::vector<std::string> ev;
  if (!evidence.padded) ev = evidence_tokens(evidence.title, evidence.text);
  return encode_text(tokenize(claim), ev, params.encoder);
}

Tensor encode_blank_node(std::string_view claim, const ModelParams& params) {
  if (claim.empty()) throw ContractError("encode_blank_node: empty claim");
  return encode_text(tokenize(claim), {}, params.encoder);
}

Confidence confidence_score(const Tensor& node, const ModelParams& params) {
  Tensor probs = softmax(linear(node, params.confidence_weight, params.confidence_bias), 0);
  return {probs, element(probs, 1)};
}

Tensor mask_node(const Tensor& node, const Tensor& blank, const Tensor& co_sco, double alpha) {
  const double s = co_sco.item();
  if (!(s >= 0.0 && s <= 1.0)) throw ContractError("mask_node: confidence score " + std::to_string(s) + " outside [0,1]");
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw ContractError("mask_node: alpha " + std::to_string(alpha) + " outside [0,1]");
  return blend(node, blank, alpha == 1.0 ? co_sco : scale(co_sco, alpha));
}

Tensor hard_mask(const Tensor& node, const Tensor& blank, double co_sco) { return co_sco >= 0.5 ? node : blank; }

Tensor edge_attention(const Tensor& nodes, const std::vector<AttentionHead>& heads,
                      std::vector<std::vector<std::vector<double>>>* edge_weights) {
  if (nodes.rank() != 2) throw ShapeError("edge_attention: node matrix must be rank 2, got " + shape_string(nodes.shape()));
  if (heads.empty()) throw ContractError("edge_attention: no heads");
  const std::size_t l = nodes.rows();
  if (l == 0) throw ContractError("edge_attention: no nodes");
  const std::size_t dk = heads.front().query.cols();
  if (dk * heads.size() != nodes.cols()) {
    throw ContractError("edge_attention: " + std::to_string(heads.size()) + " heads of width " + std::to_string(dk) +
                        " do not tile d_m=" + std::to_string(nodes.cols()));
  }
  const double inv_sqrt_dk = 1.0 / std::sqrt(static_cast<double>(dk));
  std::vector<Tensor> outputs;
  if (edge_weights) edge_weights->clear();
  for (const auto& head : heads) {
    Tensor q = matmul(nodes, head.query);
    Tensor k = matmul(nodes, head.key);
    Tensor v = matmul(nodes, head.value);
    Tensor weights = softmax(scale(matmul(q, transpose(k)), inv_sqrt_dk), 1);
    if (edge_weights) {
      std::vector<std::vector<double>> m(l, std::vector<double>(l));
      for (std::size_t p = 0; p < l; ++p)
        for (std::size_t s = 0; s < l; ++s) m[p][s] = weights.at(p, s);
      edge_weights->push_back(std::move(m));
    }
    outputs.push_back(matmul(weights, v));
  }
  return concat_cols(outputs);
}

Tensor node_attention(const Tensor& updated, const ModelParams& params) {
  return softmax(linear(updated, params.node_attention_weight, params.node_attention_bias), 0);
}

Tensor aggregate(const Tensor& updated, const Tensor& beta) {
  if (beta.size() != updated.rows()) {
    throw ShapeError("aggregate: " + shape_string(beta.shape()) + " weights for " + shape_string(updated.shape()) + " rows");
  }
  Tensor column = beta.rank() == 2 ? beta : transpose(beta);
  return row(matmul(transpose(column), updated), 0);
}

Tensor predict_label(const Tensor& pooled, const ModelParams& params) {
  return softmax(linear(pooled, params.label_weight, params.label_bias), 0);
}

ForwardOutput forward(const GraphFeatures& features, const ModelParams& params, const ForwardOptions& options) {
  const std::size_t l = features.node_evidence.size();
  if (l == 0) throw ContractError("forward: graph has no nodes");
  if (options.mode == MaskMode::Soft && !(options.alpha >= 0.0 && options.alpha <= 1.0)) {
    throw ContractError("forward: alpha " + std::to_string(options.alpha) + " outside [0,1]");
  }

  const SparseCounts empty;
  Tensor claim_proj = embedding_bag(params.encoder.claim_embedding, features.blank_claim);
  auto encode = [&](const SparseCounts& claim, const SparseCounts& evidence) {
    Tensor c = claim == features.blank_claim
                   ? claim_proj
                   : embedding_bag(params.encoder.claim_embedding, claim);
    c = scale_by(c, element(params.encoder.segment_mix, 0));
    Tensor e = scale_by(embedding_bag(params.encoder.evidence_embedding, evidence), element(params.encoder.segment_mix, 1));
    return tanh(add(add(c, e), params.encoder.bias));
  };

  Tensor blank = encode(features.blank_claim, empty);
  std::vector<Tensor> masked;
  std::vector<Tensor> node_probs;
  ForwardOutput out;
  for (std::size_t p = 0; p < l; ++p) {
    Tensor h = encode(features.node_claim[p], features.node_evidence[p]);
    Confidence conf = confidence_score(h, params);
    node_probs.push_back(conf.probs);
    const double s = conf.score.item();
    out.co_scos.push_back(s);
    switch (options.mode) {
      case MaskMode::Soft: masked.push_back(mask_node(h, blank, conf.score, options.alpha)); break;
      case MaskMode::Hard: masked.push_back(hard_mask(h, blank, options.alpha * s)); break;
      case MaskMode::NoMask: masked.push_back(h); break;
    }
  }

  std::vector<std::vector<std::vector<double>>> edge_weights;
  Tensor hidden = stack_rows(masked);
  for (std::size_t layer = 0; layer < params.layers.size(); ++layer) {
    const bool last = layer + 1 == params.layers.size();
    hidden = edge_attention(hidden, params.layers[layer], options.capture_trace && last ? &edge_weights : nullptr);
  }
  Tensor beta = node_attention(hidden, params);
  Tensor pooled = aggregate(hidden, beta);
  out.label_probs = predict_label(pooled, params);
  out.node_probs = stack_rows(node_probs);
  if (options.capture_trace) {
    AttentionTrace trace;
    trace.edge_weights = std::move(edge_weights);
    trace.node_weights.assign(beta.values().begin(), beta.values().end());
    trace.co_scos = out.co_scos;
    out.trace = std::move(trace);
  }
  return out;
}

ForwardOutput forward(const ReasoningGraph& graph, const ModelParams& params, const ForwardOptions& options) {
  return forward(featurize(graph, params.config), params, options);
}

std::size_t argmax(std::span<const double> values) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (values[i] > values[best]) best = i;
  }
  return best;
}

}  // namespace cogat
