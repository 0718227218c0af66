#pragma once

// Hashed bag-of-words encoder producing one vector per claim-evidence pair.
//
//   h = tanh(mix[0] · counts(claim)·E_claim + mix[1] · counts(evidence)·E_evidence + bias)
//
// Tokens are hashed with 64-bit FNV-1a modulo the vocabulary dimension.
// Distinct tokens may collide; collision_report() measures how often.

#include <cstddef>
#include <cstdint>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "cogat/tensor.hpp"

namespace cogat {

inline constexpr std::string_view kTitleSeparator = "[title]";

std::vector<std::string> tokenize(std::string_view text);
std::uint64_t stable_hash(std::string_view token);
SparseCounts hashed_counts(const std::vector<std::string>& tokens, std::size_t vocab_dim);

// Title tokens, the separator, then sentence tokens. Underscores in titles read as spaces.
std::vector<std::string> evidence_tokens(std::string_view title, std::string_view sentence);

// Tail truncation of a claim-evidence pair to max_tokens: evidence loses its
// tail first, then the claim.
void truncate_pair(std::vector<std::string>& claim, std::vector<std::string>& evidence, std::size_t max_tokens);

struct HashEncoder {
  std::size_t vocab_dim = 4096;
  std::size_t hidden_dim = 64;
  std::size_t max_tokens = 256;
  Tensor claim_embedding;     // vocab_dim × hidden_dim
  Tensor evidence_embedding;  // vocab_dim × hidden_dim
  Tensor segment_mix;         // {2}
  Tensor bias;                // {hidden_dim}

  static HashEncoder create(std::size_t vocab_dim, std::size_t hidden_dim, std::mt19937_64& rng);
};

// Encodes hashed segment counts; an empty evidence segment is the blank-node path.
Tensor encode_counts(const SparseCounts& claim, const SparseCounts& evidence, const HashEncoder& encoder);

Tensor encode_text(const std::vector<std::string>& claim_tokens, const std::vector<std::string>& evidence_tokens,
                   const HashEncoder& encoder);

struct CollisionReport {
  std::size_t distinct_tokens = 0;
  std::size_t occupied_buckets = 0;
  std::size_t colliding_tokens = 0;  // tokens sharing a bucket with another distinct token
};

CollisionReport collision_report(const std::vector<std::string>& vocabulary, std::size_t vocab_dim);

// Uniform in ±sqrt(6 / (fan_in + fan_out)).
Tensor glorot_uniform(Shape shape, std::size_t fan_in, std::size_t fan_out, std::mt19937_64& rng);

}  // namespace cogat
