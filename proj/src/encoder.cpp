#include "cogat/encoder.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>
#include <set>
#include <sstream>
#include <unordered_map>

#include "cogat/errors.hpp"

namespace cogat {

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::string current;
  for (char ch : text) {
    if (std::isspace(static_cast<unsigned char>(ch))) {
      if (!current.empty()) tokens.push_back(std::move(current));
      current.clear();
    } else {
      current.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(ch))));
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

std::uint64_t stable_hash(std::string_view token) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : token) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

SparseCounts hashed_counts(const std::vector<std::string>& tokens, std::size_t vocab_dim) {
  std::map<std::uint32_t, double> buckets;
  for (const auto& t : tokens) buckets[static_cast<std::uint32_t>(stable_hash(t) % vocab_dim)] += 1.0;
  return {buckets.begin(), buckets.end()};
}

std::vector<std::string> evidence_tokens(std::string_view title, std::string_view sentence) {
  std::string spaced(title);
  std::replace(spaced.begin(), spaced.end(), '_', ' ');
  auto tokens = tokenize(spaced);
  tokens.emplace_back(kTitleSeparator);
  auto rest = tokenize(sentence);
  tokens.insert(tokens.end(), rest.begin(), rest.end());
  return tokens;
}

void truncate_pair(std::vector<std::string>& claim, std::vector<std::string>& evidence, std::size_t max_tokens) {
  if (claim.size() + evidence.size() <= max_tokens) return;
  if (claim.size() >= max_tokens) {
    claim.resize(max_tokens);
    evidence.clear();
  } else {
    evidence.resize(max_tokens - claim.size());
  }
}

Tensor glorot_uniform(Shape shape, std::size_t fan_in, std::size_t fan_out, std::mt19937_64& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  std::uniform_real_distribution<double> dist(-limit, limit);
  std::size_t n = 1;
  for (auto d : shape) n *= d;
  std::vector<double> values(n);
  for (auto& v : values) v = dist(rng);
  return Tensor::from(std::move(shape), std::move(values), true);
}

HashEncoder HashEncoder::create(std::size_t vocab_dim, std::size_t hidden_dim, std::mt19937_64& rng) {
  if (vocab_dim == 0 || hidden_dim == 0) throw ContractError("encoder dimensions must be positive");
  HashEncoder enc;
  enc.vocab_dim = vocab_dim;
  enc.hidden_dim = hidden_dim;
  enc.claim_embedding = glorot_uniform({vocab_dim, hidden_dim}, vocab_dim, hidden_dim, rng);
  enc.evidence_embedding = glorot_uniform({vocab_dim, hidden_dim}, vocab_dim, hidden_dim, rng);
  enc.segment_mix = Tensor::full({2}, 1.0, true);
  enc.bias = Tensor::zeros({hidden_dim}, true);
  return enc;
}

Tensor encode_counts(const SparseCounts& claim, const SparseCounts& evidence, const HashEncoder& encoder) {
  Tensor c = scale_by(embedding_bag(encoder.claim_embedding, claim), element(encoder.segment_mix, 0));
  Tensor e = scale_by(embedding_bag(encoder.evidence_embedding, evidence), element(encoder.segment_mix, 1));
  return tanh(add(add(c, e), encoder.bias));
}

Tensor encode_text(const std::vector<std::string>& claim_tokens, const std::vector<std::string>& evidence_tokens,
                   const HashEncoder& encoder) {
  auto claim = claim_tokens;
  auto evidence = evidence_tokens;
  truncate_pair(claim, evidence, encoder.max_tokens);
  return encode_counts(hashed_counts(claim, encoder.vocab_dim), hashed_counts(evidence, encoder.vocab_dim), encoder);
}

CollisionReport collision_report(const std::vector<std::string>& vocabulary, std::size_t vocab_dim) {
  std::set<std::string> distinct(vocabulary.begin(), vocabulary.end());
  std::unordered_map<std::uint64_t, std::size_t> per_bucket;
  for (const auto& t : distinct) ++per_bucket[stable_hash(t) % vocab_dim];
  CollisionReport r;
  r.distinct_tokens = distinct.size();
  r.occupied_buckets = per_bucket.size();
  for (const auto& [bucket, count] : per_bucket) {
    if (count > 1) r.colliding_tokens += count;
  }
  return r;
}

}  // namespace cogat
