#pragma once

// Synthetic claim-verification corpus over an invented entity/relation world.
//
// Every entity has one value per relation. A SUPPORTS claim restates a fact
// and its gold sentences state it; a REFUTES claim swaps in another value and
// its gold sentences deny that value explicitly; an NEI claim asks about a
// relation no retrieved sentence covers. Distractors are facts or denials
// about other entities under other relations. Each entity carries one claim per label and splits
// are disjoint by entity.

#include <cstddef>
#include <cstdint>
#include <vector>

#include "cogat/data.hpp"

namespace cogat {

struct SynthSplits {
  std::vector<ClaimInstance> train;
  std::vector<ClaimInstance> dev;
  std::vector<ClaimInstance> test;
};

struct SynthOptions {
  std::size_t candidate_slots = 5;  // retrieval depth
  double dev_fraction = 0.15;
  double test_fraction = 0.15;
};

// n ≥ 30 instances in total, noise_rate ∈ [0,1]: each non-gold slot holds a
// distractor with probability noise_rate. NEI claims get one distractor plus
// one per remaining slot with probability noise_rate.
SynthSplits synth_dataset(std::uint64_t seed, std::size_t n, double noise_rate, const SynthOptions& options = {});

}  // namespace cogat
