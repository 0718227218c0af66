#include "cogat/synth.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <random>
#include <set>
#include <string>

#include "cogat/errors.hpp"

namespace cogat {

namespace {

struct Relation {
  const char* phrase;
  std::array<const char*, 5> values;
};

constexpr std::array<Relation, 8> kRelations{{
    {"was born in", {"paris", "london", "tokyo", "cairo", "lima"}},
    {"works as a", {"doctor", "pilot", "farmer", "teacher", "lawyer"}},
    {"plays the", {"piano", "violin", "guitar", "drums", "flute"}},
    {"speaks", {"french", "german", "hindi", "swahili", "korean"}},
    {"owns a", {"horse", "boat", "bakery", "castle", "truck"}},
    {"studied", {"physics", "history", "law", "music", "botany"}},
    {"is a fan of", {"opera", "chess", "rugby", "jazz", "tennis"}},
    {"lives near the", {"river", "desert", "harbor", "forest", "volcano"}},
}};
constexpr std::size_t kRelationCount = kRelations.size();
constexpr std::size_t kValueCount = 5;

constexpr std::array<const char*, 20> kSyllables{"ka", "lo", "mir", "ven", "to", "sa", "rel", "dun", "pa", "quo",
                                                 "zi", "bar", "eth", "no", "vik", "ul", "gra", "mo", "tes", "an"};

struct Entity {
  std::string name;
  std::array<std::size_t, kRelationCount> facts{};
};

std::string make_name(std::mt19937_64& rng, std::set<std::string>& used) {
  std::uniform_int_distribution<std::size_t> syl(0, kSyllables.size() - 1);
  std::uniform_int_distribution<int> len(2, 3);
  for (;;) {
    std::string name;
    const int n = len(rng);
    for (int i = 0; i < n; ++i) name += kSyllables[syl(rng)];
    name[0] = static_cast<char>(name[0] - 'a' + 'A');
    if (used.insert(name).second) return name;
  }
}

// Sentence ids on an entity page: r states relation r, kRelationCount + r
// paraphrases it; the denial of value v under relation r sits at
// 2·kRelationCount + r·kValueCount + v, its paraphrase one block further.
Candidate fact_sentence(const Entity& e, std::size_t relation, bool paraphrase) {
  const auto& rel = kRelations[relation];
  const std::string fact = e.name + " " + rel.phrase + " " + rel.values[e.facts[relation]];
  Candidate c;
  c.title = e.name;
  c.sentence_id = static_cast<int>(paraphrase ? kRelationCount + relation : relation);
  c.text = paraphrase ? "It is recorded that " + fact + " ." : fact + " according to records .";
  return c;
}

Candidate denial_sentence(const Entity& e, std::size_t relation, std::size_t value, bool paraphrase) {
  const auto& rel = kRelations[relation];
  const std::string fact = e.name + " " + rel.phrase + " " + rel.values[value];
  const std::size_t block = kRelationCount * kValueCount;
  Candidate c;
  c.title = e.name;
  c.sentence_id = static_cast<int>(2 * kRelationCount + (paraphrase ? block : 0) + relation * kValueCount + value);
  c.text = paraphrase ? "Contrary to rumor , it is not the case that " + fact + " ." : "It is false that " + fact + " .";
  return c;
}

std::size_t other_value(std::size_t value, std::mt19937_64& rng) {
  std::uniform_int_distribution<std::size_t> shift(1, kValueCount - 1);
  return (value + shift(rng)) % kValueCount;
}

enum class Split { Train, Dev, Test };

}  // namespace

SynthSplits synth_dataset(std::uint64_t seed, std::size_t n, double noise_rate, const SynthOptions& options) {
  if (n < 30) throw ContractError("synth_dataset: n must be at least 30");
  if (!(noise_rate >= 0.0 && noise_rate <= 1.0)) throw ContractError("synth_dataset: noise_rate outside [0,1]");
  if (options.candidate_slots < 2) throw ContractError("synth_dataset: need at least 2 candidate slots");
  if (!(options.dev_fraction > 0.0 && options.test_fraction > 0.0 && options.dev_fraction + options.test_fraction < 1.0)) {
    throw ContractError("synth_dataset: invalid split fractions");
  }

  std::mt19937_64 rng(seed);
  std::set<std::string> used;
  // Instance i is about entity i / 3 with label i % 3, so every entity carries
  // one claim of each label and its name says nothing about the label.
  const std::size_t entity_count = (n + kNumLabels - 1) / kNumLabels;
  std::vector<Entity> entities(entity_count);
  std::uniform_int_distribution<std::size_t> value_dist(0, kValueCount - 1);
  std::uniform_int_distribution<std::size_t> relation_dist(0, kRelationCount - 1);
  for (auto& e : entities) {
    e.name = make_name(rng, used);
    for (auto& f : e.facts) f = value_dist(rng);
  }

  std::vector<std::size_t> shuffled(entity_count);
  for (std::size_t k = 0; k < entity_count; ++k) shuffled[k] = k;
  std::shuffle(shuffled.begin(), shuffled.end(), rng);
  const auto total = static_cast<double>(entity_count);
  const auto n_dev = static_cast<std::size_t>(std::lround(total * options.dev_fraction));
  const auto n_test = static_cast<std::size_t>(std::lround(total * options.test_fraction));
  std::vector<Split> split(entity_count, Split::Train);
  for (std::size_t k = 0; k < entity_count; ++k) {
    if (k < n_dev) split[shuffled[k]] = Split::Dev;
    else if (k < n_dev + n_test) split[shuffled[k]] = Split::Test;
  }
  std::array<std::vector<std::size_t>, 3> pool;
  for (std::size_t k = 0; k < entity_count; ++k) pool[static_cast<std::size_t>(split[k])].push_back(k);

  std::bernoulli_distribution noisy(noise_rate);
  std::bernoulli_distribution two_gold(0.5);
  SynthSplits out;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t entity = i / kNumLabels;
    const Entity& e = entities[entity];
    const auto label = static_cast<Label>(i % kNumLabels);
    const auto& same_split = pool[static_cast<std::size_t>(split[entity])];
    const std::size_t relation = relation_dist(rng);
    const auto& rel = kRelations[relation];

    ClaimInstance inst;
    inst.id = static_cast<long>(i);
    inst.label = label;
    std::size_t value = e.facts[relation];
    if (label == Label::Refutes) {
      value = other_value(value, rng);
    } else if (label == Label::Nei) {
      value = value_dist(rng);
    }
    inst.claim = e.name + " " + rel.phrase + " " + rel.values[value] + " .";

    std::size_t distractors = 0;
    if (label == Label::Nei) {
      distractors = 1;
      for (std::size_t s = 1; s < options.candidate_slots; ++s) distractors += noisy(rng) ? 1 : 0;
    } else {
      const bool two = two_gold(rng);
      if (label == Label::Supports) {
        inst.candidates.push_back(fact_sentence(e, relation, false));
        if (two) inst.candidates.push_back(fact_sentence(e, relation, true));
      } else {
        inst.candidates.push_back(denial_sentence(e, relation, value, false));
        if (two) inst.candidates.push_back(denial_sentence(e, relation, value, true));
      }
      for (const auto& c : inst.candidates) inst.gold_evidence.push_back({c.key()});
      for (std::size_t s = inst.candidates.size(); s < options.candidate_slots; ++s) distractors += noisy(rng) ? 1 : 0;
    }

    std::uniform_int_distribution<std::size_t> other_dist(0, same_split.size() - 1);
    std::bernoulli_distribution coin(0.5);
    std::set<EvidenceKey> taken;
    for (const auto& c : inst.candidates) taken.insert(c.key());
    while (distractors > 0) {
      const std::size_t other = same_split[other_dist(rng)];
      const std::size_t other_relation = relation_dist(rng);
      if (other == entity || other_relation == relation) continue;
      const Entity& o = entities[other];
      const bool denial = coin(rng);
      Candidate c = denial ? denial_sentence(o, other_relation, other_value(o.facts[other_relation], rng), coin(rng))
                           : fact_sentence(o, other_relation, coin(rng));
      if (!taken.insert(c.key()).second) continue;
      inst.candidates.push_back(std::move(c));
      --distractors;
    }
    std::shuffle(inst.candidates.begin(), inst.candidates.end(), rng);
    validate_claim(inst);

    switch (split[entity]) {
      case Split::Train: out.train.push_back(std::move(inst)); break;
      case Split::Dev: out.dev.push_back(std::move(inst)); break;
      case Split::Test: out.test.push_back(std::move(inst)); break;
    }
  }
  return out;
}

}  // namespace cogat
