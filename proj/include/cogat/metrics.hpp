#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "cogat/data.hpp"

namespace cogat {

inline constexpr std::size_t kMaxPredictedEvidence = 5;

struct EvalRecord {
  long id = 0;
  Label predicted_label = Label::Nei;
  std::vector<EvidenceKey> predicted_evidence;  // at most kMaxPredictedEvidence, ranked
  Label gold_label = Label::Nei;
  std::vector<EvidenceGroup> gold_evidence;
};

double label_accuracy(std::span<const EvalRecord> records);

// True iff the label is right and, for SUPPORTS/REFUTES, some gold group lies
// entirely within the first kMaxPredictedEvidence predicted sentences.
bool fever_correct(const EvalRecord& record);
double fever_score(std::span<const EvalRecord> records);

struct EvidencePrf {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

// Micro precision over predicted sentences, claim-level recall; NEI records
// are skipped. nullopt when no record requires evidence.
std::optional<EvidencePrf> evidence_prf(std::span<const EvalRecord> records, std::size_t k = kMaxPredictedEvidence);

// Natural-log Shannon entropy, 0·log 0 = 0.
double attention_entropy(std::span<const double> weights);

struct ScoreSummary {
  std::size_t count = 0;
  double accuracy = 0.0;
  double fever = 0.0;
  std::optional<EvidencePrf> evidence;
};

ScoreSummary score_records(std::span<const EvalRecord> records);
nlohmann::json summary_json(const ScoreSummary& summary);
// Aligned two-column text block.
std::string summary_text(const ScoreSummary& summary);

// EvalRecord JSONL: {"id","predicted_label","predicted_evidence":[[t,s]..],"gold_label","gold_evidence":[[[t,s]..]..]}
std::string serialize_record(const EvalRecord& record);
// Prediction-only lines (id, predicted_label, predicted_evidence) are accepted;
// the gold fields are then filled from `gold` by id. Throws InputError with line numbers.
std::vector<EvalRecord> parse_predictions(std::string_view jsonl, std::string_view source);
std::vector<EvalRecord> join_with_gold(std::vector<EvalRecord> predictions, const std::vector<ClaimInstance>& gold);

}  // namespace cogat
