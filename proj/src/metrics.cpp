#include "cogat/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

#include "cogat/errors.hpp"

namespace cogat {

using nlohmann::json;

double label_accuracy(std::span<const EvalRecord> records) {
  if (records.empty()) throw ContractError("label_accuracy: no records");
  const auto correct = std::count_if(records.begin(), records.end(),
                                     [](const EvalRecord& r) { return r.predicted_label == r.gold_label; });
  return static_cast<double>(correct) / static_cast<double>(records.size());
}

namespace {

std::vector<EvidenceKey> top_k(const EvalRecord& r, std::size_t k) {
  std::vector<EvidenceKey> out(r.predicted_evidence.begin(),
                               r.predicted_evidence.begin() + static_cast<std::ptrdiff_t>(std::min(k, r.predicted_evidence.size())));
  std::sort(out.begin(), out.end());
  return out;
}

bool covers_some_group(const std::vector<EvidenceKey>& sorted_predicted, const std::vector<EvidenceGroup>& groups) {
  for (const auto& group : groups) {
    std::vector<EvidenceKey> g = group;
    std::sort(g.begin(), g.end());
    g.erase(std::unique(g.begin(), g.end()), g.end());
    if (std::includes(sorted_predicted.begin(), sorted_predicted.end(), g.begin(), g.end())) return true;
  }
  return false;
}

}  // namespace

bool fever_correct(const EvalRecord& record) {
  if (record.predicted_label != record.gold_label) return false;
  if (record.gold_label == Label::Nei) return true;
  return covers_some_group(top_k(record, kMaxPredictedEvidence), record.gold_evidence);
}

double fever_score(std::span<const EvalRecord> records) {
  if (records.empty()) throw ContractError("fever_score: no records");
  const auto hits = std::count_if(records.begin(), records.end(), fever_correct);
  return static_cast<double>(hits) / static_cast<double>(records.size());
}

std::optional<EvidencePrf> evidence_prf(std::span<const EvalRecord> records, std::size_t k) {
  if (records.empty()) throw ContractError("evidence_prf: no records");
  std::size_t predicted = 0, hits = 0, requiring = 0, covered = 0;
  for (const auto& r : records) {
    if (r.gold_label == Label::Nei) continue;
    ++requiring;
    auto top = top_k(r, k);
    std::set<EvidenceKey> gold;
    for (const auto& g : r.gold_evidence) gold.insert(g.begin(), g.end());
    predicted += top.size();
    hits += static_cast<std::size_t>(std::count_if(top.begin(), top.end(), [&](const EvidenceKey& e) { return gold.count(e) > 0; }));
    if (covers_some_group(top, r.gold_evidence)) ++covered;
  }
  if (requiring == 0) return std::nullopt;
  EvidencePrf prf;
  prf.precision = predicted == 0 ? 0.0 : static_cast<double>(hits) / static_cast<double>(predicted);
  prf.recall = static_cast<double>(covered) / static_cast<double>(requiring);
  const double denom = prf.precision + prf.recall;
  prf.f1 = denom == 0.0 ? 0.0 : 2.0 * prf.precision * prf.recall / denom;
  return prf;
}

double attention_entropy(std::span<const double> weights) {
  double total = 0.0;
  for (double w : weights) {
    if (w < 0.0) throw ContractError("attention_entropy: negative weight " + std::to_string(w));
    total += w;
  }
  if (std::abs(total - 1.0) > 1e-6) throw ContractError("attention_entropy: weights sum to " + std::to_string(total));
  double h = 0.0;
  for (double w : weights) {
    if (w > 0.0) h -= w * std::log(w);
  }
  return h;
}

ScoreSummary score_records(std::span<const EvalRecord> records) {
  ScoreSummary s;
  s.count = records.size();
  s.accuracy = label_accuracy(records);
  s.fever = fever_score(records);
  s.evidence = evidence_prf(records);
  return s;
}

json summary_json(const ScoreSummary& summary) {
  json j{{"count", summary.count}, {"label_accuracy", summary.accuracy}, {"fever_score", summary.fever}};
  if (summary.evidence) {
    j["precision@5"] = summary.evidence->precision;
    j["recall@5"] = summary.evidence->recall;
    j["f1@5"] = summary.evidence->f1;
  } else {
    j["precision@5"] = nullptr;
    j["recall@5"] = nullptr;
    j["f1@5"] = nullptr;
  }
  return j;
}

std::string summary_text(const ScoreSummary& summary) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(6);
  auto line = [&](const char* name, std::optional<double> v) {
    os << std::left << std::setw(16) << name;
    if (v) os << std::right << std::setw(10) << *v;
    else os << std::right << std::setw(10) << "n/a";
    os << '\n';
  };
  os << std::left << std::setw(16) << "records" << std::right << std::setw(10) << summary.count << '\n';
  line("label_accuracy", summary.accuracy);
  line("fever_score", summary.fever);
  line("precision@5", summary.evidence ? std::optional(summary.evidence->precision) : std::nullopt);
  line("recall@5", summary.evidence ? std::optional(summary.evidence->recall) : std::nullopt);
  line("f1@5", summary.evidence ? std::optional(summary.evidence->f1) : std::nullopt);
  return os.str();
}

namespace {

json keys_json(const std::vector<EvidenceKey>& keys) {
  json a = json::array();
  for (const auto& k : keys) a.push_back(json::array({k.title, k.sentence_id}));
  return a;
}

std::vector<EvidenceKey> keys_from(const json& a) {
  std::vector<EvidenceKey> out;
  for (const auto& e : a) {
    if (!e.is_array() || e.size() != 2) throw InputError("evidence entry must be [title, sid]");
    out.push_back({e[0].get<std::string>(), e[1].get<int>()});
  }
  return out;
}

Label label_from(const json& j) {
  const auto text = j.get<std::string>();
  auto label = parse_label(text);
  if (!label) throw InputError("unknown label \"" + text + "\"");
  return *label;
}

}  // namespace

std::string serialize_record(const EvalRecord& r) {
  json j;
  j["id"] = r.id;
  j["predicted_label"] = label_name(r.predicted_label);
  j["predicted_evidence"] = keys_json(r.predicted_evidence);
  j["gold_label"] = label_name(r.gold_label);
  j["gold_evidence"] = json::array();
  for (const auto& g : r.gold_evidence) j["gold_evidence"].push_back(keys_json(g));
  return j.dump();
}

std::vector<EvalRecord> parse_predictions(std::string_view jsonl, std::string_view source) {
  std::vector<EvalRecord> out;
  std::istringstream is{std::string(jsonl)};
  std::string line;
  std::size_t line_no = 0;
  std::set<long> ids;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    auto where = [&] { return std::string(source) + ":" + std::to_string(line_no) + ": "; };
    EvalRecord r;
    try {
      json j = json::parse(line);
      r.id = j.at("id").get<long>();
      r.predicted_label = label_from(j.at("predicted_label"));
      r.predicted_evidence = keys_from(j.at("predicted_evidence"));
      if (j.contains("gold_label")) r.gold_label = label_from(j.at("gold_label"));
      if (j.contains("gold_evidence")) {
        for (const auto& g : j.at("gold_evidence")) r.gold_evidence.push_back(keys_from(g));
      }
    } catch (const json::exception& e) {
      throw InputError(where() + e.what());
    } catch (const InputError& e) {
      throw InputError(where() + e.what());
    }
    if (r.predicted_evidence.size() > kMaxPredictedEvidence) {
      throw InputError(where() + "more than " + std::to_string(kMaxPredictedEvidence) + " predicted evidence sentences");
    }
    if (!ids.insert(r.id).second) throw InputError(where() + "duplicate id " + std::to_string(r.id));
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<EvalRecord> join_with_gold(std::vector<EvalRecord> predictions, const std::vector<ClaimInstance>& gold) {
  std::map<long, const ClaimInstance*> by_id;
  for (const auto& g : gold) by_id[g.id] = &g;
  if (predictions.size() != by_id.size()) {
    throw InputError("prediction count " + std::to_string(predictions.size()) + " does not match gold count " +
                     std::to_string(by_id.size()));
  }
  for (auto& p : predictions) {
    auto it = by_id.find(p.id);
    if (it == by_id.end()) throw InputError("prediction id " + std::to_string(p.id) + " not present in gold file");
    p.gold_label = it->second->label;
    p.gold_evidence = it->second->gold_evidence;
  }
  std::sort(predictions.begin(), predictions.end(), [](const EvalRecord& a, const EvalRecord& b) { return a.id < b.id; });
  return predictions;
}

}  // namespace cogat
