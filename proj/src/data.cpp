#include "cogat/data.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "cogat/errors.hpp"

namespace cogat {

using nlohmann::json;

std::string_view label_name(Label label) {
  switch (label) {
    case Label::Supports: return "SUPPORTS";
    case Label::Refutes: return "REFUTES";
    case Label::Nei: return "NOT ENOUGH INFO";
  }
  return "?";
}

std::optional<Label> parse_label(std::string_view text) {
  if (text == "SUPPORTS") return Label::Supports;
  if (text == "REFUTES") return Label::Refutes;
  if (text == "NOT ENOUGH INFO" || text == "NEI") return Label::Nei;
  return std::nullopt;
}

void validate_claim(const ClaimInstance& instance) {
  if (instance.claim.empty()) throw InputError("instance " + std::to_string(instance.id) + ": empty claim");
  if (instance.label != Label::Nei && instance.gold_evidence.empty()) {
    throw InputError("instance " + std::to_string(instance.id) + ": " + std::string(label_name(instance.label)) +
                     " requires at least one gold evidence group");
  }
  std::set<EvidenceKey> seen;
  for (const auto& c : instance.candidates) {
    if (!seen.insert(c.key()).second) {
      throw InputError("instance " + std::to_string(instance.id) + ": duplicate candidate (" + c.title + ", " +
                       std::to_string(c.sentence_id) + ")");
    }
  }
  for (const auto& group : instance.gold_evidence) {
    if (group.empty()) throw InputError("instance " + std::to_string(instance.id) + ": empty gold evidence group");
  }
}

namespace {

ClaimInstance from_json(const json& j) {
  ClaimInstance inst;
  inst.id = j.at("id").get<long>();
  inst.claim = j.at("claim").get<std::string>();
  const auto label_text = j.at("label").get<std::string>();
  auto label = parse_label(label_text);
  if (!label) throw InputError("unknown label \"" + label_text + "\"");
  inst.label = *label;
  for (const auto& c : j.at("candidates")) {
    if (!c.is_array() || c.size() != 3) throw InputError("candidate must be [title, sid, text]");
    inst.candidates.push_back({c[0].get<std::string>(), c[1].get<int>(), c[2].get<std::string>()});
  }
  for (const auto& g : j.at("evidence")) {
    EvidenceGroup group;
    for (const auto& e : g) {
      if (!e.is_array() || e.size() != 2) throw InputError("evidence entry must be [title, sid]");
      group.push_back({e[0].get<std::string>(), e[1].get<int>()});
    }
    inst.gold_evidence.push_back(std::move(group));
  }
  return inst;
}

json to_json(const ClaimInstance& inst) {
  json j;
  j["id"] = inst.id;
  j["claim"] = inst.claim;
  j["label"] = label_name(inst.label);
  j["candidates"] = json::array();
  for (const auto& c : inst.candidates) j["candidates"].push_back(json::array({c.title, c.sentence_id, c.text}));
  j["evidence"] = json::array();
  for (const auto& g : inst.gold_evidence) {
    json group = json::array();
    for (const auto& e : g) group.push_back(json::array({e.title, e.sentence_id}));
    j["evidence"].push_back(std::move(group));
  }
  return j;
}

}  // namespace

std::vector<ClaimInstance> parse_claims(std::string_view jsonl, std::string_view source) {
  std::vector<ClaimInstance> out;
  std::set<long> ids;
  std::istringstream is{std::string(jsonl)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    auto where = [&] { return std::string(source) + ":" + std::to_string(line_no) + ": "; };
    ClaimInstance inst;
    try {
      inst = from_json(json::parse(line));
      validate_claim(inst);
    } catch (const json::exception& e) {
      throw InputError(where() + e.what());
    } catch (const InputError& e) {
      throw InputError(where() + e.what());
    }
    if (!ids.insert(inst.id).second) throw InputError(where() + "duplicate id " + std::to_string(inst.id));
    out.push_back(std::move(inst));
  }
  return out;
}

std::vector<ClaimInstance> load_claims(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw InputError("cannot open " + path.string());
  std::stringstream buffer;
  buffer << is.rdbuf();
  return parse_claims(buffer.str(), path.string());
}

std::string serialize_claim(const ClaimInstance& instance) { return to_json(instance).dump(); }

void write_claims(const std::filesystem::path& path, const std::vector<ClaimInstance>& instances) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw InputError("cannot write " + path.string());
  for (const auto& inst : instances) os << serialize_claim(inst) << '\n';
}

ReasoningGraph build_graph(const ClaimInstance& instance, std::size_t max_nodes) {
  if (max_nodes == 0) throw ContractError("build_graph: max_nodes must be at least 1");
  std::set<EvidenceKey> gold;
  for (const auto& g : instance.gold_evidence) gold.insert(g.begin(), g.end());

  ReasoningGraph graph;
  graph.id = instance.id;
  graph.claim = instance.claim;
  graph.gold_label = instance.label;
  graph.gold_evidence = instance.gold_evidence;
  const std::size_t n = std::min(max_nodes, instance.candidates.size());
  for (std::size_t i = 0; i < n; ++i) {
    const auto& c = instance.candidates[i];
    graph.evidence.push_back({c.title, c.sentence_id, c.text, gold.count(c.key()) > 0, false});
  }
  if (graph.evidence.empty()) graph.evidence.push_back({"", -1, "", false, true});
  return graph;
}

}  // namespace cogat
