#pragma once

// FEVER-style claim records and the reasoning graphs built from them.
//
// JSONL schema, one instance per line:
//   {"id": 12, "claim": "...", "label": "SUPPORTS",
//    "candidates": [["Title", 3, "sentence text"], ...],
//    "evidence":   [[["Title", 3]], [["Other", 0], ["Title", 5]]]}

#include <compare>
#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace cogat {

enum class Label : int { Supports = 0, Refutes = 1, Nei = 2 };
inline constexpr std::size_t kNumLabels = 3;

std::string_view label_name(Label label);
// Accepts "SUPPORTS", "REFUTES", "NOT ENOUGH INFO" (and the short form "NEI").
std::optional<Label> parse_label(std::string_view text);

struct EvidenceKey {
  std::string title;
  int sentence_id = 0;
  auto operator<=>(const EvidenceKey&) const = default;
};

using EvidenceGroup = std::vector<EvidenceKey>;

struct Candidate {
  std::string title;
  int sentence_id = 0;
  std::string text;
  EvidenceKey key() const { return {title, sentence_id}; }
  bool operator==(const Candidate&) const = default;
};

struct ClaimInstance {
  long id = 0;
  std::string claim;
  Label label = Label::Nei;
  std::vector<Candidate> candidates;
  std::vector<EvidenceGroup> gold_evidence;
  bool operator==(const ClaimInstance&) const = default;
};

// Throws InputError (with the 1-based line number) on malformed or invalid lines.
std::vector<ClaimInstance> load_claims(const std::filesystem::path& path);
std::vector<ClaimInstance> parse_claims(std::string_view jsonl, std::string_view source = "<memory>");
std::string serialize_claim(const ClaimInstance& instance);
void write_claims(const std::filesystem::path& path, const std::vector<ClaimInstance>& instances);
// Invariant checks shared by the loader and the generator.
void validate_claim(const ClaimInstance& instance);

struct EvidenceNode {
  std::string title;
  int sentence_id = 0;
  std::string text;
  bool relevant = false;  // member of some gold evidence group
  bool padded = false;    // stand-in node for an empty candidate list
  EvidenceKey key() const { return {title, sentence_id}; }
};

struct ReasoningGraph {
  long id = 0;
  std::string claim;
  std::vector<EvidenceNode> evidence;
  Label gold_label = Label::Nei;
  std::vector<EvidenceGroup> gold_evidence;
};

inline constexpr std::size_t kDefaultMaxNodes = 5;

// First max_nodes candidates in retriever order; an empty list yields one padded node.
ReasoningGraph build_graph(const ClaimInstance& instance, std::size_t max_nodes = kDefaultMaxNodes);

}  // namespace cogat
