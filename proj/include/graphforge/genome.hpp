#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "core.hpp"

namespace graphforge {

/// The four behavior sections of an instruction genome, in pipeline order.
enum class Section { parse, retrieve, protocol, execute };

inline constexpr int kSectionCount = 4;
/// Per-section rule capacity; adding past it evicts the oldest rule.
inline constexpr int kSectionRuleCap = 2;

std::string to_string(Section s);
Section section_from_string(const std::string& s);
const std::array<Section, kSectionCount>& all_sections();

/// One behavioral rule: a tag drawn from the closed per-section bank plus
/// optional parameters. Scripted agents interpret tags directly, so adding
/// or tightening a rule has a measurable effect without any text model.
struct GenomeRule {
  std::string id;   // unique within the genome
  std::string tag;  // bank tag
  json params = json::object();

  bool operator==(const GenomeRule& o) const = default;
};

struct InstructionGenome {
  std::string id;
  std::array<std::vector<GenomeRule>, kSectionCount> sections;
  std::vector<std::string> ancestors;  // oldest first
  std::string provenance_route;        // route of the mutation that made it
  std::string provenance_focus;

  const std::vector<GenomeRule>& section(Section s) const {
    return sections[static_cast<size_t>(s)];
  }
  std::vector<GenomeRule>& section(Section s) {
    return sections[static_cast<size_t>(s)];
  }
  bool has_rule(Section s, const std::string& tag) const;
  const GenomeRule* find_rule(Section s, const std::string& tag) const;
  int rule_count() const;

  json to_json() const;
  static InstructionGenome from_json(const json& j);
  bool operator==(const InstructionGenome& o) const = default;
};

inline const GenomeRule* InstructionGenome::find_rule(
    Section s, const std::string& tag) const {
  for (const GenomeRule& r : section(s))
    if (r.tag == tag) return &r;
  return nullptr;
}

inline bool InstructionGenome::has_rule(Section s,
                                        const std::string& tag) const {
  return find_rule(s, tag) != nullptr;
}

inline int InstructionGenome::rule_count() const {
  int n = 0;
  for (const auto& sec : sections) n += static_cast<int>(sec.size());
  return n;
}

/// Baseline genome: one descriptive rule per section, no defect
/// countermeasures. Mutations add countermeasure rules from the bank.
InstructionGenome seed_genome();

/// Closed rule bank for one section, in rotation order.
const std::vector<std::string>& rule_bank(Section s);

/// The bank rule that addresses a mutation focus, when one exists.
std::optional<std::pair<Section, std::string>> bank_rule_for_focus(
    const std::string& focus);

}  // namespace graphforge
