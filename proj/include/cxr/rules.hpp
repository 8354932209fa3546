#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "cxr/diseases.hpp"

namespace cxr {

enum class Severity { Mild, Moderate, Severe };

std::string_view severity_name(Severity s);
std::optional<Severity> parse_severity(std::string_view name);

struct UncertaintyRank {
  int rank = 0;
  double probability = 0.0;
  std::vector<std::string> phrases;
};

// The label extraction rule tables: disease keywords, severity phrases, and
// the six uncertainty ranks. Rank 5 ("not mentioned") is the default for
// diseases with no mention and never carries phrases; rank 6 phrases act as
// negation tokens.
struct RuleSet {
  std::array<std::vector<std::string>, kNumDiseases> disease_keywords;
  std::vector<std::pair<std::string, Severity>> severity_phrases;
  std::array<UncertaintyRank, 6> uncertainty;  // ranks 1..6 in order
  std::string source_text;                     // exact file content, for checksums

  double probability_for_rank(int rank) const;

  // Enforces: phrases lowercase/non-empty/unique within their table, ranks
  // exactly 1..6 with probabilities 1.0/0.7/0.5/0.3/0.1/0.0, rank 5 empty.
  // Throws RuleError on violation.
  void validate() const;

  uint64_t checksum() const;  // FNV-1a over source_text
};

struct RuleError : std::runtime_error {
  explicit RuleError(const std::string& message, int line = 0);
  int line;  // 1-based line in the rules file; 0 when not tied to a line
};

// Parses the three-section rules config:
//   [diseases]     Disease name: phrase, phrase, ...
//   [severity]     mild|moderate|severe: phrase, phrase, ...
//   [uncertainty]  rank probability: phrase, phrase, ...
// '#' starts a comment. Throws RuleError with a line number on bad input.
RuleSet parse_rules(std::string_view text);

RuleSet load_rules_file(const std::string& path);

// The built-in default tables (identical to configs/rules_default.txt).
const RuleSet& builtin_rules();
std::string_view builtin_rules_text();

uint64_t fnv1a64(std::string_view bytes);

}  // namespace cxr
