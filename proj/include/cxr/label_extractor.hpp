#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "cxr/diseases.hpp"
#include "cxr/report_parser.hpp"
#include "cxr/rules.hpp"

namespace cxr {

struct DiseaseMention {
  Disease disease = Disease::Atelectasis;
  Section section = Section::Findings;
  int sentence_index = 0;
  std::string matched_keyword;
  std::optional<Severity> severity;
  int uncertainty_rank = 1;  // 1..6
  double probability = 1.0;  // the rank's table value
};

struct SoftLabel {
  double probability = 0.1;  // rank 5, "not mentioned"
  std::optional<Severity> severity;
};

struct SoftLabelVector {
  std::string study_id;
  std::array<SoftLabel, kNumDiseases> labels;

  const SoftLabel& operator[](Disease d) const {
    return labels[static_cast<std::size_t>(d)];
  }
  SoftLabel& operator[](Disease d) {
    return labels[static_cast<std::size_t>(d)];
  }
};

// True when a standalone negation token (rank-6 phrase or "without") occurs
// before keyword_position within the same comma-delimited clause.
bool negation_scope(const std::string& sentence, std::size_t keyword_position,
                    const RuleSet& rules);

// One mention per (sentence, disease). Disease keywords match as substrings
// of the normalized sentence, anchored to a word start, longest match first.
// Rank: 6 when the keyword's clause is negated; otherwise the most uncertain
// (highest-numbered) rank among 2..4 whose phrase matches the sentence;
// otherwise 1. Uncertainty phrases match as ordered token subsequences with
// per-token substring containment, so "not exclude" matches "cannot be
// excluded". Severity comes from the Table-style phrase nearest the keyword.
std::vector<DiseaseMention> match_mentions(const RadiologyReport& report,
                                           const RuleSet& rules);

// Per disease: impression mentions override findings mentions; within the
// chosen section the maximum probability wins, ties broken by the latest
// sentence index; absent diseases stay at 0.1.
SoftLabelVector resolve_labels(const std::string& study_id,
                               const std::vector<DiseaseMention>& mentions);

// 1.0 stays 1.0, everything else becomes 0.0; severities are preserved.
SoftLabelVector harden_labels(const SoftLabelVector& soft);

SoftLabelVector extract_labels(const RadiologyReport& report,
                               const RuleSet& rules);

// True when every label probability is in {1.0, 0.1, 0.0}.
bool is_certain_only(const SoftLabelVector& v);

}  // namespace cxr
