#include "cxr/label_extractor.hpp"

#include <algorithm>

#include "cxr/text.hpp"

namespace cxr {

namespace {

struct KeywordEntry {
  const std::string* phrase;
  Disease disease;
};

// Flat keyword list so the longest match wins across diseases too
// ("pleural thickening" must beat a shorter keyword at the same start).
std::vector<KeywordEntry> flatten_keywords(const RuleSet& rules) {
  std::vector<KeywordEntry> flat;
  for (std::size_t d = 0; d < kNumDiseases; ++d) {
    for (const std::string& phrase : rules.disease_keywords[d]) {
      flat.push_back(KeywordEntry{&phrase, static_cast<Disease>(d)});
    }
  }
  return flat;
}

struct KeywordHit {
  Disease disease;
  std::size_t pos;
  std::size_t len;
};

std::vector<KeywordHit> find_disease_keywords(
    const std::string& sentence, const std::vector<KeywordEntry>& flat) {
  std::vector<KeywordHit> hits;
  std::size_t pos = 0;
  while (pos < sentence.size()) {
    if (!is_word_start(sentence, pos)) {
      ++pos;
      continue;
    }
    std::size_t best_len = 0;
    Disease best_disease = Disease::Atelectasis;
    for (const KeywordEntry& entry : flat) {
      const std::string& phrase = *entry.phrase;
      if (phrase.size() <= best_len) continue;
      if (sentence.compare(pos, phrase.size(), phrase) == 0) {
        best_len = phrase.size();
        best_disease = entry.disease;
      }
    }
    if (best_len > 0) {
      hits.push_back(KeywordHit{best_disease, pos, best_len});
      pos += best_len;  // the match consumes its span
    } else {
      ++pos;
    }
  }
  return hits;
}

// Ordered token-subsequence match with per-token substring containment:
// "not exclude" matches "cannot be excluded".
bool phrase_matches_tokens(const std::vector<Token>& tokens,
                           const std::string& phrase) {
  const std::vector<Token> parts = tokenize(phrase);
  std::size_t next = 0;
  for (const Token& want : parts) {
    bool found = false;
    while (next < tokens.size()) {
      if (tokens[next].text.find(want.text) != std::string::npos) {
        found = true;
        ++next;
        break;
      }
      ++next;
    }
    if (!found) return false;
  }
  return !parts.empty();
}

// Highest (most uncertain) matching rank among 2..4, or nullopt.
std::optional<int> sentence_uncertainty_rank(const std::vector<Token>& tokens,
                                             const RuleSet& rules) {
  for (int rank = 4; rank >= 2; --rank) {
    for (const std::string& phrase :
         rules.uncertainty[static_cast<std::size_t>(rank - 1)].phrases) {
      if (phrase_matches_tokens(tokens, phrase)) return rank;
    }
  }
  return std::nullopt;
}

struct SeverityHit {
  Severity level;
  std::size_t pos;
};

std::vector<SeverityHit> find_severity_phrases(const std::string& sentence,
                                               const RuleSet& rules) {
  std::vector<SeverityHit> hits;
  std::size_t pos = 0;
  while (pos < sentence.size()) {
    if (!is_word_start(sentence, pos)) {
      ++pos;
      continue;
    }
    std::size_t best_len = 0;
    Severity best_level = Severity::Mild;
    for (const auto& [phrase, level] : rules.severity_phrases) {
      if (phrase.size() <= best_len) continue;
      if (sentence.compare(pos, phrase.size(), phrase) == 0) {
        best_len = phrase.size();
        best_level = level;
      }
    }
    if (best_len > 0) {
      hits.push_back(SeverityHit{best_level, pos});
      pos += best_len;  // "mild to moderate" consumes its inner "moderate"
    } else {
      ++pos;
    }
  }
  return hits;
}

std::optional<Severity> nearest_severity(const std::vector<SeverityHit>& hits,
                                         std::size_t keyword_pos) {
  std::optional<Severity> best;
  std::size_t best_distance = 0;
  for (const SeverityHit& hit : hits) {
    const std::size_t distance = hit.pos > keyword_pos ? hit.pos - keyword_pos
                                                       : keyword_pos - hit.pos;
    if (!best || distance < best_distance) {
      best = hit.level;
      best_distance = distance;
    }
  }
  return best;
}

}  // namespace

bool negation_scope(const std::string& sentence, std::size_t keyword_position,
                    const RuleSet& rules) {
  // Clause = comma-delimited span containing the keyword.
  const std::size_t comma = sentence.rfind(',', keyword_position);
  const std::size_t clause_start = comma == std::string::npos ? 0 : comma + 1;
  if (keyword_position < clause_start) return false;
  const std::string_view clause{sentence.data() + clause_start,
                                keyword_position - clause_start};
  const std::vector<std::string>& negations = rules.uncertainty[5].phrases;
  for (const Token& token : tokenize(clause)) {
    if (token.text == "without") return true;
    for (const std::string& neg : negations) {
      if (token.text == neg) return true;
    }
  }
  return false;
}

std::vector<DiseaseMention> match_mentions(const RadiologyReport& report,
                                           const RuleSet& rules) {
  const std::vector<KeywordEntry> flat = flatten_keywords(rules);
  std::vector<DiseaseMention> mentions;
  const auto scan = [&](const std::vector<Sentence>& sentences) {
    for (const Sentence& sentence : sentences) {
      const std::vector<KeywordHit> keywords =
          find_disease_keywords(sentence.text, flat);
      if (keywords.empty()) continue;

      const std::vector<Token> tokens = tokenize(sentence.text);
      const std::optional<int> uncertain_rank =
          sentence_uncertainty_rank(tokens, rules);
      const std::vector<SeverityHit> severities =
          find_severity_phrases(sentence.text, rules);

      std::array<bool, kNumDiseases> emitted{};
      for (const KeywordHit& hit : keywords) {
        const auto idx = static_cast<std::size_t>(hit.disease);
        if (emitted[idx]) continue;  // one mention per disease per sentence
        emitted[idx] = true;

        DiseaseMention mention;
        mention.disease = hit.disease;
        mention.section = sentence.section;
        mention.sentence_index = sentence.index;
        mention.matched_keyword = sentence.text.substr(hit.pos, hit.len);
        if (negation_scope(sentence.text, hit.pos, rules)) {
          mention.uncertainty_rank = 6;
        } else if (uncertain_rank) {
          mention.uncertainty_rank = *uncertain_rank;
        } else {
          mention.uncertainty_rank = 1;
        }
        mention.probability = rules.probability_for_rank(mention.uncertainty_rank);
        mention.severity = nearest_severity(severities, hit.pos);
        mentions.push_back(std::move(mention));
      }
    }
  };
  scan(report.findings);
  scan(report.impression);
  return mentions;
}

SoftLabelVector resolve_labels(const std::string& study_id,
                               const std::vector<DiseaseMention>& mentions) {
  SoftLabelVector result;
  result.study_id = study_id;

  for (std::size_t d = 0; d < kNumDiseases; ++d) {
    const auto disease = static_cast<Disease>(d);
    const DiseaseMention* winner = nullptr;
    bool impression_only = false;
    for (const DiseaseMention& mention : mentions) {
      if (mention.disease != disease) continue;
      if (mention.section == Section::Impression && !impression_only) {
        impression_only = true;  // impression overrides findings
        winner = nullptr;
      }
      if (impression_only && mention.section != Section::Impression) continue;
      if (winner == nullptr || mention.probability > winner->probability ||
          (mention.probability == winner->probability &&
           mention.sentence_index >= winner->sentence_index)) {
        winner = &mention;
      }
    }
    if (winner != nullptr) {
      result.labels[d].probability = winner->probability;
      result.labels[d].severity = winner->severity;
    }
  }
  return result;
}

SoftLabelVector harden_labels(const SoftLabelVector& soft) {
  SoftLabelVector hard = soft;
  for (SoftLabel& label : hard.labels) {
    label.probability = label.probability == 1.0 ? 1.0 : 0.0;
  }
  return hard;
}

SoftLabelVector extract_labels(const RadiologyReport& report,
                               const RuleSet& rules) {
  return resolve_labels(report.study_id, match_mentions(report, rules));
}

bool is_certain_only(const SoftLabelVector& v) {
  return std::all_of(v.labels.begin(), v.labels.end(), [](const SoftLabel& l) {
    return l.probability == 1.0 || l.probability == 0.1 || l.probability == 0.0;
  });
}

}  // namespace cxr
