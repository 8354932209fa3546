#include "cxr/rules.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "cxr/text.hpp"

namespace cxr {

namespace {

constexpr double kRankProbabilities[6] = {1.0, 0.7, 0.5, 0.3, 0.1, 0.0};

const char* const kDefaultRulesText = R"(# Default label extraction rules.
# Three sections: disease keywords, severity phrases, uncertainty ranks.
# Lines are "name: phrase, phrase, ...". '#' starts a comment.
# Edit and pass via --rules to change probabilities or vocabulary without
# rebuilding.

[diseases]
Atelectasis: atelecta, collapse
Blunting of costophrenic angle: blunting of costophrenic angle
Calcification: calcification
Cardiomegaly: cardiomegaly, the heart, heart size, cardiac enlargement, cardiac size, cardiac shadow, cardiac contour, cardiac silhouette, enlarged heart, mediastinum, cardiomediastinum, contour, mediastinal configuration, mediastinal silhouette, pericardial silhouette, cardiac silhouette and vascularity
Consolidation: consolidat, consolidation
Edema: edema, heart failure, chf, pulmonary congestion, indistinctness, vascular prominence
Emphysema: emphysema
Fracture: fracture
Granuloma: granuloma
Hernia: hernia
Lung Opacity: opaci, decreased translucency, increased density, airspace disease, air-space disease, air space disease, infiltrate, infiltration, interstitial marking, interstitial pattern, interstitial lung, reticular pattern, reticular marking, reticulation, parenchymal scarring, peribronchial thickening, wall thickening, scar
Pleural Effusion: pleural fluid, effusion
Pleural Thickening: pleural thickening
Pneumonia: pneumonia, infection, infectious process, infectious
Pneumothorax: pneumothorax, pneumothoraces
Scoliosis: scoliosis
Tortuosity of the thoracic aorta: tortuosity of the thoracic aorta
Vascular congestion: vascular congestion

[severity]
mild: mild, small, trace, minor, minimal, subtle, mildly, minimally
moderate: moderate, moderately, mild to moderate
severe: severe, acute, massive, moderate to severe, moderate to large

[uncertainty]
1 1.0: positive, change in
2 0.7: probable, likely, may, could, potential
3 0.5: might, possible
4 0.3: not exclude, cannot accurately assesses, cannot assessed, cannot identified, cannot confirmed, difficult exclude
5 0.1:
6 0.0: no
)";

std::vector<std::string> split_phrases(std::string_view value, int line) {
  if (normalize_text(value).empty()) return {};  // "5 0.1:" carries no phrases
  std::vector<std::string> phrases;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = value.find(',', start);
    const bool last = comma == std::string_view::npos;
    const std::size_t end = last ? value.size() : comma;
    std::string phrase = normalize_text(value.substr(start, end - start));
    if (phrase.empty()) throw RuleError("empty phrase in list", line);
    phrases.push_back(std::move(phrase));
    if (last) break;
    start = comma + 1;
  }
  return phrases;
}

}  // namespace

RuleError::RuleError(const std::string& message, int line_number)
    : std::runtime_error(line_number > 0 ? "rules:" + std::to_string(line_number) +
                                               ": " + message
                                         : "rules: " + message),
      line(line_number) {}

std::string_view severity_name(Severity s) {
  switch (s) {
    case Severity::Mild: return "mild";
    case Severity::Moderate: return "moderate";
    case Severity::Severe: return "severe";
  }
  return "";
}

std::optional<Severity> parse_severity(std::string_view name) {
  const std::string key = normalize_text(name);
  if (key == "mild") return Severity::Mild;
  if (key == "moderate") return Severity::Moderate;
  if (key == "severe") return Severity::Severe;
  return std::nullopt;
}

double RuleSet::probability_for_rank(int rank) const {
  return uncertainty.at(static_cast<std::size_t>(rank - 1)).probability;
}

void RuleSet::validate() const {
  std::set<std::string> seen;
  for (std::size_t d = 0; d < kNumDiseases; ++d) {
    if (disease_keywords[d].empty()) {
      throw RuleError("no keywords for disease '" +
                      std::string(disease_name(static_cast<Disease>(d))) + "'");
    }
    for (const std::string& phrase : disease_keywords[d]) {
      if (phrase.empty()) throw RuleError("empty disease keyword");
      if (!seen.insert(phrase).second) {
        throw RuleError("duplicate disease keyword '" + phrase + "'");
      }
    }
  }

  seen.clear();
  if (severity_phrases.empty()) throw RuleError("severity table is empty");
  for (const auto& [phrase, level] : severity_phrases) {
    (void)level;
    if (phrase.empty()) throw RuleError("empty severity phrase");
    if (!seen.insert(phrase).second) {
      throw RuleError("duplicate severity phrase '" + phrase + "'");
    }
  }

  seen.clear();
  for (std::size_t i = 0; i < uncertainty.size(); ++i) {
    const UncertaintyRank& entry = uncertainty[i];
    if (entry.rank != static_cast<int>(i + 1)) {
      throw RuleError("uncertainty ranks must be exactly 1..6 in order");
    }
    if (entry.probability != kRankProbabilities[i]) {
      throw RuleError("rank " + std::to_string(entry.rank) +
                      " must have probability " +
                      std::to_string(kRankProbabilities[i]));
    }
    for (const std::string& phrase : entry.phrases) {
      if (phrase.empty()) throw RuleError("empty uncertainty phrase");
      if (!seen.insert(phrase).second) {
        throw RuleError("duplicate uncertainty phrase '" + phrase + "'");
      }
    }
  }
  if (!uncertainty[4].phrases.empty()) {
    throw RuleError("rank 5 (not mentioned) is implicit and takes no phrases");
  }
}

uint64_t RuleSet::checksum() const { return fnv1a64(source_text); }

RuleSet parse_rules(std::string_view text) {
  RuleSet rules;
  rules.source_text = std::string(text);

  enum class TableSection { None, Diseases, Severity, Uncertainty };
  TableSection current = TableSection::None;
  std::array<bool, kNumDiseases> disease_seen{};
  std::array<bool, 6> rank_seen{};

  std::istringstream stream{rules.source_text};
  std::string raw_line;
  int line = 0;
  while (std::getline(stream, raw_line)) {
    ++line;
    const std::size_t hash = raw_line.find('#');
    if (hash != std::string::npos) raw_line.resize(hash);
    const std::string trimmed = normalize_text(raw_line);
    if (trimmed.empty()) continue;

    if (trimmed == "[diseases]") {
      current = TableSection::Diseases;
      continue;
    }
    if (trimmed == "[severity]") {
      current = TableSection::Severity;
      continue;
    }
    if (trimmed == "[uncertainty]") {
      current = TableSection::Uncertainty;
      continue;
    }
    if (trimmed.front() == '[') {
      throw RuleError("unknown section '" + trimmed + "'", line);
    }
    if (current == TableSection::None) {
      throw RuleError("content before any [section] header", line);
    }

    const std::size_t colon = trimmed.find(':');
    if (colon == std::string::npos) {
      throw RuleError("expected 'name: phrase, ...'", line);
    }
    const std::string key = trimmed.substr(0, colon);
    const std::string value = trimmed.substr(colon + 1);

    switch (current) {
      case TableSection::Diseases: {
        const auto disease = parse_disease(key);
        if (!disease) throw RuleError("unknown disease '" + key + "'", line);
        const auto idx = static_cast<std::size_t>(*disease);
        if (disease_seen[idx]) {
          throw RuleError("duplicate entry for disease '" + key + "'", line);
        }
        disease_seen[idx] = true;
        rules.disease_keywords[idx] = split_phrases(value, line);
        break;
      }
      case TableSection::Severity: {
        const auto level = parse_severity(key);
        if (!level) throw RuleError("unknown severity level '" + key + "'", line);
        for (std::string& phrase : split_phrases(value, line)) {
          rules.severity_phrases.emplace_back(std::move(phrase), *level);
        }
        break;
      }
      case TableSection::Uncertainty: {
        std::istringstream head{key};
        int rank = 0;
        double probability = -1.0;
        if (!(head >> rank >> probability) || rank < 1 || rank > 6) {
          throw RuleError("expected '<rank 1..6> <probability>:'", line);
        }
        if (rank_seen[static_cast<std::size_t>(rank - 1)]) {
          throw RuleError("duplicate rank " + std::to_string(rank), line);
        }
        rank_seen[static_cast<std::size_t>(rank - 1)] = true;
        UncertaintyRank& entry =
            rules.uncertainty[static_cast<std::size_t>(rank - 1)];
        entry.rank = rank;
        entry.probability = probability;
        entry.phrases = split_phrases(value, line);
        break;
      }
      case TableSection::None:
        break;
    }
  }

  for (std::size_t d = 0; d < kNumDiseases; ++d) {
    if (!disease_seen[d]) {
      throw RuleError("missing disease '" +
                      std::string(disease_name(static_cast<Disease>(d))) + "'");
    }
  }
  for (int r = 0; r < 6; ++r) {
    if (!rank_seen[static_cast<std::size_t>(r)]) {
      throw RuleError("missing uncertainty rank " + std::to_string(r + 1));
    }
  }
  rules.validate();
  return rules;
}

RuleSet load_rules_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw RuleError("cannot open rules file: " + path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_rules(buffer.str());
}

const RuleSet& builtin_rules() {
  static const RuleSet rules = parse_rules(kDefaultRulesText);
  return rules;
}

std::string_view builtin_rules_text() { return kDefaultRulesText; }

uint64_t fnv1a64(std::string_view bytes) {
  uint64_t hash = 0xcbf29ce484222325ull;
  for (const char c : bytes) {
    hash ^= static_cast<unsigned char>(c);
    hash *= 0x100000001b3ull;
  }
  return hash;
}

}  // namespace cxr
