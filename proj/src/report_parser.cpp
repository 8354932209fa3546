#include "cxr/report_parser.hpp"

#include <algorithm>
#include <cctype>

#include "cxr/text.hpp"

namespace cxr {

namespace {

bool is_split_punct(char c) {
  return c == '.' || c == '!' || c == '?' || c == ';';
}

// Header occurrence in the raw text: [pos, content_start) covers the header
// word plus an optional ':'.
struct HeaderHit {
  std::size_t pos;
  std::size_t content_start;
  Section section;
};

std::vector<HeaderHit> find_headers(std::string_view raw) {
  std::string lower(raw);
  std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) {
    return static_cast<char>(std::tolower(c));
  });

  static constexpr std::pair<std::string_view, Section> kHeaders[] = {
      {"findings", Section::Findings},
      {"impression", Section::Impression},
  };

  std::vector<HeaderHit> hits;
  for (const auto& [word, section] : kHeaders) {
    std::size_t from = 0;
    while (true) {
      const std::size_t pos = lower.find(word, from);
      if (pos == std::string::npos) break;
      from = pos + 1;
      if (!is_word_start(lower, pos)) continue;
      std::size_t end = pos + word.size();
      if (end < lower.size() &&
          std::isalnum(static_cast<unsigned char>(lower[end]))) {
        continue;  // e.g. "impressions" is not a header
      }
      if (end < lower.size() && lower[end] == ':') ++end;
      hits.push_back(HeaderHit{pos, end, section});
    }
  }
  std::sort(hits.begin(), hits.end(),
            [](const HeaderHit& a, const HeaderHit& b) { return a.pos < b.pos; });
  return hits;
}

}  // namespace

std::string_view section_name(Section s) {
  return s == Section::Findings ? "FINDINGS" : "IMPRESSION";
}

std::vector<std::string> split_sentences(std::string_view section_text) {
  const std::string text = normalize_text(section_text);
  std::vector<std::string> sentences;
  std::size_t start = 0;
  for (std::size_t i = 0; i < text.size(); ++i) {
    if (!is_split_punct(text[i])) continue;
    const bool at_end = i + 1 == text.size();
    if (!at_end && !std::isspace(static_cast<unsigned char>(text[i + 1]))) {
      continue;
    }
    if (text[i] == '.') {
      // Abbreviation guard: a lone letter before the period ("j. smith").
      const bool single_letter =
          i >= 1 && std::isalpha(static_cast<unsigned char>(text[i - 1])) &&
          (i == 1 || !std::isalnum(static_cast<unsigned char>(text[i - 2])));
      if (single_letter && !at_end) continue;
    }
    std::string fragment = text.substr(start, i + 1 - start);
    while (!fragment.empty() && fragment.front() == ' ') fragment.erase(0, 1);
    if (!fragment.empty()) sentences.push_back(std::move(fragment));
    start = i + 1;
  }
  if (start < text.size()) {
    std::string tail = text.substr(start);
    while (!tail.empty() && tail.front() == ' ') tail.erase(0, 1);
    if (!tail.empty()) sentences.push_back(std::move(tail));
  }
  return sentences;
}

RadiologyReport parse_report(std::string_view raw, std::string_view study_id) {
  const bool all_space = std::all_of(raw.begin(), raw.end(), [](unsigned char c) {
    return std::isspace(c) || c == 0;
  });
  if (raw.empty() || all_space) {
    throw EmptyReportError("report contains no non-whitespace text: " +
                           std::string(study_id));
  }

  RadiologyReport report;
  report.study_id = std::string(study_id);
  report.raw_text = std::string(raw);

  const std::vector<HeaderHit> hits = find_headers(raw);

  struct Segment {
    Section section;
    std::string_view text;
  };
  std::vector<Segment> segments;
  if (hits.empty()) {
    segments.push_back(Segment{Section::Findings, raw});
  } else {
    for (std::size_t i = 0; i < hits.size(); ++i) {
      const std::size_t begin = hits[i].content_start;
      const std::size_t end = i + 1 < hits.size() ? hits[i + 1].pos : raw.size();
      if (end > begin) {
        segments.push_back(Segment{hits[i].section, raw.substr(begin, end - begin)});
      }
    }
  }

  for (const Segment& seg : segments) {
    auto& bucket =
        seg.section == Section::Findings ? report.findings : report.impression;
    for (std::string& sentence : split_sentences(seg.text)) {
      Sentence s;
      s.section = seg.section;
      s.text = std::move(sentence);
      s.index = static_cast<int>(bucket.size());
      bucket.push_back(std::move(s));
    }
  }
  return report;
}

}  // namespace cxr
