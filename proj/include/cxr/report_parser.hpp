#pragma once

#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace cxr {

enum class Section { Findings, Impression };

std::string_view section_name(Section s);

struct Sentence {
  Section section = Section::Findings;
  std::string text;  // normalized: lowercase, collapsed whitespace
  int index = 0;     // ordinal within its section, contiguous from 0
};

struct RadiologyReport {
  std::string study_id;
  std::vector<Sentence> findings;
  std::vector<Sentence> impression;
  std::string raw_text;  // preserved byte-exact
};

struct EmptyReportError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Split normalized section text into sentences. Splits after '.', '!', '?'
// or ';' followed by whitespace or end of text; never splits after a single
// letter followed by '.' (initials); empty fragments are dropped.
std::vector<std::string> split_sentences(std::string_view section_text);

// Segment raw report text by the "findings" / "impression" headers
// (case-insensitive, optional trailing ':'), normalize, and split sentences.
// Text before the first header is discarded; with no header at all the whole
// text is treated as findings. Throws EmptyReportError on whitespace-only
// input.
RadiologyReport parse_report(std::string_view raw, std::string_view study_id);

}  // namespace cxr
