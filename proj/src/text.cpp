#include "cxr/text.hpp"

#include <cctype>

namespace cxr {

namespace {

bool is_space_byte(unsigned char c) {
  return c >= 0x80 || c < 0x20 || std::isspace(c);
}

bool is_punct_byte(unsigned char c) {
  return std::ispunct(c);
}

}  // namespace

std::string normalize_text(std::string_view raw) {
  std::string out;
  out.reserve(raw.size());
  bool pending_space = false;
  for (const char ch : raw) {
    const auto c = static_cast<unsigned char>(ch);
    if (is_space_byte(c)) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) {
      out.push_back(' ');
      pending_space = false;
    }
    out.push_back(static_cast<char>(std::tolower(c)));
  }
  return out;
}

std::vector<Token> tokenize(std::string_view text) {
  std::vector<Token> tokens;
  std::size_t i = 0;
  while (i < text.size()) {
    if (std::isspace(static_cast<unsigned char>(text[i]))) {
      ++i;
      continue;
    }
    std::size_t end = i;
    while (end < text.size() &&
           !std::isspace(static_cast<unsigned char>(text[end]))) {
      ++end;
    }
    std::size_t lo = i;
    std::size_t hi = end;
    while (lo < hi && is_punct_byte(static_cast<unsigned char>(text[lo]))) ++lo;
    while (hi > lo && is_punct_byte(static_cast<unsigned char>(text[hi - 1]))) {
      --hi;
    }
    if (hi > lo) {
      tokens.push_back(Token{std::string(text.substr(lo, hi - lo)), lo});
    }
    i = end;
  }
  return tokens;
}

bool is_word_start(std::string_view text, std::size_t pos) {
  if (pos == 0) return true;
  return !std::isalnum(static_cast<unsigned char>(text[pos - 1]));
}

}  // namespace cxr
