#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace cxr {

// Lowercase, map non-ASCII and control bytes to spaces, collapse whitespace
// runs to single spaces, trim. Punctuation is kept.
std::string normalize_text(std::string_view raw);

struct Token {
  std::string text;    // surrounding punctuation stripped
  std::size_t offset;  // byte offset of the token start in the source string
};

// Whitespace-delimited tokens with leading/trailing punctuation removed.
// Tokens that are pure punctuation are dropped.
std::vector<Token> tokenize(std::string_view text);

// True when text[pos] starts a word: previous byte absent or non-alphanumeric.
bool is_word_start(std::string_view text, std::size_t pos);

}  // namespace cxr
