#pragma once

#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace forage {

// Lowercases and splits on runs of non-alphanumeric ASCII characters. Empty
// tokens are dropped. Bytes outside ASCII act as separators.
std::vector<std::string> tokenize(std::string_view text);

std::set<std::string> token_set(std::string_view text);

// Function words that never count as content tokens.
bool is_stopword(std::string_view token);

std::set<std::string> content_tokens(std::string_view text);

std::string trim(std::string_view s);

// Answer normalization: lowercase, strip ASCII punctuation, collapse
// whitespace, then drop one leading article (a/an/the).
std::string normalize_answer(std::string_view s);

std::vector<std::string> split_whitespace(std::string_view s);

}  // namespace forage
