#ifndef NLTP_TEXT_H_
#define NLTP_TEXT_H_

#include <string>
#include <string_view>
#include <vector>

namespace nltp {

// Splits UTF-8 text into code points, each returned as its own encoded
// string. Throws std::invalid_argument on malformed input.
std::vector<std::string> split_utf8(std::string_view text);

// Code points of a raw input line with whitespace removed. Whitespace is
// ASCII space/tab/CR/LF/VT/FF and U+3000 IDEOGRAPHIC SPACE.
std::vector<std::string> tokenize_characters(std::string_view line);

bool is_space_character(std::string_view ch);

// First code point of an encoded character, for ordering.
char32_t code_point(std::string_view ch);

std::string join(const std::vector<std::string>& parts, std::string_view sep = "");
std::vector<std::string> split(std::string_view text, char sep);

}  // namespace nltp

#endif  // NLTP_TEXT_H_
