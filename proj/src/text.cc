#include "nltp/text.h"

#include <stdexcept>

namespace nltp {

std::vector<std::string> split_utf8(std::string_view text) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < text.size()) {
    const auto lead = static_cast<unsigned char>(text[i]);
    std::size_t len = 0;
    if (lead < 0x80) {
      len = 1;
    } else if ((lead & 0xE0) == 0xC0) {
      len = 2;
    } else if ((lead & 0xF0) == 0xE0) {
      len = 3;
    } else if ((lead & 0xF8) == 0xF0) {
      len = 4;
    } else {
      throw std::invalid_argument("invalid UTF-8 lead byte at offset " + std::to_string(i));
    }
    if (i + len > text.size()) {
      throw std::invalid_argument("truncated UTF-8 sequence at offset " + std::to_string(i));
    }
    for (std::size_t k = 1; k < len; ++k) {
      if ((static_cast<unsigned char>(text[i + k]) & 0xC0) != 0x80) {
        throw std::invalid_argument("invalid UTF-8 continuation byte at offset " +
                                    std::to_string(i + k));
      }
    }
    out.emplace_back(text.substr(i, len));
    i += len;
  }
  return out;
}

bool is_space_character(std::string_view ch) {
  if (ch.size() == 1) {
    const char c = ch[0];
    return c == ' ' || c == '\t' || c == '\r' || c == '\n' || c == '\v' || c == '\f';
  }
  return ch == "\xE3\x80\x80";
}

std::vector<std::string> tokenize_characters(std::string_view line) {
  std::vector<std::string> out;
  for (std::string& ch : split_utf8(line)) {
    if (!is_space_character(ch)) out.push_back(std::move(ch));
  }
  return out;
}

char32_t code_point(std::string_view ch) {
  if (ch.empty()) return 0;
  const auto b0 = static_cast<unsigned char>(ch[0]);
  auto cont = [&](std::size_t k) {
    return static_cast<char32_t>(static_cast<unsigned char>(ch[k]) & 0x3F);
  };
  if (b0 < 0x80) return b0;
  if ((b0 & 0xE0) == 0xC0 && ch.size() >= 2) return ((b0 & 0x1F) << 6) | cont(1);
  if ((b0 & 0xF0) == 0xE0 && ch.size() >= 3)
    return ((b0 & 0x0F) << 12) | (cont(1) << 6) | cont(2);
  if (ch.size() >= 4) return ((b0 & 0x07) << 18) | (cont(1) << 12) | (cont(2) << 6) | cont(3);
  return b0;
}

std::string join(const std::vector<std::string>& parts, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out += sep;
    out += parts[i];
  }
  return out;
}

std::vector<std::string> split(std::string_view text, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = text.find(sep, start);
    if (pos == std::string_view::npos) {
      out.emplace_back(text.substr(start));
      return out;
    }
    out.emplace_back(text.substr(start, pos - start));
    start = pos + 1;
  }
}

}  // namespace nltp
