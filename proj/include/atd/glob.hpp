#pragma once

#include <string_view>

#include "atd/unicode.hpp"

namespace atd {

/// `*` matches any run (including empty), `?` exactly one code point. No
/// escapes, no character classes. Linear backtracking on the last star.
inline bool glob_match(std::u32string_view pattern, std::u32string_view subject) {
  std::size_t p = 0;
  std::size_t s = 0;
  std::size_t star_p = std::u32string_view::npos;
  std::size_t star_s = 0;
  while (s < subject.size()) {
    if (p < pattern.size() && (pattern[p] == U'?' || pattern[p] == subject[s])) {
      ++p;
      ++s;
    } else if (p < pattern.size() && pattern[p] == U'*') {
      star_p = p++;
      star_s = s;
    } else if (star_p != std::u32string_view::npos) {
      p = star_p + 1;
      s = ++star_s;
    } else {
      return false;
    }
  }
  while (p < pattern.size() && pattern[p] == U'*') ++p;
  return p == pattern.size();
}

inline bool glob_match(std::string_view pattern, std::string_view subject) {
  return glob_match(unicode::decode(pattern), unicode::decode(subject));
}

}  // namespace atd
