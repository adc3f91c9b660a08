#pragma once

// UTF-8 <-> code point conversion and the handful of Unicode character
// predicates the rewriting engine needs. Text offsets everywhere in this
// library count Unicode scalar values, so blocks are decoded once into
// std::u32string and manipulated there.

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

#include <unicode/normalizer2.h>
#include <unicode/uchar.h>
#include <unicode/unistr.h>

namespace atd {

class Utf8Error : public std::runtime_error {
public:
  Utf8Error(std::size_t byte_offset, const std::string& what)
      : std::runtime_error(what), byte_offset_(byte_offset) {}
  std::size_t byte_offset() const noexcept { return byte_offset_; }

private:
  std::size_t byte_offset_;
};

namespace unicode {

namespace detail {

// Returns the decoded scalar and advances pos, or returns -1 on a malformed
// sequence (pos is left untouched).
inline std::int32_t decode_one(std::string_view in, std::size_t& pos) noexcept {
  const auto byte = [&](std::size_t i) { return static_cast<unsigned char>(in[i]); };
  const unsigned char lead = byte(pos);
  if (lead < 0x80) {
    ++pos;
    return lead;
  }
  std::size_t len = 0;
  std::uint32_t cp = 0;
  std::uint32_t min = 0;
  if ((lead & 0xE0) == 0xC0) {
    len = 2, cp = lead & 0x1F, min = 0x80;
  } else if ((lead & 0xF0) == 0xE0) {
    len = 3, cp = lead & 0x0F, min = 0x800;
  } else if ((lead & 0xF8) == 0xF0) {
    len = 4, cp = lead & 0x07, min = 0x10000;
  } else {
    return -1;
  }
  if (pos + len > in.size()) return -1;
  for (std::size_t i = 1; i < len; ++i) {
    const unsigned char c = byte(pos + i);
    if ((c & 0xC0) != 0x80) return -1;
    cp = (cp << 6) | (c & 0x3F);
  }
  if (cp < min || cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)) return -1;
  pos += len;
  return static_cast<std::int32_t>(cp);
}

}  // namespace detail

inline bool is_valid_utf8(std::string_view in) noexcept {
  std::size_t pos = 0;
  while (pos < in.size()) {
    if (detail::decode_one(in, pos) < 0) return false;
  }
  return true;
}

/// Strict decode; throws Utf8Error at the first malformed sequence.
inline std::u32string decode(std::string_view in) {
  std::u32string out;
  out.reserve(in.size());
  std::size_t pos = 0;
  while (pos < in.size()) {
    const std::size_t at = pos;
    const std::int32_t cp = detail::decode_one(in, pos);
    if (cp < 0) throw Utf8Error(at, "invalid UTF-8 at byte " + std::to_string(at));
    out.push_back(static_cast<char32_t>(cp));
  }
  return out;
}

inline void append(std::string& out, char32_t cp) {
  if (cp < 0x80) {
    out.push_back(static_cast<char>(cp));
  } else if (cp < 0x800) {
    out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else if (cp < 0x10000) {
    out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else {
    out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  }
}

inline std::string encode(std::u32string_view in) {
  std::string out;
  out.reserve(in.size());
  for (char32_t cp : in) append(out, cp);
  return out;
}

/// Number of code points in valid UTF-8.
inline std::size_t length(std::string_view in) { return decode(in).size(); }

inline bool is_letter(char32_t c) noexcept {
  if (c < 0x80) return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z');
  const auto type = u_charType(static_cast<UChar32>(c));
  return u_isalpha(static_cast<UChar32>(c)) || type == U_NON_SPACING_MARK ||
         type == U_COMBINING_SPACING_MARK || type == U_ENCLOSING_MARK;
}

inline bool is_digit(char32_t c) noexcept {
  if (c < 0x80) return c >= '0' && c <= '9';
  return u_isdigit(static_cast<UChar32>(c));
}

/// Characters that continue a word for whole-word matching purposes.
inline bool is_word_char(char32_t c) noexcept { return is_letter(c) || is_digit(c) || c == U'_'; }

inline bool is_space(char32_t c) noexcept {
  if (c < 0x80) return c == ' ' || (c >= '\t' && c <= '\r');
  return u_isUWhiteSpace(static_cast<UChar32>(c));
}

/// ASCII apostrophe and U+2019, which browsers render for typographic text.
inline bool is_apostrophe(char32_t c) noexcept { return c == U'\'' || c == U'’'; }

inline bool is_upper(char32_t c) noexcept { return u_isupper(static_cast<UChar32>(c)); }
inline bool is_lower(char32_t c) noexcept { return u_islower(static_cast<UChar32>(c)); }

/// Simple (length-preserving) case folding.
inline char32_t fold(char32_t c) noexcept {
  return static_cast<char32_t>(u_foldCase(static_cast<UChar32>(c), U_FOLD_CASE_DEFAULT));
}

inline char32_t to_upper(char32_t c) noexcept {
  return static_cast<char32_t>(u_toupper(static_cast<UChar32>(c)));
}

inline char32_t to_lower(char32_t c) noexcept {
  return static_cast<char32_t>(u_tolower(static_cast<UChar32>(c)));
}

inline std::u32string fold(std::u32string_view s) {
  std::u32string out(s);
  for (auto& c : out) c = fold(c);
  return out;
}

inline std::u32string to_upper(std::u32string_view s) {
  std::u32string out(s);
  for (auto& c : out) c = to_upper(c);
  return out;
}

/// Case-folded form with typographic apostrophes mapped to ASCII; the key
/// used for every case-insensitive comparison in the library.
inline std::u32string match_key(std::u32string_view s) {
  std::u32string out(s);
  for (auto& c : out) c = is_apostrophe(c) ? U'\'' : fold(c);
  return out;
}

inline std::string match_key(std::string_view utf8) { return encode(match_key(decode(utf8))); }

/// NFC normalization of valid UTF-8.
inline std::string nfc(std::string_view utf8) {
  UErrorCode status = U_ZERO_ERROR;
  const icu::Normalizer2* normalizer = icu::Normalizer2::getNFCInstance(status);
  if (U_FAILURE(status)) throw std::runtime_error("ICU NFC normalizer unavailable");
  const icu::UnicodeString source = icu::UnicodeString::fromUTF8(
      icu::StringPiece(utf8.data(), static_cast<std::int32_t>(utf8.size())));
  icu::UnicodeString normalized = normalizer->normalize(source, status);
  if (U_FAILURE(status)) throw std::runtime_error("NFC normalization failed");
  std::string out;
  normalized.toUTF8String(out);
  return out;
}

}  // namespace unicode
}  // namespace atd
