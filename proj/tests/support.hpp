#pragma once

// Shared helpers for tests: seeded generators and tiny file utilities.

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

namespace atd::test_support {

inline std::filesystem::path data_dir() { return ATD_DATA_DIR; }

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::filesystem::path& p, std::string_view bytes) {
  std::ofstream out(p, std::ios::binary);
  out << bytes;
}

class Rng {
public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::size_t below(std::size_t n) { return std::uniform_int_distribution<std::size_t>(0, n - 1)(engine_); }
  std::size_t between(std::size_t lo, std::size_t hi) {
    return std::uniform_int_distribution<std::size_t>(lo, hi)(engine_);
  }
  bool chance(double p) { return std::bernoulli_distribution(p)(engine_); }

  template <typename T>
  const T& pick(const std::vector<T>& v) {
    return v[below(v.size())];
  }

  std::mt19937_64& engine() { return engine_; }

private:
  std::mt19937_64 engine_;
};

/// Random prose built from fragments that exercise first-person patterns,
/// apostrophes, punctuation and mixed case.
inline std::string random_prose(Rng& rng, std::size_t max_tokens = 12) {
  static const std::vector<std::string> pieces = {
      "I",     "I'm",   "I’m",   "I'd",    "I'll",  "I've",   "i'm",     "I’VE", "sorry",  "Sorry,", "sorry,",
      "am",    "agree", "don't", "If",     "we",    "you",    "the",     "king", "Queen",  "her",    "his",
      "done",  ",",     ".",     "!",      "?",     "\n",     "  ",      "\t",   "café",   "I'M",    "It's",
      "Im",    "ID",    "I'",    "'m",     "Id",    "12",     "likes",   "\xE2\x80\x94",    "I'mnot", "(I'm)",  "\"I'd\"",
      "SORRY", "x",     "I.",    "Sorry!", "ié",    "I’ll",   "sorry\xE2\x80\x94I", "'",    "I I",    "I'd,"};
  std::string out;
  const std::size_t n = rng.below(max_tokens + 1);
  for (std::size_t i = 0; i < n; ++i) {
    if (i && rng.chance(0.8)) out += ' ';
    out += rng.pick(pieces);
  }
  return out;
}

}  // namespace atd::test_support
