#pragma once

// Independent reference implementations used to check the optimized code.
// They favor obviousness over speed and share no code with the library
// beyond plain data types.

#include <algorithm>
#include <cstdint>
#include <string>
#include <tuple>
#include <vector>

#include "atd/document.hpp"
#include "support.hpp"

namespace atd::oracle {

struct BruteForcePlan {
  double objective = 0.0;  // direction * sum of deltas
  std::size_t cost = 0;
  std::vector<std::size_t> chosen;  // indices into the candidate list
};

inline bool conflicts(const EditCandidate& a, const EditCandidate& b) {
  if (a.block_index != b.block_index) return false;
  const std::size_t as = a.span.start, ae = a.span.start + a.span.length;
  const std::size_t bs = b.span.start, be = b.span.start + b.span.length;
  if (a.span.length == 0 && b.span.length == 0) return as == bs;
  if (a.span.length == 0) return bs < as && as < be;
  if (b.span.length == 0) return as < bs && bs < ae;
  return std::max(as, bs) < std::min(ae, be);
}

// Position key in which insertions sort just before replacements starting
// at the same offset; used only to define "earliest" among tied subsets.
inline std::tuple<std::size_t, std::size_t, int, std::size_t> position(const EditCandidate& c) {
  return {c.block_index, c.span.start, c.span.length == 0 ? 0 : 1, c.span.start + c.span.length};
}

/// Exhaustive search over all 2^n subsets. Maximizes the directed sum, then
/// minimizes cost, then takes the lexicographically earliest subset in
/// position order.
inline BruteForcePlan brute_force_plan(const std::vector<EditCandidate>& c, std::size_t max_chars, int direction) {
  const std::size_t n = c.size();
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return position(c[a]) < position(c[b]); });
  std::vector<std::size_t> rank(n);
  for (std::size_t r = 0; r < n; ++r) rank[order[r]] = r;

  BruteForcePlan best;
  std::vector<std::size_t> best_ranks;
  for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << n); ++mask) {
    double objective = 0.0;
    std::size_t cost = 0;
    bool ok = true;
    std::vector<std::size_t> chosen;
    for (std::size_t i = 0; i < n && ok; ++i) {
      if (!(mask >> i & 1)) continue;
      if (direction * c[i].delta_valence <= 0.0) ok = false;
      for (std::size_t j : chosen) ok = ok && !conflicts(c[i], c[j]);
      chosen.push_back(i);
      objective += direction * c[i].delta_valence;
      cost += c[i].cost_chars;
    }
    if (!ok || cost > max_chars) continue;
    std::vector<std::size_t> ranks;
    for (std::size_t i : chosen) ranks.push_back(rank[i]);
    std::sort(ranks.begin(), ranks.end());
    const bool better = objective > best.objective ||
                        (objective == best.objective &&
                         (cost < best.cost || (cost == best.cost && ranks < best_ranks)));
    if (mask == 0 || better) {
      best = {objective, cost, chosen};
      best_ranks = ranks;
    }
  }
  std::sort(best.chosen.begin(), best.chosen.end(), [&](std::size_t a, std::size_t b) { return rank[a] < rank[b]; });
  return best;
}

/// Random planner instance. Deltas are multiples of 1/64 so every subset sum
/// is exact in binary floating point.
inline std::vector<EditCandidate> random_candidates(test_support::Rng& rng, std::size_t count) {
  std::vector<EditCandidate> out;
  const std::size_t blocks = rng.between(1, 3);
  for (std::size_t i = 0; i < count; ++i) {
    EditCandidate e;
    e.block_index = rng.below(blocks);
    e.span.start = rng.below(40);
    e.span.length = rng.chance(0.3) ? 0 : rng.between(1, 8);
    const std::size_t rep = rng.below(10);
    e.replacement = std::string(rep, 'x');
    e.cost_chars = std::max<std::size_t>(1, rep + e.span.length);
    if (e.cost_chars != rep + e.span.length) e.replacement = "x";
    e.rule_id = "r" + std::to_string(i);
    e.delta_valence = (static_cast<double>(rng.below(129)) - 64.0) / 64.0;
    out.push_back(std::move(e));
  }
  return out;
}

/// Length of the longest common subsequence, by the textbook table.
inline std::size_t lcs_length(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  std::vector<std::vector<std::size_t>> t(a.size() + 1, std::vector<std::size_t>(b.size() + 1, 0));
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      t[i][j] = a[i - 1] == b[j - 1] ? t[i - 1][j - 1] + 1 : std::max(t[i - 1][j], t[i][j - 1]);
    }
  }
  return t[a.size()][b.size()];
}

}  // namespace atd::oracle
