#pragma once

// Budgeted edit selection: pick non-conflicting candidates maximizing the
// valence shift in the requested direction while spending at most
// max_chars characters of visible change.

#include <algorithm>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "atd/document.hpp"

namespace atd {

enum class Direction : int { negative = -1, positive = 1 };

struct Budget {
  std::size_t max_chars = 0;
  Direction direction = Direction::negative;
};

struct TransformPlan {
  std::vector<EditCandidate> selected;
  double total_delta = 0.0;
  std::size_t total_cost = 0;

  friend bool operator==(const TransformPlan&, const TransformPlan&) = default;
};

namespace detail {

// Maps a span onto doubled coordinates so that conflict between spans is
// ordinary half-open interval overlap: an insertion at p becomes [2p, 2p+1),
// a replacement [s, e) becomes [2s+1, 2e).
struct PlanInterval {
  std::size_t block;
  std::size_t lo;
  std::size_t hi;
};

inline PlanInterval to_interval(const EditCandidate& c) {
  if (c.span.length == 0) return {c.block_index, 2 * c.span.start, 2 * c.span.start + 1};
  return {c.block_index, 2 * c.span.start + 1, 2 * c.span.end()};
}

inline bool starts_before(const PlanInterval& a, const PlanInterval& b) {
  if (a.block != b.block) return a.block < b.block;
  if (a.lo != b.lo) return a.lo < b.lo;
  return a.hi < b.hi;
}

// True when b can follow a in a selection (b starts at or after a's end).
inline bool can_follow(const PlanInterval& a, const PlanInterval& b) {
  return a.block < b.block || (a.block == b.block && b.lo >= a.hi);
}

struct Best {
  double value = 0.0;
  std::size_t cost = 0;

  bool better_than(const Best& other) const {
    if (value != other.value) return value > other.value;
    return cost < other.cost;
  }
};

}  // namespace detail

/// Exact optimum by dynamic programming over candidates sorted by span start
/// crossed with the discrete budget. Candidates not pushing valence in the
/// requested direction are never chosen. Ties prefer the smaller total cost,
/// then the lexicographically earliest selection in span order.
inline TransformPlan plan_edits(const std::vector<EditCandidate>& candidates, const Budget& budget) {
  const double sign = static_cast<double>(static_cast<int>(budget.direction));
  std::vector<std::size_t> order;
  std::size_t total_cost = 0;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    if (candidates[i].cost_chars == 0) throw std::invalid_argument("candidate with zero cost");
    if (sign * candidates[i].delta_valence > 0.0 && candidates[i].cost_chars <= budget.max_chars) {
      order.push_back(i);
      total_cost += candidates[i].cost_chars;
    }
  }
  TransformPlan plan;
  if (order.empty()) return plan;

  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return detail::starts_before(detail::to_interval(candidates[a]), detail::to_interval(candidates[b]));
  });
  const std::size_t n = order.size();
  const std::size_t cap = std::min(budget.max_chars, total_cost);

  std::vector<detail::PlanInterval> iv(n);
  for (std::size_t i = 0; i < n; ++i) iv[i] = detail::to_interval(candidates[order[i]]);
  // next[i]: first index after i whose interval is compatible with i. Since
  // intervals are sorted by start, every later compatible one is at or past it.
  std::vector<std::size_t> next(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t lo = i + 1;
    std::size_t hi = n;
    while (lo < hi) {
      const std::size_t mid = (lo + hi) / 2;
      if (detail::can_follow(iv[i], iv[mid])) {
        hi = mid;
      } else {
        lo = mid + 1;
      }
    }
    next[i] = lo;
  }

  // table[i][c]: best selection from suffix i with budget c.
  const std::size_t width = cap + 1;
  std::vector<detail::Best> table((n + 1) * width);
  const auto at = [&](std::size_t i, std::size_t c) -> detail::Best& { return table[i * width + c]; };
  for (std::size_t i = n; i-- > 0;) {
    const EditCandidate& cand = candidates[order[i]];
    const double weight = sign * cand.delta_valence;
    for (std::size_t c = 0; c <= cap; ++c) {
      detail::Best best = at(i + 1, c);
      if (cand.cost_chars <= c) {
        const detail::Best& rest = at(next[i], c - cand.cost_chars);
        const detail::Best take{weight + rest.value, cand.cost_chars + rest.cost};
        if (!best.better_than(take)) best = take;
      }
      at(i, c) = best;
    }
  }

  // Reconstruct, taking a candidate whenever taking it is optimal.
  std::size_t i = 0;
  std::size_t c = cap;
  while (i < n) {
    const EditCandidate& cand = candidates[order[i]];
    if (cand.cost_chars <= c) {
      const detail::Best& rest = at(next[i], c - cand.cost_chars);
      const detail::Best take{sign * cand.delta_valence + rest.value, cand.cost_chars + rest.cost};
      const detail::Best& here = at(i, c);
      if (take.value == here.value && take.cost == here.cost) {
        plan.selected.push_back(cand);
        c -= cand.cost_chars;
        i = next[i];
        continue;
      }
    }
    ++i;
  }
  for (const auto& s : plan.selected) {
    plan.total_delta += s.delta_valence;
    plan.total_cost += s.cost_chars;
  }
  return plan;
}

inline Document apply_plan(const Document& doc, const TransformPlan& plan) {
  return apply_edits(doc, plan.selected);
}

inline nlohmann::ordered_json plan_to_json(const TransformPlan& plan) {
  nlohmann::ordered_json doc;
  doc["selected"] = nlohmann::ordered_json::array();
  for (const auto& e : plan.selected) {
    nlohmann::ordered_json item;
    item["block"] = e.block_index;
    item["start"] = e.span.start;
    item["len"] = e.span.length;
    item["replacement"] = e.replacement;
    item["rule_id"] = e.rule_id;
    item["delta"] = e.delta_valence;
    item["cost"] = e.cost_chars;
    doc["selected"].push_back(std::move(item));
  }
  doc["total_delta"] = plan.total_delta;
  doc["total_cost"] = plan.total_cost;
  return doc;
}

inline std::string serialize_plan(const TransformPlan& plan) { return plan_to_json(plan).dump(2) + "\n"; }

class PlanFormatError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

inline TransformPlan parse_plan(std::string_view bytes) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(bytes);
    TransformPlan plan;
    for (const auto& item : doc.at("selected")) {
      EditCandidate e;
      e.block_index = item.at("block").get<std::size_t>();
      e.span.start = item.at("start").get<std::size_t>();
      e.span.length = item.at("len").get<std::size_t>();
      e.replacement = item.at("replacement").get<std::string>();
      e.rule_id = item.at("rule_id").get<std::string>();
      e.delta_valence = item.at("delta").get<double>();
      e.cost_chars = item.at("cost").get<std::size_t>();
      plan.selected.push_back(std::move(e));
    }
    plan.total_delta = doc.at("total_delta").get<double>();
    plan.total_cost = doc.at("total_cost").get<std::size_t>();
    return plan;
  } catch (const nlohmann::json::exception& e) {
    throw PlanFormatError(std::string("malformed plan: ") + e.what());
  }
}

}  // namespace atd
