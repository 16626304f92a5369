#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "skipref/error.hpp"

namespace skipref {

using StateId = std::uint32_t;
using Transition = std::pair<StateId, StateId>;

/// Observation attached to a state. Stored in canonical serialized form
/// (JSON with sorted object keys), so equality is byte-wise.
struct Label {
  std::string canonical;

  static Label of(const nlohmann::json& value) { return Label{value.dump()}; }

  nlohmann::json value() const { return nlohmann::json::parse(canonical); }

  friend bool operator==(const Label&, const Label&) = default;
  friend auto operator<=>(const Label&, const Label&) = default;
};

/// Finite labeled transition system with a left-total transition relation.
/// Successor lists are stored sorted and duplicate-free (CSR layout).
class Lts {
 public:
  std::size_t size() const { return labels_.size(); }

  bool valid(StateId s) const { return s < size(); }

  std::span<const StateId> successors(StateId s) const {
    return {targets_.data() + offsets_[s], targets_.data() + offsets_[s + 1]};
  }

  bool has_transition(StateId s, StateId u) const {
    auto succ = successors(s);
    return std::binary_search(succ.begin(), succ.end(), u);
  }

  const Label& label(StateId s) const { return labels_[s]; }
  const std::vector<Label>& labels() const { return labels_; }

  /// Optional set of initial states (sorted). Empty means "not declared".
  const std::vector<StateId>& initial() const { return initial_; }

  std::size_t transition_count() const { return targets_.size(); }

  std::vector<Transition> transitions() const {
    std::vector<Transition> out;
    out.reserve(targets_.size());
    for (StateId s = 0; s < size(); ++s)
      for (StateId u : successors(s)) out.emplace_back(s, u);
    return out;
  }

  friend bool operator==(const Lts&, const Lts&) = default;

 private:
  friend Lts build_lts(std::size_t, std::vector<Transition>, std::vector<Label>,
                       std::vector<StateId>);

  std::vector<std::size_t> offsets_{0};
  std::vector<StateId> targets_;
  std::vector<Label> labels_;
  std::vector<StateId> initial_;
};

/// Validates and builds an Lts. Duplicate transitions are merged.
inline Lts build_lts(std::size_t states, std::vector<Transition> transitions,
                     std::vector<Label> labels,
                     std::vector<StateId> initial = {}) {
  if (states == 0)
    throw Error(ErrorCode::InvalidArgument, "an Lts needs at least one state");
  if (labels.size() != states)
    throw Error(ErrorCode::PartialLabeling,
                "expected " + std::to_string(states) + " labels, got " +
                    std::to_string(labels.size()));
  for (auto [s, u] : transitions) {
    if (s >= states || u >= states)
      throw Error(ErrorCode::DanglingState,
                  "transition (" + std::to_string(s) + "," + std::to_string(u) +
                      ") references an unknown state");
  }
  for (StateId s : initial) {
    if (s >= states)
      throw Error(ErrorCode::DanglingState,
                  "initial state " + std::to_string(s) + " is unknown");
  }

  std::sort(transitions.begin(), transitions.end());
  transitions.erase(std::unique(transitions.begin(), transitions.end()),
                    transitions.end());

  Lts lts;
  lts.offsets_.assign(states + 1, 0);
  for (auto [s, u] : transitions) ++lts.offsets_[s + 1];
  for (std::size_t s = 0; s < states; ++s) {
    if (lts.offsets_[s + 1] == 0)
      throw Error(ErrorCode::NotLeftTotal,
                  "state " + std::to_string(s) + " has no successor");
    lts.offsets_[s + 1] += lts.offsets_[s];
  }
  lts.targets_.reserve(transitions.size());
  for (auto [s, u] : transitions) lts.targets_.push_back(u);
  lts.labels_ = std::move(labels);
  std::sort(initial.begin(), initial.end());
  initial.erase(std::unique(initial.begin(), initial.end()), initial.end());
  lts.initial_ = std::move(initial);
  return lts;
}

/// A binary relation over the states of one Lts, kept as sorted rows.
class Relation {
 public:
  Relation() = default;
  explicit Relation(std::size_t universe) : rows_(universe) {}

  Relation(std::size_t universe, const std::vector<Transition>& pairs)
      : rows_(universe) {
    for (auto [s, w] : pairs) {
      if (s >= universe || w >= universe)
        throw Error(ErrorCode::InvalidState,
                    "relation pair (" + std::to_string(s) + "," +
                        std::to_string(w) + ") is out of range");
      rows_[s].push_back(w);
    }
    for (auto& row : rows_) {
      std::sort(row.begin(), row.end());
      row.erase(std::unique(row.begin(), row.end()), row.end());
    }
  }

  std::size_t universe() const { return rows_.size(); }

  std::size_t size() const {
    std::size_t n = 0;
    for (const auto& row : rows_) n += row.size();
    return n;
  }

  bool empty() const { return size() == 0; }

  bool contains(StateId s, StateId w) const {
    if (s >= rows_.size()) return false;
    const auto& row = rows_[s];
    return std::binary_search(row.begin(), row.end(), w);
  }

  std::span<const StateId> row(StateId s) const { return rows_[s]; }

  void insert(StateId s, StateId w) {
    auto& row = rows_.at(s);
    auto it = std::lower_bound(row.begin(), row.end(), w);
    if (it == row.end() || *it != w) row.insert(it, w);
  }

  void erase(StateId s, StateId w) {
    auto& row = rows_.at(s);
    auto it = std::lower_bound(row.begin(), row.end(), w);
    if (it != row.end() && *it == w) row.erase(it);
  }

  /// Replaces a whole row; `ws` must be sorted and duplicate-free.
  void set_row(StateId s, std::vector<StateId> ws) { rows_.at(s) = std::move(ws); }

  std::vector<Transition> pairs() const {
    std::vector<Transition> out;
    for (StateId s = 0; s < rows_.size(); ++s)
      for (StateId w : rows_[s]) out.emplace_back(s, w);
    return out;
  }

  bool subset_of(const Relation& other) const {
    for (StateId s = 0; s < rows_.size(); ++s)
      for (StateId w : rows_[s])
        if (!other.contains(s, w)) return false;
    return true;
  }

  friend bool operator==(const Relation&, const Relation&) = default;

 private:
  std::vector<std::vector<StateId>> rows_;
};

/// Total function from concrete to abstract states.
struct RefinementMap {
  std::vector<StateId> image;

  StateId operator()(StateId s) const { return image.at(s); }
  std::size_t size() const { return image.size(); }

  friend bool operator==(const RefinementMap&, const RefinementMap&) = default;
};

/// Which composition of the transition relation `reach` computes.
struct ReachKind {
  enum class Mode { Exactly, Plus, AtLeast, Within };
  Mode mode = Mode::Plus;
  std::size_t bound = 1;

  static ReachKind exactly(std::size_t i) { return {Mode::Exactly, i}; }
  static ReachKind plus() { return {Mode::Plus, 1}; }
  static ReachKind at_least(std::size_t k) { return {Mode::AtLeast, k}; }
  /// Union of R^1 .. R^k.
  static ReachKind within(std::size_t k) { return {Mode::Within, k}; }
};

namespace detail {

// (state, shortest path length) pairs sorted by state.
using DistanceList = std::vector<std::pair<StateId, std::size_t>>;

/// Graph searches over one Lts that reuse scratch buffers, so each query
/// costs time proportional to what it touches rather than to |S|.
class Explorer {
 public:
  explicit Explorer(const Lts& lts) : lts_(lts), mark_(lts.size(), 0), dist_(lts.size(), 0) {}

  /// States one step from any state in `from` (sorted).
  std::vector<StateId> image(const std::vector<StateId>& from) {
    std::vector<StateId> out;
    for (StateId s : from)
      for (StateId u : lts_.successors(s))
        if (!mark_[u]) {
          mark_[u] = 1;
          out.push_back(u);
        }
    for (StateId u : out) mark_[u] = 0;
    std::sort(out.begin(), out.end());
    return out;
  }

  /// States reachable from `from` in zero or more steps (sorted).
  std::vector<StateId> closure(const std::vector<StateId>& from) {
    std::vector<StateId> out;
    for (StateId s : from)
      if (!mark_[s]) {
        mark_[s] = 1;
        out.push_back(s);
      }
    for (std::size_t head = 0; head < out.size(); ++head)
      for (StateId u : lts_.successors(out[head]))
        if (!mark_[u]) {
          mark_[u] = 1;
          out.push_back(u);
        }
    for (StateId u : out) mark_[u] = 0;
    std::sort(out.begin(), out.end());
    return out;
  }

  std::vector<StateId> plus(StateId s) { return closure(image({s})); }

  /// Shortest lengths (>= 1) to every state reachable in one or more steps,
  /// optionally cut off at `limit`.
  DistanceList plus_distances(StateId s, std::size_t limit = 0) {
    std::vector<StateId> order;
    for (StateId u : lts_.successors(s)) {
      dist_[u] = 1;
      order.push_back(u);
    }
    for (std::size_t head = 0; head < order.size(); ++head) {
      StateId x = order[head];
      if (limit != 0 && dist_[x] >= limit) continue;
      for (StateId u : lts_.successors(x))
        if (dist_[u] == 0) {
          dist_[u] = dist_[x] + 1;
          order.push_back(u);
        }
    }
    DistanceList out;
    out.reserve(order.size());
    for (StateId v : order) {
      out.emplace_back(v, dist_[v]);
      dist_[v] = 0;
    }
    std::sort(out.begin(), out.end());
    return out;
  }

  /// R^i(s) for i = 1..
  std::vector<StateId> exactly(StateId s, std::size_t i) {
    // The sequence R^1(s), R^2(s), ... is eventually periodic; jump ahead
    // once a set repeats.
    std::map<std::vector<StateId>, std::size_t> seen;
    std::vector<std::vector<StateId>> history;
    std::vector<StateId> current{s};
    for (std::size_t step = 1; step <= i; ++step) {
      current = image(current);
      auto [it, fresh] = seen.emplace(current, step);
      if (!fresh) {
        std::size_t start = it->second;
        std::size_t period = step - start;
        return history[start + (i - start) % period - 1];
      }
      history.push_back(current);
    }
    return current;
  }

  /// States first reached by a walk of exactly `from_len`..`to_len` steps,
  /// with the smallest such walk length.
  DistanceList layered(StateId s, std::size_t from_len, std::size_t to_len) {
    std::vector<StateId> touched;
    std::vector<StateId> layer{s};
    std::set<std::vector<StateId>> seen_layers;
    for (std::size_t len = 1; len <= to_len; ++len) {
      layer = image(layer);
      if (len >= from_len) {
        for (StateId v : layer)
          if (dist_[v] == 0) {
            dist_[v] = len;
            touched.push_back(v);
          }
        if (!seen_layers.insert(layer).second) break;  // layers cycle from here on
      }
    }
    DistanceList out;
    for (StateId v : touched) {
      out.emplace_back(v, dist_[v]);
      dist_[v] = 0;
    }
    std::sort(out.begin(), out.end());
    return out;
  }

  const Lts& lts() const { return lts_; }

 private:
  const Lts& lts_;
  std::vector<char> mark_;
  std::vector<std::size_t> dist_;
};

}  // namespace detail

/// States v with s R^i v, s R^+ v, s R^{>=k} v, or s R^{1..k} v.
inline std::vector<StateId> reach(const Lts& lts, StateId s, ReachKind kind) {
  if (!lts.valid(s))
    throw Error(ErrorCode::InvalidState, "state " + std::to_string(s) + " is unknown");
  if (kind.mode != ReachKind::Mode::Plus && kind.bound < 1)
    throw Error(ErrorCode::InvalidArgument, "reach bound must be at least 1");

  detail::Explorer ex(lts);
  switch (kind.mode) {
    case ReachKind::Mode::Exactly:
      return ex.exactly(s, kind.bound);
    case ReachKind::Mode::AtLeast:
      // R^{>=k} = R^k followed by zero or more steps.
      return ex.closure(ex.exactly(s, kind.bound));
    case ReachKind::Mode::Plus:
      return ex.plus(s);
    case ReachKind::Mode::Within: {
      std::vector<StateId> out;
      for (auto [v, d] : ex.plus_distances(s, kind.bound)) out.push_back(v);
      return out;
    }
  }
  return {};
}

/// C ⊎ A with concrete states first. Concrete states carry the abstract
/// label of their image under the refinement map; no cross edges.
struct DisjointUnion {
  enum class Side { Concrete, Abstract };

  Lts lts;
  std::size_t concrete_size = 0;
  std::size_t abstract_size = 0;

  Side tag_of(StateId s) const {
    return s < concrete_size ? Side::Concrete : Side::Abstract;
  }
  StateId embed_concrete(StateId s) const { return s; }
  StateId embed_abstract(StateId a) const {
    return static_cast<StateId>(concrete_size + a);
  }
  StateId project(StateId s) const {
    return s < concrete_size ? s : static_cast<StateId>(s - concrete_size);
  }
};

inline void validate_refinement_map(const Lts& concrete, const Lts& abstract,
                                    const RefinementMap& r) {
  if (r.size() != concrete.size())
    throw Error(ErrorCode::InvalidRefinementMap,
                "map has " + std::to_string(r.size()) + " entries for " +
                    std::to_string(concrete.size()) + " concrete states");
  for (StateId s = 0; s < r.size(); ++s)
    if (r.image[s] >= abstract.size())
      throw Error(ErrorCode::InvalidRefinementMap,
                  "state " + std::to_string(s) + " maps to " +
                      std::to_string(r.image[s]) + ", outside the abstract system");
}

inline DisjointUnion disjoint_union(const Lts& concrete, const Lts& abstract,
                                    const RefinementMap& r) {
  validate_refinement_map(concrete, abstract, r);
  DisjointUnion u;
  u.concrete_size = concrete.size();
  u.abstract_size = abstract.size();

  std::vector<Transition> edges;
  edges.reserve(concrete.transition_count() + abstract.transition_count());
  for (auto [s, t] : concrete.transitions()) edges.emplace_back(s, t);
  for (auto [a, b] : abstract.transitions())
    edges.emplace_back(u.embed_abstract(a), u.embed_abstract(b));

  std::vector<Label> labels;
  labels.reserve(concrete.size() + abstract.size());
  for (StateId s = 0; s < concrete.size(); ++s) labels.push_back(abstract.label(r(s)));
  for (StateId a = 0; a < abstract.size(); ++a) labels.push_back(abstract.label(a));

  u.lts = build_lts(concrete.size() + abstract.size(), std::move(edges),
                    std::move(labels), concrete.initial());
  return u;
}

}  // namespace skipref
