#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "skipref/detail/scc.hpp"
#include "skipref/error.hpp"
#include "skipref/lts.hpp"
#include "skipref/wfsk.hpp"

namespace skipref {

/// How far a single step may skip ahead on the matching side. Unbounded
/// means exact ->+; a bound of 1 only allows single-step matches.
struct SimOptions {
  std::optional<std::size_t> max_skip;

  static SimOptions unbounded() { return {}; }
  static SimOptions bounded(std::size_t k) { return {k}; }

  bool is_bounded() const { return max_skip.has_value(); }

  friend bool operator==(const SimOptions&, const SimOptions&) = default;
};

/// For a fixed w: nodes {s : s B w}, edges s -> u of the system with u B w
/// where u has no related state reachable from w, so only a rank decrease
/// can justify the step.
struct ForcedStutterGraph {
  StateId w = 0;
  std::vector<StateId> nodes;
  std::vector<Transition> edges;
};

enum class PrunePass { Local, Divergence };

inline std::string_view to_string(PrunePass p) {
  return p == PrunePass::Local ? "local" : "divergence";
}

/// Why a pair left the relation: which pass removed it, in which pass
/// invocation (epochs count from 1), and the successor of s responsible.
struct Pruning {
  PrunePass pass = PrunePass::Local;
  std::size_t epoch = 0;
  StateId successor = 0;
};

struct SimResult {
  Relation relation;
  std::unordered_map<std::uint64_t, Pruning> pruned;
  std::size_t epochs = 0;

  std::optional<Pruning> pruning_of(StateId s, StateId w) const {
    auto it = pruned.find((static_cast<std::uint64_t>(s) << 32) | w);
    if (it == pruned.end()) return std::nullopt;
    return it->second;
  }
};

namespace detail {

/// Pair marked for removal together with the successor that condemns it.
struct Condemned {
  StateId s, w, successor;
};

/// Working state of the fixpoint: the candidate relation plus, for every
/// w, the states reachable from w within the skip bound.
class SimCore {
 public:
  SimCore(const Lts& lts, const SimOptions& opts, Relation initial)
      : lts_(lts), reach_(lts.size()), B_(std::move(initial)) {
    if (opts.max_skip && *opts.max_skip < 1)
      throw Error(ErrorCode::InvalidArgument, "max_skip must be at least 1");
    check_relation_shape(lts, B_);
    Explorer ex(lts);
    for (StateId w = 0; w < lts.size(); ++w) {
      if (!opts.max_skip) {
        reach_[w] = ex.plus(w);
      } else {
        for (auto [v, d] : ex.plus_distances(w, *opts.max_skip)) reach_[w].push_back(v);
      }
    }
  }

  /// Pairs of label-equal states: the starting point of the fixpoint.
  static Relation label_equal_pairs(const Lts& lts) {
    std::map<std::string_view, std::vector<StateId>> classes;
    for (StateId s = 0; s < lts.size(); ++s) classes[lts.label(s).canonical].push_back(s);
    Relation r(lts.size());
    for (const auto& [label, members] : classes)
      for (StateId s : members) r.set_row(s, members);
    return r;
  }

  const Relation& relation() const { return B_; }
  const Lts& lts() const { return lts_; }

  /// Some v with w ->^{1..max_skip} v and u B v.
  bool escape(StateId u, StateId w) const {
    auto row = B_.row(u);
    const auto& targets = reach_[w];
    if (row.size() <= targets.size()) {
      for (StateId v : row)
        if (std::binary_search(targets.begin(), targets.end(), v)) return true;
    } else {
      for (StateId v : targets)
        if (B_.contains(u, v)) return true;
    }
    return false;
  }

  /// Pairs (s,w) with a successor u of s such that neither u B w nor an
  /// escape exists.
  std::vector<Condemned> local_violations() const {
    std::vector<Condemned> out;
    for (StateId s = 0; s < lts_.size(); ++s)
      for (StateId w : B_.row(s))
        for (StateId u : lts_.successors(s))
          if (!B_.contains(u, w) && !escape(u, w)) {
            out.push_back({s, w, u});
            break;
          }
    return out;
  }

  /// Columns of the relation: for each w, the sorted states s with s B w.
  std::vector<std::vector<StateId>> columns() const {
    std::vector<std::vector<StateId>> cols(lts_.size());
    for (StateId s = 0; s < lts_.size(); ++s)
      for (StateId w : B_.row(s)) cols[w].push_back(s);
    return cols;
  }

  /// Forced-stutter graph over `nodes` (the column of w) as local adjacency.
  std::vector<std::vector<std::size_t>> forced_edges(StateId w,
                                                     const std::vector<StateId>& nodes) {
    if (pos_.size() != lts_.size()) pos_.assign(lts_.size(), kNoPos);
    for (std::size_t i = 0; i < nodes.size(); ++i) pos_[nodes[i]] = i;
    std::vector<std::vector<std::size_t>> adj(nodes.size());
    for (std::size_t i = 0; i < nodes.size(); ++i)
      for (StateId u : lts_.successors(nodes[i]))
        if (pos_[u] != kNoPos && !escape(u, w)) adj[i].push_back(pos_[u]);
    for (StateId s : nodes) pos_[s] = kNoPos;
    return adj;
  }

  /// Pairs (s,w) where s can reach a cycle of the forced-stutter graph of w.
  std::vector<Condemned> divergence_violations() {
    std::vector<Condemned> out;
    auto cols = columns();
    for (StateId w = 0; w < lts_.size(); ++w) {
      const auto& nodes = cols[w];
      if (nodes.empty()) continue;
      auto adj = forced_edges(w, nodes);
      auto bad = reaches_cycle(nodes.size(), adj);
      for (std::size_t i = 0; i < nodes.size(); ++i) {
        if (!bad[i]) continue;
        StateId culprit = nodes[i];
        for (std::size_t j : adj[i])
          if (bad[j]) {
            culprit = nodes[j];
            break;
          }
        out.push_back({nodes[i], w, culprit});
      }
    }
    std::sort(out.begin(), out.end(), [](const Condemned& a, const Condemned& b) {
      return std::pair(a.s, a.w) < std::pair(b.s, b.w);
    });
    return out;
  }

  void remove(const std::vector<Condemned>& pairs) {
    for (const auto& c : pairs) B_.erase(c.s, c.w);
  }

 private:
  static constexpr std::size_t kNoPos = static_cast<std::size_t>(-1);
  const Lts& lts_;
  std::vector<std::vector<StateId>> reach_;
  Relation B_;
  std::vector<std::size_t> pos_;
};

inline std::uint64_t pair_key(StateId s, StateId w) {
  return (static_cast<std::uint64_t>(s) << 32) | w;
}

}  // namespace detail

/// Largest skipping simulation (for unbounded max_skip) with the pruning
/// history of every removed label-equal pair.
inline SimResult largest_sks_traced(const Lts& lts, const SimOptions& opts = {}) {
  detail::SimCore core(lts, opts, detail::SimCore::label_equal_pairs(lts));
  SimResult result;
  auto record = [&](const std::vector<detail::Condemned>& pairs, PrunePass pass) {
    ++result.epochs;
    for (const auto& c : pairs)
      result.pruned.emplace(detail::pair_key(c.s, c.w),
                            Pruning{pass, result.epochs, c.successor});
    core.remove(pairs);
  };
  while (true) {
    auto local = core.local_violations();
    if (!local.empty()) record(local, PrunePass::Local);
    auto divergent = core.divergence_violations();
    if (!divergent.empty()) record(divergent, PrunePass::Divergence);
    if (local.empty() && divergent.empty()) break;
  }
  result.relation = core.relation();
  return result;
}

inline Relation largest_sks(const Lts& lts, const SimOptions& opts = {}) {
  return largest_sks_traced(lts, opts).relation;
}

inline ForcedStutterGraph forced_stutter_graph(const Lts& lts, const Relation& B, StateId w,
                                               const SimOptions& opts = {}) {
  if (!lts.valid(w))
    throw Error(ErrorCode::InvalidState, "state " + std::to_string(w) + " is unknown");
  detail::SimCore core(lts, opts, B);
  ForcedStutterGraph g;
  g.w = w;
  for (StateId s = 0; s < lts.size(); ++s)
    if (B.contains(s, w)) g.nodes.push_back(s);
  auto adj = core.forced_edges(w, g.nodes);
  for (std::size_t i = 0; i < g.nodes.size(); ++i)
    for (std::size_t j : adj[i]) g.edges.emplace_back(g.nodes[i], g.nodes[j]);
  return g;
}

/// rankt(s,w) = length of the longest path from s in the forced-stutter
/// graph of w. Throws CyclicForcedStutter when such a graph has a cycle.
inline RanktTable extract_rankt(const Lts& lts, const Relation& B) {
  detail::SimCore core(lts, SimOptions::unbounded(), B);
  auto cols = core.columns();
  RanktTable table;
  for (StateId w = 0; w < lts.size(); ++w) {
    const auto& nodes = cols[w];
    if (nodes.empty()) continue;
    auto adj = core.forced_edges(w, nodes);
    auto scc = detail::strongly_connected(nodes.size(), adj);
    if (scc.count != nodes.size())
      throw Error(ErrorCode::CyclicForcedStutter,
                  "forced-stutter graph of state " + std::to_string(w) + " has a cycle");
    std::vector<std::size_t> by_component(nodes.size());
    for (std::size_t i = 0; i < nodes.size(); ++i) by_component[scc.component[i]] = i;
    std::vector<Rank> rank(nodes.size(), 0);
    // Component ids complete sinks-first, so successors are ranked first.
    for (std::size_t c = 0; c < nodes.size(); ++c) {
      std::size_t i = by_component[c];
      for (std::size_t j : adj[i]) {
        if (j == i)
          throw Error(ErrorCode::CyclicForcedStutter,
                      "state " + std::to_string(nodes[i]) + " stutters forever against " +
                          std::to_string(w));
        rank[i] = std::max(rank[i], rank[j] + 1);
      }
    }
    for (std::size_t i = 0; i < nodes.size(); ++i) table.set(nodes[i], w, rank[i]);
  }
  return table;
}

}  // namespace skipref
