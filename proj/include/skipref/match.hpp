#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "skipref/detail/scc.hpp"
#include "skipref/error.hpp"
#include "skipref/lts.hpp"

namespace skipref {

/// Finite representation of the fullpath stem · loop^ω.
struct Lasso {
  std::vector<StateId> stem;
  std::vector<StateId> loop;

  std::size_t classes() const { return stem.size() + loop.size(); }

  StateId at(std::size_t i) const {
    if (i < stem.size()) return stem[i];
    return loop[(i - stem.size()) % loop.size()];
  }

  // Position classes fold the loop: class k stands for every index i with
  // at(i) == at(k) by lasso arithmetic.
  std::size_t next_class(std::size_t k) const {
    return k + 1 < classes() ? k + 1 : stem.size();
  }

  StateId head() const { return stem.empty() ? loop.front() : stem.front(); }

  friend bool operator==(const Lasso&, const Lasso&) = default;
  friend auto operator<=>(const Lasso&, const Lasso&) = default;
};

inline bool is_valid_lasso(const Lts& lts, const Lasso& lasso) {
  if (lasso.loop.empty()) return false;
  for (StateId s : lasso.stem)
    if (!lts.valid(s)) return false;
  for (StateId s : lasso.loop)
    if (!lts.valid(s)) return false;
  for (std::size_t k = 0; k < lasso.classes(); ++k)
    if (!lts.has_transition(lasso.at(k), lasso.at(lasso.next_class(k))))
      return false;
  return true;
}

/// Strictly increasing sequence of naturals starting at 0, given as a finite
/// list of cuts plus an optional periodic tail: cuts[period_start..] repeat
/// forever, shifted by `stride` per repetition. With period_start ==
/// cuts.size() there is no tail and only the listed cuts exist.
struct PartitionIndex {
  std::vector<std::size_t> cuts{0};
  std::size_t period_start = 0;
  std::size_t stride = 1;

  /// (0, 1, 2, ...)
  static PartitionIndex unit() { return {{0}, 0, 1}; }

  bool periodic() const { return period_start < cuts.size(); }
  std::size_t period_length() const {
    return periodic() ? cuts.size() - period_start : 0;
  }

  bool valid() const {
    if (cuts.empty() || cuts.front() != 0) return false;
    for (std::size_t i = 1; i < cuts.size(); ++i)
      if (cuts[i] <= cuts[i - 1]) return false;
    if (period_start > cuts.size()) return false;
    if (periodic()) {
      if (stride < 1) return false;
      if (cuts[period_start] + stride <= cuts.back()) return false;
    }
    return true;
  }

  /// Number of resolvable cuts; max() when periodic.
  std::size_t resolvable() const {
    return periodic() ? std::numeric_limits<std::size_t>::max() : cuts.size();
  }

  std::size_t at(std::size_t i) const {
    if (i < cuts.size()) return cuts[i];
    if (!periodic())
      throw Error(ErrorCode::IndexOutOfRange,
                  "cut " + std::to_string(i) + " beyond a finite partition index");
    std::size_t offset = i - period_start;
    std::size_t rep = offset / period_length();
    return cuts[period_start + offset % period_length()] + rep * stride;
  }

  friend bool operator==(const PartitionIndex&, const PartitionIndex&) = default;
};

/// The i-th segment of `sigma` with respect to `pi`.
inline std::vector<StateId> segment_of(const Lasso& sigma, const PartitionIndex& pi,
                                       std::size_t i) {
  if (!pi.valid())
    throw Error(ErrorCode::InvalidArgument, "partition index is not strictly increasing from 0");
  if (sigma.loop.empty())
    throw Error(ErrorCode::InvalidArgument, "lasso loop must be non-empty");
  if (pi.resolvable() != std::numeric_limits<std::size_t>::max() &&
      i + 1 >= pi.resolvable())
    throw Error(ErrorCode::IndexOutOfRange,
                "segment " + std::to_string(i) + " needs cut " + std::to_string(i + 1));
  std::size_t from = pi.at(i), to = pi.at(i + 1);
  std::vector<StateId> out;
  out.reserve(to - from);
  for (std::size_t j = from; j < to; ++j) out.push_back(sigma.at(j));
  return out;
}

struct MatchWitness {
  PartitionIndex pi;
  PartitionIndex xi;
  Lasso delta;

  friend bool operator==(const MatchWitness&, const MatchWitness&) = default;
};

/// Why no matching fullpath exists: the reachable product nodes without
/// any outgoing edge, as (sigma position class, abstract state).
struct NoMatch {
  std::vector<std::pair<std::size_t, StateId>> frontier;
  std::size_t explored = 0;
  std::string reason;
};

struct MatchResult {
  std::optional<MatchWitness> witness;
  NoMatch failure;

  bool matched() const { return witness.has_value(); }
  explicit operator bool() const { return matched(); }
};

/// Checks corr(B, sigma, pi, delta, xi) on the first `segments` segments.
inline bool corr_holds(const Relation& B, const Lasso& sigma, const PartitionIndex& pi,
                       const Lasso& delta, const PartitionIndex& xi,
                       std::size_t segments) {
  for (std::size_t i = 0; i < segments; ++i) {
    StateId head = delta.at(xi.at(i));
    for (std::size_t j = pi.at(i); j < pi.at(i + 1); ++j)
      if (!B.contains(sigma.at(j), head)) return false;
  }
  return true;
}

/// Independent check of a witness: delta is a fullpath from w, pi and xi are
/// periodic INC sequences whose tails line up with the lasso loops, and corr
/// holds on the stem plus one full period (which covers every segment by
/// periodicity).
inline bool verify_witness(const Lts& lts, const Relation& B, const Lasso& sigma,
                           StateId w, const MatchWitness& m) {
  if (!is_valid_lasso(lts, sigma) || !is_valid_lasso(lts, m.delta)) return false;
  if (m.delta.head() != w) return false;
  if (!m.pi.valid() || !m.xi.valid() || !m.pi.periodic() || !m.xi.periodic())
    return false;
  if (m.pi.period_start != m.xi.period_start ||
      m.pi.period_length() != m.xi.period_length())
    return false;
  auto tail_aligned = [](const Lasso& path, const PartitionIndex& idx) {
    return idx.cuts[idx.period_start] >= path.stem.size() &&
           idx.stride % path.loop.size() == 0;
  };
  if (!tail_aligned(sigma, m.pi) || !tail_aligned(m.delta, m.xi)) return false;
  return corr_holds(B, sigma, m.pi, m.delta, m.xi,
                    m.pi.period_start + m.pi.period_length());
}

/// Decides match(B, sigma, delta) for some fullpath delta from w, by
/// searching the product of sigma position classes and abstract segment
/// heads. Precomputes the transitive successor sets of every state.
class Matcher {
 public:
  Matcher(const Lts& lts, const Relation& B) : lts_(lts), B_(B), plus_(lts.size()) {
    detail::Explorer ex(lts);
    for (StateId s = 0; s < lts.size(); ++s) plus_[s] = ex.plus(s);
  }

  const Lts& lts() const { return lts_; }
  const Relation& relation() const { return B_; }

  MatchResult find(const Lasso& sigma, StateId w) const {
    if (!is_valid_lasso(lts_, sigma))
      throw Error(ErrorCode::InvalidArgument, "sigma is not a lasso of the system");
    if (!lts_.valid(w))
      throw Error(ErrorCode::InvalidState, "state " + std::to_string(w) + " is unknown");

    MatchResult result;
    if (!B_.contains(sigma.at(0), w)) {
      result.failure.reason = "start pair (" + std::to_string(sigma.at(0)) + "," +
                              std::to_string(w) + ") is not related";
      return result;
    }

    Product g = explore(sigma, w);
    result.failure.explored = g.nodes.size();

    auto scc = detail::strongly_connected(g.nodes.size(), g.adj);
    for (std::size_t v = 0; v < g.nodes.size(); ++v) {
      for (std::size_t e = 0; e < g.adj[v].size(); ++e) {
        std::size_t t = g.adj[v][e];
        if (g.advance[v][e] && scc.component[t] == scc.component[v]) {
          result.witness = reconstruct(w, g, scc, v, e);
          return result;
        }
      }
    }
    for (std::size_t v = 0; v < g.nodes.size(); ++v)
      if (g.adj[v].empty()) result.failure.frontier.push_back(g.nodes[v]);
    result.failure.reason = "no reachable product cycle advances the abstract path";
    return result;
  }

 private:
  struct Product {
    std::vector<std::pair<std::size_t, StateId>> nodes;  // (class, head)
    std::vector<std::vector<std::size_t>> adj;
    std::vector<std::vector<char>> advance;
    std::vector<std::size_t> parent;       // BFS tree from the start node
    std::vector<std::size_t> parent_edge;  // index into adj[parent]
  };

  Product explore(const Lasso& sigma, StateId w) const {
    Product g;
    std::unordered_map<std::uint64_t, std::size_t> index;
    const std::uint64_t n = lts_.size();
    auto intern = [&](std::size_t k, StateId a, std::size_t from, std::size_t edge) {
      auto [it, fresh] = index.emplace(k * n + a, g.nodes.size());
      if (fresh) {
        g.nodes.emplace_back(k, a);
        g.adj.emplace_back();
        g.advance.emplace_back();
        g.parent.push_back(from);
        g.parent_edge.push_back(edge);
      }
      return it->second;
    };
    constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();
    intern(0, w, kNone, kNone);
    for (std::size_t head = 0; head < g.nodes.size(); ++head) {
      auto [k, a] = g.nodes[head];
      std::size_t next = sigma.next_class(k);
      StateId x = sigma.at(next);
      auto add = [&](StateId target, bool adv) {
        std::size_t edge = g.adj[head].size();
        std::size_t t = intern(next, target, head, edge);
        g.adj[head].push_back(t);
        g.advance[head].push_back(adv ? 1 : 0);
      };
      if (B_.contains(x, a)) add(a, false);
      for (StateId v : plus_[a])
        if (B_.contains(x, v)) add(v, true);
    }
    return g;
  }

  // Shortest path a ->+ b (at least one step), lowest ids first on ties.
  std::vector<StateId> path_between(StateId a, StateId b) const {
    std::vector<StateId> parent(lts_.size(), std::numeric_limits<StateId>::max());
    std::vector<char> seen(lts_.size(), 0);
    std::vector<StateId> queue;
    for (StateId u : lts_.successors(a))
      if (!seen[u]) {
        seen[u] = 1;
        parent[u] = a;
        queue.push_back(u);
      }
    for (std::size_t head = 0; head < queue.size() && !seen[b]; ++head) {
      StateId x = queue[head];
      for (StateId u : lts_.successors(x))
        if (!seen[u]) {
          seen[u] = 1;
          parent[u] = x;
          queue.push_back(u);
        }
    }
    std::vector<StateId> path{b};
    StateId cur = b;
    // Walk back until the first step out of a.
    while (true) {
      StateId p = parent[cur];
      path.push_back(p);
      if (p == a && path.size() >= 2) break;
      cur = p;
    }
    std::reverse(path.begin(), path.end());
    return path;  // a, ..., b
  }

  struct Edge {
    std::size_t from, to;
    bool advance;
  };

  MatchWitness reconstruct(StateId w, const Product& g,
                           const detail::SccResult& scc, std::size_t src,
                           std::size_t edge_idx) const {
    constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();
    std::size_t tgt = g.adj[src][edge_idx];

    // Stem: BFS tree path from the start node to src, then the chosen edge.
    std::vector<Edge> stem;
    for (std::size_t v = src; g.parent[v] != kNone; v = g.parent[v]) {
      std::size_t p = g.parent[v];
      stem.push_back({p, v, g.advance[p][g.parent_edge[v]] != 0});
    }
    std::reverse(stem.begin(), stem.end());
    stem.push_back({src, tgt, true});

    // Cycle: path tgt -> src inside the component, closed by the chosen edge.
    std::vector<Edge> cycle;
    if (tgt != src) {
      std::vector<std::size_t> prev(g.nodes.size(), kNone), prev_edge(g.nodes.size(), kNone);
      std::vector<char> seen(g.nodes.size(), 0);
      std::vector<std::size_t> queue{tgt};
      seen[tgt] = 1;
      for (std::size_t h = 0; h < queue.size() && !seen[src]; ++h) {
        std::size_t v = queue[h];
        for (std::size_t e = 0; e < g.adj[v].size(); ++e) {
          std::size_t t = g.adj[v][e];
          if (seen[t] || scc.component[t] != scc.component[src]) continue;
          seen[t] = 1;
          prev[t] = v;
          prev_edge[t] = e;
          queue.push_back(t);
        }
      }
      for (std::size_t v = src; v != tgt; v = prev[v])
        cycle.push_back({prev[v], v, g.advance[prev[v]][prev_edge[v]] != 0});
      std::reverse(cycle.begin(), cycle.end());
    }
    cycle.push_back({src, tgt, true});

    MatchWitness m;
    m.pi.cuts = {0};
    m.xi.cuts = {0};
    std::size_t sigma_pos = 0;
    StateId segment_head = w;
    std::vector<StateId>* out = &m.delta.stem;
    auto walk = [&](const std::vector<Edge>& edges, bool in_cycle) {
      for (std::size_t i = 0; i < edges.size(); ++i) {
        const Edge& e = edges[i];
        ++sigma_pos;
        if (!e.advance) continue;
        StateId next_head = g.nodes[e.to].second;
        auto path = path_between(segment_head, next_head);
        out->insert(out->end(), path.begin(), path.end() - 1);
        segment_head = next_head;
        bool wraps = in_cycle && i + 1 == edges.size();
        if (!wraps) {
          m.pi.cuts.push_back(sigma_pos);
          m.xi.cuts.push_back(m.delta.stem.size() + m.delta.loop.size());
        }
      }
    };
    walk(stem, false);
    m.pi.period_start = m.pi.cuts.size() - 1;
    m.xi.period_start = m.xi.cuts.size() - 1;
    out = &m.delta.loop;
    walk(cycle, true);
    m.pi.stride = cycle.size();
    m.xi.stride = m.delta.loop.size();
    return m;
  }

  const Lts& lts_;
  const Relation& B_;
  std::vector<std::vector<StateId>> plus_;
};

/// One-shot form of Matcher::find; verifies the witness before returning.
inline MatchResult find_match(const Lts& lts, const Relation& B, const Lasso& sigma,
                              StateId w) {
  Matcher matcher(lts, B);
  MatchResult r = matcher.find(sigma, w);
  if (r.witness && !verify_witness(lts, B, sigma, w, *r.witness))
    throw std::logic_error("find_match produced a witness that fails corr");
  return r;
}

/// Streams every lasso from `start` with |stem| <= max_stem and
/// 1 <= |loop| <= max_loop, ordered by (stem length, loop length, states).
class LassoStream {
 public:
  LassoStream(const Lts& lts, StateId start, std::size_t max_stem, std::size_t max_loop)
      : lts_(lts), start_(start), max_stem_(max_stem), max_loop_(max_loop) {
    if (!lts.valid(start))
      throw Error(ErrorCode::InvalidState, "state " + std::to_string(start) + " is unknown");
  }

  std::optional<Lasso> next() {
    while (cursor_ >= batch_.size()) {
      if (!advance_shape()) return std::nullopt;
      fill_batch();
    }
    return batch_[cursor_++];
  }

 private:
  bool advance_shape() {
    if (max_loop_ == 0) return false;
    if (!started_) {
      started_ = true;
      stem_len_ = 0;
      loop_len_ = 1;
      return true;
    }
    if (++loop_len_ > max_loop_) {
      loop_len_ = 1;
      if (++stem_len_ > max_stem_) return false;
    }
    return true;
  }

  void fill_batch() {
    batch_.clear();
    cursor_ = 0;
    std::size_t total = stem_len_ + loop_len_;
    std::vector<StateId> seq{start_};
    std::vector<std::size_t> choice{0};
    // Depth-first over sequences of `total` states, successors in id order.
    while (!seq.empty()) {
      if (seq.size() == total) {
        StateId loop_head = seq[stem_len_];
        if (lts_.has_transition(seq.back(), loop_head)) {
          Lasso l;
          l.stem.assign(seq.begin(), seq.begin() + stem_len_);
          l.loop.assign(seq.begin() + stem_len_, seq.end());
          batch_.push_back(std::move(l));
        }
        seq.pop_back();
        choice.pop_back();
        continue;
      }
      auto succ = lts_.successors(seq.back());
      std::size_t& c = choice.back();
      if (c < succ.size()) {
        seq.push_back(succ[c++]);
        choice.push_back(0);
      } else {
        seq.pop_back();
        choice.pop_back();
      }
    }
  }

  const Lts& lts_;
  StateId start_;
  std::size_t max_stem_, max_loop_;
  bool started_ = false;
  std::size_t stem_len_ = 0, loop_len_ = 0;
  std::vector<Lasso> batch_;
  std::size_t cursor_ = 0;
};

inline LassoStream enumerate_lassos(const Lts& lts, StateId s, std::size_t max_stem,
                                    std::size_t max_loop) {
  return LassoStream(lts, s, max_stem, max_loop);
}

}  // namespace skipref
