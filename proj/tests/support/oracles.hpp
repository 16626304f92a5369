#pragma once

// Reference computations used to judge the library. They share no code with
// the algorithms under test beyond the data types.

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "skipref/skipref.hpp"

namespace oracle {

using skipref::Lasso;
using skipref::Lts;
using skipref::Relation;
using skipref::StateId;

using Matrix = std::vector<std::vector<char>>;

inline Matrix adjacency(const Lts& l) {
  Matrix m(l.size(), std::vector<char>(l.size(), 0));
  for (auto [s, u] : l.transitions()) m[s][u] = 1;
  return m;
}

inline Matrix compose(const Matrix& a, const Matrix& b) {
  std::size_t n = a.size();
  Matrix out(n, std::vector<char>(n, 0));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t k = 0; k < n; ++k)
      if (a[i][k])
        for (std::size_t j = 0; j < n; ++j)
          if (b[k][j]) out[i][j] = 1;
  return out;
}

/// Rows of R^1 .. R^max by repeated composition.
inline std::vector<Matrix> powers(const Lts& l, std::size_t max) {
  std::vector<Matrix> out{adjacency(l)};
  while (out.size() < max) out.push_back(compose(out.back(), out.front()));
  return out;
}

inline std::set<StateId> row(const Matrix& m, StateId s) {
  std::set<StateId> out;
  for (StateId v = 0; v < m.size(); ++v)
    if (m[s][v]) out.insert(v);
  return out;
}

/// s R^i v for some i in [lo, hi].
inline std::set<StateId> reach_between(const Lts& l, StateId s, std::size_t lo, std::size_t hi) {
  auto p = powers(l, hi);
  std::set<StateId> out;
  for (std::size_t i = lo; i <= hi; ++i)
    for (StateId v : row(p[i - 1], s)) out.insert(v);
  return out;
}

/// The product graph of the match search built naively: nodes (k, a) with
/// sigma(k) B a; STAY and ADVANCE edges as in the definition. A match
/// exists iff some reachable ADVANCE edge lies on a cycle. Reachability by
/// Floyd-Warshall closure.
inline bool has_match(const Lts& l, const Relation& B, const Lasso& sigma, StateId w) {
  std::size_t K = sigma.stem.size() + sigma.loop.size();
  auto next = [&](std::size_t k) { return k + 1 < K ? k + 1 : sigma.stem.size(); };
  auto state = [&](std::size_t k) {
    return k < sigma.stem.size() ? sigma.stem[k] : sigma.loop[k - sigma.stem.size()];
  };
  std::size_t n = l.size();
  std::size_t N = K * n;
  auto id = [&](std::size_t k, StateId a) { return k * n + a; };
  std::vector<std::set<StateId>> plus_of(n);
  for (StateId a = 0; a < n; ++a) plus_of[a] = reach_between(l, a, 1, n);

  Matrix reach(N, std::vector<char>(N, 0));
  std::vector<std::pair<std::size_t, std::size_t>> advances;
  for (std::size_t k = 0; k < K; ++k)
    for (StateId a = 0; a < n; ++a) {
      if (!B.contains(state(k), a)) continue;
      std::size_t k2 = next(k);
      if (B.contains(state(k2), a)) reach[id(k, a)][id(k2, a)] = 1;
      for (StateId b : plus_of[a])
        if (B.contains(state(k2), b)) {
          reach[id(k, a)][id(k2, b)] = 1;
          advances.emplace_back(id(k, a), id(k2, b));
        }
    }
  for (std::size_t m = 0; m < N; ++m)
    for (std::size_t i = 0; i < N; ++i)
      if (reach[i][m])
        for (std::size_t j = 0; j < N; ++j)
          if (reach[m][j]) reach[i][j] = 1;
  if (!B.contains(state(0), w)) return false;
  std::size_t start = id(0, w);
  for (auto [x, y] : advances) {
    bool reachable = x == start || reach[start][x];
    bool on_cycle = y == x || reach[y][x];
    if (reachable && on_cycle) return true;
  }
  return false;
}

/// Every lasso from s with stem and loop lengths bounded, enumerated by
/// brute force over all state sequences.
inline std::vector<Lasso> all_lassos(const Lts& l, StateId s, std::size_t max_stem,
                                     std::size_t max_loop) {
  std::vector<Lasso> out;
  // Extend seq to every path of length up to max_stem + max_loop from s and
  // split it into stem and loop in every way that closes the loop.
  std::vector<std::vector<StateId>> paths{{s}};
  for (std::size_t len = 1; len < max_stem + max_loop; ++len) {
    std::vector<std::vector<StateId>> longer;
    for (const auto& p : paths)
      if (p.size() == len)
        for (StateId u : l.successors(p.back())) {
          longer.push_back(p);
          longer.back().push_back(u);
        }
    paths.insert(paths.end(), longer.begin(), longer.end());
  }
  for (const auto& p : paths)
    for (std::size_t stem = 0; stem <= max_stem && stem < p.size(); ++stem) {
      std::size_t loop = p.size() - stem;
      if (loop < 1 || loop > max_loop) continue;
      if (!l.has_transition(p.back(), p[stem])) continue;
      out.push_back(Lasso{{p.begin(), p.begin() + static_cast<std::ptrdiff_t>(stem)},
                          {p.begin() + static_cast<std::ptrdiff_t>(stem), p.end()}});
    }
  return out;
}

/// Largest skipping simulation by brute force over subsets of label-equal
/// pairs: a subset is accepted when every lasso from every related left
/// state (stem, loop <= |S|) has a match. The union of accepted subsets is
/// the answer. Only for tiny systems.
inline Relation largest_sks_brute(const Lts& l) {
  std::vector<std::pair<StateId, StateId>> cand;
  for (StateId s = 0; s < l.size(); ++s)
    for (StateId w = 0; w < l.size(); ++w)
      if (l.label(s) == l.label(w)) cand.emplace_back(s, w);
  std::vector<std::vector<Lasso>> lassos(l.size());
  for (StateId s = 0; s < l.size(); ++s) lassos[s] = all_lassos(l, s, l.size(), l.size());
  Relation best(l.size());
  for (std::uint64_t mask = 1; mask < (std::uint64_t{1} << cand.size()); ++mask) {
    Relation B(l.size());
    for (std::size_t i = 0; i < cand.size(); ++i)
      if (mask >> i & 1) B.insert(cand[i].first, cand[i].second);
    bool ok = true;
    for (std::size_t i = 0; i < cand.size() && ok; ++i) {
      if (!(mask >> i & 1)) continue;
      for (const auto& sigma : lassos[cand[i].first])
        if (!has_match(l, B, sigma, cand[i].second)) {
          ok = false;
          break;
        }
    }
    if (ok)
      for (auto [s, w] : B.pairs()) best.insert(s, w);
  }
  return best;
}

/// Runs a deterministic system from `s` until it reaches a state whose only
/// successor is itself; nullopt when that does not happen within |S| steps.
inline std::optional<StateId> final_state(const Lts& l, StateId s) {
  for (std::size_t i = 0; i <= l.size(); ++i) {
    auto succ = l.successors(s);
    if (succ.size() != 1) return std::nullopt;
    if (succ[0] == s) return s;
    s = succ[0];
  }
  return std::nullopt;
}

/// Input/output equivalence of a (possibly faulty) buffered machine and its
/// abstract machine: from every initial state both runs terminate, and the
/// concrete final state maps to the abstract final state of the run from
/// the image of the initial state.
inline bool io_equivalent(const skipref::models::Model& concrete,
                          const skipref::models::Model& abstract) {
  std::map<std::string, StateId> index;
  for (StateId a = 0; a < abstract.states.size(); ++a) index[abstract.states[a].dump()] = a;
  for (StateId s : concrete.lts.initial()) {
    auto fc = final_state(concrete.lts, s);
    auto start = index.find(skipref::models::image_tuple(concrete.kind, concrete.states[s]).dump());
    if (!fc || start == index.end()) return false;
    auto fa = final_state(abstract.lts, start->second);
    if (!fa) return false;
    if (skipref::models::image_tuple(concrete.kind, concrete.states[*fc]) != abstract.states[*fa])
      return false;
  }
  return true;
}

// Straight-line programs, evaluated over a name -> value map.
using Store = std::map<std::string, std::uint64_t>;

inline std::uint64_t apply(skipref::tv::ArithOp op, std::uint64_t x, std::uint64_t y, unsigned bits) {
  std::uint64_t m = (std::uint64_t{1} << bits) - 1;
  switch (op) {
    case skipref::tv::ArithOp::Add: return (x + y) & m;
    case skipref::tv::ArithOp::Sub: return (x - y) & m;
    case skipref::tv::ArithOp::Mul: return (x * y) & m;
  }
  return 0;
}

inline std::uint64_t value_of(const skipref::tv::ScalarInstr& i, const Store& st, unsigned bits) {
  using K = skipref::tv::ScalarInstr::Kind;
  switch (i.kind) {
    case K::Arith: return apply(i.op, st.at(i.a), st.at(i.b), bits);
    case K::Const: return i.value & ((std::uint64_t{1} << bits) - 1);
    case K::Load:
    case K::Store: return st.at(i.a);
  }
  return 0;
}

inline Store run(const skipref::tv::ScalarProgram& p, Store st, unsigned bits) {
  for (const auto& i : p.instrs) st[i.dst] = value_of(i, st, bits);
  return st;
}

inline Store run(const skipref::tv::VectorProgram& p, Store st, unsigned bits) {
  for (const auto& vi : p.instrs) {
    Store pre = st;
    st[vi.lane[0].dst] = value_of(vi.lane[0], pre, bits);
    if (vi.packed) st[vi.lane[1].dst] = value_of(vi.lane[1], pre, bits);
  }
  return st;
}

/// Both programs end in the same store from every initial store.
inline bool same_final_stores(const skipref::tv::ScalarProgram& src,
                              const skipref::tv::VectorProgram& tgt, unsigned bits) {
  const auto& regs = src.registers;
  std::uint64_t D = std::uint64_t{1} << bits, total = 1;
  for (std::size_t k = 0; k < regs.size(); ++k) total *= D;
  for (std::uint64_t code = 0; code < total; ++code) {
    Store st;
    std::uint64_t c = code;
    for (const auto& r : regs) {
      st[r] = c % D;
      c /= D;
    }
    if (run(src, st, bits) != run(tgt, st, bits)) return false;
  }
  return true;
}

}  // namespace oracle
