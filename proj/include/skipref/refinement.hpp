#pragma once

#include <algorithm>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "skipref/error.hpp"
#include "skipref/lts.hpp"
#include "skipref/sim.hpp"
#include "skipref/wfsk.hpp"

namespace skipref {

enum class Status { Holds, Fails, UnknownBeyondBound };

inline std::string_view to_string(Status s) {
  switch (s) {
    case Status::Holds: return "Holds";
    case Status::Fails: return "Fails";
    case Status::UnknownBeyondBound: return "UnknownBeyondBound";
  }
  return "Unknown";
}

struct Witness {
  Relation relation;  // over the disjoint union, concrete states first
  RanktTable rankt;

  friend bool operator==(const Witness&, const Witness&) = default;
};

/// Why one abstract state cannot answer the offending step.
struct CandidateDiagnosis {
  StateId state = 0;       // abstract id
  std::size_t distance = 0;  // 0 for the stutter candidate r(s) itself
  std::string label;
  std::string failed;  // "a" or "b"
  std::string why;

  friend bool operator==(const CandidateDiagnosis&, const CandidateDiagnosis&) = default;
};

struct CounterTrace {
  std::vector<StateId> stem;  // concrete path ending in step.first
  Transition step{0, 0};
  StateId image = 0;  // abstract r(step.first)
  PrunePass pass = PrunePass::Local;
  std::size_t epoch = 0;
  std::string reason;
  std::string label_s, label_u;
  std::vector<CandidateDiagnosis> candidates;

  friend bool operator==(const CounterTrace&, const CounterTrace&) = default;
};

struct Verdict {
  Status status = Status::Holds;
  bool reachable_only = false;
  std::optional<std::size_t> max_skip;  // nullopt = unbounded
  std::size_t concrete_size = 0;
  std::optional<Witness> witness;
  std::optional<CounterTrace> counterexample;

  bool holds() const { return status == Status::Holds; }

  friend bool operator==(const Verdict&, const Verdict&) = default;
};

namespace detail {

// Concrete states the verdict quantifies over, and a BFS parent for each
// (kNone for roots).
struct Considered {
  std::vector<StateId> order;  // BFS order
  std::vector<StateId> parent;
  bool reachable_only = false;
};

inline constexpr StateId kNone = std::numeric_limits<StateId>::max();

inline Considered considered_states(const Lts& concrete) {
  Considered c;
  c.parent.assign(concrete.size(), kNone);
  if (concrete.initial().empty()) {
    for (StateId s = 0; s < concrete.size(); ++s) c.order.push_back(s);
    return c;
  }
  c.reachable_only = true;
  std::vector<char> seen(concrete.size(), 0);
  for (StateId s : concrete.initial()) {
    seen[s] = 1;
    c.order.push_back(s);
  }
  for (std::size_t head = 0; head < c.order.size(); ++head) {
    StateId s = c.order[head];
    for (StateId u : concrete.successors(s))
      if (!seen[u]) {
        seen[u] = 1;
        c.parent[u] = s;
        c.order.push_back(u);
      }
  }
  return c;
}

inline std::vector<CandidateDiagnosis> diagnose(const DisjointUnion& un, const Relation& B,
                                                StateId u, StateId w,
                                                const SimOptions& opts) {
  constexpr std::size_t kMaxCandidates = 16;
  const Lts& l = un.lts;
  std::vector<CandidateDiagnosis> out;

  CandidateDiagnosis stay{un.project(w), 0, l.label(w).canonical, "a", ""};
  if (l.label(u) != l.label(w))
    stay.why = "label of the successor differs from the label of the image";
  else if (!B.contains(u, w))
    stay.why = "successor is not simulated by the image";
  else
    stay.why = "stuttering against the image can repeat forever";
  out.push_back(std::move(stay));

  Explorer ex(l);
  auto targets = ex.plus_distances(w, opts.max_skip.value_or(0));
  std::stable_sort(targets.begin(), targets.end(),
                   [](const auto& x, const auto& y) { return x.second < y.second; });
  for (auto [v, d] : targets) {
    if (out.size() > kMaxCandidates) break;
    CandidateDiagnosis c{un.project(v), d, l.label(v).canonical, "b", ""};
    if (l.label(u) != l.label(v))
      c.why = "label differs";
    else if (!B.contains(u, v))
      c.why = "successor is not simulated by this state";
    else
      c.why = "related";  // only reachable when the step was pruned by divergence
    out.push_back(std::move(c));
  }
  return out;
}

}  // namespace detail

/// The relation {(s, r.s)} over the considered concrete states plus the
/// identity on abstract states. Used to measure how far single steps skip.
inline Relation image_relation(const DisjointUnion& un, const RefinementMap& r) {
  Relation out(un.lts.size());
  auto c = detail::considered_states(un.lts);
  for (StateId s : c.order)
    if (s < un.concrete_size) out.insert(s, un.embed_abstract(r(s)));
  for (StateId a = 0; a < un.abstract_size; ++a)
    out.insert(un.embed_abstract(a), un.embed_abstract(a));
  return out;
}

namespace detail {

inline Verdict run_refinement(const Lts& concrete, const Lts& abstract, const RefinementMap& r,
                              const SimOptions& opts) {
  DisjointUnion un = disjoint_union(concrete, abstract, r);
  SimResult sim = largest_sks_traced(un.lts, opts);
  Considered cons = considered_states(concrete);

  Verdict v;
  v.reachable_only = cons.reachable_only;
  v.max_skip = opts.max_skip;
  v.concrete_size = concrete.size();

  // Root cause: the required pair pruned in the earliest epoch, first in BFS
  // order among those.
  std::optional<StateId> culprit;
  Pruning best;
  for (StateId s : cons.order) {
    StateId w = un.embed_abstract(r(s));
    if (sim.relation.contains(s, w)) continue;
    auto p = sim.pruning_of(s, w);
    if (!p) throw std::logic_error("required pair left the relation without a pruning record");
    if (!culprit || p->epoch < best.epoch) {
      culprit = s;
      best = *p;
    }
  }

  if (!culprit) {
    v.status = Status::Holds;
    v.witness = Witness{sim.relation, extract_rankt(un.lts, sim.relation)};
    return v;
  }

  v.status = Status::Fails;
  CounterTrace t;
  StateId s = *culprit;
  for (StateId x = s; x != kNone; x = cons.parent[x]) t.stem.push_back(x);
  std::reverse(t.stem.begin(), t.stem.end());
  StateId u = best.successor;
  StateId w = un.embed_abstract(r(s));
  t.step = {s, u};
  t.image = r(s);
  t.pass = best.pass;
  t.epoch = best.epoch;
  t.label_s = un.lts.label(s).canonical;
  t.label_u = un.lts.label(u).canonical;
  t.candidates = diagnose(un, sim.relation, u, w, opts);
  if (best.pass == PrunePass::Local) {
    t.reason = "concrete step " + std::to_string(s) + " -> " + std::to_string(u) +
               " is matched neither by stuttering at abstract state " + std::to_string(r(s)) +
               " nor by any abstract path" +
               (opts.max_skip ? " of length at most " + std::to_string(*opts.max_skip) : "") +
               " from it";
  } else {
    t.reason = "concrete state " + std::to_string(s) +
               " can stutter forever against abstract state " + std::to_string(r(s)) +
               " (first step " + std::to_string(s) + " -> " + std::to_string(u) + ")";
  }
  v.counterexample = std::move(t);
  return v;
}

}  // namespace detail

/// Decides whether `concrete` is a skipping refinement of `abstract` under
/// r. With a finite max_skip >= 2, a failure that disappears under exact
/// reachability is reported as UnknownBeyondBound; max_skip = 1 is the
/// stuttering check and its failures are definitive.
inline Verdict check_skipping_refinement(const Lts& concrete, const Lts& abstract,
                                         const RefinementMap& r, const SimOptions& opts = {}) {
  Verdict v = detail::run_refinement(concrete, abstract, r, opts);
  if (v.status == Status::Fails && opts.max_skip && *opts.max_skip >= 2) {
    Verdict exact = detail::run_refinement(concrete, abstract, r, SimOptions::unbounded());
    if (exact.holds()) v.status = Status::UnknownBeyondBound;
  }
  return v;
}

inline std::string explain_counterexample(const Verdict& v) {
  if (v.status != Status::Fails || !v.counterexample)
    throw Error(ErrorCode::NotAFailure,
                "verdict is " + std::string(to_string(v.status)) + ", not a failure");
  const CounterTrace& t = *v.counterexample;
  std::ostringstream os;
  os << "refinement fails";
  if (v.reachable_only) os << " (checked on states reachable from the initial states)";
  os << "\ntrace:";
  for (StateId s : t.stem) os << ' ' << s;
  os << "\noffending step: " << t.step.first << " -> " << t.step.second << '\n'
     << "  label at " << t.step.first << ": " << t.label_s << '\n'
     << "  label at " << t.step.second << ": " << t.label_u << '\n'
     << "pruned by the " << to_string(t.pass) << " pass (round " << t.epoch << ")\n"
     << t.reason << '\n'
     << "abstract candidates from image " << t.image << ":\n";
  for (const auto& c : t.candidates) {
    os << "  v=" << c.state;
    if (c.distance) os << " (" << c.distance << " step" << (c.distance > 1 ? "s" : "") << ")";
    os << " case (" << c.failed << ") fails: " << c.why << "\n    label " << c.label << '\n';
  }
  return os.str();
}

}  // namespace skipref
