#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <tuple>
#include <unordered_map>
#include <utility>
#include <vector>

#include "skipref/error.hpp"
#include "skipref/lts.hpp"

namespace skipref {

/// Ranks live in the naturals; the systems here are finite.
using Rank = std::uint64_t;

/// rankt: S x S -> naturals, stored sparsely.
class RanktTable {
 public:
  void set(StateId s, StateId w, Rank r) { entries_[key(s, w)] = r; }

  std::optional<Rank> get(StateId s, StateId w) const {
    auto it = entries_.find(key(s, w));
    if (it == entries_.end()) return std::nullopt;
    return it->second;
  }

  std::size_t size() const { return entries_.size(); }

  /// (s, w, rank) sorted by (s, w).
  std::vector<std::tuple<StateId, StateId, Rank>> entries() const {
    std::vector<std::tuple<StateId, StateId, Rank>> out;
    out.reserve(entries_.size());
    for (auto [k, r] : entries_)
      out.emplace_back(static_cast<StateId>(k >> 32), static_cast<StateId>(k), r);
    std::sort(out.begin(), out.end());
    return out;
  }

  friend bool operator==(const RanktTable&, const RanktTable&) = default;

 private:
  static std::uint64_t key(StateId s, StateId w) {
    return (static_cast<std::uint64_t>(s) << 32) | w;
  }
  std::unordered_map<std::uint64_t, Rank> entries_;
};

/// rankl: S x S x S -> naturals. An optional default answers every triple
/// without an explicit entry.
class RanklTable {
 public:
  RanklTable() = default;
  static RanklTable constant(Rank r) {
    RanklTable t;
    t.fallback_ = r;
    return t;
  }

  void set(StateId v, StateId s, StateId u, Rank r) { entries_[{v, s, u}] = r; }

  std::optional<Rank> get(StateId v, StateId s, StateId u) const {
    auto it = entries_.find({v, s, u});
    if (it != entries_.end()) return it->second;
    return fallback_;
  }

  const std::optional<Rank>& fallback() const { return fallback_; }
  void set_fallback(std::optional<Rank> r) { fallback_ = r; }

  std::vector<std::tuple<StateId, StateId, StateId, Rank>> entries() const {
    std::vector<std::tuple<StateId, StateId, StateId, Rank>> out;
    for (const auto& [k, r] : entries_) out.emplace_back(k[0], k[1], k[2], r);
    std::sort(out.begin(), out.end());
    return out;
  }

  friend bool operator==(const RanklTable&, const RanklTable&) = default;

 private:
  struct Hash {
    std::size_t operator()(const std::array<StateId, 3>& k) const {
      std::uint64_t h = k[0];
      h = h * 0x9E3779B97F4A7C15ull ^ k[1];
      h = h * 0x9E3779B97F4A7C15ull ^ k[2];
      return static_cast<std::size_t>(h ^ (h >> 29));
    }
  };
  std::unordered_map<std::array<StateId, 3>, Rank, Hash> entries_;
  std::optional<Rank> fallback_;
};

struct WfskCertificate {
  RanktTable rankt;
  RanklTable rankl;
  std::size_t skip_bound = 2;  // case (d) probes path lengths 2..skip_bound
};

struct RwfskCertificate {
  RanktTable rankt;
};

struct Violation {
  enum class Kind { LabelMismatch, NoCaseApplies, RankNotDecreasing, BoundExhausted };

  Kind kind = Kind::NoCaseApplies;
  StateId s = 0;
  StateId w = 0;
  std::optional<StateId> u;  // absent for label mismatches
  std::string detail;

  friend bool operator==(const Violation&, const Violation&) = default;
};

inline std::string_view to_string(Violation::Kind k) {
  switch (k) {
    case Violation::Kind::LabelMismatch: return "LabelMismatch";
    case Violation::Kind::NoCaseApplies: return "NoCaseApplies";
    case Violation::Kind::RankNotDecreasing: return "RankNotDecreasing";
    case Violation::Kind::BoundExhausted: return "BoundExhausted";
  }
  return "Unknown";
}

/// Outcome of a certificate check. `max_witness_length` is the longest
/// abstract path the check needed to match a single concrete step (1 when
/// every step matched in one move or by stuttering).
struct CheckReport {
  std::optional<Violation> violation;
  std::size_t max_witness_length = 0;

  bool ok() const { return !violation.has_value(); }
  explicit operator bool() const { return ok(); }
};

namespace detail {

inline void check_relation_shape(const Lts& lts, const Relation& B) {
  if (B.universe() != lts.size())
    throw Error(ErrorCode::InvalidArgument,
                "relation is over " + std::to_string(B.universe()) +
                    " states but the system has " + std::to_string(lts.size()));
}

inline Rank require_rank(const RanktTable& t, StateId s, StateId w) {
  auto r = t.get(s, w);
  if (!r)
    throw Error(ErrorCode::MissingRankEntry,
                "rankt(" + std::to_string(s) + "," + std::to_string(w) + ") is absent");
  return *r;
}

inline Rank require_rank(const RanklTable& t, StateId v, StateId s, StateId u) {
  auto r = t.get(v, s, u);
  if (!r)
    throw Error(ErrorCode::MissingRankEntry,
                "rankl(" + std::to_string(v) + "," + std::to_string(s) + "," +
                    std::to_string(u) + ") is absent");
  return *r;
}

inline std::string triple(StateId s, StateId u, StateId w) {
  return "s=" + std::to_string(s) + " u=" + std::to_string(u) + " w=" + std::to_string(w);
}

// Smallest length among listed targets v with uBv, or 0 if none.
inline std::size_t min_related_length(const Relation& B, StateId u,
                                      const DistanceList& targets) {
  std::size_t best = 0;
  auto row = B.row(u);
  if (row.size() < targets.size()) {
    for (StateId v : row) {
      auto it = std::lower_bound(targets.begin(), targets.end(), std::make_pair(v, std::size_t{0}));
      if (it != targets.end() && it->first == v && (best == 0 || it->second < best))
        best = it->second;
    }
  } else {
    for (auto [v, d] : targets)
      if (B.contains(u, v) && (best == 0 || d < best)) best = d;
  }
  return best;
}

}  // namespace detail

/// Checks B against the well-founded skipping conditions. Case (d) only
/// looks at paths of length 2..skip_bound; when nothing else applies but a
/// longer path would, the violation is BoundExhausted.
inline CheckReport check_wfsk(const Lts& lts, const Relation& B, const WfskCertificate& cert) {
  detail::check_relation_shape(lts, B);
  if (cert.skip_bound < 2)
    throw Error(ErrorCode::InvalidArgument, "skip bound must be at least 2");

  struct Probe {
    detail::DistanceList bounded;  // lengths 2..skip_bound
    std::vector<StateId> beyond;   // exact ->^{>=2}
  };
  std::unordered_map<StateId, Probe> cache;
  detail::Explorer ex(lts);
  auto probe = [&](StateId w) -> const Probe& {
    auto it = cache.find(w);
    if (it != cache.end()) return it->second;
    Probe p;
    p.bounded = ex.layered(w, 2, cert.skip_bound);
    p.beyond = ex.closure(ex.exactly(w, 2));
    return cache.emplace(w, std::move(p)).first->second;
  };

  CheckReport report;
  for (StateId s = 0; s < lts.size(); ++s) {
    for (StateId w : B.row(s)) {
      if (lts.label(s) != lts.label(w)) {
        report.violation = Violation{Violation::Kind::LabelMismatch, s, w, std::nullopt,
                                     "labels differ: " + lts.label(s).canonical + " vs " +
                                         lts.label(w).canonical};
        return report;
      }
      for (StateId u : lts.successors(s)) {
        // (a) w -> v with u B v
        bool matched = false;
        for (StateId v : lts.successors(w))
          if (B.contains(u, v)) {
            matched = true;
            break;
          }
        if (matched) {
          report.max_witness_length = std::max<std::size_t>(report.max_witness_length, 1);
          continue;
        }
        // (b) u B w and rankt decreases
        if (B.contains(u, w) &&
            detail::require_rank(cert.rankt, u, w) < detail::require_rank(cert.rankt, s, w))
          continue;
        // (c) w -> v with s B v and rankl decreases
        bool right_stutter = false;
        for (StateId v : lts.successors(w)) {
          if (!B.contains(s, v)) continue;
          if (detail::require_rank(cert.rankl, v, s, u) <
              detail::require_rank(cert.rankl, w, s, u)) {
            right_stutter = true;
            break;
          }
        }
        if (right_stutter) continue;
        // (d) w ->^{2..k} v with u B v
        const Probe& p = probe(w);
        if (std::size_t len = detail::min_related_length(B, u, p.bounded); len != 0) {
          report.max_witness_length = std::max(report.max_witness_length, len);
          continue;
        }
        bool beyond = std::any_of(p.beyond.begin(), p.beyond.end(),
                                  [&](StateId v) { return B.contains(u, v); });
        if (beyond) {
          report.violation = Violation{
              Violation::Kind::BoundExhausted, s, w, u,
              "only a path longer than skip bound " + std::to_string(cert.skip_bound) +
                  " reaches a related state (" + detail::triple(s, u, w) + ")"};
        } else if (B.contains(u, w)) {
          report.violation = Violation{
              Violation::Kind::RankNotDecreasing, s, w, u,
              "rankt(u,w) is not below rankt(s,w) and no other case applies (" +
                  detail::triple(s, u, w) + ")"};
        } else {
          report.violation = Violation{Violation::Kind::NoCaseApplies, s, w, u,
                                       "no case applies (" + detail::triple(s, u, w) + ")"};
        }
        return report;
      }
    }
  }
  return report;
}

/// Checks B against the reduced conditions: for every s -> u with s B w,
/// either w ->+ v with u B v (decided exactly), or u B w with a strict
/// rankt decrease.
inline CheckReport check_rwfsk(const Lts& lts, const Relation& B, const RwfskCertificate& cert) {
  detail::check_relation_shape(lts, B);
  std::unordered_map<StateId, detail::DistanceList> cache;
  detail::Explorer ex(lts);
  auto distances = [&](StateId w) -> const detail::DistanceList& {
    auto it = cache.find(w);
    if (it != cache.end()) return it->second;
    return cache.emplace(w, ex.plus_distances(w)).first->second;
  };

  CheckReport report;
  for (StateId s = 0; s < lts.size(); ++s) {
    for (StateId w : B.row(s)) {
      if (lts.label(s) != lts.label(w)) {
        report.violation = Violation{Violation::Kind::LabelMismatch, s, w, std::nullopt,
                                     "labels differ: " + lts.label(s).canonical + " vs " +
                                         lts.label(w).canonical};
        return report;
      }
      for (StateId u : lts.successors(s)) {
        if (std::size_t len = detail::min_related_length(B, u, distances(w)); len != 0) {
          report.max_witness_length = std::max(report.max_witness_length, len);
          continue;
        }
        if (!B.contains(u, w)) {
          report.violation = Violation{Violation::Kind::NoCaseApplies, s, w, u,
                                       "u is related neither to w nor to any state reachable "
                                       "from w (" + detail::triple(s, u, w) + ")"};
          return report;
        }
        Rank ru = detail::require_rank(cert.rankt, u, w);
        Rank rs = detail::require_rank(cert.rankt, s, w);
        if (ru >= rs) {
          report.violation = Violation{
              Violation::Kind::RankNotDecreasing, s, w, u,
              "rankt(u,w)=" + std::to_string(ru) + " is not below rankt(s,w)=" +
                  std::to_string(rs) + " (" + detail::triple(s, u, w) + ")"};
          return report;
        }
      }
    }
  }
  return report;
}

/// RWFSK certificate in WFSK form: same rankt, rankl constantly 0.
inline WfskCertificate rwfsk_as_wfsk(const RwfskCertificate& cert, std::size_t skip_bound) {
  if (skip_bound < 2)
    throw Error(ErrorCode::InvalidArgument, "skip bound must be at least 2");
  return WfskCertificate{cert.rankt, RanklTable::constant(0), skip_bound};
}

}  // namespace skipref
