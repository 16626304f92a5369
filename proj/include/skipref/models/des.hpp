#pragma once

#include <algorithm>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "skipref/error.hpp"
#include "skipref/models/enumerate.hpp"

namespace skipref::models {

struct DesEvent {
  std::string id;
  unsigned time = 0;

  friend auto operator<=>(const DesEvent&, const DesEvent&) = default;
};

/// What executing an event does: add `delta` to variables and schedule
/// new events `delay` (>= 1) time units later.
struct DesEffect {
  std::vector<std::pair<std::size_t, int>> incr;
  std::vector<std::pair<std::string, unsigned>> gen;

  friend bool operator==(const DesEffect&, const DesEffect&) = default;
};

struct DesParams {
  std::vector<DesEvent> events;
  std::map<std::string, DesEffect> effects;  // events without an entry: e<i> increments v<i>
  unsigned time_bound = 0;
  std::size_t vars = 0;  // 0: one per default-effect event index

  friend bool operator==(const DesParams&, const DesParams&) = default;
};

/// <t, E, A>: current time, pending events (sorted multiset), variables.
struct DesState {
  unsigned t = 0;
  std::vector<DesEvent> E;
  std::vector<int> A;

  friend auto operator<=>(const DesState&, const DesState&) = default;
};

namespace detail {

// "e3" -> 3, anything else -> 0.
inline std::size_t des_event_index(const std::string& id) {
  if (id.size() < 2 || id[0] != 'e') return 0;
  std::size_t n = 0;
  for (std::size_t i = 1; i < id.size(); ++i) {
    if (id[i] < '0' || id[i] > '9') return 0;
    n = n * 10 + static_cast<std::size_t>(id[i] - '0');
  }
  return n;
}

inline std::size_t des_var_count(const DesParams& p) {
  if (p.vars) return p.vars;
  std::size_t n = 0;
  auto note = [&](const std::string& id) {
    if (!p.effects.count(id)) n = std::max(n, des_event_index(id));
  };
  for (const auto& e : p.events) note(e.id);
  for (const auto& [id, eff] : p.effects) {
    for (auto [v, d] : eff.incr) n = std::max(n, v + 1);
    for (const auto& g : eff.gen) note(g.first);
  }
  return n;
}

inline void validate(const DesParams& p) {
  for (const auto& e : p.events)
    if (e.time > p.time_bound)
      throw Error(ErrorCode::InvalidArgument,
                  "event " + e.id + " is scheduled after the time bound");
  std::size_t vars = des_var_count(p);
  for (const auto& [id, eff] : p.effects) {
    for (auto [v, d] : eff.incr)
      if (v >= vars)
        throw Error(ErrorCode::InvalidArgument, "effect of " + id + " touches an unknown variable");
    for (const auto& g : eff.gen)
      if (g.second == 0)
        throw Error(ErrorCode::InvalidArgument,
                    "generated events must be scheduled strictly later (" + id + ")");
  }
}

inline DesState des_execute(const DesParams& p, DesState s, std::size_t which) {
  DesEvent e = s.E[which];
  s.E.erase(s.E.begin() + static_cast<std::ptrdiff_t>(which));
  s.t = e.time;
  if (auto it = p.effects.find(e.id); it != p.effects.end()) {
    for (auto [v, d] : it->second.incr) s.A[v] += d;
    for (const auto& [id, delay] : it->second.gen)
      if (s.t + delay <= p.time_bound) s.E.push_back({id, s.t + delay});
    std::sort(s.E.begin(), s.E.end());
  } else if (std::size_t i = des_event_index(e.id); i >= 1 && i <= s.A.size()) {
    s.A[i - 1] += 1;
  }
  return s;
}

// Successors when no event is executed: advance the clock or rest.
inline std::vector<DesState> des_tick(const DesParams& p, const DesState& s) {
  if (s.t >= p.time_bound) return {s};
  DesState n = s;
  ++n.t;
  return {n};
}

}  // namespace detail

inline nlohmann::json encode(const DesState& s) {
  nlohmann::json E = nlohmann::json::array();
  for (const auto& e : s.E) E.push_back({e.id, e.time});
  return {{"t", s.t}, {"E", E}, {"A", s.A}};
}

inline DesState decode_des_state(const nlohmann::json& j) {
  DesState s;
  s.t = j.at("t").get<unsigned>();
  for (const auto& e : j.at("E")) s.E.push_back({e.at(0).get<std::string>(), e.at(1).get<unsigned>()});
  std::sort(s.E.begin(), s.E.end());
  s.A = j.at("A").get<std::vector<int>>();
  return s;
}

inline DesState des_initial(const DesParams& p) {
  DesState s;
  s.E = p.events;
  std::sort(s.E.begin(), s.E.end());
  s.A.assign(detail::des_var_count(p), 0);
  return s;
}

/// Abstract DES: execute any event scheduled at the current time, else
/// advance the clock by one.
inline std::vector<DesState> des_abstract_step(const DesParams& p, const DesState& s) {
  std::vector<DesState> out;
  for (std::size_t i = 0; i < s.E.size(); ++i) {
    if (s.E[i].time != s.t) continue;
    if (i > 0 && s.E[i] == s.E[i - 1]) continue;
    out.push_back(detail::des_execute(p, s, i));
  }
  return out.empty() ? detail::des_tick(p, s) : out;
}

/// Optimized DES: jump the clock to the earliest pending event and
/// execute it.
inline std::vector<DesState> des_optimized_step(const DesParams& p, const DesState& s) {
  if (s.E.empty()) return detail::des_tick(p, s);
  unsigned next = s.E.front().time;
  for (const auto& e : s.E) next = std::min(next, e.time);
  std::vector<DesState> out;
  for (std::size_t i = 0; i < s.E.size(); ++i) {
    if (s.E[i].time != next) continue;
    if (i > 0 && s.E[i] == s.E[i - 1]) continue;
    out.push_back(detail::des_execute(p, s, i));
  }
  return out;
}

inline Enumerated<DesState> gen_des(const DesParams& p, bool optimized,
                                    const std::vector<DesState>& seeds = {},
                                    std::size_t cap = default_state_cap()) {
  detail::validate(p);
  auto succ = [&](const DesState& s) {
    return optimized ? des_optimized_step(p, s) : des_abstract_step(p, s);
  };
  return enumerate<DesState>({des_initial(p)}, seeds, succ,
                             [](const DesState& s) { return encode(s); }, cap);
}

}  // namespace skipref::models
