#pragma once

#include <cstdlib>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "skipref/error.hpp"
#include "skipref/lts.hpp"

namespace skipref::models {

inline constexpr std::size_t kDefaultStateCap = 1'000'000;

/// State cap taken from SKIPREF_STATE_CAP when set, else the default.
inline std::size_t default_state_cap() {
  if (const char* env = std::getenv("SKIPREF_STATE_CAP")) {
    char* end = nullptr;
    unsigned long long v = std::strtoull(env, &end, 10);
    if (end != env && *end == '\0' && v > 0) return static_cast<std::size_t>(v);
  }
  return kDefaultStateCap;
}

template <class State>
struct Enumerated {
  std::vector<State> states;
  Lts lts;
};

/// Breadth-first closure from `initial` and then `extra` roots. Only the
/// `initial` roots are recorded as initial states of the result.
template <class State, class Succ, class Encode>
Enumerated<State> enumerate(const std::vector<State>& initial, const std::vector<State>& extra,
                            Succ&& succ, Encode&& encode, std::size_t cap) {
  std::map<State, StateId> index;
  Enumerated<State> out;
  auto intern = [&](const State& s) {
    auto [it, fresh] = index.emplace(s, static_cast<StateId>(out.states.size()));
    if (fresh) {
      if (out.states.size() >= cap)
        throw Error(ErrorCode::StateSpaceLimitExceeded,
                    "more than " + std::to_string(cap) + " states");
      out.states.push_back(s);
    }
    return it->second;
  };
  std::vector<StateId> init;
  for (const auto& s : initial) init.push_back(intern(s));
  for (const auto& s : extra) intern(s);

  std::vector<Transition> edges;
  for (std::size_t head = 0; head < out.states.size(); ++head) {
    // Copy: interning may reallocate `states`.
    State s = out.states[head];
    for (const State& u : succ(s)) edges.emplace_back(static_cast<StateId>(head), intern(u));
  }
  std::vector<Label> labels;
  labels.reserve(out.states.size());
  for (const auto& s : out.states) labels.push_back(Label::of(encode(s)));
  out.lts = build_lts(out.states.size(), std::move(edges), std::move(labels), std::move(init));
  return out;
}

}  // namespace skipref::models
