#pragma once

#include <algorithm>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "skipref/lts.hpp"
#include "skipref/vectorizer.hpp"

namespace skipref::random {

struct LtsShape {
  std::size_t max_states = 6;
  std::size_t max_labels = 3;
  std::size_t max_out = 2;
};

/// Small system: 1..max_states states, labels from "l0".., out-degree
/// 1..max_out with distinct successors.
inline Lts random_lts(std::mt19937_64& rng, const LtsShape& shape = {}) {
  auto pick = [&](std::size_t lo, std::size_t hi) {
    return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
  };
  std::size_t n = pick(1, shape.max_states);
  std::size_t labels = pick(1, shape.max_labels);
  std::vector<Label> lab;
  for (std::size_t s = 0; s < n; ++s) lab.push_back(Label::of("l" + std::to_string(pick(0, labels - 1))));
  std::vector<Transition> edges;
  std::vector<StateId> all(n);
  for (std::size_t s = 0; s < n; ++s) all[s] = static_cast<StateId>(s);
  for (std::size_t s = 0; s < n; ++s) {
    std::size_t deg = pick(1, std::min(shape.max_out, n));
    std::vector<StateId> succ;
    std::sample(all.begin(), all.end(), std::back_inserter(succ), deg, rng);
    for (StateId u : succ) edges.emplace_back(static_cast<StateId>(s), u);
  }
  return build_lts(n, std::move(edges), std::move(lab));
}

inline Lts random_lts(std::uint64_t seed, const LtsShape& shape = {}) {
  std::mt19937_64 rng(seed);
  return random_lts(rng, shape);
}

struct ProgramShape {
  std::size_t max_length = 8;
  std::size_t max_registers = 4;
  unsigned bits = 2;
};

/// Straight-line scalar program over registers r1..rk, biased towards
/// arithmetic so that fusible neighbours are common.
inline tv::ScalarProgram random_program(std::mt19937_64& rng, const ProgramShape& shape = {}) {
  auto pick = [&](std::size_t lo, std::size_t hi) {
    return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
  };
  std::size_t k = pick(1, shape.max_registers);
  std::vector<std::string> regs;
  for (std::size_t i = 1; i <= k; ++i) regs.push_back("r" + std::to_string(i));
  auto any = [&] { return regs[pick(0, k - 1)]; };
  static constexpr tv::ArithOp kOps[] = {tv::ArithOp::Add, tv::ArithOp::Sub, tv::ArithOp::Mul};
  std::vector<tv::ScalarInstr> instrs;
  std::size_t len = pick(0, shape.max_length);
  for (std::size_t i = 0; i < len; ++i) {
    std::size_t roll = pick(0, 99);
    if (roll < 64)
      instrs.push_back(tv::ScalarInstr::arith(any(), any(), kOps[pick(0, roll < 40 ? 0 : 2)], any()));
    else if (roll < 80)
      instrs.push_back(tv::ScalarInstr::constant(any(), pick(0, (std::size_t{1} << shape.bits) - 1)));
    else if (roll < 90)
      instrs.push_back(tv::ScalarInstr::load(any(), any()));
    else
      instrs.push_back(tv::ScalarInstr::store(any(), any()));
  }
  return tv::make_scalar_program(std::move(instrs), regs);
}

}  // namespace skipref::random
