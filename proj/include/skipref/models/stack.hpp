#pragma once

#include <algorithm>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "skipref/error.hpp"
#include "skipref/models/enumerate.hpp"
#include "skipref/models/fault.hpp"

namespace skipref::models {

struct Instr {
  enum class Op { Push, Pop, Top, Nop };
  Op op = Op::Nop;
  int arg = 0;

  friend auto operator<=>(const Instr&, const Instr&) = default;
};

inline std::string to_string(const Instr& i) {
  switch (i.op) {
    case Instr::Op::Push: return "push " + std::to_string(i.arg);
    case Instr::Op::Pop: return "pop";
    case Instr::Op::Top: return "top";
    case Instr::Op::Nop: return "nop";
  }
  return "?";
}

inline Instr parse_instr(const std::string& text) {
  std::istringstream in(text);
  std::string op, extra;
  in >> op;
  Instr i;
  if (op == "push") {
    i.op = Instr::Op::Push;
    if (!(in >> i.arg)) throw Error(ErrorCode::ParseError, "push needs a constant: '" + text + "'");
  } else if (op == "pop") {
    i.op = Instr::Op::Pop;
  } else if (op == "top") {
    i.op = Instr::Op::Top;
  } else if (op == "nop") {
    i.op = Instr::Op::Nop;
  } else {
    throw Error(ErrorCode::ParseError, "unknown instruction '" + text + "'");
  }
  if (in >> extra) throw Error(ErrorCode::ParseError, "trailing input in '" + text + "'");
  return i;
}

/// "push 1;push 2;top" -> program. Empty pieces are skipped.
inline std::vector<Instr> parse_stack_program(const std::string& text) {
  std::vector<Instr> out;
  std::istringstream in(text);
  std::string piece;
  while (std::getline(in, piece, ';')) {
    if (piece.find_first_not_of(" \t\r\n") == std::string::npos) continue;
    out.push_back(parse_instr(piece));
  }
  return out;
}

struct StkParams {
  std::vector<Instr> imem;
  std::vector<int> const_domain;  // empty: whatever the program pushes
  std::size_t stack_cap = 3;
  std::size_t ibuf_cap = 2;
  // false: a draining step runs only the buffer and the trigger is fetched again
  bool drain_includes_trigger = true;

  friend bool operator==(const StkParams&, const StkParams&) = default;
};

/// Stack with the top element first.
struct StkState {
  std::size_t pc = 0;
  std::vector<int> stk;
  std::optional<int> out;

  friend auto operator<=>(const StkState&, const StkState&) = default;
};

struct BstkState {
  std::size_t pc = 0;
  std::vector<Instr> ibuf;
  std::vector<int> stk;
  std::optional<int> out;

  friend auto operator<=>(const BstkState&, const BstkState&) = default;
};

namespace detail {

inline void validate(const StkParams& p) {
  if (p.stack_cap < 1 || p.ibuf_cap < 1)
    throw Error(ErrorCode::InvalidArgument, "stack and buffer capacities must be at least 1");
  if (p.const_domain.empty()) return;
  for (const auto& i : p.imem)
    if (i.op == Instr::Op::Push &&
        std::find(p.const_domain.begin(), p.const_domain.end(), i.arg) == p.const_domain.end())
      throw Error(ErrorCode::InvalidArgument,
                  "constant " + std::to_string(i.arg) + " is outside the constant domain");
}

// pop on empty and push on full are no-ops; top on empty leaves out alone.
inline void exec(const Instr& i, std::vector<int>& stk, std::optional<int>& out,
                 std::size_t cap) {
  switch (i.op) {
    case Instr::Op::Push:
      if (stk.size() < cap) stk.insert(stk.begin(), i.arg);
      break;
    case Instr::Op::Pop:
      if (!stk.empty()) stk.erase(stk.begin());
      break;
    case Instr::Op::Top:
      if (!stk.empty()) out = stk.front();
      break;
    case Instr::Op::Nop:
      break;
  }
}

inline void run_buffer(BstkState& s, std::size_t cap, std::optional<FaultKind> fault) {
  std::size_t n = s.ibuf.size();
  if (fault == FaultKind::DropLastOnDrain && n > 0) --n;
  for (std::size_t k = 0; k < n; ++k) exec(s.ibuf[k], s.stk, s.out, cap);
  s.ibuf.clear();
}

}  // namespace detail

inline nlohmann::json encode(const StkState& s) {
  return {{"pc", s.pc}, {"stk", s.stk}, {"out", s.out ? nlohmann::json(*s.out) : nlohmann::json()}};
}

inline nlohmann::json encode(const BstkState& s) {
  nlohmann::json ibuf = nlohmann::json::array();
  for (const auto& i : s.ibuf) ibuf.push_back(to_string(i));
  return {{"pc", s.pc},
          {"ibuf", ibuf},
          {"stk", s.stk},
          {"out", s.out ? nlohmann::json(*s.out) : nlohmann::json()}};
}

inline StkState decode_stk_state(const nlohmann::json& j) {
  StkState s;
  s.pc = j.at("pc").get<std::size_t>();
  s.stk = j.at("stk").get<std::vector<int>>();
  if (!j.at("out").is_null()) s.out = j.at("out").get<int>();
  return s;
}

inline StkState stk_step(const StkParams& p, StkState s) {
  if (s.pc >= p.imem.size()) return s;
  detail::exec(p.imem[s.pc], s.stk, s.out, p.stack_cap);
  ++s.pc;
  return s;
}

/// Fetch one instruction. Non-top instructions are buffered while there is
/// room; a top or a full buffer drains the buffer, then runs the fetched
/// instruction in the same step.
inline BstkState bstk_step(const StkParams& p, BstkState s,
                           std::optional<FaultKind> fault = std::nullopt) {
  const std::size_t n = p.imem.size();
  if (s.pc >= n) {
    detail::run_buffer(s, p.stack_cap, fault);
    return s;
  }
  const Instr& i = p.imem[s.pc];
  bool trigger = i.op == Instr::Op::Top || s.ibuf.size() >= p.ibuf_cap;
  if (!trigger) {
    s.ibuf.push_back(i);
    s.pc = std::min(n, s.pc + (fault == FaultKind::OffByOnePointer ? 2 : 1));
    return s;
  }
  if (!p.drain_includes_trigger && !s.ibuf.empty()) {
    detail::run_buffer(s, p.stack_cap, fault);
    return s;
  }
  detail::run_buffer(s, p.stack_cap, fault);
  detail::exec(i, s.stk, s.out, p.stack_cap);
  if (fault != FaultKind::SkipPcIncrement) ++s.pc;
  return s;
}

/// The BSTK state with its buffer forgotten and the pc rolled back.
inline StkState bstk_image(const BstkState& s) {
  return StkState{s.pc - s.ibuf.size(), s.stk, s.out};
}

inline Enumerated<StkState> gen_stk(const StkParams& p, const std::vector<StkState>& seeds = {},
                                    std::size_t cap = default_state_cap()) {
  detail::validate(p);
  return enumerate<StkState>(
      {StkState{}}, seeds, [&](const StkState& s) { return std::vector{stk_step(p, s)}; },
      [](const StkState& s) { return encode(s); }, cap);
}

inline Enumerated<BstkState> gen_bstk(const StkParams& p,
                                      std::optional<FaultKind> fault = std::nullopt,
                                      std::size_t cap = default_state_cap()) {
  detail::validate(p);
  if (fault == FaultKind::MarkNewestRedundant)
    throw Error(ErrorCode::InapplicableFault, "bstk has no write coalescing");
  return enumerate<BstkState>(
      {BstkState{}}, {}, [&](const BstkState& s) { return std::vector{bstk_step(p, s, fault)}; },
      [](const BstkState& s) { return encode(s); }, cap);
}

}  // namespace skipref::models
