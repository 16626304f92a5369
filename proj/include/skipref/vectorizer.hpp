#pragma once

#include <algorithm>
#include <array>
#include <cctype>
#include <cstdint>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "skipref/error.hpp"
#include "skipref/lts.hpp"
#include "skipref/models/enumerate.hpp"
#include "skipref/refinement.hpp"

namespace skipref::tv {

enum class ArithOp { Add, Sub, Mul };

inline char symbol(ArithOp op) {
  switch (op) {
    case ArithOp::Add: return '+';
    case ArithOp::Sub: return '-';
    case ArithOp::Mul: return '*';
  }
  return '?';
}

/// dst = a op b | dst = value | dst = load a | store dst a. Registers double
/// as memory cells, so load and store are copies.
struct ScalarInstr {
  enum class Kind { Arith, Const, Load, Store };
  Kind kind = Kind::Const;
  ArithOp op = ArithOp::Add;
  std::string dst, a, b;
  std::uint64_t value = 0;

  static ScalarInstr arith(std::string dst, std::string a, ArithOp op, std::string b) {
    return {Kind::Arith, op, std::move(dst), std::move(a), std::move(b), 0};
  }
  static ScalarInstr constant(std::string dst, std::uint64_t v) {
    return {Kind::Const, ArithOp::Add, std::move(dst), "", "", v};
  }
  static ScalarInstr load(std::string dst, std::string src) {
    return {Kind::Load, ArithOp::Add, std::move(dst), std::move(src), "", 0};
  }
  static ScalarInstr store(std::string cell, std::string src) {
    return {Kind::Store, ArithOp::Add, std::move(cell), std::move(src), "", 0};
  }

  std::vector<std::string> reads() const {
    switch (kind) {
      case Kind::Arith: return {a, b};
      case Kind::Load:
      case Kind::Store: return {a};
      case Kind::Const: return {};
    }
    return {};
  }

  friend bool operator==(const ScalarInstr&, const ScalarInstr&) = default;
};

/// A scalar instruction, or two arithmetic lanes with one operator that
/// read the pre-state and write simultaneously.
struct VectorInstr {
  bool packed = false;
  std::array<ScalarInstr, 2> lane;

  static VectorInstr scalar(ScalarInstr i) { return {false, {std::move(i), ScalarInstr{}}}; }
  static VectorInstr pack(ScalarInstr x, ScalarInstr y) { return {true, {std::move(x), std::move(y)}}; }

  std::size_t width() const { return packed ? 2 : 1; }

  friend bool operator==(const VectorInstr&, const VectorInstr&) = default;
};

struct ScalarProgram {
  std::vector<std::string> registers;  // sorted; the store layout
  std::vector<ScalarInstr> instrs;

  friend bool operator==(const ScalarProgram&, const ScalarProgram&) = default;
};

struct VectorProgram {
  std::vector<std::string> registers;
  std::vector<VectorInstr> instrs;

  friend bool operator==(const VectorProgram&, const VectorProgram&) = default;
};

/// map[j] = source pc corresponding to target pc j; |tgt| + 1 entries.
struct PcMap {
  std::vector<std::size_t> map{0};

  friend bool operator==(const PcMap&, const PcMap&) = default;
};

// Text form -----------------------------------------------------------------

inline std::string to_string(const ScalarInstr& i) {
  switch (i.kind) {
    case ScalarInstr::Kind::Arith: return i.dst + " = " + i.a + " " + symbol(i.op) + " " + i.b;
    case ScalarInstr::Kind::Const: return i.dst + " = " + std::to_string(i.value);
    case ScalarInstr::Kind::Load: return i.dst + " = load " + i.a;
    case ScalarInstr::Kind::Store: return "store " + i.dst + " " + i.a;
  }
  return "?";
}

inline std::string to_string(const VectorInstr& v) {
  if (!v.packed) return to_string(v.lane[0]);
  const auto& x = v.lane[0];
  const auto& y = v.lane[1];
  return "pack (" + x.dst + "," + y.dst + ") = (" + x.a + "," + y.a + ") " + symbol(x.op) +
         " (" + x.b + "," + y.b + ")";
}

namespace detail {

inline std::vector<std::string> tokenize(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  auto flush = [&] {
    if (!cur.empty()) out.push_back(std::move(cur));
    cur.clear();
  };
  for (char c : line) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      flush();
    } else if (std::string_view("(),=+-*").find(c) != std::string_view::npos) {
      flush();
      out.emplace_back(1, c);
    } else {
      cur += c;
    }
  }
  flush();
  return out;
}

inline bool is_name(const std::string& t) {
  if (t.empty() || !(std::isalpha(static_cast<unsigned char>(t[0])) || t[0] == '_')) return false;
  if (t == "load" || t == "store" || t == "pack") return false;
  return std::all_of(t.begin(), t.end(),
                     [](char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; });
}

inline bool is_number(const std::string& t) {
  return !t.empty() && std::all_of(t.begin(), t.end(),
                                   [](char c) { return std::isdigit(static_cast<unsigned char>(c)); });
}

inline std::optional<ArithOp> arith_of(const std::string& t) {
  if (t == "+") return ArithOp::Add;
  if (t == "-") return ArithOp::Sub;
  if (t == "*") return ArithOp::Mul;
  return std::nullopt;
}

[[noreturn]] inline void bad_line(const std::string& line) {
  throw Error(ErrorCode::ParseError, "cannot parse instruction '" + line + "'");
}

inline std::string name_at(const std::vector<std::string>& t, std::size_t i, const std::string& line) {
  if (i >= t.size() || !is_name(t[i])) bad_line(line);
  return t[i];
}

inline void expect(const std::vector<std::string>& t, std::size_t i, const char* tok,
                   const std::string& line) {
  if (i >= t.size() || t[i] != tok) bad_line(line);
}

inline ScalarInstr parse_scalar_tokens(const std::vector<std::string>& t, const std::string& line) {
  if (t.size() == 3 && t[0] == "store") return ScalarInstr::store(name_at(t, 1, line), name_at(t, 2, line));
  std::string dst = name_at(t, 0, line);
  expect(t, 1, "=", line);
  if (t.size() == 3 && is_number(t[2])) return ScalarInstr::constant(dst, std::stoull(t[2]));
  if (t.size() == 4 && t[2] == "load") return ScalarInstr::load(dst, name_at(t, 3, line));
  if (t.size() == 5) {
    auto op = arith_of(t[3]);
    if (!op) bad_line(line);
    return ScalarInstr::arith(dst, name_at(t, 2, line), *op, name_at(t, 4, line));
  }
  bad_line(line);
}

// pack ( x , y ) = ( a , c ) op ( b , d )
inline VectorInstr parse_pack_tokens(const std::vector<std::string>& t, const std::string& line) {
  if (t.size() != 18) bad_line(line);
  expect(t, 1, "(", line), expect(t, 3, ",", line), expect(t, 5, ")", line);
  expect(t, 6, "=", line), expect(t, 7, "(", line), expect(t, 9, ",", line);
  expect(t, 11, ")", line), expect(t, 13, "(", line), expect(t, 15, ",", line);
  expect(t, 17, ")", line);
  auto op = arith_of(t[12]);
  if (!op) bad_line(line);
  return VectorInstr::pack(
      ScalarInstr::arith(name_at(t, 2, line), name_at(t, 8, line), *op, name_at(t, 14, line)),
      ScalarInstr::arith(name_at(t, 4, line), name_at(t, 10, line), *op, name_at(t, 16, line)));
}

inline std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    out.push_back(line);
  }
  return out;
}

inline void collect(std::set<std::string>& names, const ScalarInstr& i) {
  names.insert(i.dst);
  for (auto& r : i.reads()) names.insert(r);
}

}  // namespace detail

inline VectorInstr parse_vector_instr(const std::string& line) {
  auto t = detail::tokenize(line);
  if (!t.empty() && t[0] == "pack") return detail::parse_pack_tokens(t, line);
  return VectorInstr::scalar(detail::parse_scalar_tokens(t, line));
}

inline ScalarInstr parse_scalar_instr(const std::string& line) {
  auto t = detail::tokenize(line);
  if (!t.empty() && t[0] == "pack")
    throw Error(ErrorCode::ParseError, "packed instruction in a scalar program: '" + line + "'");
  return detail::parse_scalar_tokens(t, line);
}

/// Registers of a parsed program are the names it mentions, plus `extra`.
inline ScalarProgram make_scalar_program(std::vector<ScalarInstr> instrs,
                                         const std::vector<std::string>& extra = {}) {
  std::set<std::string> names(extra.begin(), extra.end());
  for (const auto& i : instrs) detail::collect(names, i);
  return {{names.begin(), names.end()}, std::move(instrs)};
}

inline ScalarProgram parse_scalar_program(const std::string& text) {
  std::vector<ScalarInstr> instrs;
  for (const auto& line : detail::lines_of(text)) instrs.push_back(parse_scalar_instr(line));
  return make_scalar_program(std::move(instrs));
}

inline VectorProgram parse_vector_program(const std::string& text) {
  VectorProgram p;
  std::set<std::string> names;
  for (const auto& line : detail::lines_of(text)) {
    p.instrs.push_back(parse_vector_instr(line));
    for (std::size_t k = 0; k < p.instrs.back().width(); ++k)
      detail::collect(names, p.instrs.back().lane[k]);
  }
  p.registers.assign(names.begin(), names.end());
  return p;
}

inline std::string format(const ScalarProgram& p) {
  std::string out;
  for (const auto& i : p.instrs) out += to_string(i) + "\n";
  return out;
}

inline std::string format(const VectorProgram& p) {
  std::string out;
  for (const auto& i : p.instrs) out += to_string(i) + "\n";
  return out;
}

// Vectorization --------------------------------------------------------------

/// Two adjacent instructions may share a packed op: both arithmetic with one
/// operator, the second reads nothing the first writes, and they write
/// different registers.
inline bool fusible(const ScalarInstr& x, const ScalarInstr& y) {
  using K = ScalarInstr::Kind;
  return x.kind == K::Arith && y.kind == K::Arith && x.op == y.op && x.dst != y.dst &&
         y.a != x.dst && y.b != x.dst;
}

struct Vectorized {
  VectorProgram program;
  PcMap pcmap;
};

/// Greedy left-to-right pairing of adjacent fusible instructions.
inline Vectorized vectorize(const ScalarProgram& src) {
  Vectorized out;
  out.program.registers = src.registers;
  const auto& in = src.instrs;
  for (std::size_t i = 0; i < in.size();) {
    if (i + 1 < in.size() && fusible(in[i], in[i + 1])) {
      out.program.instrs.push_back(VectorInstr::pack(in[i], in[i + 1]));
      i += 2;
    } else {
      out.program.instrs.push_back(VectorInstr::scalar(in[i]));
      i += 1;
    }
    out.pcmap.map.push_back(i);
  }
  return out;
}

// Semantics ------------------------------------------------------------------

struct MachineState {
  std::size_t pc = 0;
  std::vector<std::uint64_t> store;  // indexed like the program's registers

  friend auto operator<=>(const MachineState&, const MachineState&) = default;
};

namespace detail {

inline std::size_t reg(const std::vector<std::string>& regs, const std::string& name) {
  auto it = std::lower_bound(regs.begin(), regs.end(), name);
  if (it == regs.end() || *it != name)
    throw Error(ErrorCode::UnknownRegister, "register '" + name + "' is not declared");
  return static_cast<std::size_t>(it - regs.begin());
}

inline std::uint64_t mask(unsigned bits) {
  return bits >= 64 ? ~std::uint64_t{0} : (std::uint64_t{1} << bits) - 1;
}

// Value written by `i` when evaluated against `pre`.
inline std::pair<std::size_t, std::uint64_t> effect(const std::vector<std::string>& regs,
                                                    const ScalarInstr& i,
                                                    const std::vector<std::uint64_t>& pre,
                                                    unsigned bits) {
  std::uint64_t v = 0;
  switch (i.kind) {
    case ScalarInstr::Kind::Const: v = i.value; break;
    case ScalarInstr::Kind::Load:
    case ScalarInstr::Kind::Store: v = pre[reg(regs, i.a)]; break;
    case ScalarInstr::Kind::Arith: {
      std::uint64_t x = pre[reg(regs, i.a)], y = pre[reg(regs, i.b)];
      v = i.op == ArithOp::Add ? x + y : i.op == ArithOp::Sub ? x - y : x * y;
      break;
    }
  }
  return {reg(regs, i.dst), v & mask(bits)};
}

inline void check_registers(const std::vector<std::string>& regs, const ScalarInstr& i) {
  reg(regs, i.dst);
  for (const auto& r : i.reads()) reg(regs, r);
}

}  // namespace detail

inline MachineState step_scalar(const ScalarProgram& p, MachineState s, unsigned bits) {
  if (s.pc >= p.instrs.size()) return s;
  auto [r, v] = detail::effect(p.registers, p.instrs[s.pc], s.store, bits);
  s.store[r] = v;
  ++s.pc;
  return s;
}

inline MachineState step_vector(const VectorProgram& p, MachineState s, unsigned bits) {
  if (s.pc >= p.instrs.size()) return s;
  const VectorInstr& vi = p.instrs[s.pc];
  auto [r0, v0] = detail::effect(p.registers, vi.lane[0], s.store, bits);
  if (vi.packed) {
    auto [r1, v1] = detail::effect(p.registers, vi.lane[1], s.store, bits);
    s.store[r1] = v1;
  }
  s.store[r0] = v0;
  ++s.pc;
  return s;
}

inline std::vector<std::uint64_t> run_scalar(const ScalarProgram& p, std::vector<std::uint64_t> store,
                                             unsigned bits) {
  MachineState s{0, std::move(store)};
  while (s.pc < p.instrs.size()) s = step_scalar(p, std::move(s), bits);
  return s.store;
}

inline std::vector<std::uint64_t> run_vector(const VectorProgram& p, std::vector<std::uint64_t> store,
                                             unsigned bits) {
  MachineState s{0, std::move(store)};
  while (s.pc < p.instrs.size()) s = step_vector(p, std::move(s), bits);
  return s.store;
}

// Translation validation -------------------------------------------------------

/// Checks that the map is usable at all: right length, starts at 0,
/// strictly increasing, inside the source.
inline void validate_pcmap(const ScalarProgram& src, const VectorProgram& tgt, const PcMap& m) {
  auto fail = [](const std::string& why) { throw Error(ErrorCode::PcMapInconsistent, why); };
  if (m.map.size() != tgt.instrs.size() + 1)
    fail("map has " + std::to_string(m.map.size()) + " entries for " +
         std::to_string(tgt.instrs.size()) + " target instructions (expected one more)");
  if (m.map[0] != 0) fail("map(0) must be 0");
  for (std::size_t j = 0; j + 1 < m.map.size(); ++j)
    if (m.map[j + 1] <= m.map[j]) fail("map is not strictly increasing at " + std::to_string(j));
  if (m.map.back() > src.instrs.size()) fail("map points past the end of the source");
}

/// Index of the first target instruction that does not replace exactly the
/// source instructions the map assigns to it, with the reason.
inline std::optional<std::pair<std::size_t, std::string>> structural_mismatch(
    const ScalarProgram& src, const VectorProgram& tgt, const PcMap& m) {
  for (std::size_t j = 0; j < tgt.instrs.size(); ++j) {
    const VectorInstr& vi = tgt.instrs[j];
    std::size_t from = m.map[j], span = m.map[j + 1] - m.map[j];
    if (span != vi.width())
      return std::pair{j, "target instruction " + std::to_string(j) + " covers " +
                              std::to_string(vi.width()) + " source instruction(s) but the map assigns " +
                              std::to_string(span)};
    if (vi.lane[0] != src.instrs[from])
      return std::pair{j, "target instruction " + std::to_string(j) + " lane 0 is '" +
                              to_string(vi.lane[0]) + "', source has '" +
                              to_string(src.instrs[from]) + "'"};
    if (vi.packed) {
      if (vi.lane[1] != src.instrs[from + 1])
        return std::pair{j, "target instruction " + std::to_string(j) + " lane 1 is '" +
                                to_string(vi.lane[1]) + "', source has '" +
                                to_string(src.instrs[from + 1]) + "'"};
      if (!fusible(vi.lane[0], vi.lane[1]))
        return std::pair{j, "packed instruction " + std::to_string(j) + " fuses dependent lanes"};
    }
  }
  if (m.map.back() != src.instrs.size())
    return std::pair{tgt.instrs.size(), "target ends at source pc " + std::to_string(m.map.back()) +
                                            " before the source program ends"};
  return std::nullopt;
}

struct TvOptions {
  std::size_t max_skip = 2;
  std::size_t state_cap = models::default_state_cap();
};

/// Explicit systems for a source/target pair: every (pc, store) of the
/// source, the target reachable from every store at pc 0, and the map
/// (pc, store) -> (map(pc), store).
struct TvSystems {
  Lts source, target;
  RefinementMap map;
  std::vector<MachineState> source_states, target_states;
};

namespace detail {

inline nlohmann::json tv_label(const std::vector<std::string>& regs, const MachineState& s) {
  nlohmann::json store = nlohmann::json::object();
  for (std::size_t k = 0; k < regs.size(); ++k) store[regs[k]] = s.store[k];
  return {{"pc", s.pc}, {"store", store}};
}

}  // namespace detail

inline TvSystems tv_systems(const ScalarProgram& src, const VectorProgram& tgt, const PcMap& m,
                            unsigned bits, std::size_t state_cap = models::default_state_cap()) {
  if (bits < 1 || bits > 16)
    throw Error(ErrorCode::DomainTooLarge, "domain bits must be between 1 and 16");
  validate_pcmap(src, tgt, m);
  for (const auto& i : src.instrs) detail::check_registers(src.registers, i);
  for (const auto& vi : tgt.instrs)
    for (std::size_t k = 0; k < vi.width(); ++k) detail::check_registers(src.registers, vi.lane[k]);

  const std::size_t R = src.registers.size();
  const std::uint64_t D = std::uint64_t{1} << bits;
  // stores = D^R, guarded against overflow
  std::uint64_t stores = 1;
  for (std::size_t k = 0; k < R; ++k) {
    if (stores > state_cap / D + 1)
      throw Error(ErrorCode::DomainTooLarge, "store space exceeds the state cap");
    stores *= D;
  }
  const std::uint64_t pcs = src.instrs.size() + 1;
  if (stores * pcs > state_cap)
    throw Error(ErrorCode::DomainTooLarge,
                std::to_string(stores * pcs) + " source states exceed the cap of " +
                    std::to_string(state_cap));

  TvSystems out;
  auto store_of = [&](std::uint64_t code) {
    std::vector<std::uint64_t> st(R);
    for (std::size_t k = R; k-- > 0;) {
      st[k] = code % D;
      code /= D;
    }
    return st;
  };
  auto code_of = [&](const std::vector<std::uint64_t>& st) {
    std::uint64_t c = 0;
    for (std::uint64_t v : st) c = c * D + v;
    return c;
  };

  // Source: id = pc * stores + store code.
  std::vector<Transition> edges;
  std::vector<Label> labels;
  std::vector<StateId> init;
  edges.reserve(stores * pcs);
  labels.reserve(stores * pcs);
  out.source_states.reserve(stores * pcs);
  for (std::uint64_t pc = 0; pc < pcs; ++pc)
    for (std::uint64_t c = 0; c < stores; ++c) {
      MachineState s{pc, store_of(c)};
      MachineState n = step_scalar(src, s, bits);
      edges.emplace_back(static_cast<StateId>(pc * stores + c),
                         static_cast<StateId>(n.pc * stores + code_of(n.store)));
      labels.push_back(Label::of(detail::tv_label(src.registers, s)));
      if (pc == 0) init.push_back(static_cast<StateId>(c));
      out.source_states.push_back(std::move(s));
    }
  out.source = build_lts(stores * pcs, std::move(edges), std::move(labels), std::move(init));

  std::vector<MachineState> roots;
  for (std::uint64_t c = 0; c < stores; ++c) roots.push_back({0, store_of(c)});
  auto target = models::enumerate<MachineState>(
      roots, {}, [&](const MachineState& s) { return std::vector{step_vector(tgt, s, bits)}; },
      [&](const MachineState& s) { return detail::tv_label(src.registers, s); }, state_cap);
  out.target = std::move(target.lts);
  out.target_states = std::move(target.states);
  out.map.image.reserve(out.target_states.size());
  for (const auto& s : out.target_states)
    out.map.image.push_back(static_cast<StateId>(m.map[s.pc] * stores + code_of(s.store)));
  return out;
}

/// Skipping refinement of the target against the source plus the structural
/// check. A malformed map raises PcMapInconsistent; a well-formed map that
/// breaks the structure yields Fails.
inline Verdict tv_validate(const ScalarProgram& src, const VectorProgram& tgt, const PcMap& m,
                           unsigned bits, const TvOptions& opts = {}) {
  TvSystems sys = tv_systems(src, tgt, m, bits, opts.state_cap);
  Verdict v = check_skipping_refinement(sys.target, sys.source, sys.map,
                                        SimOptions::bounded(opts.max_skip));
  if (v.status == Status::Fails) return v;
  if (auto bad = structural_mismatch(src, tgt, m)) {
    v.status = Status::Fails;
    v.witness.reset();
    CounterTrace t;
    t.step = {static_cast<StateId>(bad->first), static_cast<StateId>(bad->first + 1)};
    t.reason = "structural check: " + bad->second;
    v.counterexample = std::move(t);
  }
  return v;
}

// Mutations ------------------------------------------------------------------

/// Swaps the first operands of the two lanes of packed instruction j.
/// Returns nullopt when j is not packed or the swap changes nothing.
inline std::optional<VectorProgram> lane_swap(const VectorProgram& tgt, std::size_t j) {
  if (j >= tgt.instrs.size() || !tgt.instrs[j].packed) return std::nullopt;
  VectorProgram out = tgt;
  auto& vi = out.instrs[j];
  if (vi.lane[0].a == vi.lane[1].a) return std::nullopt;
  std::swap(vi.lane[0].a, vi.lane[1].a);
  return out;
}

/// Removes target instruction j and the map entry after it.
inline std::pair<VectorProgram, PcMap> drop_instruction(const VectorProgram& tgt, const PcMap& m,
                                                        std::size_t j) {
  if (j >= tgt.instrs.size())
    throw Error(ErrorCode::IndexOutOfRange, "no target instruction " + std::to_string(j));
  VectorProgram p = tgt;
  p.instrs.erase(p.instrs.begin() + static_cast<std::ptrdiff_t>(j));
  PcMap pm = m;
  pm.map.erase(pm.map.begin() + static_cast<std::ptrdiff_t>(j + 1));
  return {p, pm};
}

}  // namespace skipref::tv
