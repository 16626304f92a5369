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

struct Req {
  bool write = false;
  std::size_t addr = 0;
  int value = 0;  // writes only

  friend auto operator<=>(const Req&, const Req&) = default;
};

inline std::string to_string(const Req& r) {
  return r.write ? "w " + std::to_string(r.addr) + " " + std::to_string(r.value)
                 : "r " + std::to_string(r.addr);
}

/// "w 0 1" or "r 0".
inline Req parse_req(const std::string& text) {
  std::istringstream in(text);
  std::string op, extra;
  in >> op;
  Req r;
  if (op == "w" || op == "write") {
    r.write = true;
    if (!(in >> r.addr >> r.value))
      throw Error(ErrorCode::ParseError, "write needs an address and a value: '" + text + "'");
  } else if (op == "r" || op == "read") {
    if (!(in >> r.addr)) throw Error(ErrorCode::ParseError, "read needs an address: '" + text + "'");
  } else {
    throw Error(ErrorCode::ParseError, "unknown request '" + text + "'");
  }
  if (in >> extra) throw Error(ErrorCode::ParseError, "trailing input in '" + text + "'");
  return r;
}

inline std::vector<Req> parse_requests(const std::string& text) {
  std::vector<Req> out;
  std::istringstream in(text);
  std::string piece;
  while (std::getline(in, piece, ';')) {
    if (piece.find_first_not_of(" \t\r\n") == std::string::npos) continue;
    out.push_back(parse_req(piece));
  }
  return out;
}

struct MemParams {
  std::vector<Req> reqs;
  std::size_t addrs = 2;
  std::vector<int> values{0, 1};
  std::size_t rbuf_cap = 2;

  friend bool operator==(const MemParams&, const MemParams&) = default;
};

struct MemcState {
  std::size_t pt = 0;
  std::vector<int> mem;
  std::optional<int> rdout;

  friend auto operator<=>(const MemcState&, const MemcState&) = default;
};

struct OptMemcState {
  std::size_t pt = 0;
  std::vector<Req> rbuf;
  std::vector<int> mem;
  std::optional<int> rdout;

  friend auto operator<=>(const OptMemcState&, const OptMemcState&) = default;
};

namespace detail {

inline void validate(const MemParams& p) {
  if (p.addrs < 1 || p.values.empty() || p.rbuf_cap < 1)
    throw Error(ErrorCode::InvalidArgument,
                "need at least one address, one value and buffer capacity 1");
  for (const auto& r : p.reqs) {
    if (r.addr >= p.addrs)
      throw Error(ErrorCode::InvalidArgument, "request '" + to_string(r) + "' address out of range");
    if (r.write && std::find(p.values.begin(), p.values.end(), r.value) == p.values.end())
      throw Error(ErrorCode::InvalidArgument, "request '" + to_string(r) + "' value out of domain");
  }
}

inline void serve(const Req& r, std::vector<int>& mem, std::optional<int>& rdout) {
  if (r.write)
    mem[r.addr] = r.value;
  else
    rdout = mem[r.addr];
}

// Marks the older write of every adjacent pair of writes to one address
// (the newer one under the MarkNewestRedundant fault).
inline std::vector<char> redundant(const std::vector<Req>& buf, std::optional<FaultKind> fault) {
  std::vector<char> mark(buf.size(), 0);
  for (std::size_t i = 0; i + 1 < buf.size(); ++i)
    if (buf[i].write && buf[i + 1].write && buf[i].addr == buf[i + 1].addr)
      mark[fault == FaultKind::MarkNewestRedundant ? i + 1 : i] = 1;
  return mark;
}

// Executes the buffer (plus `fetched`, if any) and empties it.
inline void drain(OptMemcState& s, const std::optional<Req>& fetched,
                  std::optional<FaultKind> fault) {
  std::vector<char> mark = redundant(s.rbuf, fault);
  bool drop_last = fault == FaultKind::DropLastOnDrain;
  for (std::size_t i = 0; i < s.rbuf.size(); ++i)
    if (!mark[i] && !(drop_last && i + 1 == s.rbuf.size())) serve(s.rbuf[i], s.mem, s.rdout);
  if (fetched) serve(*fetched, s.mem, s.rdout);
  s.rbuf.clear();
}

// All memories over the value domain, in lexicographic order.
inline std::vector<std::vector<int>> all_memories(const MemParams& p) {
  std::vector<std::vector<int>> out{{}};
  for (std::size_t a = 0; a < p.addrs; ++a) {
    std::vector<std::vector<int>> next;
    for (const auto& m : out)
      for (int v : p.values) {
        next.push_back(m);
        next.back().push_back(v);
      }
    out = std::move(next);
  }
  return out;
}

}  // namespace detail

inline nlohmann::json encode(const MemcState& s) {
  return {{"pt", s.pt},
          {"mem", s.mem},
          {"rdout", s.rdout ? nlohmann::json(*s.rdout) : nlohmann::json()}};
}

inline nlohmann::json encode(const OptMemcState& s) {
  nlohmann::json rbuf = nlohmann::json::array();
  for (const auto& r : s.rbuf) rbuf.push_back(to_string(r));
  return {{"pt", s.pt},
          {"rbuf", rbuf},
          {"mem", s.mem},
          {"rdout", s.rdout ? nlohmann::json(*s.rdout) : nlohmann::json()}};
}

inline MemcState decode_memc_state(const nlohmann::json& j) {
  MemcState s;
  s.pt = j.at("pt").get<std::size_t>();
  s.mem = j.at("mem").get<std::vector<int>>();
  if (!j.at("rdout").is_null()) s.rdout = j.at("rdout").get<int>();
  return s;
}

inline MemcState memc_step(const MemParams& p, MemcState s) {
  if (s.pt >= p.reqs.size()) return s;
  detail::serve(p.reqs[s.pt], s.mem, s.rdout);
  ++s.pt;
  return s;
}

/// Writes are buffered; a read or a full buffer triggers write coalescing
/// and executes the buffer followed by the fetched request.
inline OptMemcState optmemc_step(const MemParams& p, OptMemcState s,
                                 std::optional<FaultKind> fault = std::nullopt) {
  const std::size_t n = p.reqs.size();
  if (s.pt >= n) {
    detail::drain(s, std::nullopt, fault);
    return s;
  }
  const Req& r = p.reqs[s.pt];
  if (r.write && s.rbuf.size() < p.rbuf_cap) {
    s.rbuf.push_back(r);
    s.pt = std::min(n, s.pt + (fault == FaultKind::OffByOnePointer ? 2 : 1));
    return s;
  }
  detail::drain(s, r, fault);
  if (fault != FaultKind::SkipPcIncrement) ++s.pt;
  return s;
}

inline MemcState optmemc_image(const OptMemcState& s) {
  return MemcState{s.pt - s.rbuf.size(), s.mem, s.rdout};
}

inline Enumerated<MemcState> gen_memc(const MemParams& p, const std::vector<MemcState>& seeds = {},
                                      std::size_t cap = default_state_cap()) {
  detail::validate(p);
  std::vector<MemcState> init;
  for (auto& m : detail::all_memories(p)) init.push_back(MemcState{0, m, std::nullopt});
  return enumerate<MemcState>(
      init, seeds, [&](const MemcState& s) { return std::vector{memc_step(p, s)}; },
      [](const MemcState& s) { return encode(s); }, cap);
}

inline Enumerated<OptMemcState> gen_optmemc(const MemParams& p,
                                            std::optional<FaultKind> fault = std::nullopt,
                                            std::size_t cap = default_state_cap()) {
  detail::validate(p);
  std::vector<OptMemcState> init;
  for (auto& m : detail::all_memories(p)) init.push_back(OptMemcState{0, {}, m, std::nullopt});
  return enumerate<OptMemcState>(
      init, {}, [&](const OptMemcState& s) { return std::vector{optmemc_step(p, s, fault)}; },
      [](const OptMemcState& s) { return encode(s); }, cap);
}

}  // namespace skipref::models
