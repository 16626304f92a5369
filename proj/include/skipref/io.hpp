#pragma once

#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "skipref/error.hpp"
#include "skipref/lts.hpp"
#include "skipref/match.hpp"
#include "skipref/models.hpp"
#include "skipref/refinement.hpp"
#include "skipref/vectorizer.hpp"
#include "skipref/wfsk.hpp"

namespace skipref::io {

using nlohmann::json;

namespace detail {

// Runs a reader, turning JSON shape errors into ParseError.
template <class F>
auto guarded(const char* what, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("malformed ") + what + ": " + e.what());
  }
}

inline const json& field(const json& j, const char* key) {
  if (!j.is_object() || !j.contains(key))
    throw Error(ErrorCode::ParseError, std::string("missing field '") + key + "'");
  return j.at(key);
}

}  // namespace detail

inline json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::ParseError, "cannot open '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  try {
    return json::parse(buf.str());
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::ParseError, "'" + path + "' is not valid JSON: " + e.what());
  }
}

inline std::string read_text_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::ParseError, "cannot open '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

inline void write_json_file(const std::string& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::InvalidArgument, "cannot write '" + path + "'");
  out << j.dump(2) << '\n';
}

// Lts ------------------------------------------------------------------------

inline json to_json(const Lts& l) {
  json labels = json::array(), transitions = json::array();
  for (const auto& lab : l.labels()) labels.push_back(lab.value());
  for (auto [s, u] : l.transitions()) transitions.push_back({s, u});
  return {{"states", l.size()},
          {"labels", labels},
          {"transitions", transitions},
          {"initial", l.initial()}};
}

inline Lts lts_from_json(const json& j) {
  return detail::guarded("Lts", [&] {
    std::size_t n = detail::field(j, "states").get<std::size_t>();
    std::vector<Label> labels;
    for (const auto& v : detail::field(j, "labels")) labels.push_back(Label::of(v));
    std::vector<Transition> edges;
    for (const auto& t : detail::field(j, "transitions")) {
      if (!t.is_array() || t.size() != 2)
        throw Error(ErrorCode::ParseError, "transition must be a pair");
      edges.emplace_back(t.at(0).get<StateId>(), t.at(1).get<StateId>());
    }
    std::vector<StateId> initial = j.value("initial", std::vector<StateId>{});
    return build_lts(n, std::move(edges), std::move(labels), std::move(initial));
  });
}

// Relations and certificates -------------------------------------------------

inline json to_json(const Relation& r) {
  json pairs = json::array();
  for (auto [s, w] : r.pairs()) pairs.push_back({s, w});
  return {{"pairs", pairs}};
}

inline Relation relation_from_json(const json& j, std::size_t universe) {
  return detail::guarded("relation", [&] {
    std::vector<Transition> pairs;
    for (const auto& p : detail::field(j, "pairs")) {
      if (!p.is_array() || p.size() != 2) throw Error(ErrorCode::ParseError, "pair expected");
      pairs.emplace_back(p.at(0).get<StateId>(), p.at(1).get<StateId>());
    }
    return Relation(universe, pairs);
  });
}

inline json to_json(const RanktTable& t) {
  json out = json::array();
  for (auto [s, w, r] : t.entries()) out.push_back({s, w, r});
  return out;
}

inline RanktTable rankt_from_json(const json& j) {
  return detail::guarded("rankt", [&] {
    RanktTable t;
    for (const auto& e : j) t.set(e.at(0).get<StateId>(), e.at(1).get<StateId>(), e.at(2).get<Rank>());
    return t;
  });
}

inline json to_json(const WfskCertificate& c) {
  json rankl = json::array();
  for (auto [v, s, u, r] : c.rankl.entries()) rankl.push_back({v, s, u, r});
  json out = {{"rankt", to_json(c.rankt)}, {"rankl", rankl}, {"skip_bound", c.skip_bound}};
  if (c.rankl.fallback()) out["rankl_default"] = *c.rankl.fallback();
  return out;
}

inline json to_json(const RwfskCertificate& c) { return {{"rankt", to_json(c.rankt)}}; }

inline WfskCertificate wfsk_certificate_from_json(const json& j) {
  return detail::guarded("certificate", [&] {
    WfskCertificate c;
    c.rankt = rankt_from_json(detail::field(j, "rankt"));
    for (const auto& e : j.value("rankl", json::array()))
      c.rankl.set(e.at(0).get<StateId>(), e.at(1).get<StateId>(), e.at(2).get<StateId>(),
                  e.at(3).get<Rank>());
    if (j.contains("rankl_default")) c.rankl.set_fallback(j.at("rankl_default").get<Rank>());
    c.skip_bound = j.value("skip_bound", std::size_t{2});
    return c;
  });
}

inline RwfskCertificate rwfsk_certificate_from_json(const json& j) {
  return detail::guarded("certificate", [&] {
    return RwfskCertificate{rankt_from_json(detail::field(j, "rankt"))};
  });
}

inline json to_json(const Violation& v) {
  json out = {{"kind", to_string(v.kind)}, {"s", v.s}, {"w", v.w}, {"detail", v.detail}};
  if (v.u) out["u"] = *v.u;
  return out;
}

// Lassos and witnesses -------------------------------------------------------

inline json to_json(const Lasso& l) { return {{"stem", l.stem}, {"loop", l.loop}}; }

inline Lasso lasso_from_json(const json& j) {
  return detail::guarded("lasso", [&] {
    return Lasso{j.value("stem", std::vector<StateId>{}),
                 detail::field(j, "loop").get<std::vector<StateId>>()};
  });
}

inline json to_json(const PartitionIndex& p) {
  return {{"cuts", p.cuts}, {"period_start", p.period_start}, {"stride", p.stride}};
}

inline PartitionIndex partition_from_json(const json& j) {
  return detail::guarded("partition index", [&] {
    PartitionIndex p;
    p.cuts = detail::field(j, "cuts").get<std::vector<std::size_t>>();
    p.period_start = j.value("period_start", std::size_t{0});
    p.stride = j.value("stride", std::size_t{1});
    return p;
  });
}

inline json to_json(const MatchWitness& m) {
  return {{"pi", to_json(m.pi)}, {"xi", to_json(m.xi)}, {"delta", to_json(m.delta)}};
}

inline MatchWitness match_witness_from_json(const json& j) {
  return MatchWitness{partition_from_json(detail::field(j, "pi")),
                      partition_from_json(detail::field(j, "xi")),
                      lasso_from_json(detail::field(j, "delta"))};
}

inline json to_json(const MatchResult& r) {
  if (r.witness) {
    json out = to_json(*r.witness);
    out["matched"] = true;
    return out;
  }
  json frontier = json::array();
  for (auto [k, a] : r.failure.frontier) frontier.push_back({k, a});
  return {{"matched", false},
          {"reason", r.failure.reason},
          {"explored", r.failure.explored},
          {"frontier", frontier}};
}

// Verdicts ---------------------------------------------------------------------

inline json to_json(const Verdict& v) {
  json out = {{"status", to_string(v.status)},
              {"reachable_only", v.reachable_only},
              {"max_skip", v.max_skip ? json(*v.max_skip) : json("inf")},
              {"concrete_size", v.concrete_size}};
  if (v.witness) {
    out["universe"] = v.witness->relation.universe();
    out["witness"] = {{"relation", to_json(v.witness->relation)},
                      {"rankt", to_json(v.witness->rankt)}};
  }
  if (v.counterexample) {
    const auto& t = *v.counterexample;
    json cands = json::array();
    for (const auto& c : t.candidates)
      cands.push_back({{"state", c.state},
                       {"distance", c.distance},
                       {"label", json::parse(c.label)},
                       {"failed", c.failed},
                       {"why", c.why}});
    out["counterexample"] = {{"stem", t.stem},
                             {"step", {t.step.first, t.step.second}},
                             {"image", t.image},
                             {"pass", to_string(t.pass)},
                             {"epoch", t.epoch},
                             {"reason", t.reason},
                             {"label_s", t.label_s.empty() ? json() : json::parse(t.label_s)},
                             {"label_u", t.label_u.empty() ? json() : json::parse(t.label_u)},
                             {"candidates", cands}};
  }
  return out;
}

inline Verdict verdict_from_json(const json& j) {
  return detail::guarded("verdict", [&] {
    Verdict v;
    std::string status = detail::field(j, "status").get<std::string>();
    if (status == "Holds") v.status = Status::Holds;
    else if (status == "Fails") v.status = Status::Fails;
    else if (status == "UnknownBeyondBound") v.status = Status::UnknownBeyondBound;
    else throw Error(ErrorCode::ParseError, "unknown status '" + status + "'");
    v.reachable_only = j.value("reachable_only", false);
    if (j.contains("max_skip") && j.at("max_skip").is_number())
      v.max_skip = j.at("max_skip").get<std::size_t>();
    v.concrete_size = j.value("concrete_size", std::size_t{0});
    if (j.contains("witness")) {
      const json& w = j.at("witness");
      const json& pairs = detail::field(detail::field(w, "relation"), "pairs");
      std::size_t universe = 0;
      for (const auto& p : pairs)
        universe = std::max({universe, p.at(0).get<std::size_t>() + 1, p.at(1).get<std::size_t>() + 1});
      if (j.contains("universe")) universe = j.at("universe").get<std::size_t>();
      v.witness = Witness{relation_from_json(w.at("relation"), universe),
                          rankt_from_json(detail::field(w, "rankt"))};
    }
    if (j.contains("counterexample")) {
      const json& c = j.at("counterexample");
      CounterTrace t;
      t.stem = c.value("stem", std::vector<StateId>{});
      t.step = {c.at("step").at(0).get<StateId>(), c.at("step").at(1).get<StateId>()};
      t.image = c.value("image", StateId{0});
      t.pass = c.value("pass", std::string("local")) == "divergence" ? PrunePass::Divergence
                                                                     : PrunePass::Local;
      t.epoch = c.value("epoch", std::size_t{0});
      t.reason = c.value("reason", std::string());
      if (c.contains("label_s") && !c.at("label_s").is_null()) t.label_s = c.at("label_s").dump();
      if (c.contains("label_u") && !c.at("label_u").is_null()) t.label_u = c.at("label_u").dump();
      for (const auto& d : c.value("candidates", json::array()))
        t.candidates.push_back({d.at("state").get<StateId>(), d.at("distance").get<std::size_t>(),
                                d.at("label").dump(), d.at("failed").get<std::string>(),
                                d.at("why").get<std::string>()});
      v.counterexample = std::move(t);
    }
    return v;
  });
}

// Models -----------------------------------------------------------------------

/// Lts JSON plus a "model" member with kind, parameters and state tuples.
inline json to_json(const models::Model& m) {
  json out = to_json(m.lts);
  json meta = {{"kind", models::to_string(m.kind)}, {"params", m.params}, {"states", m.states}};
  if (m.fault) meta["fault"] = models::to_string(*m.fault);
  out["model"] = meta;
  return out;
}

inline bool is_model_json(const json& j) { return j.is_object() && j.contains("model"); }

inline models::Model model_from_json(const json& j) {
  return detail::guarded("model", [&] {
    const json& meta = detail::field(j, "model");
    models::Model m;
    m.kind = models::parse_model_kind(detail::field(meta, "kind").get<std::string>());
    m.params = models::normalize_params(m.kind, meta.value("params", json::object()));
    if (meta.contains("fault")) m.fault = models::parse_fault(meta.at("fault").get<std::string>());
    m.lts = lts_from_json(j);
    m.states = detail::field(meta, "states").get<std::vector<json>>();
    if (m.states.size() != m.lts.size())
      throw Error(ErrorCode::ParseError, "model lists " + std::to_string(m.states.size()) +
                                             " state tuples for " + std::to_string(m.lts.size()) +
                                             " states");
    return m;
  });
}

// Refinement maps ----------------------------------------------------------------

inline json to_json(const RefinementMap& r) { return {{"map", r.image}}; }

inline RefinementMap refinement_map_from_json(const json& j) {
  return detail::guarded("refinement map", [&] {
    return RefinementMap{detail::field(j, "map").get<std::vector<StateId>>()};
  });
}

// Programs -------------------------------------------------------------------------

inline json to_json(const tv::ScalarProgram& p) {
  json instrs = json::array();
  for (const auto& i : p.instrs) instrs.push_back(tv::to_string(i));
  return {{"registers", p.registers}, {"instrs", instrs}};
}

inline json to_json(const tv::VectorProgram& p) {
  json instrs = json::array();
  for (const auto& i : p.instrs) instrs.push_back(tv::to_string(i));
  return {{"registers", p.registers}, {"instrs", instrs}};
}

inline json to_json(const tv::PcMap& m) { return {{"map", m.map}}; }

inline tv::ScalarProgram scalar_program_from_json(const json& j) {
  return detail::guarded("program", [&] {
    std::vector<tv::ScalarInstr> instrs;
    for (const auto& line : detail::field(j, "instrs"))
      instrs.push_back(tv::parse_scalar_instr(line.get<std::string>()));
    return tv::make_scalar_program(std::move(instrs),
                                   j.value("registers", std::vector<std::string>{}));
  });
}

inline tv::VectorProgram vector_program_from_json(const json& j) {
  return detail::guarded("program", [&] {
    std::string text;
    for (const auto& line : detail::field(j, "instrs")) text += line.get<std::string>() + "\n";
    tv::VectorProgram p = tv::parse_vector_program(text);
    if (j.contains("registers")) {
      auto regs = j.at("registers").get<std::vector<std::string>>();
      std::sort(regs.begin(), regs.end());
      p.registers = regs;
    }
    return p;
  });
}

inline tv::PcMap pcmap_from_json(const json& j) {
  return detail::guarded("pc map", [&] {
    const json& m = detail::field(j, "map");
    for (const auto& e : m)
      if (!e.is_number_unsigned()) throw Error(ErrorCode::ParseError, "pc map entries must be unsigned");
    return tv::PcMap{m.get<std::vector<std::size_t>>()};
  });
}

}  // namespace skipref::io
