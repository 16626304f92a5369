#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

#include "skipref/error.hpp"
#include "skipref/lts.hpp"
#include "skipref/models/des.hpp"
#include "skipref/models/enumerate.hpp"
#include "skipref/models/fault.hpp"
#include "skipref/models/memory.hpp"
#include "skipref/models/stack.hpp"

namespace skipref::models {

enum class ModelKind { DesAbs, DesOpt, Stk, Bstk, Memc, OptMemc };

inline constexpr ModelKind kAllKinds[] = {ModelKind::DesAbs, ModelKind::DesOpt, ModelKind::Stk,
                                          ModelKind::Bstk,   ModelKind::Memc,   ModelKind::OptMemc};

inline std::string_view to_string(ModelKind k) {
  switch (k) {
    case ModelKind::DesAbs: return "des_abs";
    case ModelKind::DesOpt: return "des_opt";
    case ModelKind::Stk: return "stk";
    case ModelKind::Bstk: return "bstk";
    case ModelKind::Memc: return "memc";
    case ModelKind::OptMemc: return "optmemc";
  }
  return "unknown";
}

inline ModelKind parse_model_kind(std::string_view s) {
  for (ModelKind k : kAllKinds)
    if (to_string(k) == s) return k;
  throw Error(ErrorCode::InvalidArgument, "unknown model kind '" + std::string(s) + "'");
}

/// The abstract kind a concrete kind refines, if any.
inline std::optional<ModelKind> abstract_kind_of(ModelKind k) {
  switch (k) {
    case ModelKind::DesOpt: return ModelKind::DesAbs;
    case ModelKind::Bstk: return ModelKind::Stk;
    case ModelKind::OptMemc: return ModelKind::Memc;
    default: return std::nullopt;
  }
}

/// A generated system plus what is needed to read it: the parameters and
/// the decoded state tuple of every state id.
struct Model {
  ModelKind kind = ModelKind::Stk;
  nlohmann::json params;
  std::optional<FaultKind> fault;
  Lts lts;
  std::vector<nlohmann::json> states;
};

struct GenOptions {
  std::size_t state_cap = default_state_cap();
  std::vector<nlohmann::json> seeds;  // extra roots (abstract kinds only)
};

// Parameter (de)serialization ------------------------------------------------

inline nlohmann::json to_json(const DesParams& p) {
  nlohmann::json events = nlohmann::json::array();
  for (const auto& e : p.events) events.push_back({e.id, e.time});
  nlohmann::json effects = nlohmann::json::object();
  for (const auto& [id, eff] : p.effects) {
    nlohmann::json incr = nlohmann::json::array(), gen = nlohmann::json::array();
    for (auto [v, d] : eff.incr) incr.push_back({v, d});
    for (const auto& [g, delay] : eff.gen) gen.push_back({g, delay});
    effects[id] = {{"incr", incr}, {"gen", gen}};
  }
  return {{"events", events},
          {"effects", effects},
          {"time_bound", p.time_bound},
          {"vars", detail::des_var_count(p)}};
}

inline DesParams des_params_from_json(const nlohmann::json& j) {
  DesParams p;
  for (const auto& e : j.value("events", nlohmann::json::array()))
    p.events.push_back({e.at(0).get<std::string>(), e.at(1).get<unsigned>()});
  if (j.contains("effects"))
    for (const auto& [id, eff] : j.at("effects").items()) {
      DesEffect d;
      for (const auto& x : eff.value("incr", nlohmann::json::array()))
        d.incr.emplace_back(x.at(0).get<std::size_t>(), x.at(1).get<int>());
      for (const auto& x : eff.value("gen", nlohmann::json::array()))
        d.gen.emplace_back(x.at(0).get<std::string>(), x.at(1).get<unsigned>());
      p.effects[id] = d;
    }
  p.time_bound = j.value("time_bound", 0u);
  p.vars = j.value("vars", std::size_t{0});
  return p;
}

inline nlohmann::json to_json(const StkParams& p) {
  nlohmann::json imem = nlohmann::json::array();
  for (const auto& i : p.imem) imem.push_back(to_string(i));
  return {{"imem", imem},
          {"const_domain", p.const_domain},
          {"stack_cap", p.stack_cap},
          {"ibuf_cap", p.ibuf_cap},
          {"drain_includes_trigger", p.drain_includes_trigger}};
}

inline StkParams stk_params_from_json(const nlohmann::json& j) {
  StkParams p;
  for (const auto& i : j.value("imem", nlohmann::json::array()))
    p.imem.push_back(parse_instr(i.get<std::string>()));
  p.const_domain = j.value("const_domain", std::vector<int>{});
  p.stack_cap = j.value("stack_cap", p.stack_cap);
  p.ibuf_cap = j.value("ibuf_cap", p.ibuf_cap);
  p.drain_includes_trigger = j.value("drain_includes_trigger", true);
  return p;
}

inline nlohmann::json to_json(const MemParams& p) {
  nlohmann::json reqs = nlohmann::json::array();
  for (const auto& r : p.reqs) reqs.push_back(to_string(r));
  return {{"reqs", reqs}, {"addrs", p.addrs}, {"values", p.values}, {"rbuf_cap", p.rbuf_cap}};
}

inline MemParams mem_params_from_json(const nlohmann::json& j) {
  MemParams p;
  for (const auto& r : j.value("reqs", nlohmann::json::array()))
    p.reqs.push_back(parse_req(r.get<std::string>()));
  p.addrs = j.value("addrs", p.addrs);
  p.values = j.value("values", p.values);
  p.rbuf_cap = j.value("rbuf_cap", p.rbuf_cap);
  return p;
}

/// Canonical parameter JSON for a kind (defaults filled in).
inline nlohmann::json normalize_params(ModelKind k, const nlohmann::json& j) {
  try {
    switch (k) {
      case ModelKind::DesAbs:
      case ModelKind::DesOpt: return to_json(des_params_from_json(j));
      case ModelKind::Stk:
      case ModelKind::Bstk: return to_json(stk_params_from_json(j));
      case ModelKind::Memc:
      case ModelKind::OptMemc: return to_json(mem_params_from_json(j));
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("bad model parameters: ") + e.what());
  }
  return j;
}

// Generation ----------------------------------------------------------------

namespace detail {

template <class State>
Model wrap(ModelKind kind, nlohmann::json params, std::optional<FaultKind> fault,
           Enumerated<State> e) {
  Model m{kind, std::move(params), fault, std::move(e.lts), {}};
  m.states.reserve(e.states.size());
  for (const auto& s : e.states) m.states.push_back(encode(s));
  return m;
}

template <class State, class Decode>
std::vector<State> decode_all(const std::vector<nlohmann::json>& seeds, Decode decode) {
  std::vector<State> out;
  try {
    for (const auto& j : seeds) out.push_back(decode(j));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("bad seed state: ") + e.what());
  }
  return out;
}

inline Model generate(ModelKind kind, const nlohmann::json& raw, std::optional<FaultKind> fault,
                      const GenOptions& opts) {
  nlohmann::json params = normalize_params(kind, raw);
  if (!opts.seeds.empty() && abstract_kind_of(kind))
    throw Error(ErrorCode::InvalidArgument, "seed states only apply to abstract kinds");
  switch (kind) {
    case ModelKind::DesAbs:
    case ModelKind::DesOpt: {
      if (fault) throw Error(ErrorCode::InapplicableFault, "DES models take no faults");
      auto seeds = decode_all<DesState>(opts.seeds, decode_des_state);
      return wrap(kind, params, fault,
                  gen_des(des_params_from_json(params), kind == ModelKind::DesOpt, seeds,
                          opts.state_cap));
    }
    case ModelKind::Stk: {
      if (fault) throw Error(ErrorCode::InapplicableFault, "stk has no buffer to break");
      auto seeds = decode_all<StkState>(opts.seeds, decode_stk_state);
      return wrap(kind, params, fault, gen_stk(stk_params_from_json(params), seeds, opts.state_cap));
    }
    case ModelKind::Bstk:
      return wrap(kind, params, fault, gen_bstk(stk_params_from_json(params), fault, opts.state_cap));
    case ModelKind::Memc: {
      if (fault) throw Error(ErrorCode::InapplicableFault, "memc has no buffer to break");
      auto seeds = decode_all<MemcState>(opts.seeds, decode_memc_state);
      return wrap(kind, params, fault, gen_memc(mem_params_from_json(params), seeds, opts.state_cap));
    }
    case ModelKind::OptMemc:
      return wrap(kind, params, fault,
                  gen_optmemc(mem_params_from_json(params), fault, opts.state_cap));
  }
  throw Error(ErrorCode::InvalidArgument, "unknown model kind");
}

}  // namespace detail

inline Model gen_model(ModelKind kind, const nlohmann::json& params, const GenOptions& opts = {}) {
  return detail::generate(kind, params, std::nullopt, opts);
}

inline Model inject_fault(ModelKind kind, const nlohmann::json& params, FaultKind fault,
                          const GenOptions& opts = {}) {
  return detail::generate(kind, params, fault, opts);
}

inline bool fault_applies(ModelKind kind, FaultKind fault) {
  if (kind == ModelKind::OptMemc) return true;
  return kind == ModelKind::Bstk && fault != FaultKind::MarkNewestRedundant;
}

// Refinement maps ------------------------------------------------------------

/// The abstract tuple a concrete tuple stands for.
inline nlohmann::json image_tuple(ModelKind concrete_kind, const nlohmann::json& s) {
  switch (concrete_kind) {
    case ModelKind::DesOpt: return s;
    case ModelKind::Bstk:
      return {{"pc", s.at("pc").get<std::size_t>() - s.at("ibuf").size()},
              {"stk", s.at("stk")},
              {"out", s.at("out")}};
    case ModelKind::OptMemc:
      return {{"pt", s.at("pt").get<std::size_t>() - s.at("rbuf").size()},
              {"mem", s.at("mem")},
              {"rdout", s.at("rdout")}};
    default:
      throw Error(ErrorCode::IncompatibleModels,
                  std::string(to_string(concrete_kind)) + " has no abstract counterpart");
  }
}

namespace detail {

inline bool same_program(ModelKind kind, const nlohmann::json& a, const nlohmann::json& b) {
  switch (kind) {
    case ModelKind::DesOpt: return a == b;
    case ModelKind::Bstk:
      return a.at("imem") == b.at("imem") && a.at("stack_cap") == b.at("stack_cap") &&
             a.at("const_domain") == b.at("const_domain");
    case ModelKind::OptMemc:
      return a.at("reqs") == b.at("reqs") && a.at("addrs") == b.at("addrs") &&
             a.at("values") == b.at("values");
    default: return false;
  }
}

}  // namespace detail

/// DES: identity on tuples; BSTK: drop the buffer and roll the pc back;
/// OptMEMC: drop the buffer and roll the request pointer back.
inline RefinementMap refinement_map_of(const Model& concrete, const Model& abstract) {
  auto expected = abstract_kind_of(concrete.kind);
  if (!expected || *expected != abstract.kind)
    throw Error(ErrorCode::IncompatibleModels, std::string(to_string(concrete.kind)) +
                                                   " does not refine " +
                                                   std::string(to_string(abstract.kind)));
  if (!detail::same_program(concrete.kind, concrete.params, abstract.params))
    throw Error(ErrorCode::IncompatibleModels, "the models were generated from different programs");
  std::unordered_map<std::string, StateId> index;
  for (StateId a = 0; a < abstract.states.size(); ++a) index.emplace(abstract.states[a].dump(), a);
  RefinementMap r;
  r.image.reserve(concrete.states.size());
  for (StateId s = 0; s < concrete.states.size(); ++s) {
    auto it = index.find(image_tuple(concrete.kind, concrete.states[s]).dump());
    if (it == index.end())
      throw Error(ErrorCode::IncompatibleModels,
                  "image of concrete state " + std::to_string(s) +
                      " is not a state of the abstract model (generate it with cover)");
    r.image.push_back(it->second);
  }
  return r;
}

/// The abstract model for `concrete`, closed over the images of all
/// concrete states so that every state has an image.
inline Model gen_abstract_for(const Model& concrete, std::size_t state_cap = default_state_cap()) {
  auto kind = abstract_kind_of(concrete.kind);
  if (!kind)
    throw Error(ErrorCode::IncompatibleModels,
                std::string(to_string(concrete.kind)) + " has no abstract counterpart");
  GenOptions opts{state_cap, {}};
  for (const auto& s : concrete.states) opts.seeds.push_back(image_tuple(concrete.kind, s));
  return gen_model(*kind, concrete.params, opts);
}

}  // namespace skipref::models
