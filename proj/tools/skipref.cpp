// skipref: command-line front end for the skipping refinement toolkit.
//
// Exit codes: 0 holds/ok, 1 fails/violation, 2 usage, 3 invalid input,
// 4 unknown beyond the skip bound.

#include <CLI11.hpp>

#include <cstdlib>
#include <iostream>
#include <random>
#include <sstream>

#include "skipref/skipref.hpp"

using namespace skipref;
using nlohmann::json;

namespace {

enum Exit { kOk = 0, kFails = 1, kUsage = 2, kInvalid = 3, kUnknown = 4 };

struct Globals {
  bool as_json = false;
  std::optional<std::size_t> state_cap;

  std::size_t cap() const { return state_cap ? *state_cap : models::default_state_cap(); }
};

void emit(const json& j, const std::string& out_path = "") {
  if (out_path.empty()) std::cout << j.dump(2) << '\n';
  else io::write_json_file(out_path, j);
}

std::optional<std::size_t> parse_skip(const std::string& text) {
  if (text.empty() || text == "inf") return std::nullopt;
  std::size_t pos = 0;
  unsigned long long v = 0;
  try {
    v = std::stoull(text, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos != text.size() || v == 0)
    throw Error(ErrorCode::InvalidArgument, "--max-skip expects a positive integer or 'inf'");
  return static_cast<std::size_t>(v);
}

Relation read_relation(const std::string& path, const Lts& l) {
  return io::relation_from_json(io::read_json_file(path), l.size());
}

// A program file holds either program text or its JSON form.
template <class Program, class FromJson, class FromText>
Program read_program(const std::string& path, FromJson from_json, FromText from_text) {
  std::string text = io::read_text_file(path);
  json j = json::parse(text, nullptr, false);
  if (!j.is_discarded() && j.is_object()) return from_json(j);
  return from_text(text);
}

tv::ScalarProgram read_scalar(const std::string& path) {
  return read_program<tv::ScalarProgram>(path, io::scalar_program_from_json,
                                         tv::parse_scalar_program);
}

tv::VectorProgram read_vector(const std::string& path) {
  return read_program<tv::VectorProgram>(path, io::vector_program_from_json,
                                         tv::parse_vector_program);
}

int exit_for(Status s) {
  switch (s) {
    case Status::Holds: return kOk;
    case Status::Fails: return kFails;
    case Status::UnknownBeyondBound: return kUnknown;
  }
  return kInvalid;
}

int report_verdict(const Globals& g, const Verdict& v) {
  if (g.as_json) {
    emit(io::to_json(v));
  } else {
    std::cout << "verdict: " << to_string(v.status) << '\n';
    std::cout << "max skip: " << (v.max_skip ? std::to_string(*v.max_skip) : "inf")
              << (v.reachable_only ? " (reachable states only)" : "") << '\n';
    if (v.witness)
      std::cout << "witness: " << v.witness->relation.size() << " pairs, "
                << v.witness->rankt.entries().size() << " rank entries\n";
    if (v.status == Status::Fails) std::cout << explain_counterexample(v);
    if (v.status == Status::UnknownBeyondBound)
      std::cout << "refinement holds only with longer skips than the bound allows\n";
  }
  return exit_for(v.status);
}

// lts validate ----------------------------------------------------------------

int cmd_lts_validate(const Globals& g, const std::string& path) {
  Lts l = io::lts_from_json(io::read_json_file(path));
  std::set<std::string> labels;
  for (const auto& lab : l.labels()) labels.insert(lab.canonical);
  json out = {{"valid", true},
              {"states", l.size()},
              {"transitions", l.transitions().size()},
              {"distinct_labels", labels.size()},
              {"initial", l.initial()}};
  if (g.as_json) emit(out);
  else
    std::cout << "valid: " << l.size() << " states, " << l.transitions().size() << " transitions, "
              << labels.size() << " distinct labels, " << l.initial().size() << " initial\n";
  return kOk;
}

// check-cert --------------------------------------------------------------------

int cmd_check_cert(const Globals& g, const std::string& lts_path, const std::string& rel_path,
                   const std::string& cert_path, const std::string& mode) {
  Lts l = io::lts_from_json(io::read_json_file(lts_path));
  Relation B = read_relation(rel_path, l);
  json cj = io::read_json_file(cert_path);
  CheckReport rep = mode == "wfsk" ? check_wfsk(l, B, io::wfsk_certificate_from_json(cj))
                                   : check_rwfsk(l, B, io::rwfsk_certificate_from_json(cj));
  int code = kOk;
  if (!rep.ok())
    code = rep.violation->kind == Violation::Kind::BoundExhausted ? kUnknown : kFails;
  if (g.as_json) {
    json out = {{"ok", rep.ok()}, {"mode", mode}, {"max_witness_length", rep.max_witness_length}};
    if (rep.violation) out["violation"] = io::to_json(*rep.violation);
    emit(out);
  } else if (rep.ok()) {
    std::cout << "certificate ok (" << mode << "), longest witness path "
              << rep.max_witness_length << '\n';
  } else {
    const auto& v = *rep.violation;
    std::cout << "violation " << to_string(v.kind) << " at s=" << v.s << " w=" << v.w;
    if (v.u) std::cout << " u=" << *v.u;
    std::cout << ": " << v.detail << '\n';
  }
  return code;
}

// sim compute --------------------------------------------------------------------

int cmd_sim_compute(const Globals& g, const std::string& lts_path, const std::string& skip,
                    const std::string& cert_path, const std::string& out_path) {
  Lts l = io::lts_from_json(io::read_json_file(lts_path));
  SimOptions opts{parse_skip(skip)};
  Relation B = largest_sks(l, opts);
  json rel = io::to_json(B);
  rel["universe"] = l.size();
  if (!cert_path.empty()) io::write_json_file(cert_path, io::to_json(RwfskCertificate{extract_rankt(l, B)}));
  if (!out_path.empty()) io::write_json_file(out_path, rel);
  if (g.as_json) {
    emit(rel);
  } else {
    std::cout << "largest skipping simulation: " << B.size() << " pairs over " << l.size()
              << " states\n";
    for (auto [s, w] : B.pairs()) std::cout << "  " << s << " ~ " << w << '\n';
  }
  return kOk;
}

// check-refine ---------------------------------------------------------------------

int cmd_check_refine(const Globals& g, const std::string& c_path, const std::string& a_path,
                     const std::string& map_path, const std::string& skip) {
  json cj = io::read_json_file(c_path), aj = io::read_json_file(a_path);
  Lts c = io::lts_from_json(cj), a = io::lts_from_json(aj);
  RefinementMap r;
  if (!map_path.empty()) {
    r = io::refinement_map_from_json(io::read_json_file(map_path));
  } else if (io::is_model_json(cj) && io::is_model_json(aj)) {
    r = models::refinement_map_of(io::model_from_json(cj), io::model_from_json(aj));
  } else {
    throw Error(ErrorCode::InvalidArgument, "--map is required unless both inputs are model files");
  }
  return report_verdict(g, check_skipping_refinement(c, a, r, SimOptions{parse_skip(skip)}));
}

// match lasso ------------------------------------------------------------------------

int cmd_match(const Globals& g, const std::string& lts_path, const std::string& rel_path,
              const std::string& lasso_path, StateId w) {
  Lts l = io::lts_from_json(io::read_json_file(lts_path));
  Relation B = read_relation(rel_path, l);
  Lasso sigma = io::lasso_from_json(io::read_json_file(lasso_path));
  MatchResult m = find_match(l, B, sigma, w);
  if (g.as_json) {
    emit(io::to_json(m));
  } else if (m.witness) {
    const auto& d = m.witness->delta;
    std::cout << "match found; delta stem " << json(d.stem).dump() << " loop " << json(d.loop).dump()
              << '\n';
  } else {
    std::cout << "no match: " << m.failure.reason << " (" << m.failure.explored
              << " product nodes explored)\n";
  }
  return m.witness ? kOk : kFails;
}

// model gen ------------------------------------------------------------------------------

struct GenFlags {
  std::string kind, imem, events, reqs, values, fault, cover, params, out;
  std::optional<std::size_t> ibuf_cap, stack_cap, time_bound, addrs, rbuf_cap;
};

json split_list(const std::string& text, char sep) {
  json out = json::array();
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, sep)) {
    auto b = item.find_first_not_of(' '), e = item.find_last_not_of(' ');
    if (b != std::string::npos) out.push_back(item.substr(b, e - b + 1));
  }
  return out;
}

json int_of(const std::string& text, const char* flag) {
  try {
    std::size_t pos = 0;
    int v = std::stoi(text, &pos);
    if (pos == text.size()) return v;
  } catch (const std::exception&) {
  }
  throw Error(ErrorCode::InvalidArgument, std::string(flag) + ": '" + text + "' is not an integer");
}

json params_from_flags(const GenFlags& f) {
  json p = f.params.empty() ? json::object() : io::read_json_file(f.params);
  if (!f.imem.empty()) p["imem"] = split_list(f.imem, ';');
  if (f.ibuf_cap) p["ibuf_cap"] = *f.ibuf_cap;
  if (f.stack_cap) p["stack_cap"] = *f.stack_cap;
  if (!f.events.empty()) {
    json events = json::array();
    for (const auto& e : split_list(f.events, ',')) {
      std::string s = e.get<std::string>();
      auto at = s.find('@');
      if (at == std::string::npos)
        throw Error(ErrorCode::InvalidArgument, "--events expects id@time, got '" + s + "'");
      events.push_back({s.substr(0, at), int_of(s.substr(at + 1), "--events")});
    }
    p["events"] = events;
  }
  if (f.time_bound) p["time_bound"] = *f.time_bound;
  if (!f.reqs.empty()) p["reqs"] = split_list(f.reqs, ';');
  if (f.addrs) p["addrs"] = *f.addrs;
  if (!f.values.empty()) {
    json vals = json::array();
    for (const auto& v : split_list(f.values, ',')) vals.push_back(int_of(v.get<std::string>(), "--values"));
    p["values"] = vals;
  }
  if (f.rbuf_cap) p["rbuf_cap"] = *f.rbuf_cap;
  return p;
}

int cmd_model_gen(const Globals& g, const GenFlags& f) {
  auto kind = models::parse_model_kind(f.kind);
  models::Model m;
  if (!f.cover.empty()) {
    // the abstract model closed over the images of a concrete model
    auto concrete = io::model_from_json(io::read_json_file(f.cover));
    if (models::abstract_kind_of(concrete.kind) != kind)
      throw Error(ErrorCode::IncompatibleModels, std::string(models::to_string(concrete.kind)) +
                                                     " does not refine " + f.kind);
    m = models::gen_abstract_for(concrete, g.cap());
  } else {
    json p = params_from_flags(f);
    models::GenOptions opts{g.cap(), {}};
    m = f.fault.empty() ? models::gen_model(kind, p, opts)
                        : models::inject_fault(kind, p, models::parse_fault(f.fault), opts);
  }
  json j = io::to_json(m);
  if (!f.out.empty()) io::write_json_file(f.out, j);
  if (g.as_json && f.out.empty()) {
    emit(j);
  } else if (!g.as_json) {
    std::cout << models::to_string(m.kind) << ": " << m.lts.size() << " states, "
              << m.lts.transitions().size() << " transitions, " << m.lts.initial().size()
              << " initial" << (f.out.empty() ? "" : ", written to " + f.out) << '\n';
  } else {
    emit({{"kind", models::to_string(m.kind)}, {"states", m.lts.size()}, {"out", f.out}});
  }
  return kOk;
}

// tv -------------------------------------------------------------------------------------

int cmd_tv_vectorize(const Globals& g, const std::string& prog, const std::string& out_prog,
                     const std::string& out_map) {
  auto v = tv::vectorize(read_scalar(prog));
  if (!out_prog.empty()) io::write_json_file(out_prog, io::to_json(v.program));
  if (!out_map.empty()) io::write_json_file(out_map, io::to_json(v.pcmap));
  if (g.as_json) emit({{"program", io::to_json(v.program)}, {"pcmap", io::to_json(v.pcmap)}});
  else std::cout << tv::format(v.program) << "# pc map: " << json(v.pcmap.map).dump() << '\n';
  return kOk;
}

int cmd_tv_validate(const Globals& g, const std::string& src_path, const std::string& tgt_path,
                    const std::string& map_path, unsigned bits, const std::string& skip) {
  auto src = read_scalar(src_path);
  auto tgt = read_vector(tgt_path);
  auto map = io::pcmap_from_json(io::read_json_file(map_path));
  tv::TvOptions opts;
  opts.state_cap = g.cap();
  auto ms = parse_skip(skip);
  if (!ms) throw Error(ErrorCode::InvalidArgument, "tv validate needs a finite --max-skip");
  opts.max_skip = *ms;
  return report_verdict(g, tv::tv_validate(src, tgt, map, bits, opts));
}

// selftest -------------------------------------------------------------------------------

// Randomized round trip of the main theorems: the engine's relation is
// certified by its extracted rank, the certificate converts to a WFSK one,
// and every related pair matches every short lasso.
int cmd_selftest(const Globals& g, std::uint64_t seed, std::size_t count) {
  std::mt19937_64 rng(seed);
  std::size_t failures = 0, pairs = 0, lassos = 0;
  std::vector<std::string> notes;
  for (std::size_t k = 0; k < count; ++k) {
    Lts l = random::random_lts(rng);
    Relation B = largest_sks(l);
    RwfskCertificate cert{extract_rankt(l, B)};
    auto bad = [&](const std::string& what) {
      ++failures;
      if (notes.size() < 10) notes.push_back("system " + std::to_string(k) + ": " + what);
    };
    if (!check_rwfsk(l, B, cert).ok()) bad("extracted certificate rejected");
    if (!check_wfsk(l, B, rwfsk_as_wfsk(cert, std::max<std::size_t>(2, l.size()))).ok())
      bad("converted certificate rejected");
    std::size_t depth = std::min<std::size_t>(l.size(), 3);
    for (auto [s, w] : B.pairs()) {
      ++pairs;
      auto stream = enumerate_lassos(l, s, depth, depth);
      while (auto sigma = stream.next()) {
        ++lassos;
        if (!find_match(l, B, *sigma, w).witness) bad("related pair without a match");
      }
    }
  }
  json out = {{"seed", seed},   {"systems", count}, {"pairs", pairs},
              {"lassos", lassos}, {"failures", failures}, {"notes", notes}};
  if (g.as_json) {
    emit(out);
  } else {
    std::cout << "selftest seed " << seed << ": " << count << " systems, " << pairs << " pairs, "
              << lassos << " lassos, " << failures << " failures\n";
    for (const auto& n : notes) std::cout << "  " << n << '\n';
  }
  return failures ? kFails : kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"skipref: skipping refinement checker"};
  app.require_subcommand(1);
  Globals g;
  app.add_flag("--json", g.as_json, "machine-readable JSON output");
  app.add_option("--state-cap", g.state_cap, "state-space cap for generated systems")
      ->check(CLI::PositiveNumber);

  std::function<int()> action;

  auto* lts = app.add_subcommand("lts", "system utilities");
  lts->require_subcommand(1);
  std::string lts_path;
  auto* validate = lts->add_subcommand("validate", "check a system file");
  validate->add_option("--lts,file", lts_path, "system JSON")->required();
  validate->callback([&] { action = [&] { return cmd_lts_validate(g, lts_path); }; });

  std::string rel_path, cert_path, mode = "wfsk";
  auto* cc = app.add_subcommand("check-cert", "check a (R)WFSK certificate");
  cc->add_option("--lts", lts_path)->required();
  cc->add_option("--relation", rel_path)->required();
  cc->add_option("--cert", cert_path)->required();
  cc->add_option("--mode", mode)->check(CLI::IsMember({"wfsk", "rwfsk"}));
  cc->callback([&] {
    action = [&] { return cmd_check_cert(g, lts_path, rel_path, cert_path, mode); };
  });

  std::string skip, out_path;
  auto* sim = app.add_subcommand("sim", "simulation engine");
  sim->require_subcommand(1);
  auto* compute = sim->add_subcommand("compute", "largest skipping simulation");
  compute->add_option("--lts", lts_path)->required();
  compute->add_option("--max-skip", skip, "positive bound or 'inf' (default)");
  compute->add_option("--emit-cert", cert_path, "write the extracted RWFSK certificate");
  compute->add_option("--out", out_path, "write the relation");
  compute->callback([&] {
    action = [&] { return cmd_sim_compute(g, lts_path, skip, cert_path, out_path); };
  });

  std::string c_path, a_path, map_path;
  auto* cr = app.add_subcommand("check-refine", "skipping refinement of two systems");
  cr->add_option("--concrete", c_path)->required();
  cr->add_option("--abstract", a_path)->required();
  cr->add_option("--map", map_path, "refinement map; derived from model files when omitted");
  cr->add_option("--max-skip", skip, "positive bound or 'inf' (default)");
  cr->callback([&] {
    action = [&] { return cmd_check_refine(g, c_path, a_path, map_path, skip); };
  });

  std::string lasso_path;
  StateId w = 0;
  auto* match = app.add_subcommand("match", "lasso matching");
  match->require_subcommand(1);
  auto* lasso = match->add_subcommand("lasso", "match one lasso from a related state");
  lasso->add_option("--lts", lts_path)->required();
  lasso->add_option("--relation", rel_path)->required();
  lasso->add_option("--lasso", lasso_path)->required();
  lasso->add_option("--w", w, "state the lasso is matched from")->required();
  lasso->callback([&] {
    action = [&] { return cmd_match(g, lts_path, rel_path, lasso_path, w); };
  });

  GenFlags gf;
  auto* model = app.add_subcommand("model", "model generators");
  model->require_subcommand(1);
  auto* gen = model->add_subcommand("gen", "generate a model");
  gen->add_option("kind", gf.kind, "des_abs|des_opt|stk|bstk|memc|optmemc")->required();
  gen->add_option("--imem", gf.imem, "stack program, ';' separated");
  gen->add_option("--ibuf-cap", gf.ibuf_cap);
  gen->add_option("--stack-cap", gf.stack_cap);
  gen->add_option("--events", gf.events, "initial events as id@time, ',' separated");
  gen->add_option("--time-bound", gf.time_bound);
  gen->add_option("--reqs", gf.reqs, "memory requests, ';' separated");
  gen->add_option("--addrs", gf.addrs);
  gen->add_option("--values", gf.values, "value domain, ',' separated");
  gen->add_option("--rbuf-cap", gf.rbuf_cap);
  gen->add_option("--fault", gf.fault, "inject a fault");
  gen->add_option("--cover", gf.cover, "abstract model covering a concrete model file");
  gen->add_option("--params", gf.params, "parameters as a JSON file");
  gen->add_option("--out", gf.out);
  gen->callback([&] { action = [&] { return cmd_model_gen(g, gf); }; });

  std::string prog, out_prog, out_map, src_path, tgt_path;
  unsigned bits = 2;
  std::string tv_skip = "2";
  auto* tvc = app.add_subcommand("tv", "translation validation of the vectorizer");
  tvc->require_subcommand(1);
  auto* vec = tvc->add_subcommand("vectorize", "pair adjacent independent instructions");
  vec->add_option("--program", prog)->required();
  vec->add_option("--out-program", out_prog);
  vec->add_option("--out-map", out_map);
  vec->callback([&] { action = [&] { return cmd_tv_vectorize(g, prog, out_prog, out_map); }; });
  auto* tvv = tvc->add_subcommand("validate", "check a target against its source");
  tvv->add_option("--source", src_path)->required();
  tvv->add_option("--target", tgt_path)->required();
  tvv->add_option("--map", map_path)->required();
  tvv->add_option("--bits", bits, "register width")->check(CLI::Range(1, 16));
  tvv->add_option("--max-skip", tv_skip);
  tvv->callback([&] {
    action = [&] { return cmd_tv_validate(g, src_path, tgt_path, map_path, bits, tv_skip); };
  });

  std::uint64_t seed = 1;
  std::size_t count = 100;
  auto* st = app.add_subcommand("selftest", "randomized theorem round trip");
  st->add_option("--seed", seed);
  st->add_option("--count", count)->check(CLI::PositiveNumber);
  st->callback([&] { action = [&] { return cmd_selftest(g, seed, count); }; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }
  if (!action) return kUsage;
  try {
    return action();
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kInvalid;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kInvalid;
  }
}
