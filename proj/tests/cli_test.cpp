#include <gtest/gtest.h>

#include <sys/wait.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "skipref/skipref.hpp"

using namespace skipref;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out;
};

Run cli(const std::string& args) {
  std::string cmd = std::string(SKIPREF_CLI_PATH) + " " + args + " 2>/dev/null";
  FILE* p = ::popen(cmd.c_str(), "r");
  if (!p) return {-1, ""};
  std::string out;
  std::array<char, 4096> buf;
  while (std::size_t n = std::fread(buf.data(), 1, buf.size(), p)) out.append(buf.data(), n);
  int status = ::pclose(p);
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, out};
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("skipref_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  std::string write(const std::string& name, const json& j) const {
    io::write_json_file(path(name), j);
    return path(name);
  }

  std::string write_text(const std::string& name, const std::string& text) const {
    std::ofstream(path(name)) << text;
    return path(name);
  }

  fs::path dir_;
};

}  // namespace

TEST_F(Cli, IdentityRefinementHolds) {
  std::mt19937_64 rng(41);
  Lts l = random::random_lts(rng);
  RefinementMap id;
  for (StateId s = 0; s < l.size(); ++s) id.image.push_back(s);
  auto c = write("c.json", io::to_json(l));
  auto m = write("r.json", io::to_json(id));
  auto r = cli("--json check-refine --concrete " + c + " --abstract " + c + " --map " + m);
  EXPECT_EQ(r.code, 0);
  auto v = io::verdict_from_json(json::parse(r.out));
  EXPECT_EQ(v.status, Status::Holds);
  EXPECT_TRUE(v.witness.has_value());
}

TEST_F(Cli, BufferedStackAgainstStackEndToEnd) {
  auto r = cli("model gen bstk --imem \"push 1;push 2;top\" --ibuf-cap 2 --out " + path("m.json"));
  ASSERT_EQ(r.code, 0);
  r = cli("model gen stk --imem \"push 1;push 2;top\" --out " + path("s.json"));
  ASSERT_EQ(r.code, 0);
  r = cli("check-refine --concrete " + path("m.json") + " --abstract " + path("s.json"));
  EXPECT_EQ(r.code, 0) << r.out;
  EXPECT_NE(r.out.find("Holds"), std::string::npos);
  // single steps cannot follow the drain
  r = cli("check-refine --max-skip 1 --concrete " + path("m.json") + " --abstract " + path("s.json"));
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.out.find("offending step"), std::string::npos);
  r = cli("check-refine --max-skip 2 --concrete " + path("m.json") + " --abstract " + path("s.json"));
  EXPECT_EQ(r.code, 4);

  // the emitted model is accepted back
  auto m = io::model_from_json(io::read_json_file(path("m.json")));
  EXPECT_EQ(m.kind, models::ModelKind::Bstk);
  EXPECT_EQ(m.params["ibuf_cap"], 2);
}

TEST_F(Cli, FaultyModelFails) {
  ASSERT_EQ(cli("model gen optmemc --reqs \"w 0 1;w 0 0;r 0\" --fault MarkNewestRedundant --out " +
                path("c.json"))
                .code,
            0);
  ASSERT_EQ(cli("model gen memc --cover " + path("c.json") + " --out " + path("a.json")).code, 0);
  auto r = cli("--json check-refine --concrete " + path("c.json") + " --abstract " + path("a.json"));
  EXPECT_EQ(r.code, 1);
  auto v = io::verdict_from_json(json::parse(r.out));
  EXPECT_EQ(v.status, Status::Fails);
  EXPECT_TRUE(v.counterexample.has_value());
}

TEST_F(Cli, CertificateBoundExhaustedIsUnknown) {
  auto c = models::gen_model(models::ModelKind::Bstk,
                             {{"imem", {"push 1", "push 2", "top"}}, {"ibuf_cap", 2}});
  auto a = models::gen_abstract_for(c);
  auto rm = models::refinement_map_of(c, a);
  auto v = check_skipping_refinement(c.lts, a.lts, rm);
  ASSERT_TRUE(v.holds());
  auto un = disjoint_union(c.lts, a.lts, rm);
  auto u = write("u.json", io::to_json(un.lts));
  auto b = write("b.json", io::to_json(v.witness->relation));
  RwfskCertificate rc{v.witness->rankt};

  auto two = write("c2.json", io::to_json(rwfsk_as_wfsk(rc, 2)));
  auto r = cli("check-cert --lts " + u + " --relation " + b + " --cert " + two + " --mode wfsk");
  EXPECT_EQ(r.code, 4);
  EXPECT_NE(r.out.find("BoundExhausted"), std::string::npos) << r.out;

  auto three = write("c3.json", io::to_json(rwfsk_as_wfsk(rc, 3)));
  r = cli("--json check-cert --lts " + u + " --relation " + b + " --cert " + three + " --mode wfsk");
  EXPECT_EQ(r.code, 0);
  EXPECT_EQ(json::parse(r.out).at("max_witness_length"), 3);

  auto rw = write("rw.json", io::to_json(rc));
  EXPECT_EQ(cli("check-cert --lts " + u + " --relation " + b + " --cert " + rw + " --mode rwfsk").code, 0);
}

TEST_F(Cli, CertificateViolationFails) {
  Lts l = build_lts(2, {{0, 0}, {1, 1}}, {Label::of("a"), Label::of("b")});
  auto u = write("u.json", io::to_json(l));
  auto b = write("b.json", io::to_json(Relation(2, {{0, 1}})));
  auto c = write("c.json", io::to_json(RwfskCertificate{}));
  auto r = cli("--json check-cert --mode rwfsk --lts " + u + " --relation " + b + " --cert " + c);
  EXPECT_EQ(r.code, 1);
  EXPECT_EQ(json::parse(r.out).at("violation").at("kind"), "LabelMismatch");
}

TEST_F(Cli, SimComputeEmitsACheckableCertificate) {
  std::mt19937_64 rng(42);
  for (int k = 0; k < 5; ++k) {
    Lts l = random::random_lts(rng);
    auto f = write("l.json", io::to_json(l));
    auto r = cli("--json sim compute --lts " + f + " --emit-cert " + path("cert.json") + " --out " +
                 path("rel.json"));
    ASSERT_EQ(r.code, 0);
    Relation B = io::relation_from_json(json::parse(r.out), l.size());
    EXPECT_EQ(B, largest_sks(l));
    EXPECT_EQ(io::relation_from_json(io::read_json_file(path("rel.json")), l.size()), B);
    auto cert = io::rwfsk_certificate_from_json(io::read_json_file(path("cert.json")));
    EXPECT_TRUE(check_rwfsk(l, B, cert).ok());
    EXPECT_EQ(cli("check-cert --mode rwfsk --lts " + f + " --relation " + path("rel.json") +
                  " --cert " + path("cert.json"))
                  .code,
              0);
  }
}

TEST_F(Cli, MatchLasso) {
  Lts l = build_lts(2, {{0, 1}, {1, 0}}, {Label::of("a"), Label::of("a")});
  auto f = write("l.json", io::to_json(l));
  auto b = write("b.json", io::to_json(Relation(2, {{0, 0}, {1, 1}})));
  auto s = write("s.json", io::to_json(Lasso{{}, {0, 1}}));
  auto r = cli("--json match lasso --lts " + f + " --relation " + b + " --lasso " + s + " --w 0");
  EXPECT_EQ(r.code, 0);
  auto j = json::parse(r.out);
  EXPECT_TRUE(verify_witness(l, Relation(2, {{0, 0}, {1, 1}}), Lasso{{}, {0, 1}}, 0,
                             io::match_witness_from_json(j)));
  EXPECT_EQ(cli("match lasso --lts " + f + " --relation " + b + " --lasso " + s + " --w 1").code, 1);
}

TEST_F(Cli, VectorizeThenValidate) {
  auto src = write_text("p.txt", "r1 = a + b\nr2 = c + d\n");
  auto r = cli("--json tv vectorize --program " + src + " --out-program " + path("v.json") +
               " --out-map " + path("m.json"));
  ASSERT_EQ(r.code, 0);
  auto j = json::parse(r.out);
  EXPECT_EQ(io::vector_program_from_json(j.at("program")).instrs.size(), 1u);
  EXPECT_EQ(io::pcmap_from_json(j.at("pcmap")).map, (std::vector<std::size_t>{0, 2}));

  std::string base = "tv validate --source " + src + " --target " + path("v.json") + " --map " +
                     path("m.json") + " --bits 1";
  EXPECT_EQ(cli(base).code, 0);
  EXPECT_EQ(cli(base + " --max-skip 1").code, 1);

  auto swapped = write_text("bad.txt", "pack (r1,r2) = (c,a) + (b,d)\n");
  EXPECT_EQ(cli("tv validate --source " + src + " --target " + swapped + " --map " + path("m.json") +
                " --bits 1")
                .code,
            1);
}

TEST_F(Cli, Selftest) {
  auto r = cli("--json selftest --seed 7 --count 20");
  EXPECT_EQ(r.code, 0);
  auto j = json::parse(r.out);
  EXPECT_EQ(j.at("failures"), 0);
  EXPECT_EQ(j.at("seed"), 7);
  EXPECT_EQ(cli("--json selftest --seed 7 --count 20").out, r.out);
}

TEST_F(Cli, LtsValidate) {
  auto ok = write("ok.json", io::to_json(build_lts(1, {{0, 0}}, {Label::of("x")})));
  EXPECT_EQ(cli("lts validate --lts " + ok).code, 0);
  auto bad = write("bad.json", {{"states", 2}, {"labels", {"a", "b"}}, {"transitions", {{0, 1}}}});
  EXPECT_EQ(cli("lts validate --lts " + bad).code, 3);
  EXPECT_EQ(cli("lts validate --lts " + path("missing.json")).code, 3);
}

TEST_F(Cli, UsageAndInputErrors) {
  EXPECT_EQ(cli("").code, 2);
  EXPECT_EQ(cli("frobnicate").code, 2);
  EXPECT_EQ(cli("check-refine --concrete x.json").code, 2);
  EXPECT_EQ(cli("model gen bstk --imem \"jump\"").code, 3);
  EXPECT_EQ(cli("model gen vm --imem \"nop\"").code, 3);
  EXPECT_EQ(cli("model gen stk --imem \"nop\" --fault DropLastOnDrain").code, 3);
  EXPECT_EQ(cli("--state-cap 2 model gen bstk --imem \"push 1;push 0;pop\"").code, 3);
  auto l = write("l.json", io::to_json(build_lts(1, {{0, 0}}, {Label::of("x")})));
  EXPECT_EQ(cli("sim compute --lts " + l + " --max-skip 0").code, 3);
  // two plain systems need an explicit map
  EXPECT_EQ(cli("check-refine --concrete " + l + " --abstract " + l).code, 3);
}

TEST_F(Cli, DeterministicOutput) {
  std::string args = "--json model gen des_opt --events e1@0,e2@2 --time-bound 4";
  auto a = cli(args), b = cli(args);
  EXPECT_EQ(a.code, 0);
  EXPECT_EQ(a.out, b.out);
  auto m = io::model_from_json(json::parse(a.out));
  EXPECT_EQ(m.kind, models::ModelKind::DesOpt);
}
