#include <doctest.h>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "cli.hpp"

using nlohmann::json;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = fcp::cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

std::string write_config(const std::string& name, const json& j) {
  const std::string path = "cli_test_" + name + ".json";
  std::ofstream(path) << j.dump();
  return path;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::string> lines(const std::string& text, bool skip_comments = true) {
  std::vector<std::string> out;
  std::istringstream is(text);
  for (std::string l; std::getline(is, l);)
    if (!skip_comments || l.empty() || l[0] != '#') out.push_back(l);
  return out;
}

std::string comment(const std::string& text, const std::string& key) {
  for (const auto& l : lines(text, false))
    if (l.rfind("# " + key + ": ", 0) == 0) return l.substr(key.size() + 4);
  return {};
}

const json kSL = {{"kind", "stationarized_lattice"}};

}  // namespace

TEST_CASE("sha256 of a known vector") {
  CHECK(fcp::cli::sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("simulate lattice gives every vertex at time 0") {
  const auto cfg = write_config("lattice", {{"spec", {{"kind", "lattice"}}}, {"vertices", 10}});
  const auto r = run({"simulate", "--config", cfg});
  REQUIRE(r.code == 0);
  const auto rows = lines(r.out);
  REQUIRE(rows.size() == 11);
  CHECK(rows[0] == "replica,x0,time,event");
  for (std::size_t v = 0; v < 10; ++v) CHECK(rows[v + 1] == "0," + std::to_string(v) + ",0,infect");
}

TEST_CASE("simulate is byte-identical across runs and worker counts") {
  const auto cfg = write_config("sl", {{"spec", kSL}, {"vertices", 200}, {"replicas", 6}});
  REQUIRE(run({"simulate", "--config", cfg, "--seed", "7", "--out", "cli_a.csv", "--workers", "1"}).code == 0);
  REQUIRE(run({"simulate", "--config", cfg, "--seed", "7", "--out", "cli_b.csv", "--workers", "3"}).code == 0);
  const auto a = slurp("cli_a.csv");
  CHECK(a == slurp("cli_b.csv"));
  CHECK(lines(a).size() == 1 + 6 * 200);
  REQUIRE(run({"simulate", "--config", cfg, "--seed", "8", "--out", "cli_b.csv"}).code == 0);
  CHECK(a != slurp("cli_b.csv"));
}

TEST_CASE("result files regenerate from the embedded config") {
  const auto cfg = write_config("regen", {{"spec", kSL}, {"vertices", 50}, {"replicas", 3}});
  const auto first = run({"simulate", "--config", cfg, "--seed", "11"});
  REQUIRE(first.code == 0);
  const auto embedded = json::parse(comment(first.out, "config"));
  CHECK(embedded["seed"] == 11);
  CHECK(comment(first.out, "config_sha256") == fcp::cli::sha256_hex(embedded.dump()));
  const auto again = run({"simulate", "--config", write_config("regen2", embedded)});
  CHECK(again.out == first.out);

  const auto js = run({"simulate", "--config", cfg, "--seed", "11", "--format", "json"});
  REQUIRE(js.code == 0);
  const auto j = json::parse(js.out);
  CHECK(j["config_sha256"] == fcp::cli::sha256_hex(j["config"].dump()));
  CHECK(j["result"]["replicas"].size() == 3);
  const auto again_js = run({"simulate", "--config", write_config("regen3", j["config"])});
  CHECK(again_js.out == js.out);
}

TEST_CASE("seed precedence: flag, config, environment") {
  const auto with_seed = write_config("seeded", {{"spec", kSL}, {"vertices", 5}, {"seed", 21}});
  const auto without = write_config("unseeded", {{"spec", kSL}, {"vertices", 5}});
  setenv("FCP_LAB_SEED", "33", 1);
  CHECK(comment(run({"simulate", "--config", with_seed, "--seed", "9"}).out, "seed") == "9");
  CHECK(comment(run({"simulate", "--config", with_seed}).out, "seed") == "21");
  CHECK(comment(run({"simulate", "--config", without}).out, "seed") == "33");
  setenv("FCP_LAB_SEED", "x", 1);
  CHECK(run({"simulate", "--config", without}).code == 2);
  unsetenv("FCP_LAB_SEED");
  CHECK(comment(run({"simulate", "--config", without}).out, "seed") == "1");
}

TEST_CASE("stalled trace and pattern rug") {
  const json em = {{"kind", "empty_mixture"}, {"base", {{"kind", "poisson"}, {"rate", 1.0}}}, {"empty_prob", 0.3}};
  const auto cfg = write_config("stall", {{"spec", em}, {"vertices", 200}, {"replicas", 2}});
  std::remove("cli_rug.csv");
  const auto r = run({"simulate", "--config", cfg, "--patterns", "cli_rug.csv"});
  REQUIRE(r.code == 0);
  const auto rows = lines(r.out);
  CHECK(rows.back().ends_with(",stalled"));

  const auto rug = slurp("cli_rug.csv");
  CHECK(comment(rug, "config") == comment(r.out, "config"));
  const auto rug_rows = lines(rug);
  REQUIRE(rug_rows.size() > 1);
  CHECK(rug_rows[0] == "replica,a0,b0,time");
  for (std::size_t i = 1; i < rug_rows.size(); ++i) {
    long rep = 0, a = 0, b = 0;
    double t = 0;
    REQUIRE(std::sscanf(rug_rows[i].c_str(), "%ld,%ld,%ld,%lf", &rep, &a, &b, &t) == 4);
    CHECK(b == a + 1);
    CHECK(t >= 0.0);
  }
}

TEST_CASE("estimate-tc CSV and JSON") {
  const auto cfg = write_config(
      "tc", {{"specs", {{{"kind", "lattice"}}, kSL, {{"kind", "perturbed_lattice"}}}}, {"n", 1000}, {"replicas", 20}});
  const auto r = run({"estimate-tc", "--config", cfg});
  REQUIRE(r.code == 0);
  const auto rows = lines(r.out);
  REQUIRE(rows.size() == 4);
  CHECK(rows[0] == "spec_json,n,replicas,mean,lo,hi,regime");
  CHECK(rows[1].ends_with(",zero"));
  CHECK(rows[2].ends_with(",finite"));

  const auto j = json::parse(run({"estimate-tc", "--config", cfg, "--format", "json"}).out);
  const auto& est = j["result"]["estimates"];
  REQUIRE(est.size() == 3);
  CHECK(est[0]["mean"] == 0.0);
  CHECK(est[1]["mean"].get<double>() < est[2]["mean"].get<double>());
  CHECK(std::fabs(est[1]["waiting_bound_M"]["value"].get<double>() - 0.5) < 1e-6);
}

TEST_CASE("order-test L vs SL is refuted both ways") {
  const auto cfg = write_config("ot", {{"a", {{"kind", "lattice"}}}, {"b", kSL}, {"functions", {"sqrt_of_sum"}}});
  const auto r = run({"order-test", "--config", cfg, "--replicas", "5000"});
  REQUIRE(r.code == 0);
  CHECK(comment(r.out, "refuted_ab") == "true");
  CHECK(comment(r.out, "refuted_ba") == "true");
  CHECK(lines(r.out).size() == 5);
  const auto j = json::parse(run({"order-test", "--config", cfg, "--replicas", "5000", "--format", "json"}).out);
  CHECK(j["result"]["a_over_b"] == "refuted");
}

TEST_CASE("speedup-check certificate for SL vs Scaled(SL,4)") {
  const auto cfg = write_config("sp", {{"strong", kSL}, {"weak", {{"kind", "scaled"}, {"base", kSL}, {"factor", 4}}}});
  const auto j = json::parse(run({"speedup-check", "--config", cfg, "--format", "json"}).out);
  CHECK(j["result"]["certificate"]["margin"].get<double>() == doctest::Approx(0.25));
  const auto csv = run({"speedup-check", "--config", cfg});
  CHECK(comment(csv.out, "certificate") == "found");
  CHECK(lines(csv.out).size() == 2);

  // A weak process with atoms fails the scan precondition.
  const auto bad = write_config("sp_bad", {{"strong", kSL}, {"weak", {{"kind", "lattice"}}}});
  const auto e = run({"speedup-check", "--config", bad});
  CHECK(e.code == 7);
  CHECK(e.out.empty());
  CHECK(e.err.find("error:") != std::string::npos);
}

TEST_CASE("couple writes the recursion and flags lemma failures") {
  const auto cfg = write_config("couple", {{"strong", kSL}, {"weak", {{"kind", "scaled"}, {"base", kSL}, {"factor", 4}}},
                                           {"n", 20}, {"replicas", 2}});
  const auto r = run({"couple", "--config", cfg});
  REQUIRE(r.code == 0);
  const auto rows = lines(r.out);
  REQUIRE(rows.size() == 1 + 2 * 21);
  CHECK(rows[0] == "replica,k,u,tau_strong,tau_weak");
  CHECK(rows[1] == "0,0,,0,0");

  const json tl = {{"kind", "thinned"}, {"base", {{"kind", "lattice"}}}, {"keep_prob", 0.5}};
  const auto bad = write_config("couple_bad", {{"strong", tl}, {"weak", tl}, {"lemma", true}, {"lemma_trials", 200}});
  const auto f = run({"couple", "--config", bad, "--format", "json"});
  CHECK(f.code == 9);
  CHECK(json::parse(f.out)["result"]["lemma"]["all_pass"] == false);
}

TEST_CASE("paths counts and witnesses") {
  const auto cfg = write_config("paths", {{"spec", {{"kind", "lattice"}}},
                                          {"region", {{"dim", 1}, {"radius", 3}}},
                                          {"x", 0},
                                          {"y", 1},
                                          {"t", 2.5},
                                          {"witnesses", true}});
  const auto j = json::parse(run({"paths", "--config", cfg, "--format", "json"}).out);
  CHECK(j["result"]["replicas"][0]["count"] == 3);
  CHECK(j["result"]["replicas"][0]["witnesses"].size() == 3);
  const auto csv = run({"paths", "--config", cfg});
  CHECK(lines(csv.out).back() == "0,3,1");
}

TEST_CASE("error exit codes") {
  CHECK(run({}).code == 2);
  CHECK(run({"simulate", "--help"}).code == 0);
  CHECK(run({"simulate", "--config", "does_not_exist.json"}).code == 2);

  const auto bad_kind = write_config("bad_kind", {{"spec", {{"kind", "bogus"}}}, {"vertices", 5}});
  const auto e = run({"simulate", "--config", bad_kind});
  CHECK(e.code == 2);
  CHECK(e.err.find("config.spec") != std::string::npos);

  const auto ok = write_config("ok", {{"spec", kSL}, {"vertices", 5}});
  CHECK(run({"simulate", "--config", ok, "--format", "xml"}).code == 2);
  CHECK(run({"simulate", "--config", ok, "--replicas", "0"}).code == 2);

  const auto inhom = write_config("inhom", {{"spec", {{"kind", "inhom_poisson"}, {"intensity", "one_plus_inverse_shift"}}}, {"n", 200}, {"replicas", 2}});
  CHECK(run({"estimate-tc", "--config", inhom}).code == 4);
  const auto small = write_config("small", {{"spec", kSL}, {"n", 50}});
  CHECK(run({"estimate-tc", "--config", small}).code == 7);

  const auto budget = write_config("budget", {{"spec", {{"kind", "poisson"}, {"rate", 5.0}}},
                                              {"region", {{"half_line", 4}}},
                                              {"x", 0},
                                              {"y", 4},
                                              {"t", 3.0},
                                              {"max_assignments", 1}});
  const auto b = run({"paths", "--config", budget});
  CHECK(b.code == 8);
  CHECK(b.err.find("lower bound") != std::string::npos);
}

TEST_CASE("verify runs selected criteria") {
  const auto r = run({"verify", "A05", "--out", "cli_verify.json", "--format", "json"});
  CHECK(r.code == 0);
  CHECK(r.out.find("PASS A05") != std::string::npos);
  CHECK(r.out.find("1/1 criteria passed") != std::string::npos);
  const auto j = json::parse(slurp("cli_verify.json"));
  CHECK(j["result"]["passed"] == 1);
  CHECK(j["seed"] == 20240601);
}
