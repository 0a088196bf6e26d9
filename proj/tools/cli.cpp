#include "cli.hpp"

#include <openssl/evp.h>

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iomanip>
#include <limits>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>

#include "fcp/acceptance.hpp"
#include "fcp/coupling_lab.hpp"
#include "fcp/errors.hpp"
#include "fcp/estimators.hpp"
#include "fcp/fcp_engine.hpp"
#include "fcp/ordering_lab.hpp"
#include "fcp/parallel.hpp"
#include "fcp/path_oracle.hpp"

namespace fcp::cli {

using nlohmann::json;

std::string sha256_hex(const std::string& data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1)
    throw Error("sha256 failed");
  std::ostringstream os;
  for (unsigned i = 0; i < len; ++i) os << std::hex << std::setw(2) << std::setfill('0') << int(digest[i]);
  return os.str();
}

namespace {

struct Flags {
  std::string config;
  std::string seed;
  std::string replicas;
  std::string out;
  std::string format;
  std::string workers;
  std::string patterns;  // simulate only
  std::vector<std::string> criteria;  // verify only
};

std::uint64_t parse_u64(const std::string& s, const std::string& what) {
  std::size_t pos = 0;
  unsigned long long v = 0;
  try {
    v = std::stoull(s, &pos, 10);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (s.empty() || pos != s.size() || s[0] == '-') throw ConfigError(what + ": expected a non-negative integer, got '" + s + "'");
  return v;
}

// Field accessors that name the offending path on type errors.
const json* field(const json& cfg, const std::string& key) {
  auto it = cfg.find(key);
  return it == cfg.end() || it->is_null() ? nullptr : &*it;
}

const json& require(const json& cfg, const std::string& key) {
  const json* j = field(cfg, key);
  if (!j) throw ConfigError("config." + key + ": missing");
  return *j;
}

double number(const json& cfg, const std::string& key, std::optional<double> dflt = {}) {
  const json* j = field(cfg, key);
  if (!j) {
    if (dflt) return *dflt;
    throw ConfigError("config." + key + ": missing");
  }
  if (j->is_string()) {
    const auto s = j->get<std::string>();
    if (s == "inf") return std::numeric_limits<double>::infinity();
  }
  if (!j->is_number()) throw ConfigError("config." + key + ": expected a number");
  return j->get<double>();
}

std::uint64_t count(const json& cfg, const std::string& key, std::uint64_t dflt) {
  const json* j = field(cfg, key);
  if (!j) return dflt;
  if (!j->is_number_integer() || j->get<std::int64_t>() < 0)
    throw ConfigError("config." + key + ": expected a non-negative integer");
  return j->get<std::uint64_t>();
}

bool flag(const json& cfg, const std::string& key, bool dflt) {
  const json* j = field(cfg, key);
  if (!j) return dflt;
  if (!j->is_boolean()) throw ConfigError("config." + key + ": expected true or false");
  return j->get<bool>();
}

std::string text(const json& cfg, const std::string& key, const std::string& dflt) {
  const json* j = field(cfg, key);
  if (!j) return dflt;
  if (!j->is_string()) throw ConfigError("config." + key + ": expected a string");
  return j->get<std::string>();
}

ProcessSpec spec_at(const json& cfg, const std::string& key) {
  return spec_from_json(require(cfg, key), "config." + key);
}

Vertex vertex_at(const json& cfg, const std::string& key) {
  const json& j = require(cfg, key);
  if (j.is_number_integer()) return {j.get<std::int64_t>()};
  if (!j.is_array() || j.empty()) throw ConfigError("config." + key + ": expected an integer or an array of integers");
  Vertex v;
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number_integer()) throw ConfigError("config." + key + "[" + std::to_string(i) + "]: expected an integer");
    v.push_back(j[i].get<std::int64_t>());
  }
  return v;
}

// {"half_line": n}, {"dim": d, "radius": r} or {"lo": [...], "hi": [...]}.
// `vertices: N` is shorthand for the half-line {0..N-1}.
Region region_at(const json& cfg) {
  if (const json* v = field(cfg, "vertices")) {
    if (!v->is_number_integer() || v->get<std::int64_t>() < 2)
      throw ConfigError("config.vertices: expected an integer >= 2");
    return Region::half_line(v->get<std::int64_t>() - 1);
  }
  const json& r = require(cfg, "region");
  if (!r.is_object()) throw ConfigError("config.region: expected an object");
  try {
    if (r.contains("half_line")) return Region::half_line(r.at("half_line").get<std::int64_t>());
    if (r.contains("radius")) return Region::box(r.at("dim").get<int>(), r.at("radius").get<std::int64_t>());
    if (r.contains("lo")) return Region::box(r.at("lo").get<Vertex>(), r.at("hi").get<Vertex>());
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config.region: ") + e.what());
  }
  throw ConfigError("config.region: expected half_line, dim/radius or lo/hi");
}

std::string csv_quote(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char c : s) {
    if (c == '"') q += '"';
    q += c;
  }
  return q + "\"";
}

std::string collection_label(const SetCollection& c) {
  std::string s;
  for (const auto& set : c) {
    if (!s.empty()) s += " ; ";
    s += set.label.empty() ? to_json(set).dump() : set.label;
  }
  return s;
}

struct Run {
  std::string command;
  json config;  // effective: seed, replicas and format resolved
  std::uint64_t seed = 0;
  std::size_t replicas = 0;
  bool csv = true;
  unsigned workers = 0;
  std::ostream* out = nullptr;
  std::ostream* err = nullptr;

  std::string hash() const { return sha256_hex(config.dump()); }

  void preamble(std::ostream& os, const std::vector<std::string>& extra = {}) const {
    os << "# fcp_lab " << command << "\n# config: " << config.dump() << "\n# config_sha256: " << hash()
       << "\n# seed: " << seed << "\n";
    for (const auto& e : extra) os << "# " << e << "\n";
  }

  void emit_json(std::ostream& os, json result) const {
    json j;
    j["command"] = command;
    j["config"] = config;
    j["config_sha256"] = hash();
    j["seed"] = seed;
    j["result"] = std::move(result);
    os << j.dump(2) << "\n";
  }
};

Window rug_window(double start, double horizon, const std::vector<std::optional<SpreadResult>>& runs) {
  if (std::isfinite(horizon)) return {start, horizon};
  double last = start;
  for (const auto& r : runs)
    for (const auto& e : r->trace()) last = std::max(last, e.time);
  return {start, last + 1.0};
}

int cmd_simulate(const Run& run, const Flags& flags) {
  const auto& cfg = run.config;
  const auto spec = spec_at(cfg, "spec");
  const auto region = region_at(cfg);
  const double start = number(cfg, "start", 0.0);
  Horizon horizon;
  horizon.time = number(cfg, "horizon", std::numeric_limits<double>::infinity());
  if (const json* b = field(cfg, "vertex_budget")) {
    if (!b->is_number_integer()) throw ConfigError("config.vertex_budget: expected an integer");
    horizon.vertex_budget = b->get<std::size_t>();
  }
  std::vector<std::optional<SpreadResult>> runs(run.replicas);
  std::vector<std::uint64_t> seeds(run.replicas);
  parallel_for(run.replicas, run.workers, [&](std::size_t i) {
    seeds[i] = replica_seed(run.seed, 0x51, i);
    runs[i] = run_spread(EdgeEnvironment(spec, region, seeds[i]), start, horizon);
  });
  const Window rug = rug_window(start, horizon.time, runs);

  if (!flags.patterns.empty()) {
    std::ofstream ps(flags.patterns, std::ios::binary);
    if (!ps) throw ConfigError("--patterns: cannot open " + flags.patterns);
    std::ostringstream w;
    w << std::setprecision(17) << "window: [" << rug.lo << ", " << rug.hi << ")";
    run.preamble(ps, {w.str()});
    write_pattern_header(ps, region.dim());
    for (std::size_t i = 0; i < run.replicas; ++i) write_pattern_rows(ps, i, EdgeEnvironment(spec, region, seeds[i]), rug);
  }

  if (run.csv) {
    run.preamble(*run.out);
    write_trace_header(*run.out, region.dim());
    for (std::size_t i = 0; i < run.replicas; ++i) write_trace_rows(*run.out, i, *runs[i]);
    return 0;
  }
  json reps = json::array();
  for (std::size_t i = 0; i < run.replicas; ++i) {
    json events = json::array();
    for (const auto& e : runs[i]->trace()) events.push_back({{"x", region.vertex(e.vertex)}, {"time", e.time}});
    reps.push_back({{"replica", i},
                    {"stalled", runs[i]->stalled()},
                    {"infected", runs[i]->infected_count()},
                    {"events", std::move(events)}});
  }
  run.emit_json(*run.out, {{"region", region.describe()}, {"replicas", std::move(reps)}});
  return 0;
}

int cmd_estimate_tc(const Run& run) {
  const auto& cfg = run.config;
  std::vector<ProcessSpec> specs;
  if (const json* list = field(cfg, "specs")) {
    if (!list->is_array() || list->empty()) throw ConfigError("config.specs: expected a non-empty array");
    for (std::size_t i = 0; i < list->size(); ++i)
      specs.push_back(spec_from_json((*list)[i], "config.specs[" + std::to_string(i) + "]"));
  } else {
    specs.push_back(spec_at(cfg, "spec"));
  }
  TimeConstantOptions o;
  o.n_vertices = count(cfg, "n", o.n_vertices);
  o.replicas = run.replicas;
  o.seed = run.seed;
  o.workers = run.workers;
  o.require_stationary = flag(cfg, "require_stationary", true);
  std::vector<TimeConstantEstimate> est;
  for (const auto& s : specs) est.push_back(estimate_time_constant(s, o));

  if (run.csv) {
    run.preamble(*run.out);
    write_estimate_header(*run.out);
    for (const auto& e : est) write_estimate_row(*run.out, e);
    return 0;
  }
  json arr = json::array();
  for (std::size_t i = 0; i < est.size(); ++i) {
    auto j = to_json(est[i]);
    j["waiting_bound_M"] = to_json(waiting_bound_M(specs[i]));
    arr.push_back(std::move(j));
  }
  run.emit_json(*run.out, {{"estimates", std::move(arr)}});
  return 0;
}

int cmd_order_test(const Run& run) {
  const auto& cfg = run.config;
  const auto a = spec_at(cfg, "a");
  const auto b = spec_at(cfg, "b");
  std::vector<SetCollection> collections;
  if (const json* c = field(cfg, "collections")) {
    if (!c->is_array()) throw ConfigError("config.collections: expected an array");
    for (std::size_t i = 0; i < c->size(); ++i)
      collections.push_back(collection_from_json((*c)[i], "config.collections[" + std::to_string(i) + "]"));
  } else {
    collections = comparability_battery();
  }
  std::vector<std::string> functions;
  if (const json* f = field(cfg, "functions")) {
    if (!f->is_array()) throw ConfigError("config.functions: expected an array of ids");
    for (const auto& id : *f) functions.push_back(id.get<std::string>());
  } else {
    for (const auto& t : test_function_registry()) functions.push_back(t.id);
  }
  OrderingOptions o;
  o.replicas = run.replicas;
  o.seed = run.seed;
  o.workers = run.workers;
  o.significance = number(cfg, "significance", o.significance);
  const auto rep = convex_order_test(a, b, collections, functions, o);

  if (run.csv) {
    run.preamble(*run.out, {std::string("refuted_ab: ") + (rep.refuted_ab ? "true" : "false"),
                            std::string("refuted_ba: ") + (rep.refuted_ba ? "true" : "false")});
    auto& os = *run.out;
    const auto prec = os.precision(17);
    os << "function,collection,mean_a,se_a,mean_b,se_b,z,verdict\n";
    for (const auto& t : rep.trials)
      os << t.function << ',' << csv_quote(collection_label(t.collection)) << ',' << t.mean_a << ',' << t.se_a << ','
         << t.mean_b << ',' << t.se_b << ',' << t.z << ',' << to_string(t.verdict) << '\n';
    os.precision(prec);
    return 0;
  }
  run.emit_json(*run.out, to_json(rep));
  return 0;
}

int cmd_speedup_check(const Run& run) {
  const auto& cfg = run.config;
  const auto strong = spec_at(cfg, "strong");
  const auto weak = spec_at(cfg, "weak");
  EmpiricalOptions eo;
  eo.replicas = count(cfg, "empirical_replicas", eo.replicas);
  eo.seed = replica_seed(run.seed, 0x5c, 0);
  const auto cert = speedup_condition_scan(strong, weak, IntervalGrid::standard(), eo);

  std::optional<BlockReport> block;
  if (cert && flag(cfg, "block_check", false)) {
    BlockOptions bo;
    bo.replicas = run.replicas;
    bo.seed = run.seed;
    bo.workers = run.workers;
    bo.claim1_trials = count(cfg, "claim1_trials", bo.claim1_trials);
    bo.reproducer_path = text(cfg, "reproducer", "");
    block = speedup_block_check(strong, weak, *cert, bo);
  }
  const bool hard_fail = block && block->claim1_violations > 0;

  if (run.csv) {
    std::vector<std::string> extra{std::string("certificate: ") + (cert ? "found" : "none")};
    if (block)
      extra.push_back("block_check: claim1_violations=" + std::to_string(block->claim1_violations) +
                      " claim2_violations=" + std::to_string(block->claim2_violations));
    run.preamble(*run.out, extra);
    auto& os = *run.out;
    const auto prec = os.precision(17);
    os << "a,b,p_strong,p_weak,margin,epsilon,m_lower,m,block_prob\n";
    if (cert)
      os << cert->a << ',' << cert->b << ',' << cert->p_strong << ',' << cert->p_weak << ',' << cert->margin << ','
         << cert->epsilon << ',' << cert->m_lower << ',' << cert->m << ',' << cert->block_prob << '\n';
    os.precision(prec);
  } else {
    json r;
    r["certificate"] = cert ? to_json(*cert) : json(nullptr);
    if (block) r["block_check"] = to_json(*block);
    run.emit_json(*run.out, std::move(r));
  }
  if (hard_fail) {
    *run.err << "error: Claim-1 violations in the block check\n";
    return PropertyViolation("").exit_code();
  }
  return 0;
}

int cmd_couple(const Run& run) {
  const auto& cfg = run.config;
  const auto strong = spec_at(cfg, "strong");
  const auto weak = spec_at(cfg, "weak");
  const double t = number(cfg, "t", 0.0);
  const std::size_t n = count(cfg, "n", 100);
  HittingFunction hs(strong), hw(weak);
  std::vector<CouplingRun> runs(run.replicas);
  parallel_for(run.replicas, run.workers,
               [&](std::size_t i) { runs[i] = coupled_run(hs, hw, t, n, replica_seed(run.seed, 0xc0, i)); });
  std::optional<LemmaReport> lemma;
  if (flag(cfg, "lemma", false)) {
    LemmaOptions lo;
    lo.trials = count(cfg, "lemma_trials", lo.trials);
    lo.seed = replica_seed(run.seed, 0xc1, 0);
    lemma = check_lemma_properties(strong, weak, lo);
  }

  if (run.csv) {
    std::vector<std::string> extra;
    for (std::size_t i = 0; i < runs.size(); ++i)
      if (!runs[i].dominated)
        extra.push_back("replica " + std::to_string(i) + ": domination violated at k=" +
                        std::to_string(runs[i].first_violation.value_or(0)));
    if (lemma)
      for (const auto& it : to_json(*lemma)["items"])
        extra.push_back("lemma item " + it["item"].dump() + ": " + it["status"].get<std::string>());
    run.preamble(*run.out, extra);
    auto& os = *run.out;
    const auto prec = os.precision(17);
    os << "replica,k,u,tau_strong,tau_weak\n";
    for (std::size_t i = 0; i < runs.size(); ++i)
      for (std::size_t k = 0; k <= n; ++k) {
        os << i << ',' << k << ',';
        if (k > 0) os << runs[i].uniforms[k - 1];
        os << ',' << runs[i].tau_strong[k] << ',' << runs[i].tau_weak[k] << '\n';
      }
    os.precision(prec);
  } else {
    json r;
    r["runs"] = json::array();
    for (const auto& c : runs) r["runs"].push_back(to_json(c));
    if (lemma) r["lemma"] = to_json(*lemma);
    run.emit_json(*run.out, std::move(r));
  }
  if (lemma && !lemma->all_pass()) {
    *run.err << "error: coupling properties failed\n";
    return PropertyViolation("").exit_code();
  }
  return 0;
}

int cmd_paths(const Run& run) {
  const auto& cfg = run.config;
  const auto spec = spec_at(cfg, "spec");
  const auto region = region_at(cfg);
  const auto x = vertex_at(cfg, "x");
  const auto y = vertex_at(cfg, "y");
  const double t = number(cfg, "t");
  const double start = number(cfg, "start", 0.0);
  EnumerationLimits lim;
  lim.max_path_len = count(cfg, "max_path_len", lim.max_path_len);
  lim.max_points_per_edge = count(cfg, "max_points_per_edge", lim.max_points_per_edge);
  lim.max_assignments = count(cfg, "max_assignments", lim.max_assignments);
  const bool witnesses = flag(cfg, "witnesses", false);
  std::vector<PathCount> counts(run.replicas);
  parallel_for(run.replicas, run.workers, [&](std::size_t i) {
    EdgeEnvironment env(spec, region, replica_seed(run.seed, 0x9a, i));
    counts[i] = count_paths(env, x, y, t, lim, witnesses, start);
  });

  if (run.csv) {
    run.preamble(*run.out);
    *run.out << "replica,count,reached\n";
    for (std::size_t i = 0; i < counts.size(); ++i)
      *run.out << i << ',' << counts[i].count << ',' << (counts[i].count > 0 ? 1 : 0) << '\n';
    return 0;
  }
  json reps = json::array();
  for (std::size_t i = 0; i < counts.size(); ++i) {
    json r{{"replica", i}, {"count", counts[i].count}};
    if (witnesses) {
      r["witnesses"] = json::array();
      for (const auto& p : counts[i].witnesses) r["witnesses"].push_back({{"vertices", p.vertices}, {"times", p.times}});
    }
    reps.push_back(std::move(r));
  }
  run.emit_json(*run.out, {{"region", region.describe()}, {"replicas", std::move(reps)}});
  return 0;
}

int cmd_verify(const Run& run, const Flags& flags, std::ostream& console) {
  AcceptanceOptions o;
  o.seed = run.seed;
  o.workers = run.workers;
  o.only = flags.criteria;
  const auto results = run_acceptance(o, [&](const CriterionResult& r) { console << format_line(r) << std::endl; });
  std::size_t passed = 0;
  for (const auto& r : results) passed += r.pass;
  console << passed << "/" << results.size() << " criteria passed\n";
  if (run.out != &console) {
    if (run.csv) {
      run.preamble(*run.out);
      *run.out << "id,pass,seconds,title,measured\n";
      for (const auto& r : results)
        *run.out << r.id << ',' << (r.pass ? 1 : 0) << ',' << r.seconds << ',' << csv_quote(r.title) << ','
                 << csv_quote(r.measured) << '\n';
    } else {
      json arr = json::array();
      for (const auto& r : results) arr.push_back(to_json(r));
      run.emit_json(*run.out, {{"criteria", std::move(arr)}, {"passed", passed}, {"total", results.size()}});
    }
  }
  return passed == results.size() ? 0 : PropertyViolation("").exit_code();
}

json load_config(const std::string& path) {
  if (path.empty()) return json::object();
  std::ifstream in(path);
  if (!in) throw ConfigError("--config: cannot open " + path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("--config " + path + ": " + e.what());
  }
  if (!j.is_object()) throw ConfigError("config: expected a JSON object");
  return j;
}

std::size_t default_replicas(const std::string& cmd) {
  static const std::map<std::string, std::size_t> d{{"simulate", 1},     {"estimate-tc", 100}, {"order-test", 100000},
                                                    {"speedup-check", 1000}, {"couple", 1}, {"paths", 1}};
  auto it = d.find(cmd);
  return it == d.end() ? 0 : it->second;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"First contact percolation lab", "fcp_lab"};
  app.require_subcommand(1);
  Flags flags;

  const std::map<std::string, std::string> help{
      {"simulate", "Spread on a region. CSV: replica,x0[,x1..],time,event (event infect|stalled). "
                   "--patterns writes replica,a0[,a1..],b0[,b1..],time"},
      {"estimate-tc", "Time constants T(n)/n. CSV: spec_json,n,replicas,mean,lo,hi,regime"},
      {"order-test", "Convex-order refutation test. CSV: function,collection,mean_a,se_a,mean_b,se_b,z,verdict"},
      {"speedup-check", "Speed-up certificate scan. CSV: a,b,p_strong,p_weak,margin,epsilon,m_lower,m,block_prob"},
      {"couple", "Coupled recursion and lemma checks. CSV: replica,k,u,tau_strong,tau_weak"},
      {"paths", "Permitted path counts N_t(x,y). CSV: replica,count,reached"},
      {"verify", "Acceptance battery. CSV: id,pass,seconds,title,measured"},
  };
  std::map<std::string, CLI::App*> subs;
  for (const auto& [name, desc] : help) {
    auto* s = app.add_subcommand(name, desc);
    s->add_option("--config", flags.config, "JSON experiment config");
    s->add_option("--seed", flags.seed, "master seed (fallback: config, then FCP_LAB_SEED)");
    s->add_option("--replicas", flags.replicas, "replica count");
    s->add_option("--out", flags.out, "output file (default stdout)");
    s->add_option("--format", flags.format, "csv|json");
    s->add_option("--workers", flags.workers, "worker threads (0: all cores)");
    if (name == "simulate") s->add_option("--patterns", flags.patterns, "pattern rug CSV output");
    if (name == "verify") s->add_option("criteria", flags.criteria, "criterion ids (default: all)");
    subs[name] = s;
  }

  try {
    app.parse(std::vector<std::string>(args.rbegin(), args.rend()));
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : ConfigError("").exit_code();
  }
  std::string command;
  for (const auto& [name, s] : subs)
    if (s->parsed()) command = name;

  try {
    json cfg = load_config(flags.config);
    cfg.erase("out");
    cfg.erase("workers");

    Run run;
    run.command = command;
    if (!flags.seed.empty()) {
      run.seed = parse_u64(flags.seed, "--seed");
    } else if (field(cfg, "seed")) {
      run.seed = count(cfg, "seed", 0);
    } else if (const char* env = std::getenv("FCP_LAB_SEED"); env && *env) {
      run.seed = parse_u64(env, "FCP_LAB_SEED");
    } else {
      run.seed = command == "verify" ? AcceptanceOptions{}.seed : 1;
    }
    run.replicas = flags.replicas.empty() ? count(cfg, "replicas", default_replicas(command))
                                          : parse_u64(flags.replicas, "--replicas");
    if (command != "verify" && run.replicas == 0) throw ConfigError("replicas: must be positive");
    const std::string format = flags.format.empty() ? text(cfg, "format", "csv") : flags.format;
    if (format != "csv" && format != "json") throw ConfigError("--format: expected csv or json, got '" + format + "'");
    run.csv = format == "csv";
    run.workers = flags.workers.empty() ? 0u : static_cast<unsigned>(parse_u64(flags.workers, "--workers"));

    cfg["seed"] = run.seed;
    cfg["format"] = format;
    if (command != "verify") cfg["replicas"] = run.replicas;
    run.config = cfg;
    run.err = &err;

    // Results are buffered so that a failing run leaves no partial file.
    std::ostringstream buf;
    run.out = flags.out.empty() && command == "verify" ? &out : &buf;
    int code = 0;
    if (command == "simulate") code = cmd_simulate(run, flags);
    else if (command == "estimate-tc") code = cmd_estimate_tc(run);
    else if (command == "order-test") code = cmd_order_test(run);
    else if (command == "speedup-check") code = cmd_speedup_check(run);
    else if (command == "couple") code = cmd_couple(run);
    else if (command == "paths") code = cmd_paths(run);
    else code = cmd_verify(run, flags, out);

    if (run.out == &buf) {
      if (flags.out.empty()) {
        out << buf.str();
      } else {
        std::ofstream f(flags.out, std::ios::binary);
        if (!f) throw ConfigError("--out: cannot open " + flags.out);
        f << buf.str();
      }
    }
    return code;
  } catch (const BudgetError& e) {
    err << "error: " << e.what() << " (lower bound " << e.lower_bound() << ")\n";
    return e.exit_code();
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return e.exit_code();
  } catch (const json::exception& e) {
    err << "error: config: " << e.what() << "\n";
    return ConfigError("").exit_code();
  }
}

}  // namespace fcp::cli
