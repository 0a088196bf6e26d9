#include "fcp/ordering_lab.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <boost/math/distributions/normal.hpp>

#include "fcp/coupling_lab.hpp"
#include "fcp/errors.hpp"
#include "fcp/estimators.hpp"
#include "fcp/parallel.hpp"

namespace fcp {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr std::uint64_t kStreamOrdering = 0x0d;

double sqrt_of_sum(const std::vector<std::size_t>& c) {
  std::size_t s = 0;
  for (auto x : c) s += x;
  return std::sqrt(static_cast<double>(s));
}

double sqrt_per_coordinate_sum(const std::vector<std::size_t>& c) {
  double s = 0.0;
  for (auto x : c) s += std::sqrt(static_cast<double>(x));
  return s;
}

double min_of_coordinates(const std::vector<std::size_t>& c) {
  if (c.empty()) return 0.0;
  return static_cast<double>(*std::min_element(c.begin(), c.end()));
}

double capped_sum(const std::vector<std::size_t>& c) {
  std::size_t s = 0;
  for (auto x : c) s += x;
  return std::min<double>(static_cast<double>(s), 1.0);
}

bool intervals_meet(const Interval& i, const Interval& j) {
  const double lo = std::max(i.lo, j.lo);
  const double hi = std::min(i.hi, j.hi);
  if (lo < hi) return true;
  if (lo > hi) return false;
  return i.contains(lo) && j.contains(lo);
}

struct Sample {
  double mean;
  double se;
};

Sample summarize(const std::vector<double>& xs) {
  const double n = static_cast<double>(xs.size());
  double sum = 0.0;
  for (double x : xs) sum += x;
  const double mean = sum / n;
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  const double var = xs.size() > 1 ? ss / (n - 1.0) : 0.0;
  return {mean, std::sqrt(var / n)};
}

}  // namespace

bool Interval::contains(double x) const noexcept {
  const bool above = x > lo || (lo_closed && x == lo);
  const bool below = x < hi || (hi_closed && x == hi);
  return above && below;
}

void validate_collection(const SetCollection& c) {
  std::vector<const Interval*> all;
  for (const auto& set : c)
    for (const auto& iv : set.parts) {
      if (!std::isfinite(iv.lo) || !std::isfinite(iv.hi))
        throw ConfigError("interval bounds must be finite");
      if (iv.hi < iv.lo || (iv.hi == iv.lo && !(iv.lo_closed && iv.hi_closed)))
        throw ConfigError("interval must be non-empty");
      all.push_back(&iv);
    }
  if (all.empty()) throw ConfigError("collection has no intervals");
  for (std::size_t i = 0; i < all.size(); ++i)
    for (std::size_t j = i + 1; j < all.size(); ++j)
      if (intervals_meet(*all[i], *all[j]))
        throw DisjointnessError("collection intervals overlap: " + to_json(*all[i]).dump() + " and " +
                                to_json(*all[j]).dump());
}

std::vector<SetCollection> comparability_battery() {
  return {
      {{{Interval::point(0.0)}, "{0}"}},
      {{{Interval::open(0.0, 1.0)}, "(0,1)"}},
      {{{Interval::open(-0.5, 0.0), Interval::open(0.0, 0.5)}, "(-1/2,1/2)\\{0}"}},
      {{{Interval::open(-0.5, 0.0), Interval::open(0.5, 1.0)}, "(-1/2,0)u(1/2,1)"}},
  };
}

const std::vector<TestFunction>& test_function_registry() {
  static const std::vector<TestFunction> r{
      {"sqrt_of_sum", &sqrt_of_sum},
      {"sqrt_per_coordinate_sum", &sqrt_per_coordinate_sum},
      {"min_of_coordinates", &min_of_coordinates},
      {"capped_sum", &capped_sum},
  };
  return r;
}

const TestFunction& test_function(const std::string& id) {
  for (const auto& f : test_function_registry())
    if (f.id == id) return f;
  throw ConfigError("unknown test function '" + id + "'");
}

std::string to_string(TrialVerdict v) {
  switch (v) {
    case TrialVerdict::kSupports: return "supports";
    case TrialVerdict::kRefutes: return "refutes";
    case TrialVerdict::kInconclusive: return "inconclusive";
  }
  return "unknown";
}

OrderingReport convex_order_test(const ProcessSpec& a, const ProcessSpec& b,
                                 const std::vector<SetCollection>& collections,
                                 const std::vector<std::string>& functions, const OrderingOptions& opts) {
  if (opts.replicas < 2) throw ConfigError("convex_order_test needs at least 2 replicas");
  if (!(opts.significance > 0.0 && opts.significance < 1.0))
    throw ConfigError("significance must lie in (0, 1)");
  for (const auto& c : collections) validate_collection(c);
  std::vector<const TestFunction*> fns;
  for (const auto& id : functions) fns.push_back(&test_function(id));

  OrderingReport report{a, b, opts.significance, opts.replicas, {}, false, false};
  const std::size_t n_trials = collections.size() * fns.size();
  if (n_trials == 0) return report;

  // values[side][collection][function][replica]
  std::vector<std::vector<std::vector<std::vector<double>>>> values(
      2, std::vector<std::vector<std::vector<double>>>(
             collections.size(), std::vector<std::vector<double>>(fns.size(), std::vector<double>(opts.replicas))));
  parallel_for(2 * collections.size(), opts.workers, [&](std::size_t task) {
    const std::size_t side = task % 2, ci = task / 2;
    const ProcessSpec& spec = side == 0 ? a : b;
    const auto& coll = collections[ci];
    double lo = kInf, hi = -kInf;
    for (const auto& set : coll)
      for (const auto& iv : set.parts) {
        lo = std::min(lo, iv.lo);
        hi = std::max(hi, iv.hi);
      }
    const Window w{lo, std::nextafter(hi, kInf)};
    const std::uint64_t seed = replica_seed(opts.seed, kStreamOrdering, task);
    std::vector<std::size_t> counts(coll.size());
    for (std::size_t r = 0; r < opts.replicas; ++r) {
      const auto p = sample_pattern(spec, seed, r, w);
      std::fill(counts.begin(), counts.end(), 0);
      for (double x : p.times)
        for (std::size_t s = 0; s < coll.size(); ++s)
          for (const auto& iv : coll[s].parts)
            if (iv.contains(x)) ++counts[s];
      for (std::size_t f = 0; f < fns.size(); ++f) values[side][ci][f][r] = fns[f]->psi(counts);
    }
  });

  const boost::math::normal normal;
  const double crit =
      boost::math::quantile(normal, 1.0 - opts.significance / (2.0 * static_cast<double>(n_trials)));
  for (std::size_t ci = 0; ci < collections.size(); ++ci)
    for (std::size_t f = 0; f < fns.size(); ++f) {
      OrderingTrial t;
      t.function = fns[f]->id;
      t.collection = collections[ci];
      const auto sa = summarize(values[0][ci][f]);
      const auto sb = summarize(values[1][ci][f]);
      t.mean_a = sa.mean;
      t.se_a = sa.se;
      t.mean_b = sb.mean;
      t.se_b = sb.se;
      t.pooled_se = std::hypot(sa.se, sb.se);
      const double diff = sa.mean - sb.mean;
      if (t.pooled_se == 0.0) {
        t.z = diff == 0.0 ? 0.0 : std::copysign(kInf, diff);
        if (diff < -1e-12)
          t.verdict = TrialVerdict::kRefutes;
        else if (diff > 1e-12)
          t.verdict = TrialVerdict::kSupports;
      } else {
        t.z = diff / t.pooled_se;
        if (t.z < -crit)
          t.verdict = TrialVerdict::kRefutes;
        else if (t.z > crit)
          t.verdict = TrialVerdict::kSupports;
      }
      report.refuted_ab |= t.verdict == TrialVerdict::kRefutes;
      report.refuted_ba |= t.verdict == TrialVerdict::kSupports;
      report.trials.push_back(std::move(t));
    }
  return report;
}

IntervalGrid IntervalGrid::standard() {
  IntervalGrid g;
  for (int i = 0; i < 20; ++i) g.starts.push_back(i / 20.0);
  for (int k = 1; k <= 40; ++k) g.lengths.push_back(k / 20.0);
  return g;
}

DominationReport hitting_domination_test(const ProcessSpec& strong, const ProcessSpec& weak,
                                         const IntervalGrid& grid, const EmpiricalOptions& opts) {
  DominationReport rep;
  for (double a : grid.starts)
    for (double len : grid.lengths) {
      const auto hs = hitting_prob(strong, a, len, opts);
      const auto hw = hitting_prob(weak, a, len, opts);
      const bool exact = hs.analytic && hw.analytic;
      rep.analytic &= exact;
      const double excess = hw.value - hs.value;
      const double guard = exact ? 1e-12 : 3.0 * std::hypot(hs.std_error, hw.std_error);
      ++rep.checked;
      if (excess > guard) rep.dominated = false;
      if (excess > rep.worst_excess) {
        rep.worst_excess = excess;
        rep.worst = {a, len};
        rep.worst_p_strong = hs.value;
        rep.worst_p_weak = hw.value;
      }
    }
  return rep;
}

double block_probability(double epsilon, std::size_t k) {
  double p = 1.0;
  for (std::size_t i = 1; i <= k; ++i) p *= epsilon / static_cast<double>(i);
  return p;
}

std::optional<SpeedupCertificate> speedup_condition_scan(const ProcessSpec& strong, const ProcessSpec& weak,
                                                         const IntervalGrid& grid,
                                                         const EmpiricalOptions& opts) {
  const auto dom = hitting_domination_test(strong, weak, grid, opts);
  if (!dom.dominated)
    throw PreconditionError("hitting-probability domination fails on [" + std::to_string(dom.worst.a) + ", " +
                            std::to_string(dom.worst.a + dom.worst.length) + "]: P(X'>0) = " +
                            std::to_string(dom.worst_p_weak) + " > P(X>0) = " + std::to_string(dom.worst_p_strong));
  if (const double atom = max_atom_mass(weak); atom > 0.0)
    throw PreconditionError("weak process " + weak.name() + " has atoms: sup_x P(x in X') = " +
                            std::to_string(atom));
  for (const auto* spec : {&strong, &weak}) {
    double total = 0.0;
    for (std::size_t r = 0; r < 2000; ++r)
      total += static_cast<double>(sample_pattern(*spec, opts.seed, r, {0.0, 1.0}).times.size());
    if (!std::isfinite(total / 2000.0))
      throw PreconditionError("E[X([0,1])] is not finite for " + spec->name());
  }
  if (waiting_bound_M(strong).status != WaitingBound::Status::kFinite)
    throw PreconditionError("waiting-time integral M of " + strong.name() + " is not finite");

  SpeedupCertificate cert;
  for (int c : {1, 2, 3}) cert.margins_by_constant[c] = -kInf;
  double best = -kInf;
  for (double a : grid.starts)
    for (double len : grid.lengths) {
      const double ps = hitting_prob(strong, a, len, opts).value;
      const double pw = hitting_prob(weak, a, len, opts).value;
      for (int c : {1, 2, 3})
        cert.margins_by_constant[c] = std::max(cert.margins_by_constant[c], ps - c * pw);
      const double margin = ps - 3.0 * pw;
      if (margin > best + 1e-12) {
        best = margin;
        cert.a = a;
        cert.b = a + len;
        cert.p_strong = ps;
        cert.p_weak = pw;
      }
    }
  if (!(best > 0.0)) return std::nullopt;
  cert.margin = cert.p_strong - 3.0 * cert.p_weak;
  cert.epsilon = cert.margin / 3.0;
  HittingFunction hw(weak, opts);
  cert.m_lower = minimal_steps(hw, cert.p_weak);
  cert.m = std::max<std::size_t>(2 * cert.m_lower + 1, 5);
  cert.block_prob = block_probability(cert.epsilon, cert.m * cert.m);
  return cert;
}

nlohmann::json to_json(const Interval& i) {
  return {{"lo", i.lo}, {"hi", i.hi}, {"lo_closed", i.lo_closed}, {"hi_closed", i.hi_closed}};
}

nlohmann::json to_json(const BorelSet& s) {
  nlohmann::json parts = nlohmann::json::array();
  for (const auto& p : s.parts) parts.push_back(to_json(p));
  return {{"label", s.label}, {"parts", parts}};
}

nlohmann::json to_json(const OrderingReport& r) {
  nlohmann::json trials = nlohmann::json::array();
  for (const auto& t : r.trials) {
    nlohmann::json sets = nlohmann::json::array();
    for (const auto& s : t.collection) sets.push_back(to_json(s));
    trials.push_back({{"function", t.function},
                      {"collection", sets},
                      {"mean_a", t.mean_a},
                      {"se_a", t.se_a},
                      {"mean_b", t.mean_b},
                      {"se_b", t.se_b},
                      {"pooled_se", t.pooled_se},
                      {"z", std::isfinite(t.z) ? nlohmann::json(t.z) : nlohmann::json(t.z > 0 ? "inf" : "-inf")},
                      {"verdict", to_string(t.verdict)}});
  }
  return {{"a", to_json(r.a)},
          {"b", to_json(r.b)},
          {"significance", r.significance},
          {"replicas", r.replicas},
          {"trials", trials},
          {"a_over_b", r.refuted_ab ? "refuted" : "not-refuted"},
          {"b_over_a", r.refuted_ba ? "refuted" : "not-refuted"}};
}

nlohmann::json to_json(const DominationReport& r) {
  return {{"dominated", r.dominated},
          {"analytic", r.analytic},
          {"checked", r.checked},
          {"worst", {{"a", r.worst.a}, {"b", r.worst.a + r.worst.length}}},
          {"worst_excess", r.worst_excess},
          {"worst_p_strong", r.worst_p_strong},
          {"worst_p_weak", r.worst_p_weak}};
}

nlohmann::json to_json(const SpeedupCertificate& c) {
  nlohmann::json margins = nlohmann::json::object();
  for (const auto& [k, v] : c.margins_by_constant) margins[std::to_string(k)] = v;
  return {{"interval", {c.a, c.b}},
          {"p_strong", c.p_strong},
          {"p_weak", c.p_weak},
          {"margin", c.margin},
          {"u_prime", c.p_weak},
          {"epsilon", c.epsilon},
          {"m_lower", c.m_lower},
          {"m", c.m},
          {"block_prob", c.block_prob},
          {"exploratory_margins", margins}};
}

SetCollection collection_from_json(const nlohmann::json& j, const std::string& path) {
  if (!j.is_array()) throw ConfigError(path + ": expected an array of sets");
  SetCollection c;
  for (std::size_t s = 0; s < j.size(); ++s) {
    const auto sp = path + "[" + std::to_string(s) + "]";
    const auto& js = j[s];
    const nlohmann::json* parts = &js;
    BorelSet set;
    if (js.is_object()) {
      if (js.contains("label")) set.label = js["label"].get<std::string>();
      if (!js.contains("parts")) throw ConfigError(sp + ".parts: missing field");
      parts = &js["parts"];
    }
    if (!parts->is_array()) throw ConfigError(sp + ": expected an array of intervals");
    for (std::size_t k = 0; k < parts->size(); ++k) {
      const auto ip = sp + "[" + std::to_string(k) + "]";
      const auto& ji = (*parts)[k];
      if (!ji.is_object() || !ji.contains("lo") || !ji.contains("hi") || !ji["lo"].is_number() ||
          !ji["hi"].is_number())
        throw ConfigError(ip + ": expected {\"lo\": number, \"hi\": number}");
      Interval iv{ji["lo"].get<double>(), ji["hi"].get<double>(), ji.value("lo_closed", true),
                  ji.value("hi_closed", true)};
      set.parts.push_back(iv);
    }
    c.push_back(std::move(set));
  }
  return c;
}

}  // namespace fcp
