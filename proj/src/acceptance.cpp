#include "fcp/acceptance.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstring>
#include <map>
#include <sstream>

#include "fcp/coupling_lab.hpp"
#include "fcp/errors.hpp"
#include "fcp/estimators.hpp"
#include "fcp/fcp_engine.hpp"
#include "fcp/ordering_lab.hpp"
#include "fcp/parallel.hpp"
#include "fcp/path_oracle.hpp"

namespace fcp {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string num(double x, int prec = 6) {
  std::ostringstream os;
  os.precision(prec);
  os << x;
  return os.str();
}

std::string ci(const TimeConstantEstimate& e) {
  if (e.regime == Regime::kZero) return "zero";
  if (e.regime == Regime::kInfiniteStall) return "infinite-stall";
  return num(e.mean) + " [" + num(e.lo) + ", " + num(e.hi) + "]";
}

double half_width(const TimeConstantEstimate& e) { return (e.hi - e.lo) / 2.0; }

struct Mean {
  double mean;
  double se;
};

Mean mean_se(const std::vector<double>& xs) {
  double s = 0.0;
  for (double x : xs) s += x;
  const double n = static_cast<double>(xs.size());
  const double m = s / n;
  double ss = 0.0;
  for (double x : xs) ss += (x - m) * (x - m);
  return {m, std::sqrt(ss / (n - 1.0) / n)};
}

class Suite {
 public:
  Suite(const AcceptanceOptions& opts, const std::function<void(const CriterionResult&)>& cb)
      : opts_(opts), cb_(cb) {}

  template <class Fn>
  void criterion(const std::string& id, const std::string& title, Fn&& fn) {
    if (!opts_.only.empty() && std::find(opts_.only.begin(), opts_.only.end(), id) == opts_.only.end()) return;
    CriterionResult r{id, title, false, {}, 0.0};
    const auto t0 = Clock::now();
    try {
      fn(r);
    } catch (const std::exception& e) {
      r.pass = false;
      r.measured = std::string("error: ") + e.what();
    }
    r.seconds = seconds_since(t0);
    if (cb_) cb_(r);
    results_.push_back(std::move(r));
  }

  // Time constant estimates are shared between criteria; the first call
  // for a key pays for the simulation.
  const TimeConstantEstimate& estimate(const ProcessSpec& spec, std::size_t n, std::size_t replicas,
                                       bool require_stationary = true, double* seconds = nullptr) {
    const std::string key = to_json(spec).dump() + "/" + std::to_string(n) + "/" + std::to_string(replicas);
    auto it = cache_.find(key);
    if (it == cache_.end()) {
      TimeConstantOptions o;
      o.n_vertices = n;
      o.replicas = replicas;
      o.seed = opts_.seed;
      o.workers = opts_.workers;
      o.require_stationary = require_stationary;
      const auto t0 = Clock::now();
      auto e = estimate_time_constant(spec, o);
      timing_[key] = seconds_since(t0);
      it = cache_.emplace(key, std::move(e)).first;
    }
    if (seconds) *seconds = timing_[key];
    return it->second;
  }

  std::uint64_t seed() const { return opts_.seed; }
  unsigned workers() const { return opts_.workers; }
  std::vector<CriterionResult> take() { return std::move(results_); }

 private:
  AcceptanceOptions opts_;
  const std::function<void(const CriterionResult&)>& cb_;
  std::vector<CriterionResult> results_;
  std::map<std::string, TimeConstantEstimate> cache_;
  std::map<std::string, double> timing_;
};

}  // namespace

std::vector<CriterionResult> run_acceptance(const AcceptanceOptions& opts,
                                            const std::function<void(const CriterionResult&)>& on_result) {
  Suite s(opts, on_result);
  const auto L = lattice();
  const auto SL = stationarized_lattice();
  const auto PL = perturbed_lattice();
  const auto SPL = stationarized_perturbed_lattice();
  const auto Poi = poisson(1.0);
  const auto SL4 = scaled(SL, 4.0);

  s.criterion("A01", "c_Poi = 1 at n=1e4, 100 replicas, within [0.98, 1.02] in < 60 s", [&](CriterionResult& r) {
    double secs = 0.0;
    const auto& e = s.estimate(Poi, 10000, 100, true, &secs);
    r.pass = e.regime == Regime::kFinite && e.mean >= 0.98 && e.mean <= 1.02 && secs < 60.0;
    r.measured = "c=" + ci(e) + ", " + num(secs, 3) + " s";
  });

  s.criterion("A02", "c_SL within [0.49, 0.51] and c_L regime zero, each in < 60 s", [&](CriterionResult& r) {
    double secs_sl = 0.0, secs_l = 0.0;
    const auto& sl = s.estimate(SL, 10000, 100, true, &secs_sl);
    const auto& l = s.estimate(L, 10000, 100, true, &secs_l);
    r.pass = sl.regime == Regime::kFinite && sl.mean >= 0.49 && sl.mean <= 0.51 && l.regime == Regime::kZero &&
             l.mean == 0.0 && secs_sl < 60.0 && secs_l < 60.0;
    r.measured = "c_SL=" + ci(sl) + " (" + num(secs_sl, 3) + " s), c_L " + ci(l);
  });

  s.criterion("A03", "c_L < c_SL < c_SPL < c_Poi with disjoint 95% CIs at n=1e4, 200 replicas in < 5 min",
              [&](CriterionResult& r) {
                const auto t0 = Clock::now();
                std::vector<const TimeConstantEstimate*> chain;
                for (const auto* spec : {&L, &SL, &SPL, &Poi}) chain.push_back(&s.estimate(*spec, 10000, 200));
                const double secs = seconds_since(t0);
                bool ok = chain[0]->regime == Regime::kZero && chain[0]->mean == 0.0;
                for (std::size_t i = 1; i < chain.size(); ++i) {
                  ok = ok && chain[i]->regime == Regime::kFinite;
                  // Regime zero has the degenerate interval [0, 0].
                  const double prev_hi = i == 1 ? 0.0 : chain[i - 1]->hi;
                  ok = ok && prev_hi < chain[i]->lo;
                }
                r.pass = ok && secs < 300.0;
                r.measured = "L " + ci(*chain[0]) + " < SL " + ci(*chain[1]) + " < SPL " + ci(*chain[2]) + " < Poi " +
                             ci(*chain[3]) + ", " + num(secs, 3) + " s";
              });

  s.criterion("A04", "M = 1 (Poi), 0.5 (SL), 2 (Scaled(SL,4)) within 1e-6 and c <= M + 2 CI half-widths",
              [&](CriterionResult& r) {
                const std::pair<const ProcessSpec*, double> cases[] = {{&Poi, 1.0}, {&SL, 0.5}, {&SL4, 2.0}};
                bool ok = true;
                for (const auto& [spec, expected] : cases) {
                  const auto m = waiting_bound_M(*spec);
                  const auto& e = s.estimate(*spec, 10000, 100);
                  const bool mm = m.status == WaitingBound::Status::kFinite && std::fabs(m.value - expected) <= 1e-6;
                  const bool bound = e.regime == Regime::kFinite && e.mean <= m.value + 2.0 * half_width(e);
                  ok = ok && mm && bound;
                  r.measured += (r.measured.empty() ? "" : "; ") + spec->name() + ": M=" + num(m.value, 12) +
                                " c=" + num(e.mean);
                }
                r.pass = ok;
              });

  s.criterion("A05", "lattice path counts 3 and 6; discretized count equals the direct count on 100 instances",
              [&](CriterionResult& r) {
                EdgeEnvironment lat(L, Region::box(1, 3), 0);
                const auto c1 = count_paths(lat, {0}, {1}, 2.5).count;
                const auto c2 = count_paths(lat, {0}, {2}, 2.5).count;
                std::size_t agree = 0, instances = 0;
                for (const auto* spec : {&SL, &Poi})
                  for (const auto& region : {Region::half_line(3), Region::box(Vertex{0, 0}, Vertex{1, 1})})
                    for (std::uint64_t k = 0; k < 25; ++k) {
                      EdgeEnvironment env(*spec, region, replica_seed(s.seed(), 0xa5, instances));
                      const Vertex x(region.dim(), 0);
                      const Vertex y = region.hi();
                      const double t = 2.0;
                      const double gap = minimal_gap(env, x, y, t);
                      const std::size_t n0 =
                          std::isfinite(gap) ? std::max<std::size_t>(4, static_cast<std::size_t>(std::ceil(t / gap)) + 1)
                                             : 4;
                      const auto direct = count_paths(env, x, y, t).count;
                      bool all = true;
                      for (std::size_t n = n0; n < n0 + 40; n += 7)
                        all = all && count_paths_discretized(env, x, y, t, n) == direct;
                      agree += all;
                      ++instances;
                    }
                r.pass = c1 == 3 && c2 == 6 && agree == 100 && instances == 100;
                r.measured = "N(0->1)=" + std::to_string(c1) + ", N(0->2)=" + std::to_string(c2) + ", " +
                             std::to_string(agree) + "/" + std::to_string(instances) + " instances agree";
              });

  s.criterion("A06", "PL vs Poi on a 3-edge path, 1e4 replicas: E[N_t] and P(N_t>=1) ordered within 2 SE",
              [&](CriterionResult& r) {
                const std::size_t reps = 10000;
                bool ok = true;
                for (double t : {0.5, 1.0, 2.0}) {
                  std::vector<double> n_pl(reps), n_poi(reps), h_pl(reps), h_poi(reps);
                  parallel_for(reps, s.workers(), [&](std::size_t i) {
                    EdgeEnvironment a(PL, Region::half_line(3), replica_seed(s.seed(), 0xa6, i));
                    EdgeEnvironment b(Poi, Region::half_line(3), replica_seed(s.seed(), 0xa7, i));
                    n_pl[i] = static_cast<double>(count_paths(a, {0}, {3}, t).count);
                    n_poi[i] = static_cast<double>(count_paths(b, {0}, {3}, t).count);
                    h_pl[i] = n_pl[i] >= 1.0;
                    h_poi[i] = n_poi[i] >= 1.0;
                  });
                  const auto mp = mean_se(n_pl), mq = mean_se(n_poi);
                  const auto hp = mean_se(h_pl), hq = mean_se(h_poi);
                  ok = ok && mp.mean >= mq.mean - 2.0 * std::hypot(mp.se, mq.se) &&
                       hp.mean >= hq.mean - 2.0 * std::hypot(hp.se, hq.se);
                  r.measured += (r.measured.empty() ? "" : "; ") + std::string("t=") + num(t) + ": E " +
                                num(mp.mean, 4) + " vs " + num(mq.mean, 4) + ", P " + num(hp.mean, 4) + " vs " +
                                num(hq.mean, 4);
                }
                r.pass = ok;
              });

  s.criterion("A07", "sqrt battery refutes both directions within {L,SL,PL,SPL} and {L,SL,Poi}; PL,SPL >> Poi kept",
              [&](CriterionResult& r) {
                OrderingOptions o;
                o.replicas = 100000;
                o.seed = s.seed();
                o.workers = s.workers();
                const auto battery = comparability_battery();
                const std::vector<std::string> fns{"sqrt_of_sum"};
                auto both = [&](const ProcessSpec& a, const ProcessSpec& b) {
                  const auto rep = convex_order_test(a, b, battery, fns, o);
                  return rep.refuted_ab && rep.refuted_ba;
                };
                const std::vector<const ProcessSpec*> g1{&L, &SL, &PL, &SPL}, g2{&L, &SL, &Poi};
                std::size_t pairs = 0, refuted = 0;
                for (const auto* g : {&g1, &g2})
                  for (std::size_t i = 0; i < g->size(); ++i)
                    for (std::size_t j = i + 1; j < g->size(); ++j) {
                      ++pairs;
                      refuted += both(*(*g)[i], *(*g)[j]);
                    }
                const auto pl = convex_order_test(PL, Poi, battery, fns, o);
                const auto spl = convex_order_test(SPL, Poi, battery, fns, o);
                const auto& t01 = pl.trials.at(1);  // (0,1)
                const bool values = t01.mean_a == 1.0 && std::fabs(t01.mean_b - 0.7732) <= 0.01;
                r.pass = refuted == pairs && !pl.refuted_ab && !spl.refuted_ab && values;
                r.measured = std::to_string(refuted) + "/" + std::to_string(pairs) +
                             " pairs refuted both ways; PL>>Poi " + (pl.refuted_ab ? "refuted" : "kept") +
                             ", SPL>>Poi " + (spl.refuted_ab ? "refuted" : "kept") + "; E sqrt PL(0,1)=" +
                             num(t01.mean_a) + ", E sqrt Poi(0,1)=" + num(t01.mean_b, 5);
              });

  s.criterion("A08", "Shifted(Thinned(L,0.5),{0,1/2}) and Thinned(L,0.5) hit identically for n<=1e3, 50 seeds",
              [&](CriterionResult& r) {
                const auto base = thinned(L, 0.5);
                const auto doubled = shifted(base, {0.0, 0.5});
                std::size_t identical = 0, finite = 0;
                for (std::uint64_t k = 0; k < 50; ++k) {
                  const auto seed = replica_seed(s.seed(), 0xa8, k);
                  const auto a = run_spread(EdgeEnvironment(base, Region::half_line(1000), seed), 0.0);
                  const auto b = run_spread(EdgeEnvironment(doubled, Region::half_line(1000), seed), 0.0);
                  bool same = true;
                  for (std::size_t v = 0; v <= 1000; ++v) {
                    const double x = a.time_at(v), y = b.time_at(v);
                    same = same && std::memcmp(&x, &y, sizeof x) == 0;
                  }
                  identical += same;
                  finite += std::isfinite(a.time_at(1000));
                }
                r.pass = identical == 50 && finite == 50;
                r.measured = std::to_string(identical) + "/50 seeds bit-identical";
              });

  s.criterion("A09", "coupling lemma items (1)-(6) pass on SL, Poi, Scaled(SL,4) with 1e3 inputs each",
              [&](CriterionResult& r) {
                const std::pair<ProcessSpec, ProcessSpec> pairs[] = {
                    {SL, SL4}, {Poi, poisson(0.5)}, {SL4, scaled(SL, 8.0)}};
                LemmaOptions o;
                o.trials = 1000;
                o.seed = s.seed();
                std::size_t passed = 0, items = 0, checks = 0;
                std::string fail;
                for (const auto& [a, b] : pairs) {
                  const auto rep = check_lemma_properties(a, b, o);
                  for (const auto& it : rep.items) {
                    ++items;
                    checks += it.checks;
                    if (it.status == LemmaItem::Status::kPass && it.checks >= 1000)
                      ++passed;
                    else if (fail.empty())
                      fail = "; item " + std::to_string(it.item) + ": " + it.detail;
                  }
                }
                r.pass = passed == items;
                r.measured = std::to_string(passed) + "/" + std::to_string(items) + " item runs pass, " +
                             std::to_string(checks) + " checks" + fail;
              });

  s.criterion("A10", "speed-up SL vs Scaled(SL,4): margin 0.25 at length 1, Claim 2 on 1e3/1e3, disjoint CIs",
              [&](CriterionResult& r) {
                const auto cert = speedup_condition_scan(SL, SL4);
                if (!cert) {
                  r.measured = "no certificate";
                  return;
                }
                BlockOptions bo;
                bo.replicas = 1000;
                bo.seed = s.seed();
                bo.workers = s.workers();
                const auto block = speedup_block_check(SL, SL4, *cert, bo);
                const auto& c_sl = s.estimate(SL, 10000, 100);
                const auto& c_w = s.estimate(SL4, 10000, 100);
                const bool cert_ok = std::fabs(cert->margin - 0.25) <= 1e-12 && cert->b - cert->a == 1.0;
                const bool claim2 = block.claim2_replicas == 1000 && block.claim2_violations == 0 &&
                                    block.claim2_min_gain >= 1.0;
                const bool disjoint = c_sl.hi < c_w.lo;
                r.pass = cert_ok && claim2 && disjoint;
                r.measured = "margin " + num(cert->margin) + " on [" + num(cert->a) + ", " + num(cert->b) +
                             "], m=" + std::to_string(cert->m) + ", Claim 2 " +
                             std::to_string(block.claim2_replicas - block.claim2_violations) + "/" +
                             std::to_string(block.claim2_replicas) + " (min gain " + num(block.claim2_min_gain, 4) +
                             "), c " + ci(c_sl) + " vs " + ci(c_w);
              });

  s.criterion("A11", "InhomPoisson and Poisson(1) both estimate c within [0.95, 1.05] at n=1e4",
              [&](CriterionResult& r) {
                const auto& inhom = s.estimate(inhom_poisson(), 10000, 100, false);
                const auto& poi = s.estimate(Poi, 10000, 100);
                auto in = [](const TimeConstantEstimate& e) {
                  return e.regime == Regime::kFinite && e.mean >= 0.95 && e.mean <= 1.05;
                };
                r.pass = in(inhom) && in(poi);
                r.measured = "inhom " + ci(inhom) + ", Poi " + ci(poi);
              });

  s.criterion("A12", "EmptyMixture(Poisson(1), 0.3) classified infinite-stall within 100 replicas",
              [&](CriterionResult& r) {
                const auto& e = s.estimate(empty_mixture(Poi, 0.3), 10000, 100);
                r.pass = e.regime == Regime::kInfiniteStall;
                std::size_t worst = 0;
                for (auto d : e.stall_distances) worst = std::max(worst, d);
                r.measured = "regime " + to_string(e.regime) + ", " + std::to_string(e.stall_distances.size()) +
                             " stalled replicas, farthest stall at vertex " + std::to_string(worst);
              });

  return s.take();
}

std::string format_line(const CriterionResult& r) {
  std::ostringstream os;
  os.precision(3);
  os << (r.pass ? "PASS " : "FAIL ") << r.id << ' ' << r.title << " | " << r.measured << " (" << std::fixed
     << r.seconds << "s)";
  return os.str();
}

nlohmann::json to_json(const CriterionResult& r) {
  return {{"id", r.id}, {"title", r.title}, {"pass", r.pass}, {"measured", r.measured}, {"seconds", r.seconds}};
}

}  // namespace fcp
