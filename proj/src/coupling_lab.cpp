#include "fcp/coupling_lab.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <functional>
#include <limits>
#include <sstream>

#include "fcp/errors.hpp"
#include "fcp/parallel.hpp"
#include "fcp/rng.hpp"

namespace fcp {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kFine = 0x1.0p-30;
constexpr std::uint64_t kStreamLemma = 0x1e;
constexpr std::uint64_t kStreamBlock = 0xb1;

double slack(double rel, double x) { return rel * std::max(1.0, std::fabs(x)); }

std::string fmt(double x) {
  std::ostringstream os;
  os.precision(17);
  os << x;
  return os.str();
}

std::string fmt(std::span<const double> xs) {
  std::string s = "(";
  for (std::size_t i = 0; i < xs.size(); ++i) s += (i ? ", " : "") + fmt(xs[i]);
  return s + ")";
}

// Levels u strictly below sup_t F_a(t), so that G_a(u) is finite.
double draw_level(CounterRng& rng, const ProcessSpec& spec) {
  const double top = limiting_hit_prob(spec);
  return rng.uniform() * top * (1.0 - 1e-9);
}

struct ItemRun {
  LemmaItem item;
  void check(bool ok, const std::string& what) {
    ++item.checks;
    if (!ok) {
      if (item.failures == 0) item.detail = what;
      ++item.failures;
    }
  }
  void precondition(const std::string& what) {
    item.status = LemmaItem::Status::kPrecondition;
    item.detail = item.detail.empty() ? what : item.detail + "; " + what;
  }
  LemmaItem done() {
    if (item.failures > 0) item.status = LemmaItem::Status::kFail;
    return item;
  }
};

void item1(ItemRun& run, const HittingFunction& h, CounterRng& rng, const LemmaOptions& opts) {
  const auto& spec = h.spec();
  const std::string n = spec.name();
  for (std::size_t i = 0; i < opts.trials; ++i) {
    const double a = rng.uniform();
    double t1 = 4.0 * rng.uniform(), t2 = 4.0 * rng.uniform();
    if (t2 < t1) std::swap(t1, t2);
    const double f1 = h.F(a, t1), f2 = h.F(a, t2);
    run.check(f1 <= f2, n + ": F_a not monotone at a=" + fmt(a) + ", t=" + fmt(t1) + ", " + fmt(t2));
    run.check(std::fabs(h.F(a, t1 + kFine) - f1) <= opts.continuity_tol,
              n + ": F_a not right-continuous at a=" + fmt(a) + ", t=" + fmt(t1));
    double u1 = draw_level(rng, spec), u2 = draw_level(rng, spec);
    if (u2 < u1) std::swap(u1, u2);
    run.check(h.G(a, u1) <= h.G(a, u2), n + ": G_a not monotone at a=" + fmt(a) + ", u=" + fmt(u1) + ", " + fmt(u2));
    // Jumps of G sit at levels taken by F.
    for (double u : {u1, f1}) {
      if (!(u + kFine < limiting_hit_prob(spec))) continue;
      run.check(std::fabs(h.G(a, u + kFine) - h.G(a, u)) <= opts.continuity_tol,
                n + ": G_a not right-continuous at a=" + fmt(a) + ", u=" + fmt(u) + " (G(u)=" + fmt(h.G(a, u)) +
                    ", G(u+2^-30)=" + fmt(h.G(a, u + kFine)) + ")");
    }
  }
}

void item2(ItemRun& run, const HittingFunction& s, const HittingFunction& w, CounterRng& rng,
           const LemmaOptions& opts) {
  for (std::size_t i = 0; i < opts.trials; ++i) {
    const double a = 4.0 * rng.uniform();
    const double t = 4.0 * rng.uniform();
    run.check(w.F(a, t) <= s.F(a, t), "F'_a(t) > F_a(t) at a=" + fmt(a) + ", t=" + fmt(t));
    const double u = draw_level(rng, w.spec());
    run.check(s.G(a, u) <= w.G(a, u), "G_a(u) > G'_a(u) at a=" + fmt(a) + ", u=" + fmt(u));

    const std::size_t k = 1 + static_cast<std::size_t>(rng.uniform() * 6);
    std::vector<double> us(k);
    for (auto& x : us) x = draw_level(rng, w.spec());
    const double ts = tau(s, t, us), tw = tau(w, t, us);
    run.check(ts <= tw, "tau > tau' at t=" + fmt(t) + ", u=" + fmt(us));
    const double t_hi = t + 2.0 * rng.uniform();
    for (const auto* h : {&s, &w})
      run.check(tau(*h, t, us) <= tau(*h, t_hi, us),
                h->spec().name() + ": tau not monotone in t at " + fmt(t) + " <= " + fmt(t_hi) + ", u=" + fmt(us));
    const std::size_t j = static_cast<std::size_t>(rng.uniform() * k);
    auto vs = us;
    vs[j] = us[j] + (limiting_hit_prob(w.spec()) * (1.0 - 1e-9) - us[j]) * rng.uniform();
    for (const auto* h : {&s, &w})
      run.check(tau(*h, t, us) <= tau(*h, t, vs),
                h->spec().name() + ": tau not monotone in u_" + std::to_string(j + 1) + " at t=" + fmt(t) +
                    ", u=" + fmt(us) + ", v=" + fmt(vs));
  }
}

void item3(ItemRun& run, const HittingFunction& h, CounterRng& rng, const LemmaOptions& opts) {
  for (std::size_t i = 0; i < opts.trials; ++i) {
    const double t = 4.0 * rng.uniform();
    const std::size_t k = 1 + static_cast<std::size_t>(rng.uniform() * 8);
    std::vector<double> us(k);
    for (auto& x : us) x = draw_level(rng, h.spec());
    const std::size_t j = static_cast<std::size_t>(rng.uniform() * k);
    auto fewer = us;
    fewer.erase(fewer.begin() + static_cast<std::ptrdiff_t>(j));
    run.check(tau(h, t, fewer) <= tau(h, t, us), h.spec().name() + ": removing u_" + std::to_string(j + 1) +
                                                     " slows tau at t=" + fmt(t) + ", u=" + fmt(us));
  }
}

void item4(ItemRun& run, const HittingFunction& h, CounterRng& rng, const LemmaOptions& opts) {
  const auto& spec = h.spec();
  const double atom = max_atom_mass(spec);
  if (!is_z_stationary(spec) || !(atom < 1.0)) {
    run.precondition(spec.name() + ": needs a Z-stationary spec with atom mass < 1");
    return;
  }
  const double top = limiting_hit_prob(spec);
  const std::size_t trials = opts.trials;
  for (std::size_t i = 0; i < trials; ++i) {
    const double u = atom + (top - atom) * (0.001 + 0.998 * rng.uniform());
    double delta = kInf;
    for (int g = 0; g < 64; ++g) delta = std::min(delta, h.G(g / 64.0, u));
    run.check(delta > 0.0, spec.name() + ": inf_a G_a(u) = 0 at u=" + fmt(u));
    const double t = 4.0 * rng.uniform();
    double cur = t;
    for (std::size_t k = 1; k <= 50; ++k) {
      cur = h.arrival(cur, u);
      run.check(cur - t >= delta * static_cast<double>(k) * (1.0 - 1e-12),
                spec.name() + ": tau_t(u x " + std::to_string(k) + ") - t < delta k at u=" + fmt(u));
    }
  }
}

void item5(ItemRun& run, const HittingFunction& h, CounterRng& rng, const LemmaOptions& opts) {
  const double top = limiting_hit_prob(h.spec());
  for (std::size_t i = 0; i < opts.trials; ++i) {
    const double t = 4.0 * rng.uniform();
    const double sum = top * (1.0 - 1e-9) * rng.uniform();
    const double u1 = sum * rng.uniform();
    const double u2 = sum - u1;
    const double pair[2] = {u1, u2};
    const double lhs = tau(h, t, pair);
    const double rhs = h.arrival(t, u1 + u2);
    run.check(lhs <= rhs + slack(opts.rel_slack, rhs),
              h.spec().name() + ": tau_t(u1,u2) > tau_t(u1+u2) at t=" + fmt(t) + ", u=" + fmt(pair));
  }
}

void item6(ItemRun& run, const HittingFunction& h, CounterRng& rng, const LemmaOptions& opts) {
  const auto& spec = h.spec();
  if (const double atom = max_atom_mass(spec); atom > 0.0) {
    run.precondition(spec.name() + " has atoms (sup_x P(x in X) = " + fmt(atom) + ")");
    return;
  }
  const std::size_t trials = opts.trials;
  for (std::size_t i = 0; i < trials; ++i) {
    const double a = 4.0 * rng.uniform();
    const double t = 4.0 * rng.uniform() + 0.01;
    const double f = h.F(a, t);
    double worst = 0.0;
    for (int j = 1; j <= 30; ++j) {
      const double step = std::ldexp(1.0, -j);
      worst = std::max({std::fabs(h.F(a + step, t) - f), std::fabs(h.F(a - step, t) - f),
                        std::fabs(h.F(a, t + step) - f), std::fabs(h.F(a, std::max(0.0, t - step)) - f)});
    }
    run.check(worst <= opts.continuity_tol, spec.name() + ": F not continuous at a=" + fmt(a) + ", t=" + fmt(t) +
                                                " (gap " + fmt(worst) + " at h=2^-30)");
  }
}

}  // namespace

double tau(const HittingFunction& h, double t, std::span<const double> us) {
  double cur = t;
  for (double u : us) cur = h.arrival(cur, u);
  return cur;
}

double tau(const ProcessSpec& spec, double t, std::span<const double> us) {
  HittingFunction h(spec);
  return tau(h, t, us);
}

CouplingRun coupled_run(const HittingFunction& strong, const HittingFunction& weak, double t, std::size_t n,
                        std::uint64_t seed) {
  CouplingRun run;
  CounterRng rng(hash_words({seed, n}));
  run.uniforms.resize(n);
  for (auto& u : run.uniforms) u = rng.uniform();
  run.tau_strong.reserve(n + 1);
  run.tau_weak.reserve(n + 1);
  double s = t, w = t;
  run.tau_strong.push_back(s);
  run.tau_weak.push_back(w);
  for (std::size_t k = 0; k < n; ++k) {
    s = strong.arrival(s, run.uniforms[k]);
    w = weak.arrival(w, run.uniforms[k]);
    run.tau_strong.push_back(s);
    run.tau_weak.push_back(w);
    if (s > w && run.dominated) {
      run.dominated = false;
      run.first_violation = k + 1;
    }
  }
  return run;
}

CouplingRun coupled_run(const ProcessSpec& strong, const ProcessSpec& weak, double t, std::size_t n,
                        std::uint64_t seed) {
  HittingFunction hs(strong), hw(weak);
  return coupled_run(hs, hw, t, n, seed);
}

bool LemmaReport::all_pass() const {
  return std::all_of(items.begin(), items.end(),
                     [](const LemmaItem& i) { return i.status == LemmaItem::Status::kPass; });
}

LemmaReport check_lemma_properties(const ProcessSpec& strong, const ProcessSpec& weak, const LemmaOptions& opts) {
  LemmaReport report{strong, weak, {}};
  HittingFunction hs(strong), hw(weak);
  const std::array<const HittingFunction*, 2> both{&hs, &hw};

  auto rng_for = [&](int item) { return CounterRng(hash_words({opts.seed, kStreamLemma, std::uint64_t(item)})); };
  auto single = [&](int id, const char* name, auto fn) {
    ItemRun run{{id, name, LemmaItem::Status::kPass, 0, 0, {}}};
    auto rng = rng_for(id);
    for (const auto* h : both) {
      try {
        fn(run, *h, rng, opts);
      } catch (const UnreachableQuantileError& e) {
        run.check(false, h->spec().name() + ": " + e.what());
      }
    }
    report.items.push_back(run.done());
  };

  single(1, "F and G monotone and right-continuous", item1);
  {
    ItemRun run{{2, "domination and monotonicity of tau", LemmaItem::Status::kPass, 0, 0, {}}};
    auto rng = rng_for(2);
    item2(run, hs, hw, rng, opts);
    report.items.push_back(run.done());
  }
  single(3, "removing steps makes tau faster", item3);
  single(4, "tau(u,...,u) grows at least linearly", item4);
  single(5, "tau(u1,u2) <= tau(u1+u2)", item5);
  single(6, "continuity of F in a and t", item6);
  return report;
}

std::size_t minimal_steps(const HittingFunction& weak, double u_weak, std::size_t cap) {
  double t = 0.0;
  for (std::size_t k = 1; k <= cap; ++k) {
    t = weak.arrival(t, u_weak);
    if (t >= 2.0) return k;
  }
  throw PreconditionError("tau'_0(u', ..., u') stays below 2 for " + std::to_string(cap) + " steps at u' = " +
                          fmt(u_weak));
}

double find_a_o(const HittingFunction& weak, const SpeedupCertificate& cert) {
  const double target = 2.0 * cert.p_weak + cert.epsilon;
  auto f = [&](double x) { return weak.F(x, cert.b - x); };
  if (!(target < limiting_hit_prob(weak.spec())))
    throw PreconditionError("P(X'([a_o, b]) > 0) cannot reach 2u' + eps = " + fmt(target));
  double hi = cert.a, lo = cert.a - 1.0, width = 1.0;
  while (f(lo) < target) {
    width *= 2.0;
    if (width > 0x1.0p20) throw PreconditionError("no a_o found within 2^20 of a");
    hi = lo;
    lo = cert.a - width;
  }
  for (int i = 0; i < 200 && lo < hi; ++i) {
    const double mid = lo + (hi - lo) / 2.0;
    if (mid <= lo || mid >= hi) break;
    (f(mid) >= target ? lo : hi) = mid;
  }
  return lo;
}

BlockReport speedup_block_check(const ProcessSpec& strong, const ProcessSpec& weak, const SpeedupCertificate& cert,
                                const BlockOptions& opts) {
  if (!(cert.margin > 0.0) || !(cert.epsilon > 0.0) || cert.m == 0)
    throw PreconditionError("speed-up certificate needs a positive margin");
  BlockReport rep;
  rep.certificate = cert;
  HittingFunction hs(strong), hw(weak);
  rep.a_o = find_a_o(hw, cert);
  const double u_lo = cert.p_weak, eps = cert.epsilon;
  const std::size_t m2 = cert.m * cert.m;

  CounterRng rng(hash_words({opts.seed, kStreamBlock}));
  auto good_level = [&]() {
    double v;
    do v = rng.uniform();
    while (v == 0.0);
    return u_lo + eps * v;
  };

  // Claim 1.
  for (std::size_t i = 0; i < opts.claim1_trials; ++i) {
    const double t_o = rep.a_o + (cert.a - rep.a_o) * rng.uniform();
    const std::size_t k = 3 + static_cast<std::size_t>(rng.uniform() * 6);
    std::vector<double> us(k);
    for (auto& u : us) u = std::min(u_lo + eps * rng.uniform(), u_lo + eps);
    std::sort(us.begin(), us.end(), std::greater<>());
    if (!(hw.arrival(t_o, us[0]) > cert.a)) {
      ++rep.claim1_hypothesis_failed;
      continue;
    }
    ++rep.claim1_checked;
    const double lhs = tau(hs, t_o, us);
    const double rhs = tau(hw, t_o, std::span<const double>(us).first(k - 1));
    if (lhs > rhs + slack(1e-12, rhs)) ++rep.claim1_violations;
  }

  // Claim 2 on conditioned blocks after a random unconditioned prefix.
  rep.claim2_min_gain = kInf;
  for (std::size_t r = 0; r < opts.replicas; ++r) {
    const double t_o = 4.0 * rng.uniform();
    const std::size_t prefix_len = static_cast<std::size_t>(rng.uniform() * static_cast<double>(m2));
    std::vector<double> prefix(prefix_len), block(m2);
    for (auto& u : prefix) u = draw_level(rng, weak);
    for (auto& u : block) u = good_level();
    std::sort(block.begin(), block.end(), std::greater<>());
    const double s0 = tau(hs, t_o, prefix), w0 = tau(hw, t_o, prefix);
    const double s1 = tau(hs, s0, block), w1 = tau(hw, w0, block);
    const double ell = std::floor(std::max(0.0, w0 - s0));
    ++rep.claim2_replicas;
    rep.claim2_min_gain = std::min(rep.claim2_min_gain, (w1 - s1) - (w0 - s0));
    if (w1 - s1 < ell + 1.0 - slack(1e-9, w1)) {
      ++rep.claim2_violations;
      nlohmann::json repro{{"strong", to_json(strong)}, {"weak", to_json(weak)}, {"certificate", to_json(cert)},
                           {"t_o", t_o},     {"prefix", prefix},       {"block", block},
                           {"tau_strong", s1}, {"tau_weak", w1},       {"required_gap", ell + 1.0}};
      if (!opts.reproducer_path.empty()) std::ofstream(opts.reproducer_path) << repro.dump(2) << '\n';
      throw PropertyViolation("Claim 2 violated: tau' - tau = " + fmt(w1 - s1) + " < " + fmt(ell + 1.0) +
                              " on uniforms " + repro.dump());
    }
  }

  // Unconditioned frequency of A_0.
  if (cert.block_prob >= opts.frequency_floor) {
    rep.frequency_checked = true;
    std::size_t hits = 0;
    for (std::size_t r = 0; r < opts.frequency_replicas; ++r) {
      bool ok = true;
      double prev = kInf;
      for (std::size_t i = 0; i < m2; ++i) {
        const double u = rng.uniform();
        ok = ok && u > u_lo && u < u_lo + eps && u < prev;
        prev = u;
      }
      hits += ok;
    }
    const double n = static_cast<double>(opts.frequency_replicas);
    rep.frequency = static_cast<double>(hits) / n;
    rep.frequency_std_error = std::sqrt(cert.block_prob * (1.0 - cert.block_prob) / n);
    rep.frequency_within_3se = std::fabs(rep.frequency - cert.block_prob) <= 3.0 * rep.frequency_std_error;
  }

  // Claim 3 curve.
  rep.delta = cert.block_prob / (2.0 * static_cast<double>(m2));
  for (std::size_t z : opts.claim3_z) {
    const std::size_t n = m2 * z;
    std::vector<char> small(opts.claim3_replicas, 0);
    parallel_for(opts.claim3_replicas, opts.workers, [&](std::size_t r) {
      const auto run = coupled_run(hs, hw, 0.0, n, replica_seed(opts.seed, kStreamBlock + z, r));
      small[r] = run.tau_weak.back() - run.tau_strong.back() <= rep.delta * static_cast<double>(n);
    });
    const double frac = static_cast<double>(std::count(small.begin(), small.end(), 1)) /
                        static_cast<double>(std::max<std::size_t>(1, opts.claim3_replicas));
    rep.claim3_curve.emplace_back(z, frac);
  }
  return rep;
}

nlohmann::json to_json(const CouplingRun& run) {
  nlohmann::json j{{"uniforms", run.uniforms},
                   {"tau_strong", run.tau_strong},
                   {"tau_weak", run.tau_weak},
                   {"dominated", run.dominated}};
  j["first_violation"] = run.first_violation ? nlohmann::json(*run.first_violation) : nlohmann::json(nullptr);
  return j;
}

nlohmann::json to_json(const LemmaReport& r) {
  nlohmann::json items = nlohmann::json::array();
  for (const auto& i : r.items) {
    const char* status = i.status == LemmaItem::Status::kPass   ? "pass"
                         : i.status == LemmaItem::Status::kFail ? "fail"
                                                                : "precondition";
    items.push_back({{"item", i.item},
                     {"name", i.name},
                     {"status", status},
                     {"checks", i.checks},
                     {"failures", i.failures},
                     {"detail", i.detail}});
  }
  return {{"strong", to_json(r.strong)}, {"weak", to_json(r.weak)}, {"items", items}, {"all_pass", r.all_pass()}};
}

nlohmann::json to_json(const BlockReport& r) {
  nlohmann::json curve = nlohmann::json::array();
  for (const auto& [z, p] : r.claim3_curve) curve.push_back({{"z", z}, {"p_gap_below_delta_n", p}});
  nlohmann::json freq{{"checked", r.frequency_checked}};
  if (r.frequency_checked) {
    freq["value"] = r.frequency;
    freq["std_error"] = r.frequency_std_error;
    freq["within_3se"] = r.frequency_within_3se;
  }
  return {{"certificate", to_json(r.certificate)},
          {"a_o", r.a_o},
          {"claim1", {{"checked", r.claim1_checked},
                      {"hypothesis_failed", r.claim1_hypothesis_failed},
                      {"violations", r.claim1_violations}}},
          {"claim2", {{"replicas", r.claim2_replicas},
                      {"violations", r.claim2_violations},
                      {"min_gain", r.claim2_min_gain}}},
          {"block_frequency", freq},
          {"delta", r.delta},
          {"claim3_curve", curve}};
}

}  // namespace fcp
