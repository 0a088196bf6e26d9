#include "fcp/point_process.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include <boost/math/quadrature/gauss.hpp>

#include "fcp/errors.hpp"
#include "fcp/rng.hpp"

namespace fcp {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

constexpr double kInf = std::numeric_limits<double>::infinity();

// Stream tags. Shifted and Scaled reuse their parent's stream so that a
// derived spec shares the base realization of the same (seed, edge).
enum : std::uint64_t {
  kTagStationarizedShift = 1,
  kTagCellUniform = 2,
  kTagPerturbedShift = 3,
  kTagPoissonCell = 4,
  kTagInhomCell = 5,
  kTagThinKeep = 6,
  kTagChild = 7,
  kTagEmpty = 8,
};

std::uint64_t child_stream(std::uint64_t stream) { return hash_words({stream, kTagChild}); }

double stream_uniform(std::initializer_list<std::uint64_t> key) {
  return CounterRng(hash_words(key)).uniform();
}

double margin_for(double lo, double hi) { return 1e-9 * (1.0 + std::abs(lo) + std::abs(hi)); }

bool is_empty_stream(const ProcessSpec& spec, std::uint64_t stream) {
  return std::visit(
      overloaded{
          [&](const kinds::Thinned& k) {
            return k.keep_prob == 0.0 || is_empty_stream(*k.base, child_stream(stream));
          },
          [&](const kinds::EmptyMixture& k) {
            if (k.empty_prob > 0.0 && stream_uniform({stream, kTagEmpty}) < k.empty_prob)
              return true;
            return is_empty_stream(*k.base, child_stream(stream));
          },
          [&](const kinds::Shifted& k) { return is_empty_stream(*k.base, stream); },
          [&](const kinds::Scaled& k) { return is_empty_stream(*k.base, stream); },
          [](const auto&) { return false; },
      },
      spec.kind());
}

// Appends every point of the realization in [lo, hi), possibly along with
// a few points just outside; the caller filters, sorts and deduplicates.
void collect(const ProcessSpec& spec, std::uint64_t stream, double lo, double hi,
             std::vector<double>& out) {
  std::visit(
      overloaded{
          [&](const kinds::Lattice&) {
            for (auto z = static_cast<std::int64_t>(std::ceil(lo)); static_cast<double>(z) < hi; ++z)
              out.push_back(static_cast<double>(z));
          },
          [&](const kinds::StationarizedLattice&) {
            const double u = stream_uniform({stream, kTagStationarizedShift});
            const auto z0 = static_cast<std::int64_t>(std::floor(lo - u)) - 1;
            const auto z1 = static_cast<std::int64_t>(std::floor(hi - u)) + 1;
            for (auto z = z0; z <= z1; ++z) out.push_back(static_cast<double>(z) + u);
          },
          [&](const kinds::PerturbedLattice&) {
            const auto z0 = static_cast<std::int64_t>(std::floor(lo)) - 1;
            const auto z1 = static_cast<std::int64_t>(std::floor(hi));
            for (auto z = z0; z <= z1; ++z)
              out.push_back(static_cast<double>(z) +
                            stream_uniform({stream, kTagCellUniform, signed_bits(z)}));
          },
          [&](const kinds::StationarizedPerturbedLattice&) {
            const double shift = stream_uniform({stream, kTagPerturbedShift});
            const auto z0 = static_cast<std::int64_t>(std::floor(lo - shift)) - 1;
            const auto z1 = static_cast<std::int64_t>(std::floor(hi - shift)) + 1;
            for (auto z = z0; z <= z1; ++z)
              out.push_back((static_cast<double>(z) +
                             stream_uniform({stream, kTagCellUniform, signed_bits(z)})) +
                            shift);
          },
          [&](const kinds::Poisson& k) {
            const auto z0 = static_cast<std::int64_t>(std::floor(lo));
            const auto z1 = static_cast<std::int64_t>(std::floor(hi));
            for (auto z = z0; z <= z1; ++z) {
              CounterRng rng(hash_words({stream, kTagPoissonCell, signed_bits(z)}));
              std::poisson_distribution<long> count(k.rate);
              const long n = count(rng);
              for (long i = 0; i < n; ++i) out.push_back(static_cast<double>(z) + rng.uniform());
            }
          },
          [&](const kinds::InhomPoisson& k) {
            // Thinning of a dominating homogeneous process with rate `bound`.
            const auto& f = intensity_function(k.intensity);
            const auto z0 = static_cast<std::int64_t>(std::floor(std::max(lo, f.support_lo)));
            const auto z1 = static_cast<std::int64_t>(std::floor(hi));
            for (auto z = z0; z <= z1; ++z) {
              CounterRng rng(hash_words({stream, kTagInhomCell, signed_bits(z)}));
              std::poisson_distribution<long> count(f.bound);
              const long n = count(rng);
              for (long i = 0; i < n; ++i) {
                const double x = static_cast<double>(z) + rng.uniform();
                const double v = rng.uniform();
                if (v * f.bound < f.rate(x)) out.push_back(x);
              }
            }
          },
          [&](const kinds::Thinned& k) {
            if (k.keep_prob == 0.0) return;
            std::vector<double> base;
            collect(*k.base, child_stream(stream), lo, hi, base);
            for (double x : base)
              if (k.keep_prob == 1.0 ||
                  stream_uniform({stream, kTagThinKeep, double_bits(x)}) < k.keep_prob)
                out.push_back(x);
          },
          [&](const kinds::Shifted& k) {
            const double m = margin_for(lo, hi);
            std::vector<double> base;
            collect(*k.base, stream, lo - k.offsets.back() - m, hi - k.offsets.front() + m, base);
            for (double x : base)
              for (double o : k.offsets) out.push_back(x + o);
          },
          [&](const kinds::Scaled& k) {
            const double blo = lo / k.factor, bhi = hi / k.factor;
            const double m = margin_for(blo, bhi);
            std::vector<double> base;
            collect(*k.base, stream, blo - m, bhi + m, base);
            for (double x : base) out.push_back(k.factor * x);
          },
          [&](const kinds::EmptyMixture& k) {
            if (k.empty_prob > 0.0 && stream_uniform({stream, kTagEmpty}) < k.empty_prob) return;
            collect(*k.base, child_stream(stream), lo, hi, out);
          },
      },
      spec.kind());
}

std::uint64_t edge_stream(std::uint64_t seed, EdgeKey edge) { return hash_words({seed, edge}); }

void validate_window(Window w) {
  if (!std::isfinite(w.lo) || !std::isfinite(w.hi))
    throw InvalidWindowError("window bounds must be finite");
  if (!(w.lo < w.hi)) throw InvalidWindowError("window must satisfy lo < hi");
}

// ---- closed forms ---------------------------------------------------------

std::vector<ClosedInterval> merged(std::span<const ClosedInterval> set) {
  std::vector<ClosedInterval> v(set.begin(), set.end());
  std::sort(v.begin(), v.end(), [](auto& x, auto& y) { return x.lo < y.lo; });
  std::vector<ClosedInterval> out;
  for (const auto& iv : v) {
    if (!out.empty() && iv.lo <= out.back().hi)
      out.back().hi = std::max(out.back().hi, iv.hi);
    else
      out.push_back(iv);
  }
  return out;
}

double total_length(std::span<const ClosedInterval> m) {
  double len = 0.0;
  for (const auto& iv : m) len += iv.hi - iv.lo;
  return len;
}

double frac(double x) { return x - std::floor(x); }

// Number of z in Z with z + u in [lo, hi].
std::int64_t lattice_hits(double lo, double hi, double u) {
  const double first = std::ceil(lo - u);
  const double last = std::floor(hi - u);
  return last >= first ? static_cast<std::int64_t>(last - first) + 1 : 0;
}

double lattice_pgf(std::span<const ClosedInterval> m, double s) {
  std::int64_t n = 0;
  for (const auto& iv : m) n += lattice_hits(iv.lo, iv.hi, 0.0);
  return std::pow(s, static_cast<double>(n));
}

// Breakpoints in [0, 1] at which the integer crossings of the shifted
// endpoints change.
std::vector<double> shift_breakpoints(std::span<const ClosedInterval> m) {
  std::vector<double> b{0.0, 1.0};
  for (const auto& iv : m) {
    b.push_back(frac(iv.lo));
    b.push_back(frac(iv.hi));
  }
  std::sort(b.begin(), b.end());
  b.erase(std::unique(b.begin(), b.end()), b.end());
  return b;
}

double stationarized_lattice_pgf(std::span<const ClosedInterval> m, double s) {
  const auto b = shift_breakpoints(m);
  double acc = 0.0;
  for (std::size_t i = 0; i + 1 < b.size(); ++i) {
    const double u = 0.5 * (b[i] + b[i + 1]);
    std::int64_t n = 0;
    for (const auto& iv : m) n += lattice_hits(iv.lo, iv.hi, u);
    acc += (b[i + 1] - b[i]) * std::pow(s, static_cast<double>(n));
  }
  return acc;
}

// PGF of the perturbed lattice on the set shifted by -shift.
double perturbed_lattice_pgf(std::span<const ClosedInterval> m, double s, double shift) {
  double prod = 1.0;
  std::int64_t cell = std::numeric_limits<std::int64_t>::min();
  double len = 0.0;
  auto flush = [&] {
    if (len > 0.0) prod *= 1.0 - std::min(len, 1.0) * (1.0 - s);
  };
  for (const auto& iv : m) {
    const double lo = iv.lo - shift, hi = iv.hi - shift;
    for (auto z = static_cast<std::int64_t>(std::floor(lo));
         static_cast<double>(z) <= hi; ++z) {
      const double zl = static_cast<double>(z);
      const double piece = std::min(hi, zl + 1.0) - std::max(lo, zl);
      if (z != cell) {
        flush();
        cell = z;
        len = 0.0;
      }
      if (piece > 0.0) len += piece;
    }
  }
  flush();
  return prod;
}

double stationarized_perturbed_lattice_pgf(std::span<const ClosedInterval> m, double s) {
  // The integrand is a polynomial in the shift between breakpoints.
  const auto b = shift_breakpoints(m);
  double acc = 0.0;
  for (std::size_t i = 0; i + 1 < b.size(); ++i) {
    if (b[i + 1] <= b[i]) continue;
    acc += boost::math::quadrature::gauss<double, 30>::integrate(
        [&](double u) { return perturbed_lattice_pgf(m, s, u); }, b[i], b[i + 1]);
  }
  return acc;
}

std::optional<double> pgf_merged(const ProcessSpec& spec, const std::vector<ClosedInterval>& m,
                                 double s) {
  if (m.empty()) return 1.0;
  return std::visit(
      overloaded{
          [&](const kinds::Lattice&) -> std::optional<double> { return lattice_pgf(m, s); },
          [&](const kinds::StationarizedLattice&) -> std::optional<double> {
            return stationarized_lattice_pgf(m, s);
          },
          [&](const kinds::PerturbedLattice&) -> std::optional<double> {
            return perturbed_lattice_pgf(m, s, 0.0);
          },
          [&](const kinds::StationarizedPerturbedLattice&) -> std::optional<double> {
            return stationarized_perturbed_lattice_pgf(m, s);
          },
          [&](const kinds::Poisson& k) -> std::optional<double> {
            return std::exp(-k.rate * total_length(m) * (1.0 - s));
          },
          [&](const kinds::InhomPoisson& k) -> std::optional<double> {
            const auto& f = intensity_function(k.intensity);
            double lambda = 0.0;
            for (const auto& iv : m) lambda += f.cumulative(iv.lo, iv.hi);
            return std::exp(-lambda * (1.0 - s));
          },
          [&](const kinds::Thinned& k) -> std::optional<double> {
            return pgf_merged(*k.base, m, 1.0 - k.keep_prob + k.keep_prob * s);
          },
          [&](const kinds::EmptyMixture& k) -> std::optional<double> {
            auto base = pgf_merged(*k.base, m, s);
            if (!base) return std::nullopt;
            return k.empty_prob + (1.0 - k.empty_prob) * *base;
          },
          [&](const kinds::Scaled& k) -> std::optional<double> {
            std::vector<ClosedInterval> b;
            for (const auto& iv : m) b.push_back({iv.lo / k.factor, iv.hi / k.factor});
            return pgf_merged(*k.base, merged(b), s);
          },
          [&](const kinds::Shifted& k) -> std::optional<double> {
            // Void events pull back to the base on the union of translates;
            // counts with several offsets involve coincidences.
            if (s != 0.0 && k.offsets.size() > 1) return std::nullopt;
            std::vector<ClosedInterval> b;
            for (const auto& iv : m)
              for (double o : k.offsets) b.push_back({iv.lo - o, iv.hi - o});
            return pgf_merged(*k.base, merged(b), s);
          },
      },
      spec.kind());
}

double clamp01(double p) { return std::clamp(p, 0.0, 1.0); }

ProbabilityEstimate monte_carlo_hit(const ProcessSpec& spec, double a, double t,
                                    const EmpiricalOptions& opts) {
  const Window w{a, std::nextafter(a + t, kInf)};
  std::size_t hits = 0;
  for (std::size_t r = 0; r < opts.replicas; ++r)
    if (!sample_pattern(spec, opts.seed, r, w).times.empty()) ++hits;
  const double n = static_cast<double>(opts.replicas);
  const double p = static_cast<double>(hits) / n;
  return {p, std::sqrt(p * (1.0 - p) / n), false};
}

double bisect_quantile(const ProcessSpec& spec, double a, double u) {
  auto F = [&](double t) {
    const ClosedInterval iv{a, a + t};
    return 1.0 - *analytic_void(spec, std::span(&iv, 1));
  };
  if (F(0.0) >= u) return 0.0;
  double lo = 0.0, hi = 1.0;
  while (F(hi) < u) {
    lo = hi;
    hi *= 2.0;
    if (hi > 0x1.0p20) throw UnreachableQuantileError("quantile level is never reached");
  }
  for (int i = 0; i < 200 && hi - lo > 4.0 * std::numeric_limits<double>::epsilon() * hi; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (F(mid) >= u)
      hi = mid;
    else
      lo = mid;
  }
  return hi;
}

std::optional<double> closed_form_quantile(const ProcessSpec& spec, double a, double u) {
  return std::visit(
      overloaded{
          [&](const kinds::Lattice&) -> std::optional<double> { return std::ceil(a) - a; },
          [&](const kinds::StationarizedLattice&) -> std::optional<double> { return u; },
          [&](const kinds::Poisson& k) -> std::optional<double> {
            if (u >= 1.0) throw UnreachableQuantileError("Poisson hitting function never reaches 1");
            return -std::log1p(-u) / k.rate;
          },
          [&](const kinds::Scaled& k) -> std::optional<double> {
            auto base = closed_form_quantile(*k.base, a / k.factor, u);
            if (!base) return std::nullopt;
            return k.factor * *base;
          },
          [](const auto&) -> std::optional<double> { return std::nullopt; },
      },
      spec.kind());
}

std::optional<double> closed_form_arrival(const ProcessSpec& spec, double a, double u) {
  if (spec.as<kinds::Lattice>()) return std::ceil(a);
  if (auto k = spec.as<kinds::Scaled>()) {
    auto base = closed_form_arrival(*k->base, a / k->factor, u);
    if (!base) return std::nullopt;
    return k->factor * *base;
  }
  if (auto g = closed_form_quantile(spec, a, u)) return a + *g;
  return std::nullopt;
}

// Smallest double s >= a with P(X([a, s]) > 0) >= u.
double bisect_arrival(const ProcessSpec& spec, double a, double u) {
  auto F = [&](double s) {
    const ClosedInterval iv{a, s};
    return 1.0 - *analytic_void(spec, std::span(&iv, 1));
  };
  if (F(a) >= u) return a;
  double lo = a, width = 1.0, hi = a + width;
  while (F(hi) < u) {
    lo = hi;
    width *= 2.0;
    if (width > 0x1.0p20) throw UnreachableQuantileError("quantile level is never reached");
    hi = a + width;
  }
  while (true) {
    const double mid = lo + (hi - lo) / 2.0;
    if (!(mid > lo && mid < hi)) break;
    (F(mid) >= u ? hi : lo) = mid;
  }
  return hi;
}

}  // namespace

PointPattern sample_pattern(const ProcessSpec& spec, std::uint64_t seed, EdgeKey edge, Window window) {
  validate_window(window);
  std::vector<double> pts;
  collect(spec, edge_stream(seed, edge), window.lo, window.hi, pts);
  std::erase_if(pts, [&](double x) { return !(x >= window.lo && x < window.hi); });
  std::sort(pts.begin(), pts.end());
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  return {window, std::move(pts)};
}

bool edge_is_empty(const ProcessSpec& spec, std::uint64_t seed, EdgeKey edge) {
  return is_empty_stream(spec, edge_stream(seed, edge));
}

NextMeeting next_meeting(const ProcessSpec& spec, std::uint64_t seed, EdgeKey edge, double from,
                         double limit) {
  const auto stream = edge_stream(seed, edge);
  if (is_empty_stream(spec, stream)) return {NextStatus::kEmpty, kInf};
  double lo = from, width = 1.0;
  std::vector<double> pts;
  for (std::size_t iter = 0; lo < limit; ++iter) {
    if (iter > 10'000'000) throw Error("next_meeting: scan limit exceeded");
    const double hi = std::min(lo + width, limit);
    pts.clear();
    collect(spec, stream, lo, hi, pts);
    double best = kInf;
    for (double x : pts)
      if (x >= lo && x < hi && x < best) best = x;
    if (best < kInf) return {NextStatus::kFound, best};
    lo = hi;
    width = std::min(width * 2.0, 1024.0);
  }
  return {NextStatus::kBeyondLimit, kInf};
}

std::optional<double> count_pgf(const ProcessSpec& spec, std::span<const ClosedInterval> set,
                                double s) {
  return pgf_merged(spec, merged(set), s);
}

std::optional<double> analytic_void(const ProcessSpec& spec, std::span<const ClosedInterval> set) {
  auto v = count_pgf(spec, set, 0.0);
  if (v) return clamp01(*v);
  return std::nullopt;
}

ProbabilityEstimate hitting_prob(const ProcessSpec& spec, double a, double t,
                                 const EmpiricalOptions& opts) {
  if (!(t >= 0.0)) throw DomainError("hitting_prob: t must be non-negative");
  if (!std::isfinite(a) || !std::isfinite(t)) throw DomainError("hitting_prob: non-finite input");
  const ClosedInterval iv{a, a + t};
  if (auto v = analytic_void(spec, std::span(&iv, 1))) return {1.0 - *v, 0.0, true};
  return monte_carlo_hit(spec, a, t, opts);
}

ProbabilityEstimate void_prob(const ProcessSpec& spec, ClosedInterval interval,
                              const EmpiricalOptions& opts) {
  if (!std::isfinite(interval.lo) || !std::isfinite(interval.hi))
    throw DomainError("void_prob: interval must be bounded");
  if (interval.hi < interval.lo) throw DomainError("void_prob: reversed interval");
  auto hit = hitting_prob(spec, interval.lo, interval.hi - interval.lo, opts);
  return {1.0 - hit.value, hit.std_error, hit.analytic};
}

double fpp_transmission_cdf(const ProcessSpec& spec, double s) {
  if (!is_r_stationary(spec))
    throw StationarityError("fpp_transmission_cdf requires an R-stationary spec, got " + spec.name());
  return hitting_prob(spec, 0.0, s).value;
}

double limiting_hit_prob(const ProcessSpec& spec) {
  return std::visit(
      overloaded{
          [](const kinds::Thinned& k) { return k.keep_prob > 0.0 ? limiting_hit_prob(*k.base) : 0.0; },
          [](const kinds::EmptyMixture& k) {
            return (1.0 - k.empty_prob) * limiting_hit_prob(*k.base);
          },
          [](const kinds::Shifted& k) { return limiting_hit_prob(*k.base); },
          [](const kinds::Scaled& k) { return limiting_hit_prob(*k.base); },
          [](const auto&) { return 1.0; },
      },
      spec.kind());
}

double empty_probability(const ProcessSpec& spec) { return 1.0 - limiting_hit_prob(spec); }

std::vector<double> atom_candidates(const ProcessSpec& spec) {
  std::vector<double> out = std::visit(
      overloaded{
          [](const kinds::Lattice&) { return std::vector<double>{0.0}; },
          [](const kinds::Thinned& k) { return atom_candidates(*k.base); },
          [](const kinds::EmptyMixture& k) { return atom_candidates(*k.base); },
          [](const kinds::Shifted& k) {
            std::vector<double> v;
            for (double x : atom_candidates(*k.base))
              for (double o : k.offsets) v.push_back(frac(x + o));
            return v;
          },
          [](const kinds::Scaled& k) {
            std::vector<double> v;
            const auto reps = static_cast<int>(std::ceil(1.0 / k.factor)) + 1;
            for (double x : atom_candidates(*k.base))
              for (int j = 0; j <= reps; ++j) v.push_back(frac(k.factor * (x + j)));
            return v;
          },
          [](const auto&) { return std::vector<double>{}; },
      },
      spec.kind());
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

double max_atom_mass(const ProcessSpec& spec) {
  double best = 0.0;
  for (double x : atom_candidates(spec)) {
    const ClosedInterval pt{x, x};
    double mass;
    if (auto v = analytic_void(spec, std::span(&pt, 1))) {
      mass = 1.0 - *v;
    } else {
      constexpr std::size_t kReplicas = 4000;
      std::size_t hits = 0;
      for (std::size_t r = 0; r < kReplicas; ++r)
        if (!sample_pattern(spec, 0xa70a5, r, {x, std::nextafter(x, kInf)}).times.empty()) ++hits;
      mass = static_cast<double>(hits) / kReplicas;
    }
    best = std::max(best, mass);
  }
  return best;
}

double quantile(const ProcessSpec& spec, double a, double u) {
  if (!(u >= 0.0 && u <= 1.0)) throw DomainError("quantile: u must lie in [0, 1]");
  if (u == 0.0) return 0.0;
  if (u > limiting_hit_prob(spec))
    throw UnreachableQuantileError("quantile level " + std::to_string(u) +
                                   " exceeds sup_t F_a(t) for " + spec.name());
  if (auto q = closed_form_quantile(spec, a, u)) return *q;
  const ClosedInterval probe{0.0, 1.0};
  if (analytic_void(spec, std::span(&probe, 1))) return bisect_quantile(spec, a, u);
  return HittingFunction::empirical(spec).G(a, u);
}

// ---- HittingFunction -------------------------------------------------------

HittingFunction::HittingFunction(ProcessSpec spec, EmpiricalOptions opts, Form form)
    : spec_(std::move(spec)), opts_(opts), form_(form) {}

HittingFunction::HittingFunction(ProcessSpec spec, EmpiricalOptions opts)
    : spec_(std::move(spec)), opts_(opts), form_(Form::kEmpirical) {
  const ClosedInterval probe{0.0, 1.0};
  if (analytic_void(spec_, std::span(&probe, 1))) form_ = Form::kAnalytic;
}

HittingFunction HittingFunction::empirical(ProcessSpec spec, EmpiricalOptions opts) {
  return HittingFunction(std::move(spec), opts, Form::kEmpirical);
}

const std::vector<double>& HittingFunction::distances(double a) const {
  const double res = opts_.resolution;
  const bool periodic = is_z_stationary(spec_);
  const double a_eff = periodic ? frac(a) : a;
  auto key = static_cast<std::int64_t>(std::llround(a_eff / res));
  if (periodic) {
    const auto period = static_cast<std::int64_t>(std::llround(1.0 / res));
    key = ((key % period) + period) % period;
  }
  std::lock_guard lock(mu_);
  auto it = tables_.find(key);
  if (it != tables_.end()) return it->second;
  const double a0 = static_cast<double>(key) * res;
  std::vector<double> d(opts_.replicas);
  for (std::size_t r = 0; r < opts_.replicas; ++r) {
    auto next = next_meeting(spec_, opts_.seed, r, a0, a0 + scan_horizon_);
    d[r] = next.status == NextStatus::kFound ? next.time - a0 : kInf;
  }
  std::sort(d.begin(), d.end());
  return tables_.emplace(key, std::move(d)).first->second;
}

double HittingFunction::F(double a, double t) const {
  if (!(t >= 0.0)) throw DomainError("F: t must be non-negative");
  if (form_ == Form::kAnalytic) {
    const ClosedInterval iv{a, a + t};
    return 1.0 - *analytic_void(spec_, std::span(&iv, 1));
  }
  const auto& d = distances(a);
  const auto n = std::upper_bound(d.begin(), d.end(), t) - d.begin();
  return static_cast<double>(n) / static_cast<double>(d.size());
}

double HittingFunction::F_stderr(double a, double t) const {
  if (form_ == Form::kAnalytic) return 0.0;
  const double p = F(a, t);
  return std::sqrt(p * (1.0 - p) / static_cast<double>(opts_.replicas));
}

double HittingFunction::G(double a, double u) const {
  if (form_ == Form::kAnalytic) return quantile(spec_, a, u);
  if (!(u >= 0.0 && u <= 1.0)) throw DomainError("G: u must lie in [0, 1]");
  if (u == 0.0) return 0.0;
  const auto& d = distances(a);
  const auto need = static_cast<std::size_t>(std::ceil(u * static_cast<double>(d.size())));
  if (need == 0) return 0.0;
  if (need > d.size() || !std::isfinite(d[need - 1]))
    throw UnreachableQuantileError("empirical quantile level is never reached");
  // Smallest grid point t_k = k * res with F(t_k) >= u.
  const double res = opts_.resolution;
  auto k = static_cast<std::int64_t>(std::ceil(d[need - 1] / res));
  while (static_cast<double>(k) * res < d[need - 1]) ++k;
  return static_cast<double>(k) * res;
}

double HittingFunction::arrival(double a, double u) const {
  if (form_ == Form::kEmpirical) return a + G(a, u);
  if (!(u >= 0.0 && u <= 1.0)) throw DomainError("quantile: u must lie in [0, 1]");
  if (u == 0.0) return a;
  if (u > limiting_hit_prob(spec_))
    throw UnreachableQuantileError("quantile level " + std::to_string(u) + " exceeds sup_t F_a(t) for " +
                                   spec_.name());
  if (auto s = closed_form_arrival(spec_, a, u)) return *s;
  return bisect_arrival(spec_, a, u);
}

}  // namespace fcp
