#include "fcp/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "fcp/errors.hpp"
#include "fcp/fcp_engine.hpp"
#include "fcp/parallel.hpp"

namespace fcp {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr std::uint64_t kStreamTimeConstant = 0x7c;
constexpr std::uint64_t kStreamSubadditive = 0x5a;

// Unit blocks of the time axis carry independent points.
bool independent_blocks(const ProcessSpec& spec) {
  if (spec.as<kinds::Poisson>() || spec.as<kinds::InhomPoisson>() || spec.as<kinds::Lattice>() ||
      spec.as<kinds::PerturbedLattice>())
    return true;
  if (auto t = spec.as<kinds::Thinned>()) return independent_blocks(*t->base);
  return false;
}

struct Moments {
  double mean;
  double std_error;
};

Moments moments(const std::vector<double>& xs) {
  const double n = static_cast<double>(xs.size());
  const double mean = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  const double var = xs.size() > 1 ? ss / (n - 1.0) : 0.0;
  return {mean, std::sqrt(var / n)};
}

}  // namespace

std::string to_string(Regime r) {
  switch (r) {
    case Regime::kFinite: return "finite";
    case Regime::kZero: return "zero";
    case Regime::kInfiniteStall: return "infinite-stall";
  }
  return "unknown";
}

TimeConstantEstimate estimate_time_constant(const ProcessSpec& spec, const TimeConstantOptions& opts) {
  if (opts.require_stationary && !is_z_stationary(spec))
    throw StationarityError("time constant estimation requires a Z-stationary spec, got " + spec.name());
  if (opts.n_vertices < 100) throw PreconditionError("n_vertices must be at least 100");
  if (opts.replicas == 0) throw PreconditionError("replicas must be positive");

  TimeConstantEstimate est{spec, opts.n_vertices, opts.replicas, 0.0, 0.0, 0.0, 0.0, Regime::kFinite, {}, {}};
  if (max_atom_mass(spec) == 1.0) {
    est.regime = Regime::kZero;
    return est;
  }

  const auto n = static_cast<std::int64_t>(opts.n_vertices);
  std::vector<double> ratio(opts.replicas);
  std::vector<std::size_t> stalled_at(opts.replicas, 0);
  std::vector<char> stalled(opts.replicas, 0);
  parallel_for(opts.replicas, opts.workers, [&](std::size_t r) {
    EdgeEnvironment env(spec, Region::half_line(n), replica_seed(opts.seed, kStreamTimeConstant, r));
    auto res = run_spread(env, 0.0);
    if (res.stalled()) {
      stalled[r] = 1;
      stalled_at[r] = res.infected_count() - 1;
      return;
    }
    ratio[r] = res.time_at(static_cast<std::size_t>(n)) / static_cast<double>(n);
  });

  for (std::size_t r = 0; r < opts.replicas; ++r)
    if (stalled[r]) est.stall_distances.push_back(stalled_at[r]);
  if (!est.stall_distances.empty()) {
    est.regime = Regime::kInfiniteStall;
    est.mean = est.lo = est.hi = kInf;
    return est;
  }
  const auto m = moments(ratio);
  est.samples = std::move(ratio);
  est.mean = m.mean;
  est.std_error = m.std_error;
  est.lo = m.mean - opts.z * m.std_error;
  est.hi = m.mean + opts.z * m.std_error;
  return est;
}

WaitingBound waiting_bound_M(const ProcessSpec& spec, const WaitingBoundOptions& opts) {
  WaitingBound out;
  if (empty_probability(spec) > 0.0) {
    out.status = WaitingBound::Status::kInfinite;
    out.value = kInf;
    return out;
  }
  const ClosedInterval probe{0.0, 1.0};
  out.analytic = analytic_void(spec, std::span(&probe, 1)).has_value();
  auto v = [&](double lo, double hi) {
    if (out.analytic) {
      const ClosedInterval iv{lo, hi};
      return *analytic_void(spec, std::span(&iv, 1));
    }
    return void_prob(spec, {lo, hi}, {20000, 1e-3, 0x3a17}).value;
  };

  using Quad = boost::math::quadrature::gauss_kronrod<double, 61>;
  double total = 0.0, err_total = 0.0;
  double k = 0.0;
  for (; k < opts.integration_cap; k += 1.0) {
    double err = 0.0;
    total += Quad::integrate([&](double s) { return v(0.0, s); }, k, k + 1.0, 15, 1e-14, &err);
    err_total += err;
    const double tail_start = v(0.0, k + 1.0);
    if (tail_start == 0.0) {
      out.cut = k + 1.0;
      out.value = total;
      out.error_bound = err_total;
      return out;
    }
    if (tail_start < opts.tolerance * 1e-6 && independent_blocks(spec)) {
      // v(K + j) <= v(K) q^j with q the largest void probability of a
      // unit window starting in [K, K + 1).
      double q = 0.0;
      for (int i = 0; i < 64; ++i) {
        const double a = k + 1.0 + i / 64.0;
        q = std::max(q, v(a, a + 1.0));
      }
      if (q < 1.0) {
        out.cut = k + 1.0;
        out.value = total;
        out.error_bound = err_total + tail_start / (1.0 - q);
        return out;
      }
    }
  }
  out.cut = k;
  out.value = total;
  out.error_bound = kInf;
  out.status = WaitingBound::Status::kIndeterminate;
  return out;
}

SubadditiveEstimate subadditive_upper(const ProcessSpec& spec, const std::vector<std::size_t>& t_grid,
                                      std::size_t replicas, std::uint64_t seed, unsigned workers) {
  if (t_grid.empty() || replicas == 0) throw PreconditionError("subadditive_upper needs a grid and replicas");
  const std::size_t t_max = *std::max_element(t_grid.begin(), t_grid.end());
  if (t_max == 0) throw PreconditionError("subadditive_upper grid must contain a positive time");
  std::vector<std::vector<double>> times(replicas);
  parallel_for(replicas, workers, [&](std::size_t r) {
    EdgeEnvironment env(spec, Region::half_line(static_cast<std::int64_t>(t_max)),
                        replica_seed(seed, kStreamSubadditive, r));
    auto res = run_spread(env, 0.0);
    for (std::size_t t : t_grid) times[r].push_back(res.time_at(t));
  });
  SubadditiveEstimate best{kInf, kInf, kInf, 0};
  for (std::size_t g = 0; g < t_grid.size(); ++g) {
    if (t_grid[g] == 0) continue;
    std::vector<double> x(replicas);
    for (std::size_t r = 0; r < replicas; ++r) x[r] = times[r][g] / static_cast<double>(t_grid[g]);
    const auto m = moments(x);
    if (m.mean < best.value) {
      const double z = 1.959963984540054;
      best = {m.mean, m.mean - z * m.std_error, m.mean + z * m.std_error, t_grid[g]};
    }
  }
  return best;
}

nlohmann::json to_json(const TimeConstantEstimate& e) {
  nlohmann::json j{{"spec", to_json(e.spec)},       {"n", e.n_vertices},
                   {"replicas", e.replicas},         {"regime", to_string(e.regime)}};
  if (e.regime == Regime::kInfiniteStall) {
    j["stall_distances"] = e.stall_distances;
  } else {
    j["mean"] = e.mean;
    j["std_error"] = e.std_error;
    j["ci95"] = {e.lo, e.hi};
  }
  return j;
}

nlohmann::json to_json(const WaitingBound& m) {
  const char* status = m.status == WaitingBound::Status::kFinite     ? "finite"
                       : m.status == WaitingBound::Status::kInfinite ? "infinite"
                                                                     : "indeterminate";
  nlohmann::json j{{"status", status}, {"analytic", m.analytic}, {"cut", m.cut}};
  if (m.status == WaitingBound::Status::kFinite) {
    j["value"] = m.value;
    j["error_bound"] = m.error_bound;
  } else if (m.status == WaitingBound::Status::kIndeterminate) {
    j["partial_value"] = m.value;
  }
  return j;
}

void write_estimate_header(std::ostream& os) { os << "spec_json,n,replicas,mean,lo,hi,regime\n"; }

void write_estimate_row(std::ostream& os, const TimeConstantEstimate& e) {
  // The spec column is JSON; quote it and double embedded quotes.
  std::string spec = to_json(e.spec).dump();
  std::string quoted = "\"";
  for (char c : spec) {
    if (c == '"') quoted += '"';
    quoted += c;
  }
  quoted += '"';
  const auto prec = os.precision(17);
  os << quoted << ',' << e.n_vertices << ',' << e.replicas << ',';
  if (e.regime == Regime::kInfiniteStall)
    os << "inf,inf,inf";
  else
    os << e.mean << ',' << e.lo << ',' << e.hi;
  os << ',' << to_string(e.regime) << '\n';
  os.precision(prec);
}

}  // namespace fcp
