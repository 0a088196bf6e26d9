#include <doctest.h>

#include <cmath>

#include "fcp/errors.hpp"
#include "fcp/ordering_lab.hpp"
#include "fcp/rng.hpp"

using namespace fcp;

namespace {

// E[sqrt(N)] for N ~ Poisson(lambda), by series.
double poisson_sqrt_mean(double lambda) {
  double term = std::exp(-lambda), sum = 0.0;
  for (int k = 1; k < 200; ++k) {
    term *= lambda / k;
    sum += term * std::sqrt(static_cast<double>(k));
  }
  return sum;
}

SetCollection single(Interval iv) { return {{{iv}, ""}}; }

OrderingOptions quick(std::size_t replicas) {
  OrderingOptions o;
  o.replicas = replicas;
  return o;
}

// k disjoint intervals inside [-2, 3) with random open/closed ends.
SetCollection random_collection(CounterRng& rng) {
  const std::size_t k = 1 + static_cast<std::size_t>(rng.uniform() * 4);
  std::vector<double> cuts;
  for (std::size_t i = 0; i < 2 * k; ++i) cuts.push_back(-2.0 + 5.0 * rng.uniform());
  std::sort(cuts.begin(), cuts.end());
  SetCollection c;
  for (std::size_t i = 0; i < k; ++i) {
    // Neighbours share no endpoint because the cuts are distinct.
    Interval iv{cuts[2 * i], cuts[2 * i + 1], rng.uniform() < 0.5, rng.uniform() < 0.5};
    if (rng.uniform() < 0.5 && !c.empty()) {
      c.back().parts.push_back(iv);
    } else {
      c.push_back({{iv}, ""});
    }
  }
  return c;
}

}  // namespace

TEST_CASE("interval membership") {
  CHECK(Interval::point(0.0).contains(0.0));
  CHECK_FALSE(Interval::open(0.0, 1.0).contains(0.0));
  CHECK(Interval::open(0.0, 1.0).contains(0.5));
  CHECK_FALSE(Interval::open(0.0, 1.0).contains(1.0));
  CHECK(Interval::closed(0.0, 1.0).contains(1.0));
}

TEST_CASE("collection validation") {
  CHECK_NOTHROW(validate_collection({{{Interval::open(0, 1)}, ""}, {{Interval::closed(1, 2)}, ""}}));
  CHECK_THROWS_AS(validate_collection({{{Interval::closed(0, 1)}, ""}, {{Interval::closed(1, 2)}, ""}}),
                  DisjointnessError);
  CHECK_THROWS_AS(validate_collection({{{Interval::open(0, 1), Interval::closed(0.5, 2)}, ""}}), DisjointnessError);
  CHECK_THROWS_AS(validate_collection({{{Interval::open(0, 0)}, ""}}), ConfigError);
  CHECK_THROWS_AS(validate_collection({{{Interval::open(0, INFINITY)}, ""}}), ConfigError);
  CHECK_THROWS_AS(validate_collection({}), ConfigError);
  CHECK_THROWS_AS(test_function("cube"), ConfigError);
  for (const auto& c : comparability_battery()) CHECK_NOTHROW(validate_collection(c));
  CHECK_THROWS_AS(convex_order_test(lattice(), poisson(), {{{{Interval::closed(0, 1)}, ""}, {{Interval::point(1)}, ""}}},
                                    {"sqrt_of_sum"}, quick(10)),
                  DisjointnessError);
}

TEST_CASE("test functions") {
  const std::vector<std::size_t> c{4, 9, 0};
  CHECK(test_function("sqrt_of_sum").psi(c) == doctest::Approx(std::sqrt(13.0)));
  CHECK(test_function("sqrt_per_coordinate_sum").psi(c) == 5.0);
  CHECK(test_function("min_of_coordinates").psi(c) == 0.0);
  CHECK(test_function("capped_sum").psi(c) == 1.0);
  CHECK(test_function("capped_sum").psi({0, 0}) == 0.0);
}

TEST_CASE("L and SL refute each other on single sets") {
  const auto r = convex_order_test(lattice(), stationarized_lattice(),
                                   {single(Interval::point(0.0)), single(Interval::open(0.0, 1.0))}, {"sqrt_of_sum"},
                                   quick(1000));
  REQUIRE(r.trials.size() == 2);
  CHECK(r.trials[0].mean_a == 1.0);
  CHECK(r.trials[0].mean_b == 0.0);
  CHECK(r.trials[1].mean_a == 0.0);
  CHECK(r.trials[1].mean_b == 1.0);
  CHECK(r.trials[0].verdict == TrialVerdict::kSupports);
  CHECK(r.trials[1].verdict == TrialVerdict::kRefutes);
  CHECK(r.refuted_ab);
  CHECK(r.refuted_ba);
}

TEST_CASE("PL versus Poisson on (0,1)") {
  const auto r = convex_order_test(perturbed_lattice(), poisson(1.0), {single(Interval::open(0.0, 1.0))},
                                   {"sqrt_of_sum"}, quick(100000));
  const auto& t = r.trials.at(0);
  CHECK(t.mean_a == 1.0);
  CHECK(t.se_a == 0.0);
  CHECK(std::fabs(t.mean_b - poisson_sqrt_mean(1.0)) < 4.0 * t.se_b);
  CHECK(poisson_sqrt_mean(1.0) == doctest::Approx(0.7732).epsilon(1e-4));
  CHECK(t.verdict == TrialVerdict::kSupports);
  CHECK_FALSE(r.refuted_ab);
  CHECK(r.refuted_ba);
}

TEST_CASE("comparability battery") {
  const std::vector<ProcessSpec> specs{lattice(), stationarized_lattice(), perturbed_lattice(),
                                       stationarized_perturbed_lattice(), poisson(1.0)};
  const auto battery = comparability_battery();
  for (std::size_t i = 0; i < specs.size(); ++i)
    for (std::size_t j = 0; j < specs.size(); ++j) {
      if (i == j) continue;
      CAPTURE(specs[i].name());
      CAPTURE(specs[j].name());
      const auto r = convex_order_test(specs[i], specs[j], battery, {"sqrt_of_sum"}, quick(20000));
      // Only PL >> Poi and SPL >> Poi survive.
      const bool survives = j == 4 && (i == 2 || i == 3);
      CHECK(r.refuted_ab == !survives);
    }
}

TEST_CASE("a spec is never refuted against itself") {
  const std::vector<ProcessSpec> specs{lattice(),
                                       stationarized_lattice(),
                                       perturbed_lattice(),
                                       stationarized_perturbed_lattice(),
                                       poisson(1.0),
                                       inhom_poisson(),
                                       thinned(lattice(), 0.5),
                                       shifted(thinned(lattice(), 0.5), {0.0, 0.5}),
                                       scaled(stationarized_lattice(), 4.0),
                                       empty_mixture(poisson(1.0), 0.3)};
  std::vector<std::string> fns;
  for (const auto& f : test_function_registry()) fns.push_back(f.id);
  CounterRng rng(99);
  std::vector<SetCollection> cols;
  for (int i = 0; i < 20; ++i) cols.push_back(random_collection(rng));
  for (const auto& s : specs) {
    CAPTURE(s.name());
    const auto r = convex_order_test(s, s, cols, fns, quick(2000));
    CHECK(r.trials.size() == 80);
    CHECK_FALSE(r.refuted_ab);
    CHECK_FALSE(r.refuted_ba);
  }
}

TEST_CASE("transitivity smoke test") {
  // Poisson(2) >> Poisson(1) >> Poisson(0.5) in the increasing concave
  // sense on every battery set; the ends then must not be refuted.
  const auto battery = comparability_battery();
  const auto o = quick(20000);
  const auto ab = convex_order_test(poisson(2.0), poisson(1.0), battery, {"sqrt_of_sum"}, o);
  const auto bc = convex_order_test(poisson(1.0), poisson(0.5), battery, {"sqrt_of_sum"}, o);
  CHECK_FALSE(ab.refuted_ab);
  CHECK_FALSE(bc.refuted_ab);
  const auto ac = convex_order_test(poisson(2.0), poisson(0.5), battery, {"sqrt_of_sum"}, o);
  CHECK_FALSE(ac.refuted_ab);
}

TEST_CASE("ordering reports are deterministic across workers") {
  auto o = quick(3000);
  o.workers = 1;
  const auto a = convex_order_test(poisson(1.0), perturbed_lattice(), comparability_battery(), {"sqrt_of_sum"}, o);
  o.workers = 3;
  const auto b = convex_order_test(poisson(1.0), perturbed_lattice(), comparability_battery(), {"sqrt_of_sum"}, o);
  CHECK(to_json(a) == to_json(b));
}

TEST_CASE("hitting domination") {
  const auto sl = stationarized_lattice();
  const auto d = hitting_domination_test(sl, scaled(sl, 4.0));
  CHECK(d.dominated);
  CHECK(d.analytic);
  CHECK(d.checked == 800);
  const auto same = hitting_domination_test(poisson(1.0), poisson(1.0));
  CHECK(same.dominated);
  CHECK(same.worst_excess == 0.0);

  // SL does not dominate L; [-0.1, 0.1] has P_L = 1 > P_SL = 0.2.
  IntervalGrid g{{-0.1, 0.3}, {0.2, 0.5}};
  const auto v = hitting_domination_test(sl, lattice(), g);
  CHECK_FALSE(v.dominated);
  CHECK(v.worst.a == -0.1);
  CHECK(v.worst.length == 0.2);
  CHECK(v.worst_p_weak == 1.0);
  CHECK(v.worst_p_strong == doctest::Approx(0.2));
  // On the default one-period grid the worst interval starts at the lattice point.
  const auto v0 = hitting_domination_test(sl, lattice());
  CHECK_FALSE(v0.dominated);
  CHECK(v0.worst.a == 0.0);
  CHECK(v0.worst.length == 0.05);
}

TEST_CASE("void and hitting probabilities are complementary") {
  const std::vector<ProcessSpec> specs{stationarized_lattice(), perturbed_lattice(), poisson(1.0),
                                       thinned(lattice(), 0.3), scaled(stationarized_perturbed_lattice(), 2.0)};
  CounterRng rng(5);
  for (const auto& s : specs)
    for (int i = 0; i < 50; ++i) {
      const double a = 3.0 * rng.uniform() - 1.0, t = 2.0 * rng.uniform();
      const auto h = hitting_prob(s, a, t);
      const auto v = void_prob(s, {a, a + t});
      REQUIRE(h.analytic);
      CHECK(h.value + v.value == 1.0);
    }
  // Domination in hitting probabilities is reverse domination of voids.
  for (int i = 0; i < 200; ++i) {
    const double a = rng.uniform(), t = 2.0 * rng.uniform();
    const double v_sl = void_prob(stationarized_lattice(), {a, a + t}).value;
    const double v_w = void_prob(scaled(stationarized_lattice(), 4.0), {a, a + t}).value;
    CHECK(v_sl <= v_w);
  }
}

TEST_CASE("PL >> Poi implies ordered void probabilities on unions") {
  CounterRng rng(8);
  const auto pl = perturbed_lattice();
  for (int i = 0; i < 500; ++i) {
    std::vector<double> cuts;
    const int k = 1 + static_cast<int>(rng.uniform() * 3);
    for (int j = 0; j < 2 * k; ++j) cuts.push_back(4.0 * rng.uniform() - 1.0);
    std::sort(cuts.begin(), cuts.end());
    std::vector<ClosedInterval> set;
    double len = 0.0;
    for (int j = 0; j < k; ++j) {
      set.push_back({cuts[2 * j], cuts[2 * j + 1]});
      len += cuts[2 * j + 1] - cuts[2 * j];
    }
    const auto v = analytic_void(pl, set);
    REQUIRE(v);
    CHECK(*v <= std::exp(-len) + 1e-12);
    CHECK(*analytic_void(poisson(1.0), set) == doctest::Approx(std::exp(-len)));
  }
}

TEST_CASE("speed-up certificate for SL versus Scaled(SL,4)") {
  const auto sl = stationarized_lattice();
  const auto cert = speedup_condition_scan(sl, scaled(sl, 4.0));
  REQUIRE(cert);
  CHECK(cert->b - cert->a == 1.0);
  CHECK(cert->p_strong == 1.0);
  CHECK(cert->p_weak == 0.25);
  CHECK(cert->margin == 0.25);
  CHECK(cert->epsilon == doctest::Approx(1.0 / 12.0).epsilon(1e-15));
  CHECK(3.0 * cert->epsilon + 3.0 * cert->p_weak == cert->p_strong);
  CHECK(cert->m_lower == 2);
  CHECK(cert->m == 5);
  // (1/12)^25 / 25! from logs, independently of the running product.
  const double expected = std::exp(25.0 * std::log(1.0 / 12.0) - std::lgamma(26.0));
  CHECK(cert->block_prob == doctest::Approx(expected).epsilon(1e-13));
  CHECK(cert->block_prob > 0.0);
  CHECK(cert->block_prob < 1.0);
  CHECK(cert->margins_by_constant.at(1) == 0.75);
  CHECK(cert->margins_by_constant.at(2) == 0.5);
  CHECK(cert->margins_by_constant.at(3) == 0.25);
  const auto j = to_json(*cert);
  CHECK(j["m"] == 5);
  CHECK(j["interval"][1].get<double>() - j["interval"][0].get<double>() == 1.0);
}

TEST_CASE("block probability") {
  CHECK(block_probability(0.5, 0) == 1.0);
  CHECK(block_probability(0.5, 3) == 0.125 / 6.0);
  CHECK(block_probability(1.0, 4) == 1.0 / 24.0);
}

TEST_CASE("speed-up scan preconditions") {
  CHECK_FALSE(speedup_condition_scan(poisson(1.0), poisson(1.0)).has_value());
  const auto tl = thinned(lattice(), 0.5);
  try {
    (void)speedup_condition_scan(shifted(tl, {0.0, 0.5}), tl);
    FAIL("expected a precondition error");
  } catch (const PreconditionError& e) {
    CHECK(std::string(e.what()).find("atoms") != std::string::npos);
  }
  try {
    (void)speedup_condition_scan(lattice(), stationarized_lattice());
    FAIL("expected a precondition error");
  } catch (const PreconditionError& e) {
    CHECK(std::string(e.what()).find("domination") != std::string::npos);
  }
  try {
    (void)speedup_condition_scan(empty_mixture(stationarized_lattice(), 0.1),
                                 scaled(empty_mixture(stationarized_lattice(), 0.1), 4.0));
    FAIL("expected a precondition error");
  } catch (const PreconditionError& e) {
    CHECK(std::string(e.what()).find("M of") != std::string::npos);
  }
}

TEST_CASE("the atoms example satisfies the condition on [1/3, 2/3]") {
  const auto tl = thinned(lattice(), 0.5);
  const auto strong = shifted(tl, {0.0, 0.5});
  CHECK(hitting_prob(strong, 1.0 / 3.0, 1.0 / 3.0).value == 0.5);
  CHECK(hitting_prob(tl, 1.0 / 3.0, 1.0 / 3.0).value == 0.0);
  CHECK(hitting_domination_test(strong, tl).dominated);
}

TEST_CASE("collection JSON") {
  const auto j = nlohmann::json::parse(R"([{"label":"A","parts":[{"lo":0,"hi":1,"lo_closed":false}]},
                                           [{"lo":2,"hi":2}]])");
  const auto c = collection_from_json(j, "collections[0]");
  REQUIRE(c.size() == 2);
  CHECK(c[0].label == "A");
  CHECK_FALSE(c[0].parts[0].lo_closed);
  CHECK(c[0].parts[0].hi_closed);
  CHECK(c[1].parts[0].contains(2.0));
  try {
    (void)collection_from_json(nlohmann::json::parse(R"([[{"lo":0}]])"), "collections[1]");
    FAIL("expected a config error");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("collections[1][0][0]") != std::string::npos);
  }
}
