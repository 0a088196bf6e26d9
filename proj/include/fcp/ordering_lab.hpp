#pragma once

// Statistical testers for convex ordering, hitting-probability domination
// and the strict speed-up condition.
//
// A tester can refute an ordering or fail to refute it; it never proves
// one.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "fcp/point_process.hpp"
#include "fcp/process_spec.hpp"

namespace fcp {

// Bounded interval with independently open or closed ends. lo == hi with
// both ends closed is a single point.
struct Interval {
  double lo;
  double hi;
  bool lo_closed = true;
  bool hi_closed = true;

  static Interval closed(double lo, double hi) { return {lo, hi, true, true}; }
  static Interval open(double lo, double hi) { return {lo, hi, false, false}; }
  static Interval point(double x) { return {x, x, true, true}; }
  bool contains(double x) const noexcept;
};

// Finite disjoint union of intervals.
struct BorelSet {
  std::vector<Interval> parts;
  std::string label;
};

// Sets B_1..B_k evaluated jointly as a count vector.
using SetCollection = std::vector<BorelSet>;

// Throws DisjointnessError when two intervals of the collection overlap
// and ConfigError for unbounded or empty intervals.
void validate_collection(const SetCollection& c);

// The sets of the non-comparability argument: {0}, (0,1),
// (-1/2,1/2)\{0}, (-1/2,0) u (1/2,1); each as its own collection.
std::vector<SetCollection> comparability_battery();

// Increasing concave test functions of a count vector.
struct TestFunction {
  std::string id;
  double (*psi)(const std::vector<std::size_t>& counts);
};
const std::vector<TestFunction>& test_function_registry();
// Throws ConfigError for unknown ids.
const TestFunction& test_function(const std::string& id);

enum class TrialVerdict { kSupports, kRefutes, kInconclusive };
std::string to_string(TrialVerdict v);

struct OrderingTrial {
  std::string function;
  SetCollection collection;
  double mean_a = 0.0, se_a = 0.0;
  double mean_b = 0.0, se_b = 0.0;
  double pooled_se = 0.0;
  double z = 0.0;
  // Verdict on "A >> B": refutes when E psi(A) is significantly below
  // E psi(B), supports when significantly above.
  TrialVerdict verdict = TrialVerdict::kInconclusive;
};

struct OrderingReport {
  ProcessSpec a;
  ProcessSpec b;
  double significance = 0.01;
  std::size_t replicas = 0;
  std::vector<OrderingTrial> trials;
  bool refuted_ab = false;  // some trial refutes A >> B
  bool refuted_ba = false;  // some trial refutes B >> A
};

struct OrderingOptions {
  std::size_t replicas = 100000;
  double significance = 0.01;  // family-wise, Bonferroni over trials
  std::uint64_t seed = 3;
  unsigned workers = 0;
};

// Welch comparison of E psi(counts) under A and B for every (collection,
// function) pair. Deterministic trials (zero pooled standard error)
// compare means exactly.
OrderingReport convex_order_test(const ProcessSpec& a, const ProcessSpec& b,
                                 const std::vector<SetCollection>& collections,
                                 const std::vector<std::string>& functions,
                                 const OrderingOptions& opts = {});

struct GridInterval {
  double a;
  double length;
};

struct IntervalGrid {
  std::vector<double> starts;
  std::vector<double> lengths;
  // a in {0, 0.05, ..., 0.95}, lengths in {0.05, ..., 2.0}.
  static IntervalGrid standard();
};

struct DominationReport {
  bool dominated = true;
  bool analytic = true;
  std::size_t checked = 0;
  // Interval maximizing P(X'(I) > 0) - P(X(I) > 0).
  GridInterval worst{0.0, 0.0};
  double worst_excess = -1.0;
  double worst_p_strong = 0.0;
  double worst_p_weak = 0.0;
};

// Checks P(X'([a,b]) > 0) <= P(X([a,b]) > 0) on the grid. Analytic values
// are compared exactly (up to 1e-12); Monte Carlo values count as a
// violation when the excess exceeds 3 pooled standard errors.
DominationReport hitting_domination_test(const ProcessSpec& strong, const ProcessSpec& weak,
                                         const IntervalGrid& grid = IntervalGrid::standard(),
                                         const EmpiricalOptions& opts = {});

struct SpeedupCertificate {
  double a = 0.0;
  double b = 0.0;
  double p_strong = 0.0;
  double p_weak = 0.0;  // u'
  double margin = 0.0;  // p_strong - 3 p_weak
  double epsilon = 0.0; // margin / 3
  std::size_t m_lower = 0;
  std::size_t m = 0;  // max(2 m_lower + 1, 5)
  double block_prob = 0.0;  // epsilon^{m^2} / (m^2)!
  // Exploratory: best p_strong - c p_weak over the grid for c = 1, 2, 3.
  std::map<int, double> margins_by_constant;
};

// epsilon^{k} / k! as a running product.
double block_probability(double epsilon, std::size_t k);

// Scans the grid for the interval maximizing p_strong - 3 p_weak and
// assembles the certificate. Returns nullopt when no grid interval has a
// positive margin. Throws PreconditionError naming the failed hypothesis:
// hitting-probability domination, atomless weak process, finite M of the
// strong process.
std::optional<SpeedupCertificate> speedup_condition_scan(const ProcessSpec& strong, const ProcessSpec& weak,
                                                         const IntervalGrid& grid = IntervalGrid::standard(),
                                                         const EmpiricalOptions& opts = {});

nlohmann::json to_json(const Interval& i);
nlohmann::json to_json(const BorelSet& s);
nlohmann::json to_json(const OrderingReport& r);
nlohmann::json to_json(const DominationReport& r);
nlohmann::json to_json(const SpeedupCertificate& c);

// JSON input: [{"lo":..,"hi":..,"lo_closed":..,"hi_closed":..}, ...] per
// set; a collection is an array of sets.
SetCollection collection_from_json(const nlohmann::json& j, const std::string& path);

}  // namespace fcp
