#include "fcp/process_spec.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "fcp/errors.hpp"

namespace fcp {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

std::string format_number(double x) {
  std::ostringstream os;
  os.precision(12);
  os << x;
  return os.str();
}

void require(bool ok, const std::string& msg) {
  if (!ok) throw ConfigError(msg);
}

void require_probability(double p, const char* field) {
  require(std::isfinite(p) && p >= 0.0 && p <= 1.0,
          std::string(field) + " must lie in [0, 1], got " + format_number(p));
}

// intensity(x) = 1 + 1/|1 + x| on x >= 0, zero below.
double one_plus_inverse_shift_rate(double x) {
  return x < 0.0 ? 0.0 : 1.0 + 1.0 / (1.0 + x);
}

double one_plus_inverse_shift_cumulative(double a, double b) {
  a = std::max(a, 0.0);
  b = std::max(b, 0.0);
  if (b <= a) return 0.0;
  return (b - a) + std::log1p(b) - std::log1p(a);
}

const std::vector<IntensityFunction>& registry() {
  static const std::vector<IntensityFunction> r{
      {"one_plus_inverse_shift", 0.0, 2.0, &one_plus_inverse_shift_rate,
       &one_plus_inverse_shift_cumulative},
  };
  return r;
}

}  // namespace

ProcessSpec::ProcessSpec(Kind kind) : kind_(std::move(kind)) {
  std::visit(
      overloaded{
          [](const kinds::Poisson& k) {
            require(std::isfinite(k.rate) && k.rate > 0.0, "Poisson rate must be positive");
          },
          [](const kinds::InhomPoisson& k) { (void)intensity_function(k.intensity); },
          [](const kinds::Thinned& k) {
            require(k.base != nullptr, "Thinned requires a base spec");
            require_probability(k.keep_prob, "keep_prob");
          },
          [](const kinds::Shifted& k) {
            require(k.base != nullptr, "Shifted requires a base spec");
            require(!k.offsets.empty(), "Shifted requires at least one offset");
            for (double o : k.offsets) require(std::isfinite(o), "offsets must be finite");
          },
          [](const kinds::Scaled& k) {
            require(k.base != nullptr, "Scaled requires a base spec");
            require(std::isfinite(k.factor) && k.factor > 0.0, "Scaled factor must be positive");
          },
          [](const kinds::EmptyMixture& k) {
            require(k.base != nullptr, "EmptyMixture requires a base spec");
            require_probability(k.empty_prob, "empty_prob");
          },
          [](const auto&) {},
      },
      kind_);
  if (auto* s = std::get_if<kinds::Shifted>(&kind_)) {
    auto& offs = s->offsets;
    std::sort(offs.begin(), offs.end());
    offs.erase(std::unique(offs.begin(), offs.end()), offs.end());
  }
}

std::string ProcessSpec::name() const {
  return std::visit(
      overloaded{
          [](const kinds::Lattice&) -> std::string { return "L"; },
          [](const kinds::StationarizedLattice&) -> std::string { return "SL"; },
          [](const kinds::PerturbedLattice&) -> std::string { return "PL"; },
          [](const kinds::StationarizedPerturbedLattice&) -> std::string { return "SPL"; },
          [](const kinds::Poisson& k) -> std::string {
            return k.rate == 1.0 ? "Poi" : "Poi(" + format_number(k.rate) + ")";
          },
          [](const kinds::InhomPoisson& k) -> std::string { return "InhomPoi(" + k.intensity + ")"; },
          [](const kinds::Thinned& k) -> std::string {
            return "Thinned(" + k.base->name() + "," + format_number(k.keep_prob) + ")";
          },
          [](const kinds::Shifted& k) -> std::string {
            std::string s = "Shifted(" + k.base->name() + ",{";
            for (std::size_t i = 0; i < k.offsets.size(); ++i) {
              if (i) s += ",";
              s += format_number(k.offsets[i]);
            }
            return s + "})";
          },
          [](const kinds::Scaled& k) -> std::string {
            return "Scaled(" + k.base->name() + "," + format_number(k.factor) + ")";
          },
          [](const kinds::EmptyMixture& k) -> std::string {
            return "EmptyMixture(" + k.base->name() + "," + format_number(k.empty_prob) + ")";
          },
      },
      kind_);
}

bool operator==(const ProcessSpec& a, const ProcessSpec& b) {
  if (a.kind_.index() != b.kind_.index()) return false;
  return std::visit(
      overloaded{
          [&](const kinds::Poisson& k) { return k.rate == b.as<kinds::Poisson>()->rate; },
          [&](const kinds::InhomPoisson& k) {
            return k.intensity == b.as<kinds::InhomPoisson>()->intensity;
          },
          [&](const kinds::Thinned& k) {
            auto* o = b.as<kinds::Thinned>();
            return k.keep_prob == o->keep_prob && *k.base == *o->base;
          },
          [&](const kinds::Shifted& k) {
            auto* o = b.as<kinds::Shifted>();
            return k.offsets == o->offsets && *k.base == *o->base;
          },
          [&](const kinds::Scaled& k) {
            auto* o = b.as<kinds::Scaled>();
            return k.factor == o->factor && *k.base == *o->base;
          },
          [&](const kinds::EmptyMixture& k) {
            auto* o = b.as<kinds::EmptyMixture>();
            return k.empty_prob == o->empty_prob && *k.base == *o->base;
          },
          [](const auto&) { return true; },
      },
      a.kind_);
}

ProcessSpec lattice() { return ProcessSpec(kinds::Lattice{}); }
ProcessSpec stationarized_lattice() { return ProcessSpec(kinds::StationarizedLattice{}); }
ProcessSpec perturbed_lattice() { return ProcessSpec(kinds::PerturbedLattice{}); }
ProcessSpec stationarized_perturbed_lattice() {
  return ProcessSpec(kinds::StationarizedPerturbedLattice{});
}
ProcessSpec poisson(double rate) { return ProcessSpec(kinds::Poisson{rate}); }
ProcessSpec inhom_poisson(std::string intensity) {
  return ProcessSpec(kinds::InhomPoisson{std::move(intensity)});
}
ProcessSpec thinned(const ProcessSpec& base, double keep_prob) {
  return ProcessSpec(kinds::Thinned{std::make_shared<const ProcessSpec>(base), keep_prob});
}
ProcessSpec shifted(const ProcessSpec& base, std::vector<double> offsets) {
  return ProcessSpec(
      kinds::Shifted{std::make_shared<const ProcessSpec>(base), std::move(offsets)});
}
ProcessSpec scaled(const ProcessSpec& base, double factor) {
  return ProcessSpec(kinds::Scaled{std::make_shared<const ProcessSpec>(base), factor});
}
ProcessSpec empty_mixture(const ProcessSpec& base, double empty_prob) {
  return ProcessSpec(kinds::EmptyMixture{std::make_shared<const ProcessSpec>(base), empty_prob});
}

Stationarity stationarity(const ProcessSpec& spec) {
  return std::visit(
      overloaded{
          [](const kinds::Lattice&) { return Stationarity::kInteger; },
          [](const kinds::StationarizedLattice&) { return Stationarity::kReal; },
          [](const kinds::PerturbedLattice&) { return Stationarity::kInteger; },
          [](const kinds::StationarizedPerturbedLattice&) { return Stationarity::kReal; },
          [](const kinds::Poisson&) { return Stationarity::kReal; },
          [](const kinds::InhomPoisson&) { return Stationarity::kNone; },
          [](const kinds::Thinned& k) { return stationarity(*k.base); },
          [](const kinds::Shifted& k) { return stationarity(*k.base); },
          [](const kinds::EmptyMixture& k) { return stationarity(*k.base); },
          [](const kinds::Scaled& k) {
            auto base = stationarity(*k.base);
            if (base != Stationarity::kInteger) return base;
            // factor * Z-stationary is invariant under shifts by factor * Z,
            // which contains 1 iff 1/factor is an integer.
            double inv = 1.0 / k.factor;
            return std::abs(inv - std::round(inv)) < 1e-12 ? Stationarity::kInteger
                                                           : Stationarity::kNone;
          },
      },
      spec.kind());
}

const IntensityFunction& intensity_function(const std::string& id) {
  for (const auto& f : registry())
    if (f.id == id) return f;
  throw ConfigError("unknown intensity function '" + id + "'");
}

std::vector<std::string> intensity_ids() {
  std::vector<std::string> ids;
  for (const auto& f : registry()) ids.push_back(f.id);
  return ids;
}

nlohmann::json to_json(const ProcessSpec& spec) {
  using nlohmann::json;
  return std::visit(
      overloaded{
          [](const kinds::Lattice&) { return json{{"kind", "lattice"}}; },
          [](const kinds::StationarizedLattice&) { return json{{"kind", "stationarized_lattice"}}; },
          [](const kinds::PerturbedLattice&) { return json{{"kind", "perturbed_lattice"}}; },
          [](const kinds::StationarizedPerturbedLattice&) {
            return json{{"kind", "stationarized_perturbed_lattice"}};
          },
          [](const kinds::Poisson& k) { return json{{"kind", "poisson"}, {"rate", k.rate}}; },
          [](const kinds::InhomPoisson& k) {
            return json{{"kind", "inhom_poisson"}, {"intensity", k.intensity}};
          },
          [](const kinds::Thinned& k) {
            return json{{"kind", "thinned"}, {"base", to_json(*k.base)}, {"keep_prob", k.keep_prob}};
          },
          [](const kinds::Shifted& k) {
            return json{{"kind", "shifted"}, {"base", to_json(*k.base)}, {"offsets", k.offsets}};
          },
          [](const kinds::Scaled& k) {
            return json{{"kind", "scaled"}, {"base", to_json(*k.base)}, {"factor", k.factor}};
          },
          [](const kinds::EmptyMixture& k) {
            return json{
                {"kind", "empty_mixture"}, {"base", to_json(*k.base)}, {"empty_prob", k.empty_prob}};
          },
      },
      spec.kind());
}

namespace {

double number_field(const nlohmann::json& j, const std::string& key, const std::string& path) {
  auto it = j.find(key);
  if (it == j.end()) throw ConfigError(path + "." + key + ": missing field");
  if (!it->is_number()) throw ConfigError(path + "." + key + ": expected a number");
  return it->get<double>();
}

ProcessSpec base_field(const nlohmann::json& j, const std::string& path) {
  auto it = j.find("base");
  if (it == j.end()) throw ConfigError(path + ".base: missing field");
  return spec_from_json(*it, path + ".base");
}

}  // namespace

ProcessSpec spec_from_json(const nlohmann::json& j, const std::string& path) {
  if (j.is_string()) {
    auto s = j.get<std::string>();
    if (s == "L") return lattice();
    if (s == "SL") return stationarized_lattice();
    if (s == "PL") return perturbed_lattice();
    if (s == "SPL") return stationarized_perturbed_lattice();
    if (s == "Poi") return poisson(1.0);
    throw ConfigError(path + ": unknown spec alias '" + s + "'");
  }
  if (!j.is_object()) throw ConfigError(path + ": expected an object or alias string");
  auto kit = j.find("kind");
  if (kit == j.end() || !kit->is_string()) throw ConfigError(path + ".kind: missing string field");
  const auto kind = kit->get<std::string>();
  try {
    if (kind == "lattice") return lattice();
    if (kind == "stationarized_lattice") return stationarized_lattice();
    if (kind == "perturbed_lattice") return perturbed_lattice();
    if (kind == "stationarized_perturbed_lattice") return stationarized_perturbed_lattice();
    if (kind == "poisson") return poisson(j.contains("rate") ? number_field(j, "rate", path) : 1.0);
    if (kind == "inhom_poisson") {
      auto it = j.find("intensity");
      if (it == j.end() || !it->is_string())
        throw ConfigError(path + ".intensity: missing string field");
      return inhom_poisson(it->get<std::string>());
    }
    if (kind == "thinned") return thinned(base_field(j, path), number_field(j, "keep_prob", path));
    if (kind == "scaled") return scaled(base_field(j, path), number_field(j, "factor", path));
    if (kind == "empty_mixture")
      return empty_mixture(base_field(j, path), number_field(j, "empty_prob", path));
    if (kind == "shifted") {
      auto it = j.find("offsets");
      if (it == j.end() || !it->is_array()) throw ConfigError(path + ".offsets: expected an array");
      std::vector<double> offs;
      for (std::size_t i = 0; i < it->size(); ++i) {
        if (!(*it)[i].is_number())
          throw ConfigError(path + ".offsets[" + std::to_string(i) + "]: expected a number");
        offs.push_back((*it)[i].get<double>());
      }
      return shifted(base_field(j, path), std::move(offs));
    }
  } catch (const ConfigError& e) {
    std::string msg = e.what();
    if (msg.rfind(path, 0) == 0) throw;
    throw ConfigError(path + ": " + msg);
  }
  throw ConfigError(path + ".kind: unknown kind '" + kind + "'");
}

}  // namespace fcp
