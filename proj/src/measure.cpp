#include "chimp/measure.hpp"

#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

namespace chimp {

void check_source_count(std::size_t n) {
  if (n == 0 || n > kMaxSources) {
    throw StructuralError("number of sources must be in [1, " + std::to_string(kMaxSources) +
                          "], got " + std::to_string(n));
  }
}

std::string subset_name(Subset a) {
  std::string out = "{";
  bool first = true;
  for (std::size_t i = 0; i < 32; ++i) {
    if (!contains(a, i)) continue;
    if (!first) out += ',';
    out += std::to_string(i + 1);
    first = false;
  }
  return out + "}";
}

namespace {

void check_lattice_length(std::size_t n, std::size_t length, const char* what) {
  check_source_count(n);
  if (length != lattice_size(n)) {
    std::ostringstream msg;
    msg << what << " length " << length << " does not match 2^" << n << " = " << lattice_size(n);
    throw StructuralError(msg.str());
  }
}

}  // namespace

FuzzyMeasure::FuzzyMeasure(std::size_t n, std::vector<double> values)
    : n_(n), values_(std::move(values)) {
  check_lattice_length(n_, values_.size(), "measure");
}

FuzzyMeasure FuzzyMeasure::zeros(std::size_t n) {
  check_source_count(n);
  return FuzzyMeasure(n, std::vector<double>(lattice_size(n), 0.0));
}

MobiusMeasure::MobiusMeasure(std::size_t n, std::vector<double> coeffs)
    : n_(n), coeffs_(std::move(coeffs)) {
  check_lattice_length(n_, coeffs_.size(), "mobius");
}

ValidationReport validate(std::size_t n, std::span<const double> values,
                          const ValidationOptions& options) {
  check_lattice_length(n, values.size(), "measure");
  ValidationReport report;
  report.boundary_ok = values[0] == 0.0;
  for (Subset a = 0; a < values.size(); ++a) {
    if (!std::isfinite(values[a]) || values[a] < 0.0) report.bad_values.push_back(a);
  }
  // Single-element supersets are sufficient: N * 2^(N-1) comparisons.
  for (Subset a = 0; a < values.size(); ++a) {
    for (std::size_t i = 0; i < n; ++i) {
      if (contains(a, i)) continue;
      const Subset b = a | (Subset{1} << i);
      const double excess = values[a] - values[b];
      if (!(excess > 0.0)) continue;
      if (excess > options.tolerance) {
        report.violations.push_back({a, b, excess});
      } else {
        report.warnings.push_back({a, b, excess});
      }
    }
  }
  if (options.require_normalized) {
    report.normalized_ok = std::abs(values.back() - 1.0) <= options.tolerance;
  }
  return report;
}

ValidationReport validate(const FuzzyMeasure& g, const ValidationOptions& options) {
  return validate(g.n(), g.values(), options);
}

MobiusMeasure mobius(const FuzzyMeasure& g) {
  // In-place subset-difference transform, O(n 2^n).
  std::vector<double> m(g.values().begin(), g.values().end());
  for (std::size_t i = 0; i < g.n(); ++i) {
    const Subset bit = Subset{1} << i;
    for (Subset a = 0; a < m.size(); ++a) {
      if (a & bit) m[a] -= m[a ^ bit];
    }
  }
  return MobiusMeasure(g.n(), std::move(m));
}

ZetaResult zeta(const MobiusMeasure& m) {
  std::vector<double> g(m.coeffs().begin(), m.coeffs().end());
  for (std::size_t i = 0; i < m.n(); ++i) {
    const Subset bit = Subset{1} << i;
    for (Subset a = 0; a < g.size(); ++a) {
      if (a & bit) g[a] += g[a ^ bit];
    }
  }
  FuzzyMeasure measure(m.n(), std::move(g));
  ValidationReport report = validate(measure);
  return {std::move(measure), std::move(report)};
}

MobiusMeasure k_truncate(const MobiusMeasure& m, std::size_t k) {
  if (k < 1 || k > m.n()) {
    throw StructuralError("k must be in [1, " + std::to_string(m.n()) + "], got " +
                          std::to_string(k));
  }
  std::vector<double> out(m.coeffs().begin(), m.coeffs().end());
  for (Subset a = 0; a < out.size(); ++a) {
    if (static_cast<std::size_t>(cardinality(a)) > k) out[a] = 0.0;
  }
  return MobiusMeasure(m.n(), std::move(out));
}

FuzzyMeasure make_special(SpecialKind kind, std::size_t n, std::span<const double> los_weights) {
  check_source_count(n);
  const std::size_t size = lattice_size(n);
  std::vector<double> values(size, 0.0);
  switch (kind) {
    case SpecialKind::max:
      for (Subset a = 1; a < size; ++a) values[a] = 1.0;
      break;
    case SpecialKind::min:
      values[size - 1] = 1.0;
      break;
    case SpecialKind::mean:
      for (Subset a = 1; a < size; ++a) {
        values[a] = static_cast<double>(cardinality(a)) / static_cast<double>(n);
      }
      values[size - 1] = 1.0;
      break;
    case SpecialKind::los: {
      if (los_weights.size() != n) {
        throw StructuralError("los weights: expected " + std::to_string(n) + " weights, got " +
                              std::to_string(los_weights.size()));
      }
      double sum = 0.0;
      for (double w : los_weights) {
        if (!std::isfinite(w) || w < 0.0) throw StructuralError("los weights must be nonnegative");
        sum += w;
      }
      if (std::abs(sum - 1.0) > 1e-9) {
        throw StructuralError("los weights must sum to 1, got " + std::to_string(sum));
      }
      std::vector<double> prefix(n + 1, 0.0);
      std::partial_sum(los_weights.begin(), los_weights.end(), prefix.begin() + 1);
      for (Subset a = 1; a < size; ++a) values[a] = prefix[cardinality(a)];
      break;
    }
  }
  return FuzzyMeasure(n, std::move(values));
}

const char* to_string(SpecialKind kind) {
  switch (kind) {
    case SpecialKind::max: return "max";
    case SpecialKind::min: return "min";
    case SpecialKind::mean: return "mean";
    case SpecialKind::los: return "los";
  }
  return "?";
}

nlohmann::json to_json(const FuzzyMeasure& g) {
  return {{"n", g.n()}, {"values", std::vector<double>(g.values().begin(), g.values().end())}};
}

nlohmann::json to_json(const MobiusMeasure& m) {
  return {{"n", m.n()}, {"coeffs", std::vector<double>(m.coeffs().begin(), m.coeffs().end())}};
}

namespace {

std::pair<std::size_t, std::vector<double>> read_lattice(const nlohmann::json& j, const char* key) {
  if (!j.is_object() || !j.contains("n") || !j.contains(key)) {
    throw StructuralError(std::string("expected an object with \"n\" and \"") + key + "\"");
  }
  try {
    return {j.at("n").get<std::size_t>(), j.at(key).get<std::vector<double>>()};
  } catch (const nlohmann::json::exception& e) {
    throw StructuralError(std::string("malformed measure json: ") + e.what());
  }
}

}  // namespace

FuzzyMeasure measure_from_json(const nlohmann::json& j) {
  auto [n, values] = read_lattice(j, "values");
  return FuzzyMeasure(n, std::move(values));
}

MobiusMeasure mobius_from_json(const nlohmann::json& j) {
  auto [n, coeffs] = read_lattice(j, "coeffs");
  return MobiusMeasure(n, std::move(coeffs));
}

FuzzyMeasure load_measure(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open measure file: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw StructuralError("cannot parse " + path + ": " + e.what());
  }
  return measure_from_json(j);
}

void save_measure(const FuzzyMeasure& g, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write measure file: " + path);
  out << to_json(g).dump(2) << '\n';
}

}  // namespace chimp
