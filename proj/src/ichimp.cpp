#include "chimp/ichimp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace chimp {

namespace {

inline double relu(double x) { return x > 0.0 ? x : 0.0; }

void check_raw_size(std::size_t n, std::size_t size) {
  check_source_count(n);
  if (size != lattice_size(n)) {
    throw StructuralError("raw parameter array has " + std::to_string(size) +
                          " slots, expected 2^" + std::to_string(n));
  }
}

void materialize_into(const ChimpParams& p, MaterializedMeasure& mm) {
  const std::size_t n = p.n();
  const std::size_t size = lattice_size(n);
  std::vector<double> g = std::move(mm.g).release();
  g.assign(size, 0.0);
  mm.gmax_aux.assign(size, 0.0);
  mm.argmax_bits.assign(size, 0);

  // Ascending mask order visits every child (a proper subset) before its parents.
  for (Subset a = 1; a < size; ++a) {
    if (cardinality(a) == 1) {
      g[a] = relu(p.raw(a));
      continue;
    }
    double best = -std::numeric_limits<double>::infinity();
    Subset bits = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (!contains(a, i)) continue;
      const double child = g[a ^ (Subset{1} << i)];
      if (child > best) {
        best = child;
        bits = Subset{1} << i;
      } else if (child == best) {
        bits |= Subset{1} << i;
      }
    }
    mm.gmax_aux[a] = best;
    mm.argmax_bits[a] = bits;
    g[a] = best + relu(p.raw(a));
  }
  mm.g = FuzzyMeasure(n, std::move(g));
}

}  // namespace

ChimpParams::ChimpParams(std::size_t n) : n_(n) {
  check_source_count(n);
  raw_.assign(lattice_size(n), 0.0);
}

ChimpParams::ChimpParams(std::size_t n, std::vector<double> raw_by_mask)
    : n_(n), raw_(std::move(raw_by_mask)) {
  check_raw_size(n_, raw_.size());
  for (double v : raw_) {
    if (!std::isfinite(v)) throw StructuralError("raw parameters must be finite");
  }
  raw_[0] = 0.0;
}

ChimpParams ChimpParams::uniform(std::size_t n, double low, double high, std::mt19937_64& rng) {
  if (!(low <= high)) throw StructuralError("init range must satisfy low <= high");
  ChimpParams p(n);
  std::uniform_real_distribution<double> dist(low, high);
  for (Subset a = 1; a < p.raw_.size(); ++a) p.raw_[a] = dist(rng);
  return p;
}

ChimpParams ChimpParams::encode(const FuzzyMeasure& g) {
  const ValidationReport report = validate(g);
  if (!report.valid()) throw StructuralError("encode requires a valid capacity");
  ChimpParams p(g.n());
  for (Subset a = 1; a < g.size(); ++a) {
    if (cardinality(a) == 1) {
      p.raw_[a] = g[a];
      continue;
    }
    double best = 0.0;
    for (std::size_t i = 0; i < g.n(); ++i) {
      if (contains(a, i)) best = std::max(best, g[a ^ (Subset{1} << i)]);
    }
    p.raw_[a] = g[a] - best;
  }
  return p;
}

std::vector<double> ChimpParams::raw_densities() const {
  std::vector<double> out(n_);
  for (std::size_t i = 0; i < n_; ++i) out[i] = raw_density(i);
  return out;
}

std::vector<double> ChimpParams::raw_deltas() const {
  std::vector<double> out;
  for (Subset a : higher_order_subsets(n_)) out.push_back(raw_[a]);
  return out;
}

std::vector<Subset> higher_order_subsets(std::size_t n) {
  std::vector<Subset> out;
  for (Subset a = 1; a < lattice_size(n); ++a) {
    if (cardinality(a) >= 2) out.push_back(a);
  }
  return out;
}

MaterializedMeasure materialize(const ChimpParams& p) {
  MaterializedMeasure mm{FuzzyMeasure::zeros(p.n()), {}, {}};
  materialize_into(p, mm);
  return mm;
}

FuzzyMeasure normalize_option(const MaterializedMeasure& mm) {
  std::vector<double> values(mm.g.values().begin(), mm.g.values().end());
  for (double& v : values) v = std::min(v, 1.0);
  return FuzzyMeasure(mm.n(), std::move(values));
}

std::size_t IntegrandVector::n() const {
  return static_cast<std::size_t>(__builtin_ctzll(o.size()));
}

std::size_t IntegrandVector::proper_nonzero_count() const {
  std::size_t count = 0;
  for (std::size_t a = 1; a + 1 < o.size(); ++a) count += o[a] != 0.0;
  return count;
}

void integrand_into(Observation h, IntegrandVector& out, OpCounter* counter) {
  const std::size_t n = h.size();
  check_source_count(n);
  const std::size_t size = lattice_size(n);
  const Subset all = full_set(n);
  out.o.assign(size, 0.0);
  out.gap.assign(size, 0.0);
  out.min_bits.assign(size, 0);
  out.max_bits.assign(size, 0);

  std::uint64_t ops = 0;
  for (Subset a = 1; a < size; ++a) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    Subset lo_bits = 0;
    Subset hi_bits = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const Subset bit = Subset{1} << i;
      if (a & bit) {
        if (h[i] < lo) {
          lo = h[i];
          lo_bits = bit;
        } else if (h[i] == lo) {
          lo_bits |= bit;
        }
      } else {
        if (h[i] > hi) {
          hi = h[i];
          hi_bits = bit;
        } else if (h[i] == hi) {
          hi_bits |= bit;
        }
      }
      ++ops;
    }
    out.min_bits[a] = lo_bits;
    out.max_bits[a] = hi_bits;
    if (a == all) {
      out.o[a] = lo;
      continue;
    }
    out.gap[a] = lo - hi;
    out.o[a] = relu(out.gap[a]);
    ops += 3;  // subtraction + max(0, .)
  }
  if (counter) counter->ops += ops;
}

IntegrandVector integrand(Observation h, OpCounter* counter) {
  IntegrandVector out;
  integrand_into(h, out, counter);
  return out;
}

void forward_into(const ChimpParams& p, Observation h, ForwardPass& pass) {
  if (h.size() != p.n()) {
    throw StructuralError("observation has " + std::to_string(h.size()) +
                          " entries, network expects " + std::to_string(p.n()));
  }
  pass.cache.h.assign(h.begin(), h.end());
  materialize_into(p, pass.cache.measure);
  integrand_into(h, pass.cache.integrand);
  const auto g = pass.cache.measure.g.values();
  const auto& o = pass.cache.integrand.o;
  double y = 0.0;
  for (std::size_t a = 1; a < o.size(); ++a) y += g[a] * o[a];
  pass.y = y;
}

ForwardPass forward(const ChimpParams& p, Observation h) {
  ForwardPass pass{0.0, {{}, {FuzzyMeasure::zeros(p.n()), {}, {}}, {}}};
  forward_into(p, h, pass);
  return pass;
}

double predict(const MaterializedMeasure& mm, Observation h) {
  return chi_maxmin(mm.g, h);
}

FlopCount flop_count(std::size_t n) {
  check_source_count(n);
  FlopCount fc;
  const std::uint64_t size = lattice_size(n);
  fc.o_cost = (size - 2) * (n + 3) + n;
  std::uint64_t binom = 1;  // C(n, k)
  for (std::uint64_t k = 1; k <= n; ++k) {
    binom = binom * (n - k + 1) / k;
    fc.g_cost += binom * (k + 1);
  }
  fc.g_cost_bound = size * (n + 1);
  fc.dot_cost = 2 * n;
  return fc;
}

nlohmann::json to_json(const ChimpParams& p) {
  nlohmann::json deltas = nlohmann::json::object();
  for (Subset a : higher_order_subsets(p.n())) deltas[std::to_string(a)] = p.raw(a);
  return {{"n", p.n()}, {"raw_density", p.raw_densities()}, {"raw_delta", deltas}};
}

ChimpParams params_from_json(const nlohmann::json& j) {
  try {
    const auto n = j.at("n").get<std::size_t>();
    check_source_count(n);
    const auto densities = j.at("raw_density").get<std::vector<double>>();
    if (densities.size() != n) throw StructuralError("raw_density must have n entries");
    std::vector<double> raw(lattice_size(n), 0.0);
    for (std::size_t i = 0; i < n; ++i) raw[Subset{1} << i] = densities[i];
    const auto& deltas = j.at("raw_delta");
    if (!deltas.is_object()) throw StructuralError("raw_delta must be an object keyed by mask");
    std::size_t seen = 0;
    for (const auto& [key, value] : deltas.items()) {
      const unsigned long mask = std::stoul(key);
      if (mask >= raw.size() || cardinality(static_cast<Subset>(mask)) < 2) {
        throw StructuralError("raw_delta key " + key + " is not a subset with |A| >= 2");
      }
      raw[mask] = value.get<double>();
      ++seen;
    }
    if (seen != raw.size() - n - 1) {
      throw StructuralError("raw_delta must list all 2^n - n - 1 subsets");
    }
    return ChimpParams(n, std::move(raw));
  } catch (const nlohmann::json::exception& e) {
    throw StructuralError(std::string("malformed params json: ") + e.what());
  } catch (const std::logic_error& e) {
    if (dynamic_cast<const StructuralError*>(&e)) throw;
    throw StructuralError(std::string("malformed params json: ") + e.what());
  }
}

}  // namespace chimp
