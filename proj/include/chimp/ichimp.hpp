#pragma once

// The trainable ChI network. Three pieces:
//   measure network    raw weights -> monotone capacity (ReLU increments over the lattice max)
//   integrand network  h -> o(A), no learnable weights
//   combine            y = sum_A g(A) o(A)

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "chimp/integral.hpp"
#include "chimp/measure.hpp"

namespace chimp {

/// Unconstrained raw weights, keyed by subset bitmask. Singletons carry the
/// raw densities; every subset with |A| >= 2 carries a raw increment.
/// Slot 0 (empty set) is unused and always 0.
class ChimpParams {
 public:
  explicit ChimpParams(std::size_t n);
  ChimpParams(std::size_t n, std::vector<double> raw_by_mask);

  /// Uniform initialization of every raw weight in [low, high].
  static ChimpParams uniform(std::size_t n, double low, double high, std::mt19937_64& rng);

  /// Raw weights that materialize exactly into `g` (densities g({i}), increments
  /// g(A) - max child). Requires a valid capacity.
  static ChimpParams encode(const FuzzyMeasure& g);

  std::size_t n() const { return n_; }
  std::size_t parameter_count() const { return raw_.size() - 1; }

  double raw(Subset a) const { return raw_[a]; }
  double& raw(Subset a) { return raw_[a]; }
  double raw_density(std::size_t i) const { return raw_[Subset{1} << i]; }
  std::span<const double> raw_by_mask() const { return raw_; }
  std::span<double> raw_by_mask() { return raw_; }

  /// n raw densities in source order.
  std::vector<double> raw_densities() const;
  /// 2^n - n - 1 raw increments in ascending mask order.
  std::vector<double> raw_deltas() const;

 private:
  std::size_t n_;
  std::vector<double> raw_;
};

/// Subsets with |A| >= 2 in ascending mask order (the raw_delta layout).
std::vector<Subset> higher_order_subsets(std::size_t n);

struct MaterializedMeasure {
  FuzzyMeasure g;
  std::vector<double> gmax_aux;     // g^m(A) = max over children; 0 for |A| <= 1
  std::vector<Subset> argmax_bits;  // bit i set <=> child A \ {i} attains g^m(A)

  std::size_t n() const { return g.n(); }
  /// Number of children tied at the maximum.
  int argmax_count(Subset a) const { return cardinality(argmax_bits[a]); }
};

MaterializedMeasure materialize(const ChimpParams& p);

/// Evaluation-time clip g'(A) = min(g(A), 1). Training never applies it.
FuzzyMeasure normalize_option(const MaterializedMeasure& mm);

/// Counts elementary operations: a min/max over k elements costs k,
/// max(0, .) costs 2, a subtraction costs 1.
struct OpCounter {
  std::uint64_t ops = 0;
};

struct IntegrandVector {
  std::vector<double> o;         // indexed by mask; o[0] = 0
  std::vector<double> gap;       // min_A h - max_{not A} h for proper subsets
  std::vector<Subset> min_bits;  // sources attaining min over A
  std::vector<Subset> max_bits;  // sources attaining max over the complement

  std::size_t n() const;
  /// Nonzero o(A) over proper subsets A.
  std::size_t proper_nonzero_count() const;
};

IntegrandVector integrand(Observation h, OpCounter* counter = nullptr);
void integrand_into(Observation h, IntegrandVector& out, OpCounter* counter = nullptr);

struct ForwardCache {
  std::vector<double> h;
  MaterializedMeasure measure;
  IntegrandVector integrand;
};

struct ForwardPass {
  double y = 0.0;
  ForwardCache cache;
};

ForwardPass forward(const ChimpParams& p, Observation h);

/// Same as forward() but reuses the buffers already held by `pass`.
void forward_into(const ChimpParams& p, Observation h, ForwardPass& pass);

/// Output only; cheaper than forward() when no cache is needed.
double predict(const MaterializedMeasure& mm, Observation h);

struct FlopCount {
  std::uint64_t o_cost = 0;        // (2^n - 2)(n + 3) + n
  std::uint64_t g_cost = 0;        // sum_k C(n,k)(k + 1)
  std::uint64_t g_cost_bound = 0;  // 2^n (n + 1)
  std::uint64_t dot_cost = 0;      // 2n
};

FlopCount flop_count(std::size_t n);

// Params JSON: {"n": int, "raw_density": [...], "raw_delta": {"<mask>": value, ...}}
nlohmann::json to_json(const ChimpParams& p);
ChimpParams params_from_json(const nlohmann::json& j);

}  // namespace chimp
