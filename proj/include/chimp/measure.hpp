#pragma once

// Fuzzy measures (capacities) over N sources, stored densely over the 2^N
// subset lattice. A subset is a bitmask: bit (i-1) set <=> x_i in A.

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

namespace chimp {

using Subset = std::uint32_t;

inline constexpr std::size_t kMaxSources = 24;

/// Thrown when inputs have the wrong shape (length, n out of range, ...).
class StructuralError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Thrown when a numeric procedure produces non-finite values.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline std::size_t lattice_size(std::size_t n) { return std::size_t{1} << n; }
inline Subset full_set(std::size_t n) { return static_cast<Subset>(lattice_size(n) - 1); }
inline int cardinality(Subset a) { return __builtin_popcount(a); }
inline bool contains(Subset a, std::size_t i) { return (a >> i) & 1u; }

/// Throws StructuralError unless 1 <= n <= kMaxSources.
void check_source_count(std::size_t n);

/// "{1,3}" style rendering with 1-based source indices.
std::string subset_name(Subset a);

class FuzzyMeasure {
 public:
  /// `values.size()` must equal 2^n. Monotonicity is not checked here; see validate().
  FuzzyMeasure(std::size_t n, std::vector<double> values);

  static FuzzyMeasure zeros(std::size_t n);

  std::size_t n() const { return n_; }
  std::size_t size() const { return values_.size(); }
  double operator[](Subset a) const { return values_[a]; }
  double at(Subset a) const { return values_.at(a); }
  double total() const { return values_.back(); }
  std::span<const double> values() const { return values_; }

  /// Moves the value buffer out, leaving the measure empty; used to recycle storage.
  std::vector<double> release() && { return std::move(values_); }

 private:
  std::size_t n_;
  std::vector<double> values_;
};

class MobiusMeasure {
 public:
  MobiusMeasure(std::size_t n, std::vector<double> coeffs);

  std::size_t n() const { return n_; }
  std::size_t size() const { return coeffs_.size(); }
  double operator[](Subset a) const { return coeffs_[a]; }
  std::span<const double> coeffs() const { return coeffs_; }

 private:
  std::size_t n_;
  std::vector<double> coeffs_;
};

// ---------------------------------------------------------------------------
// Validation

struct MonotonicityViolation {
  Subset subset;    // A
  Subset superset;  // A u {i}
  double amount;    // g(A) - g(A u {i}) > 0
};

struct ValidationOptions {
  bool require_normalized = false;  // additionally demand g(X) = 1
  double tolerance = 1e-12;         // violations up to this size become warnings
};

struct ValidationReport {
  bool boundary_ok = true;  // g(empty) == 0
  bool normalized_ok = true;
  std::vector<MonotonicityViolation> violations;
  std::vector<MonotonicityViolation> warnings;
  std::vector<Subset> bad_values;  // negative or non-finite entries

  bool valid() const {
    return boundary_ok && normalized_ok && violations.empty() && bad_values.empty();
  }
  /// Number of distinct defects; zero iff valid().
  std::size_t defect_count() const {
    return violations.size() + bad_values.size() + (boundary_ok ? 0 : 1) + (normalized_ok ? 0 : 1);
  }
};

ValidationReport validate(const FuzzyMeasure& g, const ValidationOptions& options = {});

/// Validates a raw value array; throws StructuralError when its length is not 2^n.
ValidationReport validate(std::size_t n, std::span<const double> values,
                          const ValidationOptions& options = {});

// ---------------------------------------------------------------------------
// Transforms

MobiusMeasure mobius(const FuzzyMeasure& g);

struct ZetaResult {
  FuzzyMeasure measure;
  ValidationReport report;  // the transform never rejects; defects are reported here
};

ZetaResult zeta(const MobiusMeasure& m);

/// Zeroes all coefficients of cardinality > k. Requires 1 <= k <= n.
MobiusMeasure k_truncate(const MobiusMeasure& m, std::size_t k);

// ---------------------------------------------------------------------------
// Special measures

enum class SpecialKind { max, min, mean, los };

/// `los_weights` is only read for SpecialKind::los: n nonnegative weights summing to 1,
/// w_j applied to the j-th largest input.
FuzzyMeasure make_special(SpecialKind kind, std::size_t n, std::span<const double> los_weights = {});

const char* to_string(SpecialKind kind);

// ---------------------------------------------------------------------------
// JSON: {"n": int, "values": [...]} and {"n": int, "coeffs": [...]}

nlohmann::json to_json(const FuzzyMeasure& g);
nlohmann::json to_json(const MobiusMeasure& m);
FuzzyMeasure measure_from_json(const nlohmann::json& j);
MobiusMeasure mobius_from_json(const nlohmann::json& j);

FuzzyMeasure load_measure(const std::string& path);
void save_measure(const FuzzyMeasure& g, const std::string& path);

}  // namespace chimp
