#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "chimp/dataset.hpp"
#include "chimp/ichimp.hpp"

namespace chimp {

enum class BatchMode { per_sample, full_batch };

struct TrainConfig {
  double learning_rate = 1e-3;
  std::size_t epochs = 1000;
  BatchMode batch_mode = BatchMode::per_sample;
  double init_low = 0.1;
  double init_high = 0.2;
  std::uint64_t seed = 0;
  std::size_t trials = 20;

  /// Throws StructuralError on a non-positive learning rate or an inverted init range.
  void check() const;
};

const char* to_string(BatchMode mode);
BatchMode batch_mode_from_string(const std::string& text);

/// Gradients of E = 1/2 (l - y)^2 for a single observation. Parameter
/// gradients are keyed by subset mask like ChimpParams.
struct GradientBundle {
  std::size_t n = 0;
  std::vector<double> d_raw;      // dE/d raw(A); slot 0 unused
  std::vector<double> d_measure;  // dE/d g(A) through the lattice
  std::vector<double> d_inputs;   // dE/d h_i (filled by backward_inputs)
  double loss = 0.0;

  double d_raw_density(std::size_t i) const { return d_raw[Subset{1} << i]; }
  std::vector<double> d_raw_densities() const;
  std::vector<double> d_raw_deltas() const;
};

/// E = 1/2 sum_k (l_k - y_k)^2.
double loss(std::span<const double> labels, std::span<const double> outputs);

/// Mean squared error (no 1/2 factor).
double mse(std::span<const double> labels, std::span<const double> outputs);

/// Normalized indicators I_i = J_i / sum J for f = max(values); ties split equally.
std::vector<double> max_derivative_weights(std::span<const double> values);
std::vector<double> min_derivative_weights(std::span<const double> values);

/// Chain rule through the measure lattice:
///   dE/dg(A) = e * sum_{C >= A} o(C) * w(C -> A)
/// where w(C -> A) sums, over every descending argmax chain from C to A, the
/// product of normalized g^m indicators. Supersets are accumulated in
/// ascending mask order. Throws std::logic_error when `pass` was computed for
/// a different observation.
GradientBundle backward_params(const ChimpParams& p, Observation h, double label,
                               const ForwardPass& pass);

/// dE/dh_i = e * sum_A g(A) do(A)/dh_i.
std::vector<double> backward_inputs(const ChimpParams& p, Observation h, double label,
                                    const ForwardPass& pass);

struct FitResult {
  ChimpParams params;
  std::vector<double> history;  // history[0]: initial training MSE, history[e]: after epoch e
};

/// Initializes raw weights uniformly in [init_low, init_high] from cfg.seed and
/// runs cfg.epochs passes of gradient descent over `data` in stored order.
/// Throws NumericError naming the epoch and sample when the loss turns non-finite.
FitResult sgd_fit(const Dataset& data, const TrainConfig& cfg);
FitResult sgd_fit(const Dataset& data, const TrainConfig& cfg, ChimpParams initial);

void write_history_csv(std::span<const double> history, std::ostream& out);

struct GradCheckCoordinate {
  enum class Kind { param, input };
  Kind kind = Kind::param;
  std::size_t index = 0;  // subset mask for params, source index for inputs
};

struct GradCheckResult {
  double max_rel_error = 0.0;
  GradCheckCoordinate worst;
  std::size_t checked = 0;
  std::vector<GradCheckCoordinate> skipped;  // coordinates within eps of a kink or tie
};

/// Denominator floor: central differences carry roundoff near 1e-10, which
/// would swamp the relative error of a gradient that is exactly zero.
inline constexpr double kGradCheckFloor = 1e-4;

/// Central differences on every raw parameter and every input. The relative
/// error of a coordinate is |a - f| / max(|a|, |f|, kGradCheckFloor).
GradCheckResult grad_check(const ChimpParams& p, Observation h, double label, double eps = 1e-6);

namespace detail {

/// Reverse-mode accumulation of dE/d raw into `d_raw` (O(n 2^n)); used by the
/// training loop. Agrees with backward_params up to rounding.
void accumulate_param_gradient(const ChimpParams& p, const ForwardPass& pass, double error,
                               std::span<double> d_raw, std::vector<double>& scratch);

}  // namespace detail

}  // namespace chimp
