#include "chimp/training.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <sstream>

namespace chimp {

void TrainConfig::check() const {
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
    throw StructuralError("learning rate must be positive");
  }
  if (!(init_low <= init_high)) throw StructuralError("init_low must not exceed init_high");
}

const char* to_string(BatchMode mode) {
  return mode == BatchMode::per_sample ? "per-sample" : "full-batch";
}

BatchMode batch_mode_from_string(const std::string& text) {
  if (text == "per-sample" || text == "sgd") return BatchMode::per_sample;
  if (text == "full-batch" || text == "batch") return BatchMode::full_batch;
  throw StructuralError("unknown batch mode '" + text + "'");
}

std::vector<double> GradientBundle::d_raw_densities() const {
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = d_raw_density(i);
  return out;
}

std::vector<double> GradientBundle::d_raw_deltas() const {
  std::vector<double> out;
  for (Subset a : higher_order_subsets(n)) out.push_back(d_raw[a]);
  return out;
}

namespace {

void check_lengths(std::span<const double> labels, std::span<const double> outputs) {
  if (labels.size() != outputs.size()) {
    throw StructuralError("labels and outputs differ in length (" + std::to_string(labels.size()) +
                          " vs " + std::to_string(outputs.size()) + ")");
  }
}

template <typename Better>
std::vector<double> extremum_weights(std::span<const double> values, Better better) {
  if (values.empty()) throw StructuralError("derivative weights of an empty list");
  double best = values[0];
  for (double v : values) {
    if (better(v, best)) best = v;
  }
  std::vector<double> out(values.size(), 0.0);
  const auto hits = static_cast<double>(std::count(values.begin(), values.end(), best));
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (values[i] == best) out[i] = 1.0 / hits;
  }
  return out;
}

void check_cache(const ChimpParams& p, Observation h, const ForwardPass& pass) {
  if (h.size() != p.n() || pass.cache.h.size() != h.size() ||
      !std::equal(h.begin(), h.end(), pass.cache.h.begin()) || pass.cache.measure.n() != p.n()) {
    throw std::logic_error("forward cache does not belong to this (params, observation) pair");
  }
}

inline double relu_slope(double raw) { return raw > 0.0 ? 1.0 : 0.0; }

}  // namespace

double loss(std::span<const double> labels, std::span<const double> outputs) {
  check_lengths(labels, outputs);
  double sum = 0.0;
  for (std::size_t k = 0; k < labels.size(); ++k) {
    const double d = labels[k] - outputs[k];
    sum += d * d;
  }
  return 0.5 * sum;
}

double mse(std::span<const double> labels, std::span<const double> outputs) {
  check_lengths(labels, outputs);
  if (labels.empty()) return 0.0;
  return 2.0 * loss(labels, outputs) / static_cast<double>(labels.size());
}

std::vector<double> max_derivative_weights(std::span<const double> values) {
  return extremum_weights(values, [](double a, double b) { return a > b; });
}

std::vector<double> min_derivative_weights(std::span<const double> values) {
  return extremum_weights(values, [](double a, double b) { return a < b; });
}

GradientBundle backward_params(const ChimpParams& p, Observation h, double label,
                               const ForwardPass& pass) {
  check_cache(p, h, pass);
  const std::size_t n = p.n();
  const std::size_t size = lattice_size(n);
  const Subset all = full_set(n);
  const auto& mm = pass.cache.measure;
  const auto& o = pass.cache.integrand.o;
  const double e = pass.y - label;

  GradientBundle grad;
  grad.n = n;
  grad.loss = 0.5 * e * e;
  grad.d_raw.assign(size, 0.0);
  grad.d_measure.assign(size, 0.0);

  std::vector<double> w(size, 0.0);  // w[C] = path weight C -> A for the current A
  for (Subset a = 1; a < size; ++a) {
    const Subset comp = all & ~a;
    w[a] = 1.0;
    double acc = o[a];
    // Supersets C = A | s, s a nonempty subset of the complement, ascending.
    for (Subset s = (0u - comp) & comp; s != 0; s = (s - comp) & comp) {
      const Subset c = a | s;
      const double share = 1.0 / static_cast<double>(mm.argmax_count(c));
      double wc = 0.0;
      for (Subset bits = mm.argmax_bits[c] & ~a; bits != 0; bits &= bits - 1) {
        const Subset bit = bits & (~bits + 1);
        wc += w[c ^ bit] * share;
      }
      w[c] = wc;
      if (o[c] != 0.0) acc += o[c] * wc;
    }
    grad.d_measure[a] = e * acc;
    grad.d_raw[a] = grad.d_measure[a] * relu_slope(p.raw(a));
  }
  return grad;
}

std::vector<double> backward_inputs(const ChimpParams& p, Observation h, double label,
                                    const ForwardPass& pass) {
  check_cache(p, h, pass);
  const std::size_t n = p.n();
  const Subset all = full_set(n);
  const auto g = pass.cache.measure.g.values();
  const auto& in = pass.cache.integrand;
  const double e = pass.y - label;

  std::vector<double> d(n, 0.0);
  for (Subset a = 1; a <= all; ++a) {
    double slope = 1.0;  // d o(A) / d gap(A)
    if (a != all) {
      // o = max(0, gap); at gap == 0 both branches attain the max.
      slope = in.gap[a] > 0.0 ? 1.0 : (in.gap[a] == 0.0 ? 0.5 : 0.0);
      if (slope == 0.0) continue;
    }
    const double lo_share = 1.0 / cardinality(in.min_bits[a]);
    for (std::size_t i = 0; i < n; ++i) {
      if (contains(in.min_bits[a], i)) d[i] += g[a] * slope * lo_share;
    }
    if (a == all) continue;
    const double hi_share = 1.0 / cardinality(in.max_bits[a]);
    for (std::size_t i = 0; i < n; ++i) {
      if (contains(in.max_bits[a], i)) d[i] -= g[a] * slope * hi_share;
    }
  }
  for (double& v : d) v *= e;
  return d;
}

namespace detail {

void accumulate_param_gradient(const ChimpParams& p, const ForwardPass& pass, double error,
                               std::span<double> d_raw, std::vector<double>& scratch) {
  const auto& mm = pass.cache.measure;
  const auto& o = pass.cache.integrand.o;
  const std::size_t size = o.size();
  scratch.assign(o.begin(), o.end());
  for (Subset a = static_cast<Subset>(size - 1); a >= 1; --a) {
    const double up = scratch[a];
    if (up == 0.0 || cardinality(a) < 2) continue;
    const double share = up / static_cast<double>(mm.argmax_count(a));
    for (Subset bits = mm.argmax_bits[a]; bits != 0; bits &= bits - 1) {
      scratch[a ^ (bits & (~bits + 1))] += share;
    }
  }
  for (Subset a = 1; a < size; ++a) {
    if (p.raw(a) > 0.0) d_raw[a] += error * scratch[a];
  }
}

}  // namespace detail

namespace {

double training_mse(const ChimpParams& p, const Dataset& data) {
  const MaterializedMeasure mm = materialize(p);
  double sum = 0.0;
  for (std::size_t k = 0; k < data.size(); ++k) {
    const double d = predict(mm, data.row(k)) - data.label(k);
    sum += d * d;
  }
  return data.empty() ? 0.0 : sum / static_cast<double>(data.size());
}

[[noreturn]] void numeric_failure(std::size_t epoch, std::size_t sample, double value) {
  std::ostringstream msg;
  msg << "non-finite loss at epoch " << epoch << ", sample " << sample << " (output " << value << ")";
  throw NumericError(msg.str());
}

}  // namespace

FitResult sgd_fit(const Dataset& data, const TrainConfig& cfg) {
  cfg.check();
  std::mt19937_64 rng(cfg.seed);
  return sgd_fit(data, cfg, ChimpParams::uniform(data.n(), cfg.init_low, cfg.init_high, rng));
}

FitResult sgd_fit(const Dataset& data, const TrainConfig& cfg, ChimpParams params) {
  cfg.check();
  if (params.n() != data.n()) {
    throw StructuralError("initial params have n = " + std::to_string(params.n()) +
                          " but the dataset has n = " + std::to_string(data.n()));
  }
  FitResult result{std::move(params), {}};
  ChimpParams& p = result.params;
  result.history.reserve(cfg.epochs + 1);
  result.history.push_back(training_mse(p, data));

  ForwardPass pass = forward(p, std::vector<double>(data.n(), 0.0));
  std::vector<double> grad(lattice_size(data.n()), 0.0);
  std::vector<double> scratch;
  auto raw = p.raw_by_mask();

  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    if (cfg.batch_mode == BatchMode::full_batch) std::fill(grad.begin(), grad.end(), 0.0);
    for (std::size_t k = 0; k < data.size(); ++k) {
      forward_into(p, data.row(k), pass);
      const double e = pass.y - data.label(k);
      if (!std::isfinite(e)) numeric_failure(epoch, k, pass.y);
      if (cfg.batch_mode == BatchMode::per_sample) {
        std::fill(grad.begin(), grad.end(), 0.0);
        detail::accumulate_param_gradient(p, pass, e, grad, scratch);
        for (std::size_t a = 1; a < raw.size(); ++a) raw[a] -= cfg.learning_rate * grad[a];
      } else {
        detail::accumulate_param_gradient(p, pass, e, grad, scratch);
      }
    }
    if (cfg.batch_mode == BatchMode::full_batch) {
      for (std::size_t a = 1; a < raw.size(); ++a) raw[a] -= cfg.learning_rate * grad[a];
    }
    const double epoch_mse = training_mse(p, data);
    if (!std::isfinite(epoch_mse)) numeric_failure(epoch, data.size(), epoch_mse);
    result.history.push_back(epoch_mse);
  }
  return result;
}

void write_history_csv(std::span<const double> history, std::ostream& out) {
  out << "epoch,train_mse\n";
  for (std::size_t e = 0; e < history.size(); ++e) out << e << ',' << format_double(history[e]) << '\n';
}

namespace {

// Everything that selects a linear piece of the network around (p, h).
std::vector<std::int64_t> activity_signature(const ChimpParams& p, const ForwardPass& pass) {
  const auto& mm = pass.cache.measure;
  const auto& in = pass.cache.integrand;
  std::vector<std::int64_t> sig;
  sig.reserve(mm.argmax_bits.size() * 5);
  for (Subset a = 1; a < mm.argmax_bits.size(); ++a) {
    const double r = p.raw(a);
    sig.push_back((r > 0.0) - (r < 0.0));
    sig.push_back(mm.argmax_bits[a]);
    sig.push_back(in.min_bits[a]);
    sig.push_back(in.max_bits[a]);
    sig.push_back((in.gap[a] > 0.0) - (in.gap[a] < 0.0));
  }
  return sig;
}

double relative_error(double analytic, double numeric) {
  const double denom = std::max({std::abs(analytic), std::abs(numeric), kGradCheckFloor});
  return std::abs(analytic - numeric) / denom;
}

}  // namespace

GradCheckResult grad_check(const ChimpParams& p, Observation h, double label, double eps) {
  if (!(eps > 0.0) || !std::isfinite(eps)) throw StructuralError("grad_check requires eps > 0");
  const ForwardPass base = forward(p, h);
  const GradientBundle grad = backward_params(p, h, label, base);
  const std::vector<double> d_inputs = backward_inputs(p, h, label, base);
  const auto base_sig = activity_signature(p, base);

  GradCheckResult result;
  auto record = [&](GradCheckCoordinate coord, double analytic, double numeric) {
    const double err = relative_error(analytic, numeric);
    if (result.checked == 0 || err > result.max_rel_error) {
      result.max_rel_error = err;
      result.worst = coord;
    }
    ++result.checked;
  };

  ChimpParams probe = p;
  for (Subset a = 1; a < lattice_size(p.n()); ++a) {
    const GradCheckCoordinate coord{GradCheckCoordinate::Kind::param, a};
    const double saved = probe.raw(a);
    probe.raw(a) = saved + eps;
    const ForwardPass plus = forward(probe, h);
    const bool plus_same = activity_signature(probe, plus) == base_sig;
    probe.raw(a) = saved - eps;
    const ForwardPass minus = forward(probe, h);
    const bool minus_same = activity_signature(probe, minus) == base_sig;
    probe.raw(a) = saved;
    // The sign entry of the probed coordinate itself flips when it crosses 0.
    if (!plus_same || !minus_same || saved == 0.0) {
      result.skipped.push_back(coord);
      continue;
    }
    const double ep = 0.5 * (plus.y - label) * (plus.y - label);
    const double em = 0.5 * (minus.y - label) * (minus.y - label);
    record(coord, grad.d_raw[a], (ep - em) / (2.0 * eps));
  }

  std::vector<double> hp(h.begin(), h.end());
  for (std::size_t i = 0; i < h.size(); ++i) {
    const GradCheckCoordinate coord{GradCheckCoordinate::Kind::input, i};
    const bool tied = std::count(h.begin(), h.end(), h[i]) > 1;
    hp[i] = h[i] + eps;
    const ForwardPass plus = forward(p, hp);
    const bool plus_same = activity_signature(p, plus) == base_sig;
    hp[i] = h[i] - eps;
    const ForwardPass minus = forward(p, hp);
    const bool minus_same = activity_signature(p, minus) == base_sig;
    hp[i] = h[i];
    if (tied || !plus_same || !minus_same) {
      result.skipped.push_back(coord);
      continue;
    }
    const double ep = 0.5 * (plus.y - label) * (plus.y - label);
    const double em = 0.5 * (minus.y - label) * (minus.y - label);
    record(coord, d_inputs[i], (ep - em) / (2.0 * eps));
  }
  return result;
}

}  // namespace chimp
