#pragma once

// Hand-derived n = 3 gradients of E = 1/2 (l - y)^2, written term by term.

#include <algorithm>
#include <array>
#include <vector>

#include "chimp/ichimp.hpp"
#include "chimp/training.hpp"

namespace appendix {

using chimp::ChimpParams;
using chimp::ForwardPass;

// Normalized indicator I_{max(values) = values[k]}.
inline double share(std::initializer_list<double> values, std::size_t k) {
  const std::vector<double> v(values);
  return chimp::max_derivative_weights(v)[k];
}

struct WeightGradients {
  std::array<double, 8> d_g{};    // dE/dg by mask
  std::array<double, 8> d_raw{};  // dE/d raw by mask
};

inline WeightGradients weight_gradients(const ChimpParams& p, const ForwardPass& pass, double l) {
  const auto& g = pass.cache.measure.g;
  const auto& o = pass.cache.integrand.o;
  const double e = pass.y - l;
  const double I12_1 = share({g[1], g[2]}, 0), I12_2 = share({g[1], g[2]}, 1);
  const double I13_1 = share({g[1], g[4]}, 0), I13_3 = share({g[1], g[4]}, 1);
  const double I23_2 = share({g[2], g[4]}, 0), I23_3 = share({g[2], g[4]}, 1);
  const double I123_12 = share({g[3], g[5], g[6]}, 0);
  const double I123_13 = share({g[3], g[5], g[6]}, 1);
  const double I123_23 = share({g[3], g[5], g[6]}, 2);

  WeightGradients r;
  r.d_g[7] = e * o[7];
  r.d_g[3] = e * (o[3] + o[7] * I123_12);
  r.d_g[5] = e * (o[5] + o[7] * I123_13);
  r.d_g[6] = e * (o[6] + o[7] * I123_23);
  r.d_g[1] = e * (o[1] + o[3] * I12_1 + o[5] * I13_1 + o[7] * (I123_12 * I12_1 + I123_13 * I13_1));
  r.d_g[2] = e * (o[2] + o[3] * I12_2 + o[6] * I23_2 + o[7] * (I123_12 * I12_2 + I123_23 * I23_2));
  r.d_g[4] = e * (o[4] + o[5] * I13_3 + o[6] * I23_3 + o[7] * (I123_13 * I13_3 + I123_23 * I23_3));
  for (chimp::Subset a = 1; a < 8; ++a) r.d_raw[a] = r.d_g[a] * (p.raw(a) > 0.0 ? 1.0 : 0.0);
  return r;
}

/// Input gradients for an observation without ties.
inline std::array<double, 3> input_gradients(const ForwardPass& pass, double l) {
  const auto& g = pass.cache.measure.g;
  const auto& h = pass.cache.h;
  const double e = pass.y - l;
  const double h1 = h[0], h2 = h[1], h3 = h[2];
  auto I = [](bool c) { return c ? 1.0 : 0.0; };
  // I_{o_A = gap}: the clipped difference is active.
  const double o1 = I(h1 - std::max(h2, h3) > 0), o2 = I(h2 - std::max(h1, h3) > 0);
  const double o3 = I(h3 - std::max(h1, h2) > 0), o12 = I(std::min(h1, h2) - h3 > 0);
  const double o13 = I(std::min(h1, h3) - h2 > 0), o23 = I(std::min(h2, h3) - h1 > 0);
  const double m = std::min({h1, h2, h3});

  const double d1 = e * (g[1] * o1 - g[2] * o2 * I(h1 >= h3) - g[4] * o3 * I(h1 >= h2) +
                         g[3] * o12 * I(h1 <= h2) + g[5] * o13 * I(h1 <= h3) - g[6] * o23 + g[7] * I(m == h1));
  const double d2 = e * (-g[1] * o1 * I(h2 >= h3) + g[2] * o2 - g[4] * o3 * I(h2 >= h1) +
                         g[3] * o12 * I(h2 <= h1) - g[5] * o13 + g[6] * o23 * I(h2 <= h3) + g[7] * I(m == h2));
  const double d3 = e * (-g[1] * o1 * I(h3 >= h2) - g[2] * o2 * I(h3 >= h1) + g[4] * o3 - g[3] * o12 +
                         g[5] * o13 * I(h3 <= h1) + g[6] * o23 * I(h3 <= h2) + g[7] * I(m == h3));
  return {d1, d2, d3};
}

}  // namespace appendix
