#pragma once

// Slow reference implementations written straight from the definitions. They
// share nothing with the library beyond the FuzzyMeasure container.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <vector>

#include "chimp/measure.hpp"

namespace oracle {

using chimp::FuzzyMeasure;
using chimp::Subset;

inline int popcount(Subset a) {
  int c = 0;
  for (; a; a &= a - 1) ++c;
  return c;
}

inline double factorial(int k) {
  double f = 1.0;
  for (int i = 2; i <= k; ++i) f *= i;
  return f;
}

/// Random capacity: i.i.d. uniform values, closed upward under max, scaled so g(X) = scale.
inline FuzzyMeasure random_measure(std::size_t n, std::mt19937_64& rng, double scale = 1.0) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const std::size_t size = std::size_t{1} << n;
  std::vector<double> v(size, 0.0);
  for (std::size_t a = 1; a < size; ++a) v[a] = unit(rng);
  for (std::size_t a = 1; a < size; ++a) {
    for (std::size_t i = 0; i < n; ++i) {
      if (a & (std::size_t{1} << i)) v[a] = std::max(v[a], v[a & ~(std::size_t{1} << i)]);
    }
  }
  const double top = v[size - 1];
  for (auto& x : v) x = x / top * scale;
  v[size - 1] = scale;
  return FuzzyMeasure(n, v);
}

/// Random additive capacity with densities summing to `scale`.
inline FuzzyMeasure random_additive(std::size_t n, std::mt19937_64& rng, double scale = 1.0) {
  std::uniform_real_distribution<double> unit(0.1, 1.0);
  std::vector<double> d(n);
  for (auto& x : d) x = unit(rng);
  const double s = std::accumulate(d.begin(), d.end(), 0.0);
  std::vector<double> v(std::size_t{1} << n, 0.0);
  for (std::size_t a = 1; a < v.size(); ++a) {
    for (std::size_t i = 0; i < n; ++i) {
      if (a & (std::size_t{1} << i)) v[a] += d[i] / s * scale;
    }
  }
  return FuzzyMeasure(n, v);
}

inline std::vector<double> random_h(std::size_t n, std::mt19937_64& rng, double lo = 0.0, double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<double> h(n);
  for (auto& x : h) x = u(rng);
  return h;
}

/// m(A) = sum over B subset of A of (-1)^{|A \ B|} g(B).
inline std::vector<double> mobius(const FuzzyMeasure& g) {
  std::vector<double> m(g.size(), 0.0);
  for (Subset a = 0; a < g.size(); ++a) {
    for (Subset b = a;; b = (b - 1) & a) {
      m[a] += ((popcount(a) - popcount(b)) % 2 ? -1.0 : 1.0) * g[b];
      if (b == 0) break;
    }
  }
  return m;
}

/// Textbook ChI: sort descending, sum h_(i) (g(A_i) - g(A_{i-1})).
inline double choquet(const FuzzyMeasure& g, const std::vector<double>& h) {
  std::vector<std::size_t> idx(h.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return h[a] > h[b]; });
  double y = 0.0, prev = 0.0;
  Subset acc = 0;
  for (std::size_t i : idx) {
    acc |= Subset{1} << i;
    y += h[i] * (g[acc] - prev);
    prev = g[acc];
  }
  return y;
}

/// Shapley value as the average marginal contribution over all n! orders.
inline std::vector<double> shapley(const FuzzyMeasure& g) {
  const std::size_t n = g.n();
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  std::vector<double> phi(n, 0.0);
  double count = 0.0;
  do {
    Subset acc = 0;
    for (std::size_t i : perm) {
      const Subset next = acc | (Subset{1} << i);
      phi[i] += g[next] - g[acc];
      acc = next;
    }
    count += 1.0;
  } while (std::next_permutation(perm.begin(), perm.end()));
  for (auto& x : phi) x /= count;
  return phi;
}

/// Pairwise interaction index from its factorial-weighted definition.
inline double interaction(const FuzzyMeasure& g, std::size_t i, std::size_t j) {
  const int n = static_cast<int>(g.n());
  const Subset bi = Subset{1} << i, bj = Subset{1} << j;
  double total = 0.0;
  for (Subset a = 0; a < g.size(); ++a) {
    if (a & (bi | bj)) continue;
    const int k = popcount(a);
    const double w = factorial(n - k - 2) * factorial(k) / factorial(n - 1);
    total += w * (g[a | bi | bj] - g[a | bi] - g[a | bj] + g[a]);
  }
  return total;
}

/// Ordered weighted average: w_j applied to the j-th largest input.
inline double owa(std::vector<double> h, const std::vector<double>& w) {
  std::sort(h.begin(), h.end(), std::greater<>());
  double y = 0.0;
  for (std::size_t j = 0; j < h.size(); ++j) y += w[j] * h[j];
  return y;
}

/// Random nonnegative weights summing to one.
inline std::vector<double> random_simplex(std::size_t n, std::mt19937_64& rng) {
  std::exponential_distribution<double> e(1.0);
  std::vector<double> w(n);
  for (auto& x : w) x = e(rng);
  const double s = std::accumulate(w.begin(), w.end(), 0.0);
  for (auto& x : w) x /= s;
  return w;
}

}  // namespace oracle
