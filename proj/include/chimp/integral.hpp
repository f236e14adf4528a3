#pragma once

// Choquet integral evaluators. All four forms agree on valid capacities:
//   chi_sort               sorted difference-in-g form
//   chi_mobius             Mobius dot product with min t-norm terms
//   chi_maxmin             sum_A g(A) o(A) form used by the trainable network
//   chimp_select_forward   N! linear-convex-sum selection network

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "chimp/measure.hpp"

namespace chimp {

using Observation = std::span<const double>;

/// Descending sort of an observation. `order` holds 0-based source indices with
/// h[order[0]] >= h[order[1]] >= ...; ties keep index order. `tie_groups`
/// partitions `order` into half-open [begin, end) runs of equal values.
struct SortPermutation {
  std::vector<std::uint8_t> order;
  std::vector<std::pair<std::size_t, std::size_t>> tie_groups;

  bool has_ties() const;
};

SortPermutation sort_descending(Observation h);

/// Largest tie group that chi_sort averages explicitly; bigger groups use the
/// canonical order (every order within a tie group yields the same sum).
inline constexpr std::size_t kMaxEnumeratedTieGroup = 6;

double chi_sort(const FuzzyMeasure& g, Observation h);
double chi_mobius(const MobiusMeasure& m, Observation h);
double chi_k_additive(const MobiusMeasure& m, std::size_t k, Observation h);
double chi_maxmin(const FuzzyMeasure& g, Observation h);

inline constexpr std::size_t kMaxLcsSources = 8;

/// Weights of the N! linear convex sums, one vector per permutation, in
/// lexicographic permutation order.
struct LcsWeights {
  std::size_t n = 0;
  std::vector<std::vector<std::uint8_t>> permutations;
  std::vector<double> weights;  // permutations.size() * n, row-major

  std::size_t count() const { return weights.size(); }
  std::span<const double> row(std::size_t p) const {
    return std::span<const double>(weights).subspan(p * n, n);
  }
};

LcsWeights lcs_expand(const FuzzyMeasure& g);

/// Selection-network ChI: a unit step selector gates each LCS dot product;
/// when several sort orders are compatible (ties) their outputs are averaged.
double chimp_select_forward(const LcsWeights& lcs, Observation h);
double chimp_select_forward(const FuzzyMeasure& g, Observation h);

}  // namespace chimp
