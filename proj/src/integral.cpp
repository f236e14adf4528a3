#include "chimp/integral.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace chimp {

namespace {

void check_dimension(std::size_t n, Observation h) {
  if (h.size() != n) {
    throw StructuralError("observation has " + std::to_string(h.size()) +
                          " entries, measure expects " + std::to_string(n));
  }
}

double sorted_sum(const FuzzyMeasure& g, Observation h, std::span<const std::uint8_t> order) {
  double sum = 0.0;
  Subset a = 0;
  double previous = 0.0;
  for (std::uint8_t i : order) {
    a |= Subset{1} << i;
    const double current = g[a];
    sum += h[i] * (current - previous);
    previous = current;
  }
  return sum;
}

}  // namespace

bool SortPermutation::has_ties() const {
  return std::any_of(tie_groups.begin(), tie_groups.end(),
                     [](const auto& grp) { return grp.second - grp.first > 1; });
}

SortPermutation sort_descending(Observation h) {
  SortPermutation sp;
  sp.order.resize(h.size());
  std::iota(sp.order.begin(), sp.order.end(), std::uint8_t{0});
  std::stable_sort(sp.order.begin(), sp.order.end(),
                   [&](std::uint8_t a, std::uint8_t b) { return h[a] > h[b]; });
  std::size_t begin = 0;
  for (std::size_t j = 1; j <= h.size(); ++j) {
    if (j == h.size() || h[sp.order[j]] != h[sp.order[begin]]) {
      sp.tie_groups.emplace_back(begin, j);
      begin = j;
    }
  }
  return sp;
}

double chi_sort(const FuzzyMeasure& g, Observation h) {
  check_dimension(g.n(), h);
  SortPermutation sp = sort_descending(h);

  std::vector<std::pair<std::size_t, std::size_t>> groups;
  for (const auto& grp : sp.tie_groups) {
    const std::size_t len = grp.second - grp.first;
    if (len > 1 && len <= kMaxEnumeratedTieGroup) groups.push_back(grp);
  }
  if (groups.empty()) return sorted_sum(g, h, sp.order);

  // Average over the distinct orders inside each tie group (odometer over groups).
  std::vector<std::uint8_t> order = sp.order;
  double total = 0.0;
  std::size_t count = 0;
  while (true) {
    total += sorted_sum(g, h, order);
    ++count;
    std::size_t k = groups.size();
    while (k > 0) {
      --k;
      auto first = order.begin() + static_cast<std::ptrdiff_t>(groups[k].first);
      auto last = order.begin() + static_cast<std::ptrdiff_t>(groups[k].second);
      if (std::next_permutation(first, last)) break;
      if (k == 0) return total / static_cast<double>(count);
    }
  }
}

double chi_mobius(const MobiusMeasure& m, Observation h) {
  return chi_k_additive(m, m.n(), h);
}

double chi_k_additive(const MobiusMeasure& m, std::size_t k, Observation h) {
  check_dimension(m.n(), h);
  if (k < 1 || k > m.n()) {
    throw StructuralError("k must be in [1, " + std::to_string(m.n()) + "], got " +
                          std::to_string(k));
  }
  // minima[A] = min_{i in A} h_i, built from A without its lowest bit.
  std::vector<double> minima(m.size(), std::numeric_limits<double>::infinity());
  double sum = 0.0;
  for (Subset a = 1; a < m.size(); ++a) {
    const Subset low = a & (~a + 1);
    const std::size_t i = static_cast<std::size_t>(__builtin_ctz(a));
    minima[a] = std::min(minima[a ^ low], h[i]);
    if (static_cast<std::size_t>(cardinality(a)) <= k) sum += m[a] * minima[a];
  }
  return sum;
}

double chi_maxmin(const FuzzyMeasure& g, Observation h) {
  check_dimension(g.n(), h);
  const Subset all = full_set(g.n());
  double sum = 0.0;
  for (Subset a = 1; a <= all; ++a) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < g.n(); ++i) {
      if (contains(a, i)) {
        lo = std::min(lo, h[i]);
      } else {
        hi = std::max(hi, h[i]);
      }
    }
    const double o = a == all ? lo : std::max(0.0, lo - hi);
    sum += g[a] * o;
  }
  return sum;
}

LcsWeights lcs_expand(const FuzzyMeasure& g) {
  const std::size_t n = g.n();
  if (n > kMaxLcsSources) {
    throw StructuralError("LCS expansion needs n! weight vectors; n = " + std::to_string(n) +
                          " exceeds the limit of " + std::to_string(kMaxLcsSources));
  }
  LcsWeights lcs;
  lcs.n = n;
  std::vector<std::uint8_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::uint8_t{0});
  do {
    lcs.permutations.push_back(perm);
    Subset a = 0;
    double previous = 0.0;
    for (std::uint8_t i : perm) {
      a |= Subset{1} << i;
      lcs.weights.push_back(g[a] - previous);
      previous = g[a];
    }
  } while (std::next_permutation(perm.begin(), perm.end()));
  return lcs;
}

double chimp_select_forward(const LcsWeights& lcs, Observation h) {
  check_dimension(lcs.n, h);
  double total = 0.0;
  std::size_t selected = 0;
  for (std::size_t p = 0; p < lcs.permutations.size(); ++p) {
    const auto& perm = lcs.permutations[p];
    // Product of unit steps u(h_pi(j) - h_pi(j+1)).
    bool gate = true;
    for (std::size_t j = 0; j + 1 < perm.size() && gate; ++j) gate = h[perm[j]] >= h[perm[j + 1]];
    if (!gate) continue;
    const auto w = lcs.row(p);
    double dot = 0.0;
    for (std::size_t j = 0; j < perm.size(); ++j) dot += h[perm[j]] * w[j];
    total += dot;
    ++selected;
  }
  return total / static_cast<double>(selected);
}

double chimp_select_forward(const FuzzyMeasure& g, Observation h) {
  return chimp_select_forward(lcs_expand(g), h);
}

}  // namespace chimp
