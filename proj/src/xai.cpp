#include "chimp/xai.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <sstream>
#include <unordered_map>

namespace chimp {

namespace {

void require_valid(const FuzzyMeasure& g) {
  const ValidationReport report = validate(g);
  if (!report.valid()) {
    throw StructuralError("XAI indices require a valid capacity (" +
                          std::to_string(report.defect_count()) + " defects)");
  }
}

double binomial(std::size_t n, std::size_t k) {
  double b = 1.0;
  for (std::size_t j = 1; j <= k; ++j) b = b * static_cast<double>(n - k + j) / static_cast<double>(j);
  return b;
}

double factorial(std::size_t n) {
  double f = 1.0;
  for (std::size_t j = 2; j <= n; ++j) f *= static_cast<double>(j);
  return f;
}

double rms_interior(const FuzzyMeasure& g, double scale, const std::vector<double>& target) {
  const std::size_t interior = g.size() - 2;
  if (interior == 0) return 0.0;
  double sum = 0.0;
  for (Subset a = 1; a + 1 < g.size(); ++a) {
    const double d = g[a] * scale - target[a];
    sum += d * d;
  }
  return std::sqrt(sum / static_cast<double>(interior));
}

// Visits every descending order compatible with h (all orders of each tie
// group), passing the walk and its equal share 1 / count.
template <typename Fn>
void for_each_compatible_walk(Observation h, Fn&& fn) {
  const SortPermutation sp = sort_descending(h);
  double count = 1.0;
  for (const auto& [b, e] : sp.tie_groups) count *= factorial(e - b);
  if (count > static_cast<double>(kMaxCompatibleWalks)) {
    throw StructuralError("observation has ties admitting " + std::to_string(count) +
                          " walks; limit is " + std::to_string(kMaxCompatibleWalks));
  }
  const double share = 1.0 / count;
  Walk walk = sp.order;
  while (true) {
    fn(walk, share);
    std::size_t k = sp.tie_groups.size();
    bool advanced = false;
    while (k > 0) {
      --k;
      const auto [b, e] = sp.tie_groups[k];
      if (std::next_permutation(walk.begin() + static_cast<std::ptrdiff_t>(b),
                                walk.begin() + static_cast<std::ptrdiff_t>(e))) {
        advanced = true;
        break;
      }
    }
    if (!advanced) return;
  }
}

std::string walk_key(const Walk& walk) { return std::string(walk.begin(), walk.end()); }

std::string walk_name(const Walk& walk) {
  std::string out;
  for (std::size_t j = 0; j < walk.size(); ++j) {
    if (j) out += '>';
    out += std::to_string(walk[j] + 1);
  }
  return out;
}

nlohmann::json matrix_json(const std::vector<std::vector<double>>& m) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& row : m) {
    nlohmann::json r = nlohmann::json::array();
    for (double v : row) {
      if (std::isnan(v)) {
        r.push_back(nullptr);
      } else {
        r.push_back(v);
      }
    }
    out.push_back(r);
  }
  return out;
}

nlohmann::json distances_json(const OperatorDistances& d) {
  return {{"max", d.max}, {"min", d.min}, {"mean", d.mean}, {"los", d.los}};
}

}  // namespace

std::vector<double> shapley(const FuzzyMeasure& g) {
  require_valid(g);
  const std::size_t n = g.n();
  // (n-|A|-1)! |A|! / n! = 1 / (n C(n-1, |A|))
  std::vector<double> coeff(n);
  for (std::size_t a = 0; a < n; ++a) coeff[a] = 1.0 / (static_cast<double>(n) * binomial(n - 1, a));
  std::vector<double> phi(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const Subset bit = Subset{1} << i;
    for (Subset a = 0; a < g.size(); ++a) {
      if (a & bit) continue;
      phi[i] += coeff[cardinality(a)] * (g[a | bit] - g[a]);
    }
  }
  return phi;
}

std::vector<std::vector<double>> interaction(const FuzzyMeasure& g) {
  require_valid(g);
  const std::size_t n = g.n();
  if (n < 2) throw StructuralError("interaction index needs at least two sources");
  // (n-|A|-2)! |A|! / (n-1)! = 1 / ((n-1) C(n-2, |A|))
  std::vector<double> coeff(n - 1);
  for (std::size_t a = 0; a + 1 < n; ++a) {
    coeff[a] = 1.0 / (static_cast<double>(n - 1) * binomial(n - 2, a));
  }
  std::vector<std::vector<double>> out(n, std::vector<double>(n, std::numeric_limits<double>::quiet_NaN()));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const Subset bi = Subset{1} << i;
      const Subset bj = Subset{1} << j;
      double sum = 0.0;
      for (Subset a = 0; a < g.size(); ++a) {
        if (a & (bi | bj)) continue;
        sum += coeff[cardinality(a)] * (g[a | bi | bj] - g[a | bi] - g[a | bj] + g[a]);
      }
      out[i][j] = out[j][i] = sum;
    }
  }
  return out;
}

OperatorDistances operator_distances(const FuzzyMeasure& g, DistanceScale scale) {
  require_valid(g);
  const std::size_t n = g.n();
  double factor = 1.0;
  if (scale == DistanceScale::normalized) {
    if (!(g.total() > 0.0)) throw StructuralError("cannot normalize a measure with g(X) = 0");
    factor = 1.0 / g.total();
  }
  auto target = [&](SpecialKind kind) {
    const FuzzyMeasure t = make_special(kind, n);
    return std::vector<double>(t.values().begin(), t.values().end());
  };

  std::vector<double> layer_sum(n + 1, 0.0);
  std::vector<double> layer_count(n + 1, 0.0);
  for (Subset a = 1; a + 1 < g.size(); ++a) {
    layer_sum[cardinality(a)] += g[a] * factor;
    layer_count[cardinality(a)] += 1.0;
  }
  std::vector<double> los(g.size(), 0.0);
  for (Subset a = 1; a + 1 < g.size(); ++a) los[a] = layer_sum[cardinality(a)] / layer_count[cardinality(a)];

  OperatorDistances d;
  d.max = rms_interior(g, factor, target(SpecialKind::max));
  d.min = rms_interior(g, factor, target(SpecialKind::min));
  d.mean = rms_interior(g, factor, target(SpecialKind::mean));
  d.los = rms_interior(g, factor, los);
  return d;
}

WalkStats walk_stats(const Dataset& data, double dominant_threshold) {
  if (data.empty()) throw StructuralError("walk statistics of an empty dataset");
  const std::size_t n = data.n();
  WalkStats stats;
  stats.n = n;
  stats.observations = static_cast<double>(data.size());
  stats.variable_counts.assign(lattice_size(n), 0.0);

  std::unordered_map<std::string, std::pair<Walk, double>> tally;
  for (std::size_t k = 0; k < data.size(); ++k) {
    for_each_compatible_walk(data.row(k), [&](const Walk& walk, double share) {
      auto [it, inserted] = tally.try_emplace(walk_key(walk), walk, 0.0);
      it->second.second += share;
      Subset a = 0;
      for (std::uint8_t i : walk) {
        a |= Subset{1} << i;
        stats.variable_counts[a] += share;
      }
    });
  }
  for (auto& [key, entry] : tally) stats.observed_walks.emplace(entry.first, entry.second);

  stats.walk_coverage = static_cast<double>(stats.observed_walks.size()) / factorial(n);
  const std::size_t interior = lattice_size(n) - 2;
  if (interior > 0) {
    std::size_t visited = 0;
    for (Subset a = 1; a + 1 < lattice_size(n); ++a) visited += stats.variable_counts[a] > 0.0;
    stats.variable_coverage = static_cast<double>(visited) / static_cast<double>(interior);
  } else {
    stats.variable_coverage = 1.0;
  }

  const auto top = std::max_element(
      stats.observed_walks.begin(), stats.observed_walks.end(),
      [](const auto& x, const auto& y) { return x.second < y.second; });
  const double share = top->second / stats.observations;
  if (share > dominant_threshold) stats.dominant_walk = std::make_pair(top->first, share);
  return stats;
}

double trust(const WalkStats& stats, Observation h) {
  if (h.size() != stats.n) {
    throw StructuralError("observation has " + std::to_string(h.size()) +
                          " entries, walk statistics expect " + std::to_string(stats.n));
  }
  double total = 0.0;
  for_each_compatible_walk(h, [&](const Walk& walk, double share) {
    Subset a = 0;
    std::size_t supported = 0;
    for (std::uint8_t i : walk) {
      a |= Subset{1} << i;
      supported += stats.variable_counts[a] > 0.0;
    }
    total += share * static_cast<double>(supported) / static_cast<double>(stats.n);
  });
  return total;
}

XaiReport explain(const FuzzyMeasure& g, const Dataset* data, double dominant_threshold) {
  XaiReport report;
  report.shapley = shapley(g);
  report.shapley_normalized = report.shapley;
  if (g.total() > 0.0) {
    for (double& v : report.shapley_normalized) v /= g.total();
  }
  if (g.n() >= 2) report.interaction = interaction(g);
  report.distances = operator_distances(g, DistanceScale::raw);
  if (g.total() > 0.0) report.distances_normalized = operator_distances(g, DistanceScale::normalized);
  if (data != nullptr) {
    if (data->n() != g.n()) throw StructuralError("dataset and measure disagree on n");
    report.support = walk_stats(*data, dominant_threshold);
    report.trust.reserve(data->size());
    for (std::size_t k = 0; k < data->size(); ++k) report.trust.push_back(trust(*report.support, data->row(k)));
  }
  return report;
}

nlohmann::json to_json(const WalkStats& stats) {
  nlohmann::json walks = nlohmann::json::array();
  for (const auto& [walk, count] : stats.observed_walks) {
    std::vector<int> one_based(walk.begin(), walk.end());
    for (int& v : one_based) ++v;
    walks.push_back({{"walk", one_based}, {"count", count}});
  }
  nlohmann::json j = {
      {"n", stats.n},
      {"observations", stats.observations},
      {"observed_walks", walks},
      {"walk_coverage", stats.walk_coverage},
      {"variable_counts", stats.variable_counts},
      {"variable_coverage", stats.variable_coverage},
      {"dominant_walk", nullptr},
  };
  if (stats.dominant_walk) {
    std::vector<int> one_based(stats.dominant_walk->first.begin(), stats.dominant_walk->first.end());
    for (int& v : one_based) ++v;
    j["dominant_walk"] = {{"walk", one_based}, {"share", stats.dominant_walk->second}};
  }
  return j;
}

nlohmann::json to_json(const XaiReport& report) {
  nlohmann::json j = {
      {"shapley", report.shapley},
      {"shapley_normalized", report.shapley_normalized},
      {"interaction", matrix_json(report.interaction)},
      {"distances", distances_json(report.distances)},
      {"distances_normalized", distances_json(report.distances_normalized)},
      {"support", nullptr},
      {"trust", report.trust},
  };
  if (report.support) j["support"] = to_json(*report.support);
  return j;
}

std::string render_summary(const XaiReport& report) {
  std::ostringstream out;
  out << std::fixed << std::setprecision(5);
  out << "source   shapley   shapley(norm)\n";
  for (std::size_t i = 0; i < report.shapley.size(); ++i) {
    out << std::setw(6) << (i + 1) << "  " << std::setw(8) << report.shapley[i] << "  "
        << std::setw(13) << report.shapley_normalized[i] << '\n';
  }
  if (!report.interaction.empty()) {
    out << "\ninteraction\n";
    for (const auto& row : report.interaction) {
      for (double v : row) {
        if (std::isnan(v)) {
          out << std::setw(10) << "-";
        } else {
          out << std::setw(10) << v;
        }
      }
      out << '\n';
    }
  }
  out << "\ndistance   raw        normalized\n";
  const auto line = [&](const char* name, double raw, double norm) {
    out << std::left << std::setw(8) << name << std::right << std::setw(9) << raw << "  "
        << std::setw(9) << norm << '\n';
  };
  line("max", report.distances.max, report.distances_normalized.max);
  line("min", report.distances.min, report.distances_normalized.min);
  line("mean", report.distances.mean, report.distances_normalized.mean);
  line("los", report.distances.los, report.distances_normalized.los);
  if (report.support) {
    const WalkStats& s = *report.support;
    out << "\nwalks observed: " << s.observed_walks.size() << " (coverage " << s.walk_coverage << ")\n";
    out << "variable coverage: " << s.variable_coverage << '\n';
    if (s.dominant_walk) {
      out << "dominant walk: " << walk_name(s.dominant_walk->first) << " (share "
          << s.dominant_walk->second << ")\n";
    } else {
      out << "dominant walk: none\n";
    }
    if (!report.trust.empty()) {
      const double lowest = *std::min_element(report.trust.begin(), report.trust.end());
      out << "lowest trust: " << lowest << '\n';
    }
  }
  return out.str();
}

std::string shapley_svg(const XaiReport& report) {
  const std::size_t n = report.shapley.size();
  const double bar = 40.0, gap = 12.0, height = 200.0, margin = 30.0;
  const double width = margin * 2 + static_cast<double>(n) * (bar + gap);
  double top = 0.0;
  for (double v : report.shapley) top = std::max(top, v);
  if (top <= 0.0) top = 1.0;
  std::ostringstream out;
  out << std::fixed << std::setprecision(2);
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\""
      << height + 2 * margin << "\">\n";
  out << "  <text x=\"" << margin << "\" y=\"18\" font-size=\"14\">Shapley index</text>\n";
  for (std::size_t i = 0; i < n; ++i) {
    const double h = height * std::max(0.0, report.shapley[i]) / top;
    const double x = margin + static_cast<double>(i) * (bar + gap);
    const double y = margin + height - h;
    out << "  <rect x=\"" << x << "\" y=\"" << y << "\" width=\"" << bar << "\" height=\"" << h
        << "\" fill=\"#4477aa\"/>\n";
    out << "  <text x=\"" << x + bar / 2 << "\" y=\"" << margin + height + 16
        << "\" font-size=\"12\" text-anchor=\"middle\">" << (i + 1) << "</text>\n";
    out << "  <text x=\"" << x + bar / 2 << "\" y=\"" << y - 4
        << "\" font-size=\"10\" text-anchor=\"middle\">" << std::setprecision(3) << report.shapley[i]
        << std::setprecision(2) << "</text>\n";
  }
  out << "</svg>\n";
  return out.str();
}

}  // namespace chimp
