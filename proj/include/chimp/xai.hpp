#pragma once

// Introspection indices for a learned capacity and the data it was fit on.

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "chimp/dataset.hpp"
#include "chimp/integral.hpp"
#include "chimp/measure.hpp"

namespace chimp {

/// Shapley index; sums to g(X). Throws StructuralError for an invalid capacity.
std::vector<double> shapley(const FuzzyMeasure& g);

/// Pairwise interaction index, symmetric, diagonal NaN. Requires n >= 2.
std::vector<std::vector<double>> interaction(const FuzzyMeasure& g);

enum class DistanceScale {
  raw,         // compare g as-is against the unit-scale operator measures
  normalized,  // compare g / g(X)
};

/// RMS distance over the 2^n - 2 interior lattice values to the max, min and
/// mean measures, and to the cardinality-layer average of g (its nearest LOS).
struct OperatorDistances {
  double max = 0.0;
  double min = 0.0;
  double mean = 0.0;
  double los = 0.0;
};

OperatorDistances operator_distances(const FuzzyMeasure& g, DistanceScale scale = DistanceScale::raw);

using Walk = std::vector<std::uint8_t>;  // 0-based source indices, descending input order

struct WalkStats {
  std::size_t n = 0;
  double observations = 0.0;                // M
  std::map<Walk, double> observed_walks;    // fractional for tied rows
  double walk_coverage = 0.0;               // observed walks / n!
  std::vector<double> variable_counts;      // visits per subset mask
  double variable_coverage = 0.0;           // visited interior subsets / (2^n - 2)
  std::optional<std::pair<Walk, double>> dominant_walk;  // (walk, share of M)
};

/// Ties are split equally over every compatible walk; rows whose ties admit
/// more than kMaxCompatibleWalks orders are rejected.
inline constexpr std::size_t kMaxCompatibleWalks = 40320;

WalkStats walk_stats(const Dataset& data, double dominant_threshold = 0.5);

/// Fraction of the n lattice variables on h's walk that the training data visited.
double trust(const WalkStats& stats, Observation h);

struct XaiReport {
  std::vector<double> shapley;
  std::vector<double> shapley_normalized;
  std::vector<std::vector<double>> interaction;
  OperatorDistances distances;
  OperatorDistances distances_normalized;
  std::optional<WalkStats> support;
  std::vector<double> trust;  // per observation of the explained dataset
};

/// Indices of `g`; support and trust are filled when `data` is given.
XaiReport explain(const FuzzyMeasure& g, const Dataset* data = nullptr,
                  double dominant_threshold = 0.5);

nlohmann::json to_json(const WalkStats& stats);
nlohmann::json to_json(const XaiReport& report);

/// Plain-text summary table.
std::string render_summary(const XaiReport& report);

/// Standalone SVG bar chart of the Shapley values.
std::string shapley_svg(const XaiReport& report);

}  // namespace chimp
