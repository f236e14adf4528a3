#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "chimp/measure.hpp"

namespace chimp {

struct Provenance {
  enum class Kind { synthetic, ingested };
  Kind kind = Kind::ingested;
  std::string source;          // target measure name or file path
  double noise_multiplier = 0.0;
  double label_std = 0.0;      // sigma_y of the noiseless labels
  std::uint64_t seed = 0;
};

/// M observations of n inputs with scalar labels. Synthetic data also carries
/// the noiseless labels so errors can be measured against the truth.
class Dataset {
 public:
  explicit Dataset(std::size_t n);

  std::size_t n() const { return n_; }
  std::size_t size() const { return labels_.size(); }
  bool empty() const { return labels_.empty(); }

  std::span<const double> row(std::size_t k) const {
    return std::span<const double>(rows_).subspan(k * n_, n_);
  }
  double label(std::size_t k) const { return labels_[k]; }
  std::span<const double> labels() const { return labels_; }

  bool has_clean_labels() const { return clean_labels_.size() == labels_.size() && !empty(); }
  double clean_label(std::size_t k) const { return clean_labels_[k]; }

  void add(std::span<const double> h, double label);
  void add(std::span<const double> h, double label, double clean_label);

  /// Rows selected by `indices`, in that order.
  Dataset subset(std::span<const std::size_t> indices) const;

  Provenance provenance;

 private:
  std::size_t n_;
  std::vector<double> rows_;
  std::vector<double> labels_;
  std::vector<double> clean_labels_;
};

struct Split {
  Dataset train;
  Dataset test;
};

/// Shuffles row indices with `rng` and puts the first round(fraction * M) rows in train.
Split train_test_split(const Dataset& data, double train_fraction, std::mt19937_64& rng);

/// 17 significant digits in scientific notation; parses back to the same double.
std::string format_double(double x);

/// Dataset CSV: header `h_1,...,h_n,label`.
void write_dataset_csv(const Dataset& data, std::ostream& out);
void save_dataset(const Dataset& data, const std::string& path);
Dataset read_dataset_csv(std::istream& in, const std::string& name = "<stream>");
Dataset load_dataset(const std::string& path);

/// Splits one CSV line on commas and trims surrounding whitespace.
std::vector<std::string> split_csv_line(const std::string& line);
/// Strict double parse; throws StructuralError naming `context` on failure.
double parse_double(const std::string& text, const std::string& context);

}  // namespace chimp
