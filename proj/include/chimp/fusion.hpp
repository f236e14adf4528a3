#pragma once

// Decision-level fusion of classifier posteriors with a learned capacity.

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "chimp/dataset.hpp"
#include "chimp/measure.hpp"
#include "chimp/training.hpp"
#include "chimp/xai.hpp"

namespace chimp {

enum class FusionMode {
  shared,     // one capacity for every class column
  per_class,  // one capacity per class
};

const char* to_string(FusionMode mode);
FusionMode fusion_mode_from_string(const std::string& text);

/// Posteriors of K source models over C classes for a common set of rows.
/// Labels are 0-based here; files use 1-based labels matching p_1..p_C.
struct FusionTask {
  std::size_t sources = 0;  // K
  std::size_t classes = 0;  // C
  std::vector<std::string> source_names;
  std::vector<std::string> ids;
  std::vector<std::size_t> labels;
  std::vector<double> posteriors;  // [row][source][class]
  std::vector<std::size_t> folds;  // fold index per row; empty until assigned
  std::size_t fold_count = 0;
  FusionMode mode = FusionMode::shared;

  std::size_t rows() const { return ids.size(); }
  double posterior(std::size_t row, std::size_t source, std::size_t cls) const {
    return posteriors[(row * sources + source) * classes + cls];
  }
  /// Throws StructuralError when dimensions, ranges or folds are inconsistent.
  void check() const;
};

/// One CSV per source (`id,p_1,...,p_C,label`), or a single JSON bundle
/// `{"classes": C, "sources": [{"name", "rows": [{"id", "posteriors", "label"}]}]}`.
/// Rows are aligned by id in the order of the first source.
FusionTask ingest_posteriors(const std::vector<std::string>& paths);
FusionTask read_posteriors_json(const nlohmann::json& bundle, const std::string& name = "<json>");
nlohmann::json posteriors_to_json(const FusionTask& task);
void write_posteriors_csv(const FusionTask& task, std::size_t source, std::ostream& out);

/// Stratified round-robin fold assignment after a seeded shuffle within each class.
void assign_folds(FusionTask& task, std::size_t folds, std::uint64_t seed);

/// Scalar training samples for the capacity of class `cls` (shared mode: every
/// class) over `rows`: h = the sources' posteriors of a class column, label 1
/// when that column is the true class and 0 otherwise.
Dataset fusion_samples(const FusionTask& task, const std::vector<std::size_t>& rows, std::size_t cls,
                       bool all_classes);

/// Predicted class per row: argmax over c of ChI(g_c, column c), lowest index on ties.
std::vector<std::size_t> fuse_predict(const FusionTask& task, const std::vector<FuzzyMeasure>& measures,
                                      const std::vector<std::size_t>& rows);

struct FoldOutcome {
  std::size_t fold = 0;
  bool skipped = false;
  std::string warning;
  std::size_t test_rows = 0;
  double accuracy = 0.0;
  std::vector<double> source_accuracy;  // per source on the same test rows
  std::vector<FuzzyMeasure> measures;   // one (shared) or C (per-class)
  std::vector<XaiReport> reports;       // parallel to measures, with training-data support
};

struct FusionResult {
  FusionMode mode = FusionMode::shared;
  std::vector<FoldOutcome> folds;
  double mean_accuracy = 0.0;  // over evaluated folds
  double sd_accuracy = 0.0;    // sample standard deviation over evaluated folds
  std::vector<double> source_mean_accuracy;
  std::vector<double> source_sd_accuracy;
  std::vector<std::string> warnings;
  std::size_t evaluated_folds() const;
};

struct FusionOptions {
  std::size_t folds = 3;
  std::size_t threads = 0;
};

/// Cross-validated fusion: each fold is predicted by capacities fit on the
/// other folds. Folds are assigned from cfg.seed when the task has none.
/// Folds missing a class in their training or test part are skipped with a warning.
FusionResult run_fusion(FusionTask task, const TrainConfig& cfg, const FusionOptions& options = {});

/// Source accuracy of argmax posteriors over `rows`.
double source_accuracy(const FusionTask& task, std::size_t source, const std::vector<std::size_t>& rows);

nlohmann::json to_json(const FusionResult& result, const FusionTask& task);
/// Per-fold accuracy table: fold, one column per source, then fused.
void write_fusion_csv(const FusionResult& result, const FusionTask& task, std::ostream& out);

/// Two sources, two classes: source A is right on class-1 rows only and
/// source B on class-2 rows only; each alone is near chance.
FusionTask make_complementary_fixture(std::size_t rows, std::uint64_t seed);

/// `sources` confident, near-identical models. Each row draws shared logits
/// (true class U(3, 5), others N(0, 0.5)); every source adds its own
/// N(0, logit_jitter) to each logit before the softmax.
FusionTask make_redundant_fixture(std::size_t rows, std::size_t sources, std::size_t classes,
                                  std::uint64_t seed, double logit_jitter = 0.3);

}  // namespace chimp
