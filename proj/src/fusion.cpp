#include "chimp/fusion.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>
#include <tuple>
#include <unordered_map>

#include "chimp/experiment.hpp"
#include "chimp/ichimp.hpp"
#include "chimp/integral.hpp"

namespace chimp {

const char* to_string(FusionMode mode) { return mode == FusionMode::shared ? "shared" : "per-class"; }

FusionMode fusion_mode_from_string(const std::string& text) {
  if (text == "shared") return FusionMode::shared;
  if (text == "per-class" || text == "per_class") return FusionMode::per_class;
  throw StructuralError("unknown fusion mode '" + text + "' (expected shared or per-class)");
}

void FusionTask::check() const {
  if (sources == 0 || classes < 2) throw StructuralError("fusion needs at least one source and two classes");
  check_source_count(sources);
  if (source_names.size() != sources) throw StructuralError("fusion task: source name count mismatch");
  if (labels.size() != rows() || posteriors.size() != rows() * sources * classes) {
    throw StructuralError("fusion task: row dimensions disagree");
  }
  for (std::size_t r = 0; r < rows(); ++r) {
    if (labels[r] >= classes) throw StructuralError("fusion task: label out of range for row '" + ids[r] + "'");
  }
  for (double p : posteriors) {
    if (!(p >= 0.0 && p <= 1.0)) throw StructuralError("fusion task: posterior outside [0, 1]");
  }
  if (!folds.empty()) {
    if (folds.size() != rows()) throw StructuralError("fusion task: fold assignment has the wrong length");
    for (std::size_t f : folds) {
      if (f >= fold_count) throw StructuralError("fusion task: fold index out of range");
    }
  }
}

namespace {

struct SourceTable {
  std::string name;
  std::size_t classes = 0;
  std::vector<std::string> ids;
  std::vector<std::size_t> labels;
  std::vector<double> posteriors;  // [row][class]
};

std::string stem(const std::string& path) {
  std::string base = path.substr(path.find_last_of('/') + 1);
  const auto dot = base.find_last_of('.');
  return dot == std::string::npos || dot == 0 ? base : base.substr(0, dot);
}

double checked_posterior(double p, const std::string& where, const std::string& id, std::size_t column) {
  if (!(p >= 0.0 && p <= 1.0)) {
    throw StructuralError(where + ": posterior " + format_double(p) + " out of range [0, 1] at row '" + id +
                          "', column p_" + std::to_string(column + 1));
  }
  return p;
}

std::size_t checked_label(long long label, std::size_t classes, const std::string& where, const std::string& id) {
  if (label < 1 || static_cast<std::size_t>(label) > classes) {
    throw StructuralError(where + ": label " + std::to_string(label) + " at row '" + id + "' is outside 1.." +
                          std::to_string(classes));
  }
  return static_cast<std::size_t>(label - 1);
}

long long parse_label(const std::string& text, const std::string& where, const std::string& id) {
  if (text.empty()) throw StructuralError(where + ": missing label at row '" + id + "'");
  const double v = parse_double(text, where + " label at row '" + id + "'");
  if (v != std::floor(v)) throw StructuralError(where + ": label '" + text + "' at row '" + id + "' is not an integer");
  return static_cast<long long>(v);
}

SourceTable read_source_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw StructuralError("cannot open posterior file " + path);
  SourceTable t;
  t.name = stem(path);
  std::string line;
  if (!std::getline(in, line)) throw StructuralError(path + ": empty file");
  const auto header = split_csv_line(line);
  if (header.size() < 4 || header.front() != "id" || header.back() != "label") {
    throw StructuralError(path + ": header must be id,p_1,...,p_C,label");
  }
  t.classes = header.size() - 2;
  for (std::size_t c = 0; c < t.classes; ++c) {
    if (header[c + 1] != "p_" + std::to_string(c + 1)) {
      throw StructuralError(path + ": header column " + std::to_string(c + 2) + " should be p_" +
                            std::to_string(c + 1));
    }
  }
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    auto cells = split_csv_line(line);
    const std::string where = path + ":" + std::to_string(line_no);
    if (cells.size() == header.size() - 1) cells.emplace_back();
    if (cells.size() != header.size()) throw StructuralError(where + ": expected " + std::to_string(header.size()) + " fields");
    const std::string& id = cells.front();
    if (id.empty()) throw StructuralError(where + ": empty row id");
    for (std::size_t c = 0; c < t.classes; ++c) {
      t.posteriors.push_back(checked_posterior(parse_double(cells[c + 1], where), where, id, c));
    }
    t.labels.push_back(checked_label(parse_label(cells.back(), where, id), t.classes, where, id));
    t.ids.push_back(id);
  }
  return t;
}

FusionTask align(std::vector<SourceTable> tables) {
  if (tables.empty()) throw StructuralError("no posterior sources given");
  FusionTask task;
  task.sources = tables.size();
  task.classes = tables.front().classes;
  check_source_count(task.sources);
  const SourceTable& first = tables.front();
  std::unordered_map<std::string, std::size_t> first_index;
  for (std::size_t r = 0; r < first.ids.size(); ++r) {
    if (!first_index.emplace(first.ids[r], r).second) {
      throw StructuralError(first.name + ": duplicate row id '" + first.ids[r] + "'");
    }
  }
  task.ids = first.ids;
  task.labels = first.labels;
  task.posteriors.assign(task.rows() * task.sources * task.classes, 0.0);
  for (std::size_t k = 0; k < tables.size(); ++k) {
    const SourceTable& t = tables[k];
    task.source_names.push_back(t.name);
    if (t.classes != task.classes) {
      throw StructuralError(t.name + " has " + std::to_string(t.classes) + " classes but " + first.name + " has " +
                            std::to_string(task.classes));
    }
    std::vector<bool> seen(task.rows(), false);
    for (std::size_t r = 0; r < t.ids.size(); ++r) {
      const auto it = first_index.find(t.ids[r]);
      if (it == first_index.end()) {
        throw StructuralError("row id '" + t.ids[r] + "' in " + t.name + " is missing from " + first.name);
      }
      const std::size_t row = it->second;
      if (seen[row]) throw StructuralError(t.name + ": duplicate row id '" + t.ids[r] + "'");
      seen[row] = true;
      if (t.labels[r] != task.labels[row]) {
        throw StructuralError("label disagreement for row id '" + t.ids[r] + "' between " + first.name + " and " +
                              t.name);
      }
      std::copy_n(t.posteriors.begin() + static_cast<std::ptrdiff_t>(r * t.classes), t.classes,
                  task.posteriors.begin() + static_cast<std::ptrdiff_t>((row * task.sources + k) * task.classes));
    }
    for (std::size_t row = 0; row < task.rows(); ++row) {
      if (!seen[row]) throw StructuralError("row id '" + task.ids[row] + "' is missing from " + t.name);
    }
  }
  task.check();
  return task;
}

}  // namespace

FusionTask read_posteriors_json(const nlohmann::json& bundle, const std::string& name) {
  if (!bundle.is_object() || !bundle.contains("classes") || !bundle.contains("sources")) {
    throw StructuralError(name + ": expected an object with 'classes' and 'sources'");
  }
  const auto classes = bundle.at("classes").get<std::size_t>();
  std::vector<SourceTable> tables;
  for (const auto& src : bundle.at("sources")) {
    SourceTable t;
    t.name = src.value("name", "source_" + std::to_string(tables.size() + 1));
    t.classes = classes;
    const std::string where = name + " source " + t.name;
    for (const auto& row : src.at("rows")) {
      const std::string id = row.at("id").is_string() ? row.at("id").get<std::string>() : row.at("id").dump();
      const auto& post = row.at("posteriors");
      if (post.size() != classes) {
        throw StructuralError(where + ": row '" + id + "' has " + std::to_string(post.size()) + " posteriors");
      }
      for (std::size_t c = 0; c < classes; ++c) {
        t.posteriors.push_back(checked_posterior(post[c].get<double>(), where, id, c));
      }
      if (!row.contains("label") || row.at("label").is_null()) {
        throw StructuralError(where + ": missing label at row '" + id + "'");
      }
      t.labels.push_back(checked_label(row.at("label").get<long long>(), classes, where, id));
      t.ids.push_back(id);
    }
    tables.push_back(std::move(t));
  }
  return align(std::move(tables));
}

FusionTask ingest_posteriors(const std::vector<std::string>& paths) {
  if (paths.empty()) throw StructuralError("no posterior files given");
  if (paths.size() == 1 && paths.front().size() > 5 &&
      paths.front().compare(paths.front().size() - 5, 5, ".json") == 0) {
    std::ifstream in(paths.front());
    if (!in) throw StructuralError("cannot open posterior bundle " + paths.front());
    nlohmann::json bundle;
    try {
      in >> bundle;
    } catch (const nlohmann::json::exception& e) {
      throw StructuralError(paths.front() + ": " + e.what());
    }
    return read_posteriors_json(bundle, paths.front());
  }
  std::vector<SourceTable> tables;
  for (const auto& path : paths) tables.push_back(read_source_csv(path));
  return align(std::move(tables));
}

nlohmann::json posteriors_to_json(const FusionTask& task) {
  nlohmann::json sources = nlohmann::json::array();
  for (std::size_t k = 0; k < task.sources; ++k) {
    nlohmann::json rows = nlohmann::json::array();
    for (std::size_t r = 0; r < task.rows(); ++r) {
      std::vector<double> post(task.classes);
      for (std::size_t c = 0; c < task.classes; ++c) post[c] = task.posterior(r, k, c);
      rows.push_back({{"id", task.ids[r]}, {"posteriors", post}, {"label", task.labels[r] + 1}});
    }
    sources.push_back({{"name", task.source_names[k]}, {"rows", std::move(rows)}});
  }
  return {{"classes", task.classes}, {"sources", std::move(sources)}};
}

void write_posteriors_csv(const FusionTask& task, std::size_t source, std::ostream& out) {
  out << "id";
  for (std::size_t c = 0; c < task.classes; ++c) out << ",p_" << c + 1;
  out << ",label\n";
  for (std::size_t r = 0; r < task.rows(); ++r) {
    out << task.ids[r];
    for (std::size_t c = 0; c < task.classes; ++c) out << ',' << format_double(task.posterior(r, source, c));
    out << ',' << task.labels[r] + 1 << '\n';
  }
}

void assign_folds(FusionTask& task, std::size_t folds, std::uint64_t seed) {
  if (folds < 2) throw StructuralError("cross validation needs at least two folds");
  std::mt19937_64 rng(seed);
  task.folds.assign(task.rows(), 0);
  task.fold_count = folds;
  std::size_t offset = 0;
  for (std::size_t c = 0; c < task.classes; ++c) {
    std::vector<std::size_t> members;
    for (std::size_t r = 0; r < task.rows(); ++r) {
      if (task.labels[r] == c) members.push_back(r);
    }
    std::shuffle(members.begin(), members.end(), rng);
    for (std::size_t i = 0; i < members.size(); ++i) task.folds[members[i]] = (offset + i) % folds;
    offset += members.size();
  }
}

Dataset fusion_samples(const FusionTask& task, const std::vector<std::size_t>& rows, std::size_t cls,
                       bool all_classes) {
  Dataset data(task.sources);
  std::vector<double> h(task.sources);
  for (std::size_t r : rows) {
    for (std::size_t c = 0; c < task.classes; ++c) {
      if (!all_classes && c != cls) continue;
      for (std::size_t k = 0; k < task.sources; ++k) h[k] = task.posterior(r, k, c);
      data.add(h, task.labels[r] == c ? 1.0 : 0.0);
    }
  }
  data.provenance.source = "fusion";
  return data;
}

std::vector<std::size_t> fuse_predict(const FusionTask& task, const std::vector<FuzzyMeasure>& measures,
                                      const std::vector<std::size_t>& rows) {
  if (measures.size() != 1 && measures.size() != task.classes) {
    throw StructuralError("fusion needs one shared measure or one per class");
  }
  std::vector<std::size_t> out;
  out.reserve(rows.size());
  std::vector<double> h(task.sources);
  for (std::size_t r : rows) {
    std::size_t best = 0;
    double best_score = -std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < task.classes; ++c) {
      for (std::size_t k = 0; k < task.sources; ++k) h[k] = task.posterior(r, k, c);
      const double s = chi_sort(measures.size() == 1 ? measures.front() : measures[c], h);
      if (s > best_score) {
        best_score = s;
        best = c;
      }
    }
    out.push_back(best);
  }
  return out;
}

double source_accuracy(const FusionTask& task, std::size_t source, const std::vector<std::size_t>& rows) {
  if (rows.empty()) return 0.0;
  std::size_t correct = 0;
  for (std::size_t r : rows) {
    std::size_t best = 0;
    for (std::size_t c = 1; c < task.classes; ++c) {
      if (task.posterior(r, source, c) > task.posterior(r, source, best)) best = c;
    }
    correct += best == task.labels[r];
  }
  return static_cast<double>(correct) / static_cast<double>(rows.size());
}

std::size_t FusionResult::evaluated_folds() const {
  return static_cast<std::size_t>(std::count_if(folds.begin(), folds.end(), [](const auto& f) { return !f.skipped; }));
}

namespace {

std::pair<double, double> mean_sd(const std::vector<double>& xs) {
  if (xs.empty()) return {std::nan(""), std::nan("")};
  const double mean = std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
  if (xs.size() < 2) return {mean, 0.0};
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  return {mean, std::sqrt(ss / static_cast<double>(xs.size() - 1))};
}

FoldOutcome run_fold(const FusionTask& task, const TrainConfig& cfg, std::size_t fold) {
  FoldOutcome out;
  out.fold = fold;
  std::vector<std::size_t> train, test;
  for (std::size_t r = 0; r < task.rows(); ++r) (task.folds[r] == fold ? test : train).push_back(r);
  out.test_rows = test.size();

  std::vector<std::size_t> train_count(task.classes, 0), test_count(task.classes, 0);
  for (std::size_t r : train) ++train_count[task.labels[r]];
  for (std::size_t r : test) ++test_count[task.labels[r]];
  for (std::size_t c = 0; c < task.classes; ++c) {
    if (train_count[c] == 0 || test_count[c] == 0) {
      out.skipped = true;
      out.warning = "fold " + std::to_string(fold + 1) + " skipped: class " + std::to_string(c + 1) +
                    " is absent from its " + (train_count[c] == 0 ? "training" : "test") + " rows";
      return out;
    }
  }

  const bool shared = task.mode == FusionMode::shared;
  const std::size_t count = shared ? 1 : task.classes;
  for (std::size_t m = 0; m < count; ++m) {
    const Dataset samples = fusion_samples(task, train, m, shared);
    TrainConfig fit_cfg = cfg;
    fit_cfg.seed = derive_seed(cfg.seed, fold, m);
    const FitResult fit = sgd_fit(samples, fit_cfg);
    out.measures.push_back(materialize(fit.params).g);
    out.reports.push_back(explain(out.measures.back(), &samples));
  }

  const auto predicted = fuse_predict(task, out.measures, test);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < test.size(); ++i) correct += predicted[i] == task.labels[test[i]];
  out.accuracy = static_cast<double>(correct) / static_cast<double>(test.size());
  for (std::size_t k = 0; k < task.sources; ++k) out.source_accuracy.push_back(source_accuracy(task, k, test));
  return out;
}

}  // namespace

FusionResult run_fusion(FusionTask task, const TrainConfig& cfg, const FusionOptions& options) {
  cfg.check();
  if (task.folds.empty()) assign_folds(task, options.folds, cfg.seed);
  task.check();

  FusionResult result;
  result.mode = task.mode;
  result.folds.resize(task.fold_count);
  parallel_for(
      task.fold_count, [&](std::size_t f) { result.folds[f] = run_fold(task, cfg, f); }, options.threads);

  std::vector<double> fused;
  std::vector<std::vector<double>> per_source(task.sources);
  for (const auto& f : result.folds) {
    if (f.skipped) {
      result.warnings.push_back(f.warning);
      continue;
    }
    fused.push_back(f.accuracy);
    for (std::size_t k = 0; k < task.sources; ++k) per_source[k].push_back(f.source_accuracy[k]);
  }
  std::tie(result.mean_accuracy, result.sd_accuracy) = mean_sd(fused);
  for (const auto& xs : per_source) {
    const auto [m, s] = mean_sd(xs);
    result.source_mean_accuracy.push_back(m);
    result.source_sd_accuracy.push_back(s);
  }
  return result;
}

nlohmann::json to_json(const FusionResult& result, const FusionTask& task) {
  auto number = [](double x) { return std::isfinite(x) ? nlohmann::json(x) : nlohmann::json(nullptr); };
  nlohmann::json folds = nlohmann::json::array();
  for (const auto& f : result.folds) {
    nlohmann::json j{{"fold", f.fold + 1}, {"skipped", f.skipped}, {"test_rows", f.test_rows}};
    if (f.skipped) {
      j["warning"] = f.warning;
    } else {
      j["accuracy"] = f.accuracy;
      j["source_accuracy"] = f.source_accuracy;
      nlohmann::json measures = nlohmann::json::array();
      for (std::size_t m = 0; m < f.measures.size(); ++m) {
        nlohmann::json entry{{"measure", to_json(f.measures[m])}, {"xai", to_json(f.reports[m])}};
        if (result.mode == FusionMode::per_class) entry["class"] = m + 1;
        measures.push_back(std::move(entry));
      }
      j["measures"] = std::move(measures);
    }
    folds.push_back(std::move(j));
  }
  nlohmann::json sources = nlohmann::json::array();
  for (std::size_t k = 0; k < task.sources; ++k) {
    sources.push_back({{"name", task.source_names[k]},
                       {"mean_accuracy", number(result.source_mean_accuracy[k])},
                       {"sd_accuracy", number(result.source_sd_accuracy[k])}});
  }
  return {{"mode", to_string(result.mode)},
          {"sources", std::move(sources)},
          {"classes", task.classes},
          {"rows", task.rows()},
          {"mean_accuracy", number(result.mean_accuracy)},
          {"sd_accuracy", number(result.sd_accuracy)},
          {"folds", std::move(folds)},
          {"warnings", result.warnings}};
}

void write_fusion_csv(const FusionResult& result, const FusionTask& task, std::ostream& out) {
  out << "fold";
  for (const auto& name : task.source_names) out << ',' << name;
  out << ",fused\n";
  for (const auto& f : result.folds) {
    if (f.skipped) continue;
    out << f.fold + 1;
    for (double a : f.source_accuracy) out << ',' << format_double(a);
    out << ',' << format_double(f.accuracy) << '\n';
  }
  out << "mean";
  for (double a : result.source_mean_accuracy) out << ',' << format_double(a);
  out << ',' << format_double(result.mean_accuracy) << '\n';
  out << "sd";
  for (double a : result.source_sd_accuracy) out << ',' << format_double(a);
  out << ',' << format_double(result.sd_accuracy) << '\n';
}

namespace {

FusionTask empty_task(std::size_t sources, std::size_t classes, std::size_t rows) {
  FusionTask task;
  task.sources = sources;
  task.classes = classes;
  for (std::size_t k = 0; k < sources; ++k) task.source_names.push_back("source_" + std::to_string(k + 1));
  task.ids.reserve(rows);
  task.labels.reserve(rows);
  task.posteriors.reserve(rows * sources * classes);
  return task;
}

}  // namespace

FusionTask make_complementary_fixture(std::size_t rows, std::uint64_t seed) {
  FusionTask task = empty_task(2, 2, rows);
  task.source_names = {"A", "B"};
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> jitter(-0.05, 0.05);
  for (std::size_t r = 0; r < rows; ++r) {
    const std::size_t label = r % 2;
    // First-column posteriors: A is confident and right on class 1, mildly
    // wrong on class 2; B mirrors it.
    const double a = (label == 0 ? 0.9 : 0.6) + jitter(rng);
    const double b = (label == 0 ? 0.4 : 0.1) + jitter(rng);
    task.ids.push_back("r" + std::to_string(r + 1));
    task.labels.push_back(label);
    task.posteriors.insert(task.posteriors.end(), {a, 1.0 - a, b, 1.0 - b});
  }
  task.check();
  return task;
}

FusionTask make_redundant_fixture(std::size_t rows, std::size_t sources, std::size_t classes,
                                  std::uint64_t seed, double logit_jitter) {
  if (classes < 2) throw StructuralError("fixture needs at least two classes");
  if (!(logit_jitter >= 0.0)) throw StructuralError("fixture jitter must be nonnegative");
  FusionTask task = empty_task(sources, classes, rows);
  check_source_count(sources);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> strength(3.0, 5.0);
  std::normal_distribution<double> other(0.0, 0.5);
  std::normal_distribution<double> jitter(0.0, logit_jitter);
  std::vector<double> logit(classes), p(classes);
  for (std::size_t r = 0; r < rows; ++r) {
    const std::size_t label = r % classes;
    for (std::size_t c = 0; c < classes; ++c) logit[c] = c == label ? strength(rng) : other(rng);
    for (std::size_t k = 0; k < sources; ++k) {
      double total = 0.0;
      for (std::size_t c = 0; c < classes; ++c) {
        p[c] = std::exp(logit[c] + jitter(rng));
        total += p[c];
      }
      for (std::size_t c = 0; c < classes; ++c) task.posteriors.push_back(p[c] / total);
    }
    task.ids.push_back("r" + std::to_string(r + 1));
    task.labels.push_back(label);
  }
  task.check();
  return task;
}

}  // namespace chimp
