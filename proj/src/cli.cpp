#include "chimp/cli.hpp"

#include <chrono>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <random>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "chimp/dataset.hpp"
#include "chimp/experiment.hpp"
#include "chimp/fusion.hpp"
#include "chimp/ichimp.hpp"
#include "chimp/integral.hpp"
#include "chimp/measure.hpp"
#include "chimp/training.hpp"
#include "chimp/xai.hpp"

#ifndef CHIMP_VERSION
#define CHIMP_VERSION "0.0.0"
#endif

namespace fs = std::filesystem;
using nlohmann::json;

namespace chimp {

const char* version() { return CHIMP_VERSION; }

namespace {

constexpr const char* kRunPrefix = "@run/";

std::string utc_stamp(std::chrono::system_clock::time_point t, const char* format) {
  const std::time_t tt = std::chrono::system_clock::to_time_t(t);
  std::tm tm{};
  gmtime_r(&tt, &tm);
  std::ostringstream out;
  out << std::put_time(&tm, format);
  return out.str();
}

// Owns one run directory: copies inputs, writes outputs, and records the manifest.
class Run {
 public:
  Run(std::string command, std::vector<std::string> args, std::string out_dir, std::uint64_t seed)
      : command_(std::move(command)), args_(std::move(args)), seed_(seed),
        started_(std::chrono::system_clock::now()), clock_(std::chrono::steady_clock::now()) {
    if (out_dir.empty()) {
      const char* root = std::getenv(kRunRootEnv);
      const fs::path base = root && *root ? fs::path(root) : fs::path("runs");
      const std::string stem = command_ + "-" + utc_stamp(started_, "%Y%m%dT%H%M%SZ") + "-s" + std::to_string(seed);
      fs::path candidate = base / stem;
      for (int k = 2; fs::exists(candidate); ++k) candidate = base / (stem + "-" + std::to_string(k));
      dir_ = candidate;
    } else {
      dir_ = out_dir;
    }
    fs::create_directories(dir_);
    replay_ = args_;
    drop_out_option(replay_);
  }

  const fs::path& dir() const { return dir_; }

  /// Copies `path` under inputs/ and points the replay arguments at the copy.
  void input(const std::string& path) {
    if (path.empty()) return;
    if (!fs::is_regular_file(path)) throw StructuralError("input file not found: " + path);
    fs::create_directories(dir_ / "inputs");
    std::string name = fs::path(path).filename().string();
    if (fs::exists(dir_ / "inputs" / name)) name = std::to_string(inputs_.size() + 1) + "_" + name;
    const fs::path copy = dir_ / "inputs" / name;
    if (fs::absolute(path) != fs::absolute(copy)) fs::copy_file(path, copy, fs::copy_options::overwrite_existing);
    const std::string replacement = std::string(kRunPrefix) + "inputs/" + name;
    for (auto& token : replay_) {
      if (token == path) {
        token = replacement;
      } else if (token.size() > path.size() + 1 && token.compare(token.size() - path.size(), path.size(), path) == 0 &&
                 token[token.size() - path.size() - 1] == '=') {
        token = token.substr(0, token.size() - path.size()) + replacement;
      }
    }
    inputs_.push_back({{"path", path}, {"copy", "inputs/" + name}});
  }

  void write(const std::string& name, const std::string& content) {
    std::ofstream out(dir_ / name, std::ios::binary);
    if (!out) throw StructuralError("cannot write " + (dir_ / name).string());
    out << content;
    outputs_.push_back(name);
  }

  void write_json(const std::string& name, const json& j) { write(name, j.dump(2) + "\n"); }

  json config;

  void finish(int exit_code, const std::string& error = {}) {
    const auto finished = std::chrono::system_clock::now();
    const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - clock_).count();
    json manifest{{"tool", "chimp"},
                  {"version", version()},
                  {"compiler", compiler()},
                  {"libraries", {{"nlohmann_json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                                                       std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                                                       std::to_string(NLOHMANN_JSON_VERSION_PATCH)},
                                 {"CLI11", CLI11_VERSION}}},
                  {"command", command_},
                  {"argv", args_},
                  {"replay_argv", replay_},
                  {"seed", seed_},
                  {"config", config},
                  {"inputs", inputs_},
                  {"outputs", outputs_},
                  {"started", utc_stamp(started_, "%Y-%m-%dT%H:%M:%SZ")},
                  {"finished", utc_stamp(finished, "%Y-%m-%dT%H:%M:%SZ")},
                  {"timings", {{"elapsed_seconds", elapsed}}},
                  {"exit_code", exit_code}};
    if (!error.empty()) manifest["error"] = error;
    std::ofstream out(dir_ / "manifest.json");
    out << manifest.dump(2) << '\n';
  }

 private:
  static std::string compiler() {
#if defined(__clang__)
    return std::string("clang ") + __clang_version__;
#elif defined(__GNUC__)
    return std::string("gcc ") + __VERSION__;
#else
    return "unknown";
#endif
  }

  static void drop_out_option(std::vector<std::string>& args) {
    std::vector<std::string> kept;
    for (std::size_t i = 0; i < args.size(); ++i) {
      if (args[i] == "--out") {
        ++i;
        continue;
      }
      if (args[i].rfind("--out=", 0) == 0) continue;
      kept.push_back(args[i]);
    }
    args = std::move(kept);
  }

  std::string command_;
  std::vector<std::string> args_;
  std::vector<std::string> replay_;
  std::uint64_t seed_;
  fs::path dir_;
  json inputs_ = json::array();
  std::vector<std::string> outputs_;
  std::chrono::system_clock::time_point started_;
  std::chrono::steady_clock::time_point clock_;
};

json echo_options(const CLI::App& sub) {
  json j = json::object();
  for (const CLI::Option* opt : sub.get_options()) {
    if (opt->get_name() == "--help" || opt->get_name().empty()) continue;
    std::string key = opt->get_name();
    while (!key.empty() && key.front() == '-') key.erase(key.begin());
    if (opt->count() > 0) {
      const auto& results = opt->results();
      if (opt->get_expected_max() > 1 || results.size() > 1) {
        j[key] = results;
      } else if (opt->get_type_size() == 0) {
        j[key] = true;
      } else {
        j[key] = results.empty() ? "" : results.front();
      }
    } else {
      j[key] = opt->get_default_str();
    }
  }
  return j;
}

struct Common {
  std::uint64_t seed = 0;
  std::string out;
};

void add_common(CLI::App* sub, Common& c) {
  sub->add_option("--seed", c.seed, "Random seed");
  sub->add_option("--out", c.out, std::string("Run directory (default: $") + kRunRootEnv + "/<command>-<time>-s<seed>)");
}

struct TrainFlags {
  TrainConfig cfg;
  std::string batch = "per-sample";
};

void add_train_flags(CLI::App* sub, TrainFlags& t) {
  sub->add_option("--lr", t.cfg.learning_rate, "Learning rate")->check(CLI::PositiveNumber);
  sub->add_option("--epochs", t.cfg.epochs, "Passes over the training data");
  sub->add_option("--batch", t.batch, "per-sample or full-batch")
      ->check(CLI::IsMember({"per-sample", "sgd", "full-batch", "batch"}));
  sub->add_option("--init-low", t.cfg.init_low, "Lower bound of the uniform raw-weight initialization");
  sub->add_option("--init-high", t.cfg.init_high, "Upper bound of the uniform raw-weight initialization");
}

TrainConfig resolve(const TrainFlags& t, std::uint64_t seed) {
  TrainConfig cfg = t.cfg;
  cfg.batch_mode = batch_mode_from_string(t.batch);
  cfg.seed = seed;
  cfg.check();
  return cfg;
}

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw StructuralError("cannot open " + path);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw StructuralError(path + ": " + e.what());
  }
}

// A measure JSON ({"values"}) or iChIMP parameters ({"raw_density"}).
FuzzyMeasure load_any_measure(const std::string& path) {
  const json j = read_json_file(path);
  if (j.contains("raw_density")) return materialize(params_from_json(j)).g;
  return measure_from_json(j);
}

std::string text_of(const std::function<void(std::ostream&)>& emit) {
  std::ostringstream out;
  emit(out);
  return out.str();
}

SpecialKind special_from_string(const std::string& s) {
  if (s == "max") return SpecialKind::max;
  if (s == "min") return SpecialKind::min;
  if (s == "mean") return SpecialKind::mean;
  if (s == "los") return SpecialKind::los;
  throw StructuralError("unknown special measure '" + s + "'");
}

// ---------------------------------------------------------------------------

struct GenerateOpts {
  Common common;
  std::string measure = "FM4";
  std::string special;
  std::size_t n = 3;
  std::vector<double> los_weights;
  std::size_t rows = 300;
  double noise = 0.0;
};

int cmd_generate(Run& run, const GenerateOpts& o) {
  FuzzyMeasure target = FuzzyMeasure::zeros(1);
  std::string name;
  if (!o.special.empty()) {
    target = make_special(special_from_string(o.special), o.n, o.los_weights);
    name = o.special;
  } else if (o.measure.size() == 3 && o.measure.rfind("FM", 0) == 0) {
    const int index = o.measure[2] - '0';
    target = table1_measure(index);
    name = table1_name(index);
  } else {
    run.input(o.measure);
    target = load_measure(o.measure);
    name = fs::path(o.measure).filename().string();
  }
  const Dataset data = generate(target, o.rows, o.noise, o.common.seed, name);
  run.write("data.csv", text_of([&](std::ostream& out) { write_dataset_csv(data, out); }));
  run.write_json("target.json", to_json(target));
  run.write_json("summary.json", {{"target", name},
                                  {"n", data.n()},
                                  {"rows", data.size()},
                                  {"noise_multiplier", o.noise},
                                  {"label_std", data.provenance.label_std},
                                  {"seed", o.common.seed}});
  std::cout << "generated " << data.size() << " rows from " << name << " (sigma_y = " << data.provenance.label_std
            << ")\n";
  return kExitOk;
}

struct TrainOpts {
  Common common;
  TrainFlags train;
  std::string data;
  std::string test;
  std::string target;
};

double dataset_mse(const MaterializedMeasure& mm, const Dataset& data) {
  std::vector<double> outputs;
  outputs.reserve(data.size());
  for (std::size_t k = 0; k < data.size(); ++k) outputs.push_back(predict(mm, data.row(k)));
  return mse(data.labels(), outputs);
}

int cmd_train(Run& run, const TrainOpts& o) {
  run.input(o.data);
  run.input(o.test);
  run.input(o.target);
  const TrainConfig cfg = resolve(o.train, o.common.seed);
  const Dataset data = load_dataset(o.data);
  const FitResult fit = sgd_fit(data, cfg);
  const MaterializedMeasure mm = materialize(fit.params);

  json metrics{{"train_mse", dataset_mse(mm, data)}, {"trial_seed", cfg.seed}};
  if (!o.test.empty()) {
    const Dataset test = load_dataset(o.test);
    if (test.n() != data.n()) throw StructuralError("test data has a different number of inputs");
    metrics["test_mse"] = dataset_mse(mm, test);
  }
  if (!o.target.empty()) {
    const FuzzyMeasure target = load_measure(o.target);
    if (target.n() != data.n()) throw StructuralError("target measure has a different number of inputs");
    double sum = 0.0;
    for (Subset a = 1; a < target.size(); ++a) sum += (mm.g[a] - target[a]) * (mm.g[a] - target[a]);
    metrics["fm_mse"] = sum / static_cast<double>(target.size() - 1);
  }
  run.write_json("params.json", to_json(fit.params));
  run.write_json("measure.json", to_json(mm.g));
  run.write("history.csv", text_of([&](std::ostream& out) { write_history_csv(fit.history, out); }));
  run.write_json("metrics.json", metrics);
  std::cout << "train mse " << format_double(metrics["train_mse"].get<double>()) << '\n';
  return kExitOk;
}

struct EvalOpts {
  Common common;
  std::string measure;
  std::string data;
};

int cmd_eval(Run& run, const EvalOpts& o) {
  run.input(o.measure);
  run.input(o.data);
  const FuzzyMeasure g = load_any_measure(o.measure);
  const Dataset data = load_dataset(o.data);
  if (g.n() != data.n()) throw StructuralError("measure and data disagree on the number of inputs");
  std::vector<double> outputs;
  std::ostringstream csv;
  csv << "row,label,prediction\n";
  for (std::size_t k = 0; k < data.size(); ++k) {
    outputs.push_back(chi_sort(g, data.row(k)));
    csv << k + 1 << ',' << format_double(data.label(k)) << ',' << format_double(outputs.back()) << '\n';
  }
  const double err = mse(data.labels(), outputs);
  run.write("predictions.csv", csv.str());
  run.write_json("metrics.json", {{"mse", err}, {"rows", data.size()}});
  std::cout << "mse " << format_double(err) << '\n';
  return kExitOk;
}

struct ExplainOpts {
  Common common;
  std::string measure;
  std::string data;
  double threshold = 0.5;
  bool svg = false;
};

int cmd_explain(Run& run, const ExplainOpts& o) {
  run.input(o.measure);
  run.input(o.data);
  const FuzzyMeasure g = load_any_measure(o.measure);
  std::optional<Dataset> data;
  if (!o.data.empty()) {
    data = load_dataset(o.data);
    if (data->n() != g.n()) throw StructuralError("measure and data disagree on the number of inputs");
  }
  const XaiReport report = explain(g, data ? &*data : nullptr, o.threshold);
  run.write_json("xai.json", to_json(report));
  const std::string summary = render_summary(report);
  run.write("summary.txt", summary);
  if (o.svg) run.write("shapley.svg", shapley_svg(report));
  std::cout << summary;
  return kExitOk;
}

struct Exp1Opts {
  Common common;
  TrainFlags train;
  std::size_t rows = 300;
  std::vector<double> noise{0.0, 0.01, 0.05, 0.1, 0.3, 0.5};
  std::vector<int> measures{1, 2, 3, 4};
  std::uint64_t data_seed = 7;
  std::size_t threads = 0;
};

int cmd_exp1(Run& run, const Exp1Opts& o) {
  const TrainConfig cfg = resolve(o.train, o.common.seed);
  NoiseSpec noise;
  noise.multipliers = o.noise;
  noise.seed = o.data_seed;
  Exp1Options options;
  options.rows = o.rows;
  options.measures = o.measures;
  options.threads = o.threads;
  const Exp1Table table = run_experiment1(cfg, noise, options);
  const std::string table2 = text_of([&](std::ostream& out) { write_table2_csv(table, out); });
  run.write("table2.csv", table2);
  run.write("cells.csv", text_of([&](std::ostream& out) { write_cells_csv(table, out); }));
  run.write("trials.csv", text_of([&](std::ostream& out) { write_trials_csv(table, out); }));
  std::cout << table2;
  std::size_t failures = 0;
  for (const auto& c : table.cells) failures += c.failures;
  if (failures > 0) std::cerr << failures << " trial(s) failed; see trials.csv\n";
  return kExitOk;
}

struct FuseOpts {
  Common common;
  TrainFlags train;
  std::vector<std::string> posteriors;
  std::string fixture;
  std::size_t rows = 300;
  std::size_t sources = 7;
  std::size_t classes = 5;
  double jitter = 0.3;
  std::string mode = "shared";
  std::size_t folds = 3;
  std::size_t threads = 0;
};

int cmd_fuse(Run& run, const FuseOpts& o) {
  const TrainConfig cfg = resolve(o.train, o.common.seed);
  FusionTask task;
  if (!o.fixture.empty()) {
    if (!o.posteriors.empty()) throw StructuralError("give either --posteriors or --fixture, not both");
    task = o.fixture == "complementary" ? make_complementary_fixture(o.rows, o.common.seed)
                                        : make_redundant_fixture(o.rows, o.sources, o.classes, o.common.seed, o.jitter);
    run.write_json("fixture.json", posteriors_to_json(task));
  } else {
    if (o.posteriors.empty()) throw StructuralError("fuse needs --posteriors or --fixture");
    for (const auto& p : o.posteriors) run.input(p);
    task = ingest_posteriors(o.posteriors);
  }
  task.mode = fusion_mode_from_string(o.mode);
  FusionOptions options;
  options.folds = o.folds;
  options.threads = o.threads;
  const FusionResult result = run_fusion(task, cfg, options);
  run.write_json("fusion.json", to_json(result, task));
  const std::string table = text_of([&](std::ostream& out) { write_fusion_csv(result, task, out); });
  run.write("accuracy.csv", table);
  for (const auto& w : result.warnings) std::cerr << "warning: " << w << '\n';
  std::cout << table;
  return kExitOk;
}

struct GradcheckOpts {
  Common common;
  std::size_t n = 4;
  std::size_t cases = 100;
  double eps = 1e-6;
  double threshold = 1e-5;
  double raw_low = -0.2;
  double raw_high = 0.5;
};

int cmd_gradcheck(Run& run, const GradcheckOpts& o) {
  check_source_count(o.n);
  if (!(o.eps > 0.0)) throw StructuralError("--eps must be positive");
  std::mt19937_64 rng(o.common.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::ostringstream csv;
  csv << "case,max_rel_error,worst_kind,worst_index,checked,skipped\n";
  double worst = 0.0;
  std::vector<double> h(o.n);
  for (std::size_t c = 0; c < o.cases; ++c) {
    const ChimpParams p = ChimpParams::uniform(o.n, o.raw_low, o.raw_high, rng);
    for (auto& x : h) x = unit(rng);
    const double label = unit(rng);
    const GradCheckResult r = grad_check(p, h, label, o.eps);
    worst = std::max(worst, r.max_rel_error);
    csv << c + 1 << ',' << format_double(r.max_rel_error) << ','
        << (r.worst.kind == GradCheckCoordinate::Kind::param ? "param" : "input") << ',' << r.worst.index << ','
        << r.checked << ',' << r.skipped.size() << '\n';
  }
  run.write("gradcheck.csv", csv.str());
  run.write_json("summary.json", {{"n", o.n}, {"cases", o.cases}, {"max_rel_error", worst}, {"threshold", o.threshold}});
  std::cout << "max relative error " << format_double(worst) << '\n';
  return worst < o.threshold ? kExitOk : kExitNumeric;
}

struct FlopsOpts {
  Common common;
  std::size_t n = 8;
};

int cmd_flops(Run& run, const FlopsOpts& o) {
  check_source_count(o.n);
  std::mt19937_64 rng(o.common.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::ostringstream csv;
  csv << "n,integrand_ops_measured,integrand_ops_formula,measure_ops,measure_ops_bound,dot_ops\n";
  for (std::size_t n = 2; n <= o.n; ++n) {
    std::vector<double> h(n);
    for (auto& x : h) x = unit(rng);
    OpCounter counter;
    integrand(h, &counter);
    const FlopCount f = flop_count(n);
    csv << n << ',' << counter.ops << ',' << f.o_cost << ',' << f.g_cost << ',' << f.g_cost_bound << ','
        << f.dot_cost << '\n';
  }
  run.write("flops.csv", csv.str());
  std::cout << csv.str();
  return kExitOk;
}

struct ReplayOpts {
  std::string manifest;
  std::string out;
};

std::vector<std::string> replay_args(const ReplayOpts& o) {
  const json manifest = read_json_file(o.manifest);
  if (!manifest.contains("replay_argv")) throw StructuralError(o.manifest + ": no replay_argv");
  const std::string run_dir = fs::absolute(o.manifest).parent_path().string() + "/";
  std::vector<std::string> args;
  for (std::string token : manifest.at("replay_argv").get<std::vector<std::string>>()) {
    const auto at = token.find(kRunPrefix);
    if (at != std::string::npos) token.replace(at, std::string(kRunPrefix).size(), run_dir);
    args.push_back(std::move(token));
  }
  if (!o.out.empty()) {
    args.push_back("--out");
    args.push_back(o.out);
  }
  return args;
}

template <typename Fn>
int execute(const std::string& name, const std::vector<std::string>& args, const Common& common,
            const CLI::App& sub, Fn&& fn) {
  std::optional<Run> run;
  try {
    run.emplace(name, args, common.out, common.seed);
    run->config = echo_options(sub);
    const int code = fn(*run);
    run->finish(code);
    std::cerr << "run directory: " << run->dir().string() << '\n';
    return code;
  } catch (const NumericError& e) {
    std::cerr << "numeric failure: " << e.what() << '\n';
    if (run) run->finish(kExitNumeric, e.what());
    return kExitNumeric;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    if (run) run->finish(kExitError, e.what());
    return kExitError;
  }
}

}  // namespace

int run_cli(const std::vector<std::string>& args) {
  CLI::App app{"Choquet integral networks: capacity learning, fusion and explanation"};
  app.set_version_flag("--version", version());
  app.require_subcommand(1);
  app.option_defaults()->always_capture_default();

  GenerateOpts gen;
  auto* generate_cmd = app.add_subcommand("generate", "Synthetic dataset from a known capacity plus label noise");
  add_common(generate_cmd, gen.common);
  generate_cmd->add_option("--measure", gen.measure, "FM1..FM4 or a measure JSON file");
  generate_cmd->add_option("--special", gen.special, "Use an operator measure instead")
      ->check(CLI::IsMember({"max", "min", "mean", "los"}));
  generate_cmd->add_option("--n", gen.n, "Sources for --special");
  generate_cmd->add_option("--los-weights", gen.los_weights, "Order-statistic weights for --special los");
  generate_cmd->add_option("--rows", gen.rows, "Observations");
  generate_cmd->add_option("--noise", gen.noise, "Noise std as a multiple of the label std")
      ->check(CLI::NonNegativeNumber);

  TrainOpts train;
  auto* train_cmd = app.add_subcommand("train", "Fit iChIMP parameters to a dataset CSV");
  add_common(train_cmd, train.common);
  add_train_flags(train_cmd, train.train);
  train_cmd->add_option("--data", train.data, "Training CSV (h_1,...,h_n,label)")->required();
  train_cmd->add_option("--test", train.test, "Optional test CSV");
  train_cmd->add_option("--target", train.target, "Optional target measure JSON for the variable error");

  EvalOpts eval;
  auto* eval_cmd = app.add_subcommand("eval", "Evaluate a measure or parameter file on a dataset");
  add_common(eval_cmd, eval.common);
  eval_cmd->add_option("--measure", eval.measure, "Measure or params JSON")->required();
  eval_cmd->add_option("--data", eval.data, "Dataset CSV")->required();

  ExplainOpts expl;
  auto* explain_cmd = app.add_subcommand("explain", "Shapley, interaction, operator distances, data support");
  add_common(explain_cmd, expl.common);
  explain_cmd->add_option("--measure", expl.measure, "Measure or params JSON")->required();
  explain_cmd->add_option("--data", expl.data, "Training CSV for walk coverage and trust");
  explain_cmd->add_option("--dominant-threshold", expl.threshold, "Share of rows that makes a walk dominant");
  explain_cmd->add_flag("--svg", expl.svg, "Also write a Shapley bar chart");

  Exp1Opts exp1;
  auto* exp1_cmd = app.add_subcommand("exp1", "Synthetic recovery experiment over four target measures");
  add_common(exp1_cmd, exp1.common);
  add_train_flags(exp1_cmd, exp1.train);
  exp1_cmd->add_option("--trials", exp1.train.cfg.trials, "Fits per cell")->check(CLI::PositiveNumber);
  exp1_cmd->add_option("--rows", exp1.rows, "Observations per dataset");
  exp1_cmd->add_option("--noise", exp1.noise, "Noise multipliers of the label std");
  exp1_cmd->add_option("--measures", exp1.measures, "Target measures (1..4)");
  exp1_cmd->add_option("--data-seed", exp1.data_seed, "Seed for the generated datasets");
  exp1_cmd->add_option("--threads", exp1.threads, "Worker threads (0 = all cores)");

  FuseOpts fuse;
  auto* fuse_cmd = app.add_subcommand("fuse", "Cross-validated fusion of classifier posteriors");
  add_common(fuse_cmd, fuse.common);
  add_train_flags(fuse_cmd, fuse.train);
  fuse_cmd->add_option("--posteriors", fuse.posteriors, "One CSV per source, or one JSON bundle");
  fuse_cmd->add_option("--fixture", fuse.fixture, "Synthetic task instead of files")
      ->check(CLI::IsMember({"complementary", "redundant"}));
  fuse_cmd->add_option("--rows", fuse.rows, "Fixture rows");
  fuse_cmd->add_option("--sources", fuse.sources, "Redundant fixture sources");
  fuse_cmd->add_option("--classes", fuse.classes, "Redundant fixture classes");
  fuse_cmd->add_option("--jitter", fuse.jitter, "Redundant fixture per-source logit jitter std");
  fuse_cmd->add_option("--mode", fuse.mode, "shared or per-class")->check(CLI::IsMember({"shared", "per-class"}));
  fuse_cmd->add_option("--folds", fuse.folds, "Cross-validation folds");
  fuse_cmd->add_option("--threads", fuse.threads, "Worker threads (0 = all cores)");

  GradcheckOpts gc;
  auto* gradcheck_cmd = app.add_subcommand("gradcheck", "Compare analytic and finite-difference gradients");
  add_common(gradcheck_cmd, gc.common);
  gradcheck_cmd->add_option("--n", gc.n, "Sources");
  gradcheck_cmd->add_option("--cases", gc.cases, "Random configurations");
  gradcheck_cmd->add_option("--eps", gc.eps, "Finite-difference step");
  gradcheck_cmd->add_option("--threshold", gc.threshold, "Exit nonzero at or above this relative error");
  gradcheck_cmd->add_option("--raw-low", gc.raw_low, "Lower bound of random raw weights");
  gradcheck_cmd->add_option("--raw-high", gc.raw_high, "Upper bound of random raw weights");

  FlopsOpts flops;
  auto* flops_cmd = app.add_subcommand("flops", "Measured and closed-form operation counts for n = 2..N");
  add_common(flops_cmd, flops.common);
  flops_cmd->add_option("--n", flops.n, "Largest n");

  ReplayOpts replay;
  auto* replay_cmd = app.add_subcommand("replay", "Re-run a command from its run manifest");
  replay_cmd->add_option("--manifest", replay.manifest, "manifest.json of an earlier run")->required();
  replay_cmd->add_option("--out", replay.out, "Run directory for the re-run");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  if (replay_cmd->parsed()) {
    std::vector<std::string> again;
    try {
      again = replay_args(replay);
    } catch (const std::exception& e) {
      std::cerr << "error: " << e.what() << '\n';
      return kExitError;
    }
    return run_cli(again);
  }
  if (generate_cmd->parsed()) {
    return execute("generate", args, gen.common, *generate_cmd, [&](Run& r) { return cmd_generate(r, gen); });
  }
  if (train_cmd->parsed()) {
    return execute("train", args, train.common, *train_cmd, [&](Run& r) { return cmd_train(r, train); });
  }
  if (eval_cmd->parsed()) {
    return execute("eval", args, eval.common, *eval_cmd, [&](Run& r) { return cmd_eval(r, eval); });
  }
  if (explain_cmd->parsed()) {
    return execute("explain", args, expl.common, *explain_cmd, [&](Run& r) { return cmd_explain(r, expl); });
  }
  if (exp1_cmd->parsed()) {
    return execute("exp1", args, exp1.common, *exp1_cmd, [&](Run& r) { return cmd_exp1(r, exp1); });
  }
  if (fuse_cmd->parsed()) {
    return execute("fuse", args, fuse.common, *fuse_cmd, [&](Run& r) { return cmd_fuse(r, fuse); });
  }
  if (gradcheck_cmd->parsed()) {
    return execute("gradcheck", args, gc.common, *gradcheck_cmd, [&](Run& r) { return cmd_gradcheck(r, gc); });
  }
  if (flops_cmd->parsed()) {
    return execute("flops", args, flops.common, *flops_cmd, [&](Run& r) { return cmd_flops(r, flops); });
  }
  return kExitUsage;
}

int run_cli(int argc, char** argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run_cli(args);
}

}  // namespace chimp
