#include "chimp/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <ostream>
#include <random>
#include <sstream>
#include <thread>

#include "chimp/ichimp.hpp"
#include "chimp/integral.hpp"

namespace chimp {

FuzzyMeasure table1_measure(int index) {
  // Mask order 1..7 is g1, g2, g12, g3, g13, g23, g123.
  auto build = [](double g1, double g2, double g3, double g12, double g13, double g23) {
    return FuzzyMeasure(3, {0.0, g1, g2, g12, g3, g13, g23, 1.0});
  };
  switch (index) {
    case 1: return build(0.7, 0.7, 0.7, 0.9, 0.9, 0.9);
    case 2: return build(1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0, 2.0 / 3.0, 2.0 / 3.0, 2.0 / 3.0);
    case 3: return build(0.1, 0.1, 0.1, 0.3, 0.3, 0.3);
    case 4: return build(0.1, 0.2, 0.3, 0.3, 0.5, 0.7);
    default: throw StructuralError("no experiment measure FM" + std::to_string(index) + " (expected 1..4)");
  }
}

std::string table1_name(int index) {
  table1_measure(index);
  return "FM" + std::to_string(index);
}

void NoiseSpec::check() const {
  if (multipliers.empty()) throw StructuralError("noise spec has no multipliers");
  for (double m : multipliers) {
    if (!std::isfinite(m) || m < 0.0) {
      throw StructuralError("noise multiplier must be finite and >= 0, got " + format_double(m));
    }
  }
}

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b, std::uint64_t c) {
  auto mix = [](std::uint64_t z) {
    z += 0x9E3779B97F4A7C15ull;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  };
  std::uint64_t s = mix(base);
  s = mix(s ^ a);
  s = mix(s ^ b);
  return mix(s ^ c);
}

Dataset generate(const FuzzyMeasure& target, std::size_t rows, double multiplier, std::uint64_t seed,
                 const std::string& target_name) {
  const ValidationReport report = validate(target);
  if (!report.valid()) throw StructuralError("generate: target measure is not a valid capacity");
  if (!std::isfinite(multiplier) || multiplier < 0.0) {
    throw StructuralError("generate: noise multiplier must be finite and >= 0");
  }
  const std::size_t n = target.n();
  std::mt19937_64 row_rng(seed);
  std::mt19937_64 noise_rng(derive_seed(seed, 1));
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);

  std::vector<double> xs(rows * n);
  std::vector<double> clean(rows);
  for (std::size_t k = 0; k < rows; ++k) {
    for (std::size_t i = 0; i < n; ++i) xs[k * n + i] = unit(row_rng);
    clean[k] = chi_sort(target, std::span<const double>(xs).subspan(k * n, n));
  }
  double mean = 0.0;
  for (double y : clean) mean += y;
  mean = rows ? mean / static_cast<double>(rows) : 0.0;
  double var = 0.0;
  for (double y : clean) var += (y - mean) * (y - mean);
  const double sigma_y = rows ? std::sqrt(var / static_cast<double>(rows)) : 0.0;

  Dataset data(n);
  for (std::size_t k = 0; k < rows; ++k) {
    const double z = normal(noise_rng);
    const double label = multiplier == 0.0 ? clean[k] : clean[k] + multiplier * sigma_y * z;
    data.add(std::span<const double>(xs).subspan(k * n, n), label, clean[k]);
  }
  data.provenance.kind = Provenance::Kind::synthetic;
  data.provenance.source = target_name;
  data.provenance.noise_multiplier = multiplier;
  data.provenance.label_std = sigma_y;
  data.provenance.seed = seed;
  return data;
}

void parallel_for(std::size_t count, const std::function<void(std::size_t)>& job, std::size_t threads) {
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = std::min(threads, count);
  if (threads <= 1) {
    for (std::size_t i = 0; i < count; ++i) job(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (std::size_t t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) {
        try {
          job(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!error) error = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

const Exp1Cell& Exp1Table::cell(int measure, std::size_t level) const {
  for (const auto& c : cells) {
    if (c.measure == measure && level < multipliers.size() && c.multiplier == multipliers[level]) return c;
  }
  throw StructuralError("no experiment cell for FM" + std::to_string(measure) + " at noise level " +
                        std::to_string(level));
}

namespace {

double clean_mse(const ChimpParams& p, const Dataset& data) {
  if (data.empty()) return 0.0;
  const MaterializedMeasure mm = materialize(p);
  double sum = 0.0;
  for (std::size_t k = 0; k < data.size(); ++k) {
    const double target = data.has_clean_labels() ? data.clean_label(k) : data.label(k);
    const double d = predict(mm, data.row(k)) - target;
    sum += d * d;
  }
  return sum / static_cast<double>(data.size());
}

double measure_mse(const FuzzyMeasure& learned, const FuzzyMeasure& target) {
  double sum = 0.0;
  for (Subset a = 1; a < target.size(); ++a) {
    const double d = learned[a] - target[a];
    sum += d * d;
  }
  return sum / static_cast<double>(target.size() - 1);
}

TrialMetrics run_trial(const Dataset& data, const FuzzyMeasure& target, const TrainConfig& cfg,
                       double train_fraction, std::uint64_t seed) {
  TrialMetrics m;
  m.seed = seed;
  try {
    std::mt19937_64 split_rng(seed);
    const Split split = train_test_split(data, train_fraction, split_rng);
    TrainConfig trial_cfg = cfg;
    trial_cfg.seed = derive_seed(seed, 2);
    const FitResult fit = sgd_fit(split.train, trial_cfg);
    m.train_mse = clean_mse(fit.params, split.train);
    m.test_mse = clean_mse(fit.params, split.test);
    m.fm_mse = measure_mse(materialize(fit.params).g, target);
  } catch (const std::exception& e) {
    m.ok = false;
    m.failure = e.what();
  }
  return m;
}

}  // namespace

Exp1Table run_experiment1(const TrainConfig& cfg, const NoiseSpec& noise, const Exp1Options& options) {
  cfg.check();
  noise.check();
  if (cfg.trials == 0) throw StructuralError("exp1 needs at least one trial");
  if (!(options.train_fraction > 0.0 && options.train_fraction < 1.0)) {
    throw StructuralError("train fraction must lie in (0, 1)");
  }

  Exp1Table table;
  table.multipliers = noise.multipliers;
  std::vector<FuzzyMeasure> targets;
  std::vector<std::vector<Dataset>> data;  // [measure][level]
  for (int fm : options.measures) {
    targets.push_back(table1_measure(fm));
    std::vector<Dataset> per_level;
    const std::uint64_t data_seed = derive_seed(noise.seed, 0xDA7Aull, static_cast<std::uint64_t>(fm));
    for (double mult : noise.multipliers) {
      per_level.push_back(generate(targets.back(), options.rows, mult, data_seed, table1_name(fm)));
    }
    data.push_back(std::move(per_level));
    for (double mult : noise.multipliers) {
      Exp1Cell cell;
      cell.measure = fm;
      cell.multiplier = mult;
      cell.trials.resize(cfg.trials);
      table.cells.push_back(std::move(cell));
    }
  }

  const std::size_t levels = noise.multipliers.size();
  const std::size_t jobs = table.cells.size() * cfg.trials;
  parallel_for(
      jobs,
      [&](std::size_t job) {
        const std::size_t c = job / cfg.trials;
        const std::size_t trial = job % cfg.trials;
        const std::size_t f = c / levels;
        const std::size_t level = c % levels;
        const auto fm = static_cast<std::uint64_t>(options.measures[f]);
        const std::uint64_t seed = derive_seed(cfg.seed, fm, trial);
        table.cells[c].trials[trial] = run_trial(data[f][level], targets[f], cfg, options.train_fraction, seed);
      },
      options.threads);

  for (auto& cell : table.cells) {
    std::size_t ok = 0;
    for (const auto& t : cell.trials) {
      if (!t.ok) {
        ++cell.failures;
        continue;
      }
      cell.train_mse += t.train_mse;
      cell.test_mse += t.test_mse;
      cell.fm_mse += t.fm_mse;
      ++ok;
    }
    if (ok == 0) {
      cell.train_mse = cell.test_mse = cell.fm_mse = std::nan("");
    } else {
      cell.train_mse /= static_cast<double>(ok);
      cell.test_mse /= static_cast<double>(ok);
      cell.fm_mse /= static_cast<double>(ok);
    }
  }
  return table;
}

void write_table2_csv(const Exp1Table& table, std::ostream& out) {
  auto level = [](double m) {
    std::ostringstream s;
    s << m;
    return s.str();
  };
  out << "measure";
  for (double m : table.multipliers) out << ",label_" << level(m);
  for (double m : table.multipliers) out << ",fm_" << level(m);
  out << '\n';
  std::vector<int> seen;
  for (const auto& c : table.cells) {
    if (std::find(seen.begin(), seen.end(), c.measure) != seen.end()) continue;
    seen.push_back(c.measure);
    out << "FM" << c.measure;
    for (std::size_t l = 0; l < table.multipliers.size(); ++l) {
      out << ',' << format_double(table.cell(c.measure, l).test_mse);
    }
    for (std::size_t l = 0; l < table.multipliers.size(); ++l) {
      out << ',' << format_double(table.cell(c.measure, l).fm_mse);
    }
    out << '\n';
  }
}

void write_cells_csv(const Exp1Table& table, std::ostream& out) {
  out << "measure,noise,train_mse,test_mse,fm_mse,trials,failures\n";
  for (const auto& c : table.cells) {
    out << "FM" << c.measure << ',' << format_double(c.multiplier) << ',' << format_double(c.train_mse) << ','
        << format_double(c.test_mse) << ',' << format_double(c.fm_mse) << ',' << c.trials.size() << ','
        << c.failures << '\n';
  }
}

void write_trials_csv(const Exp1Table& table, std::ostream& out) {
  out << "measure,noise,trial,seed,train_mse,test_mse,fm_mse,status\n";
  for (const auto& c : table.cells) {
    for (std::size_t t = 0; t < c.trials.size(); ++t) {
      const auto& m = c.trials[t];
      out << "FM" << c.measure << ',' << format_double(c.multiplier) << ',' << t << ',' << m.seed << ','
          << format_double(m.train_mse) << ',' << format_double(m.test_mse) << ',' << format_double(m.fm_mse)
          << ',';
      if (m.ok) {
        out << "ok";
      } else {
        std::string reason = m.failure;
        std::replace(reason.begin(), reason.end(), ',', ';');
        std::replace(reason.begin(), reason.end(), '\n', ' ');
        out << "failed: " << reason;
      }
      out << '\n';
    }
  }
}

}  // namespace chimp
