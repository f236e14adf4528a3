#include "chimp/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <numeric>
#include <sstream>

namespace chimp {

Dataset::Dataset(std::size_t n) : n_(n) { check_source_count(n); }

void Dataset::add(std::span<const double> h, double label) {
  if (h.size() != n_) {
    throw StructuralError("row has " + std::to_string(h.size()) + " entries, dataset expects " +
                          std::to_string(n_));
  }
  if (!std::isfinite(label) || !std::all_of(h.begin(), h.end(), [](double v) { return std::isfinite(v); })) {
    throw StructuralError("dataset rows and labels must be finite");
  }
  rows_.insert(rows_.end(), h.begin(), h.end());
  labels_.push_back(label);
}

void Dataset::add(std::span<const double> h, double label, double clean_label) {
  if (clean_labels_.size() != labels_.size()) {
    throw StructuralError("cannot mix rows with and without clean labels");
  }
  add(h, label);
  clean_labels_.push_back(clean_label);
}

Dataset Dataset::subset(std::span<const std::size_t> indices) const {
  Dataset out(n_);
  out.provenance = provenance;
  const bool clean = has_clean_labels();
  for (std::size_t k : indices) {
    if (clean) {
      out.add(row(k), labels_[k], clean_labels_[k]);
    } else {
      out.add(row(k), labels_[k]);
    }
  }
  return out;
}

Split train_test_split(const Dataset& data, double train_fraction, std::mt19937_64& rng) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw StructuralError("train fraction must be in (0, 1)");
  }
  std::vector<std::size_t> idx(data.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::shuffle(idx.begin(), idx.end(), rng);
  const auto cut = static_cast<std::size_t>(std::lround(train_fraction * static_cast<double>(idx.size())));
  std::span<const std::size_t> all(idx);
  return {data.subset(all.first(cut)), data.subset(all.subspan(cut))};
}

std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.16e", x);
  return buf;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ',')) {
    const auto b = field.find_first_not_of(" \t\r");
    const auto e = field.find_last_not_of(" \t\r");
    out.push_back(b == std::string::npos ? std::string() : field.substr(b, e - b + 1));
  }
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double parse_double(const std::string& text, const std::string& context) {
  if (text.empty()) throw StructuralError(context + ": empty numeric field");
  char* end = nullptr;
  const double v = std::strtod(text.c_str(), &end);
  if (end != text.c_str() + text.size() || !std::isfinite(v)) {
    throw StructuralError(context + ": cannot parse '" + text + "' as a finite number");
  }
  return v;
}

void write_dataset_csv(const Dataset& data, std::ostream& out) {
  for (std::size_t i = 0; i < data.n(); ++i) out << "h_" << (i + 1) << ',';
  out << "label\n";
  for (std::size_t k = 0; k < data.size(); ++k) {
    for (double v : data.row(k)) out << format_double(v) << ',';
    out << format_double(data.label(k)) << '\n';
  }
}

void save_dataset(const Dataset& data, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write dataset: " + path);
  write_dataset_csv(data, out);
}

Dataset read_dataset_csv(std::istream& in, const std::string& name) {
  std::string line;
  if (!std::getline(in, line)) throw StructuralError(name + ": empty dataset file");
  const auto header = split_csv_line(line);
  if (header.size() < 2 || header.back() != "label") {
    throw StructuralError(name + ": header must be h_1,...,h_n,label");
  }
  const std::size_t n = header.size() - 1;
  for (std::size_t i = 0; i < n; ++i) {
    if (header[i] != "h_" + std::to_string(i + 1)) {
      throw StructuralError(name + ": unexpected header column '" + header[i] + "'");
    }
  }
  Dataset data(n);
  data.provenance.kind = Provenance::Kind::ingested;
  data.provenance.source = name;
  std::vector<double> row(n);
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto fields = split_csv_line(line);
    const std::string where = name + ":" + std::to_string(line_no);
    if (fields.size() != n + 1) {
      throw StructuralError(where + ": expected " + std::to_string(n + 1) + " fields");
    }
    for (std::size_t i = 0; i < n; ++i) row[i] = parse_double(fields[i], where);
    data.add(row, parse_double(fields[n], where));
  }
  return data;
}

Dataset load_dataset(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open dataset: " + path);
  return read_dataset_csv(in, path);
}

}  // namespace chimp
