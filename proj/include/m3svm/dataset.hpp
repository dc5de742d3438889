#pragma once

// Dense labelled datasets: ingestion (CSV, LIBSVM), standardization and
// stratified fold plans.

#include <Eigen/Dense>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <numeric>
#include <optional>
#include <random>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <variant>
#include <vector>

#include "m3svm/error.hpp"

namespace m3svm {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

class Dataset {
 public:
  Dataset() = default;

  // Labels must lie in [0, num_classes). class_names is either empty or has
  // exactly num_classes entries.
  Dataset(Matrix features, std::vector<int> labels, int num_classes,
          std::vector<std::string> class_names = {})
      : features_(std::move(features)),
        labels_(std::move(labels)),
        c_(num_classes),
        class_names_(std::move(class_names)) {
    if (c_ < 2) throw config_error("dataset needs at least 2 declared classes");
    if (static_cast<long>(labels_.size()) != features_.rows())
      throw dimension_error("dataset: label count " +
                            std::to_string(labels_.size()) +
                            " does not match row count " +
                            std::to_string(features_.rows()));
    if (!class_names_.empty() && static_cast<int>(class_names_.size()) != c_)
      throw config_error("dataset: class_names must have one entry per class");
    for (std::size_t i = 0; i < labels_.size(); ++i)
      if (labels_[i] < 0 || labels_[i] >= c_)
        throw config_error("dataset: label " + std::to_string(labels_[i]) +
                           " of row " + std::to_string(i) + " outside [0, " +
                           std::to_string(c_) + ")");
    for (Eigen::Index i = 0; i < features_.rows(); ++i)
      for (Eigen::Index j = 0; j < features_.cols(); ++j)
        if (!std::isfinite(features_(i, j)))
          throw parse_error("dataset: non-finite feature at row " +
                            std::to_string(i) + ", column " + std::to_string(j));
  }

  const Matrix& features() const noexcept { return features_; }
  const std::vector<int>& labels() const noexcept { return labels_; }
  const std::vector<std::string>& class_names() const noexcept {
    return class_names_;
  }
  int n() const noexcept { return static_cast<int>(features_.rows()); }
  int d() const noexcept { return static_cast<int>(features_.cols()); }
  int c() const noexcept { return c_; }

  auto row(int i) const { return features_.row(i); }
  int label(int i) const { return labels_[i]; }

  std::vector<int> class_counts() const {
    std::vector<int> counts(c_, 0);
    for (int y : labels_) ++counts[y];
    return counts;
  }

  // Rows in the given order; keeps c and class_names.
  Dataset subset(std::span<const int> rows) const {
    Matrix x(static_cast<Eigen::Index>(rows.size()), features_.cols());
    std::vector<int> y(rows.size());
    for (std::size_t r = 0; r < rows.size(); ++r) {
      x.row(static_cast<Eigen::Index>(r)) = features_.row(rows[r]);
      y[r] = labels_[rows[r]];
    }
    return Dataset(std::move(x), std::move(y), c_, class_names_);
  }

  Dataset with_features(Matrix x) const {
    return Dataset(std::move(x), labels_, c_, class_names_);
  }

 private:
  Matrix features_;
  std::vector<int> labels_;
  int c_ = 2;
  std::vector<std::string> class_names_;
};

namespace detail {

inline std::string_view trim(std::string_view s) {
  const auto ws = " \t\r\n";
  const auto b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(ws);
  return s.substr(b, e - b + 1);
}

inline std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    out.push_back(s.substr(start, pos == std::string_view::npos
                                      ? std::string_view::npos
                                      : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

// Strict real parse: whole token, finite value.
inline std::optional<double> parse_real(std::string_view tok) {
  tok = trim(tok);
  if (!tok.empty() && tok.front() == '+') tok.remove_prefix(1);
  if (tok.empty()) return std::nullopt;
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc{} || ptr != tok.data() + tok.size()) return std::nullopt;
  if (!std::isfinite(v)) return std::nullopt;
  return v;
}

inline std::optional<long> parse_int(std::string_view tok) {
  tok = trim(tok);
  long v = 0;
  const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (tok.empty() || ec != std::errc{} || ptr != tok.data() + tok.size())
    return std::nullopt;
  return v;
}

// First-appearance label encoder.
class LabelEncoder {
 public:
  int encode(std::string_view name) {
    auto it = index_.find(std::string(name));
    if (it != index_.end()) return it->second;
    const int id = static_cast<int>(names_.size());
    names_.emplace_back(name);
    index_.emplace(names_.back(), id);
    return id;
  }
  int size() const { return static_cast<int>(names_.size()); }
  std::vector<std::string> names() const { return names_; }

 private:
  std::vector<std::string> names_;
  std::unordered_map<std::string, int> index_;
};

inline std::ifstream open_input(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw io_error("cannot open '" + path + "'");
  return in;
}

}  // namespace detail

// Column selector for the label: a header name or a 0-based index; negative
// indices count from the end (-1 = last column).
using LabelColumn = std::variant<std::string, int>;

inline Dataset load_csv(const std::string& path, LabelColumn label_column = -1,
                        bool header = true) {
  auto in = detail::open_input(path);
  std::string line;
  std::vector<std::string> header_names;
  int line_no = 0;
  int width = -1;
  int label_idx = -1;

  auto resolve_label = [&](int w) {
    if (const auto* idx = std::get_if<int>(&label_column)) {
      const int li = *idx < 0 ? w + *idx : *idx;
      if (li < 0 || li >= w)
        throw config_error("label column index " + std::to_string(*idx) +
                           " out of range for " + std::to_string(w) +
                           " columns");
      return li;
    }
    const auto& name = std::get<std::string>(label_column);
    for (int j = 0; j < static_cast<int>(header_names.size()); ++j)
      if (header_names[j] == name) return j;
    throw config_error("label column '" + name + "' not found in header");
  };

  if (header) {
    while (std::getline(in, line)) {
      ++line_no;
      if (!detail::trim(line).empty()) break;
    }
    for (auto tok : detail::split(detail::trim(line), ','))
      header_names.emplace_back(detail::trim(tok));
    width = static_cast<int>(header_names.size());
    label_idx = resolve_label(width);
  }

  std::vector<std::vector<double>> rows;
  std::vector<int> labels;
  detail::LabelEncoder encoder;
  while (std::getline(in, line)) {
    ++line_no;
    const auto body = detail::trim(line);
    if (body.empty()) continue;
    const auto cells = detail::split(body, ',');
    if (width < 0) {
      width = static_cast<int>(cells.size());
      label_idx = resolve_label(width);
    }
    if (static_cast<int>(cells.size()) != width)
      throw parse_error("ragged row at line " + std::to_string(line_no) +
                        ": expected " + std::to_string(width) + " cells, got " +
                        std::to_string(cells.size()));
    std::vector<double> row;
    row.reserve(width - 1);
    for (int j = 0; j < width; ++j) {
      if (j == label_idx) continue;
      const auto v = detail::parse_real(cells[j]);
      if (!v)
        throw parse_error("unparseable cell at row " + std::to_string(line_no) +
                          ", column " + std::to_string(j + 1) + ": '" +
                          std::string(detail::trim(cells[j])) + "'");
      row.push_back(*v);
    }
    const auto lab = detail::trim(cells[label_idx]);
    if (lab.empty())
      throw parse_error("empty label at row " + std::to_string(line_no));
    labels.push_back(encoder.encode(lab));
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw parse_error("'" + path + "': no samples");
  if (encoder.size() < 2) throw parse_error("fewer than 2 classes");

  Matrix x(static_cast<Eigen::Index>(rows.size()), width - 1);
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (int j = 0; j < width - 1; ++j) x(static_cast<Eigen::Index>(i), j) = rows[i][j];
  return Dataset(std::move(x), std::move(labels), encoder.size(), encoder.names());
}

inline Dataset load_libsvm(const std::string& path) {
  auto in = detail::open_input(path);
  std::string line;
  int line_no = 0;
  std::vector<std::vector<std::pair<int, double>>> rows;
  std::vector<int> labels;
  detail::LabelEncoder encoder;
  int max_index = 0;
  while (std::getline(in, line)) {
    ++line_no;
    auto body = detail::trim(line);
    if (const auto hash = body.find('#'); hash != std::string_view::npos)
      body = detail::trim(body.substr(0, hash));
    if (body.empty()) continue;
    std::istringstream tokens{std::string(body)};
    std::string tok;
    tokens >> tok;
    labels.push_back(encoder.encode(tok));
    std::vector<std::pair<int, double>> entries;
    int prev = 0;
    while (tokens >> tok) {
      const auto colon = tok.find(':');
      if (colon == std::string::npos)
        throw parse_error("unparseable token '" + tok + "' at line " +
                          std::to_string(line_no));
      const auto idx = detail::parse_int(std::string_view(tok).substr(0, colon));
      const auto val = detail::parse_real(std::string_view(tok).substr(colon + 1));
      if (!idx || !val || *idx < 1)
        throw parse_error("unparseable token '" + tok + "' at line " +
                          std::to_string(line_no));
      if (*idx <= prev)
        throw parse_error("indices not ascending at line " +
                          std::to_string(line_no));
      prev = static_cast<int>(*idx);
      entries.emplace_back(prev, *val);
    }
    max_index = std::max(max_index, prev);
    rows.push_back(std::move(entries));
  }
  if (rows.empty()) throw parse_error("'" + path + "': no samples");
  if (encoder.size() < 2) throw parse_error("fewer than 2 classes");
  Matrix x = Matrix::Zero(static_cast<Eigen::Index>(rows.size()), max_index);
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (const auto& [j, v] : rows[i]) x(static_cast<Eigen::Index>(i), j - 1) = v;
  return Dataset(std::move(x), std::move(labels), encoder.size(), encoder.names());
}

// Writes features with 17 significant digits so that load_csv reproduces them
// bit-exactly. The label is the last column (class name when available).
inline void write_csv(const Dataset& data, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw io_error("cannot write '" + path + "'");
  out.precision(17);
  for (int j = 0; j < data.d(); ++j) out << 'f' << j + 1 << ',';
  out << "label\n";
  for (int i = 0; i < data.n(); ++i) {
    for (int j = 0; j < data.d(); ++j) out << data.features()(i, j) << ',';
    if (data.class_names().empty())
      out << data.label(i);
    else
      out << data.class_names()[data.label(i)];
    out << '\n';
  }
}

struct StandardizationStats {
  Vector mean;
  Vector std;  // zero deviations stored as 1
};

inline StandardizationStats fit_standardizer(const Dataset& train) {
  const auto& x = train.features();
  StandardizationStats s;
  s.mean = Vector::Zero(x.cols());
  s.std = Vector::Ones(x.cols());
  if (x.rows() == 0) return s;
  s.mean = x.colwise().mean().transpose();
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    const double var =
        (x.col(j).array() - s.mean(j)).square().sum() / static_cast<double>(x.rows());
    const double sd = std::sqrt(var);
    s.std(j) = sd > 0.0 ? sd : 1.0;
  }
  return s;
}

inline Dataset apply_standardizer(const StandardizationStats& stats,
                                  const Dataset& data) {
  require_same_dim(stats.mean.size(), data.d(), "apply_standardizer");
  Matrix x = (data.features().rowwise() - stats.mean.transpose()).array().rowwise() /
             stats.std.transpose().array();
  return data.with_features(std::move(x));
}

inline Dataset invert_standardizer(const StandardizationStats& stats,
                                   const Dataset& data) {
  require_same_dim(stats.mean.size(), data.d(), "invert_standardizer");
  Matrix x = (data.features().array().rowwise() * stats.std.transpose().array())
                 .matrix()
                 .rowwise() +
             stats.mean.transpose();
  return data.with_features(std::move(x));
}

struct FoldPlan {
  int k = 0;
  std::vector<int> assignment;  // fold index per sample
  std::uint64_t seed = 0;

  std::vector<int> test_indices(int fold) const {
    std::vector<int> out;
    for (int i = 0; i < static_cast<int>(assignment.size()); ++i)
      if (assignment[i] == fold) out.push_back(i);
    return out;
  }
  std::vector<int> train_indices(int fold) const {
    std::vector<int> out;
    for (int i = 0; i < static_cast<int>(assignment.size()); ++i)
      if (assignment[i] != fold) out.push_back(i);
    return out;
  }
};

// Stratified assignment: each class is shuffled with the seeded generator and
// the classes are dealt round-robin as one continuous sequence, so fold sizes
// differ by at most one both overall and within every class.
inline FoldPlan make_folds(const Dataset& data, int k, std::uint64_t seed) {
  if (k < 2 || k > data.n())
    throw config_error("fold count " + std::to_string(k) +
                       " out of range [2, " + std::to_string(data.n()) + "]");
  std::mt19937_64 rng(seed);
  std::vector<std::vector<int>> by_class(data.c());
  for (int i = 0; i < data.n(); ++i) by_class[data.label(i)].push_back(i);
  FoldPlan plan{k, std::vector<int>(data.n(), 0), seed};
  int next = 0;
  for (auto& members : by_class) {
    std::shuffle(members.begin(), members.end(), rng);
    for (int i : members) {
      plan.assignment[i] = next;
      next = (next + 1) % k;
    }
  }
  return plan;
}

}  // namespace m3svm
