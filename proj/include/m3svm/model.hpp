#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "m3svm/dataset.hpp"
#include "m3svm/error.hpp"

namespace m3svm {

// Linear multi-class model: class k scores w_k^T x + b_k, W is d x c.
struct LinearModel {
  Matrix W;
  Vector b;
  std::vector<std::string> class_names;

  LinearModel() = default;
  LinearModel(Matrix w, Vector bias, std::vector<std::string> names = {})
      : W(std::move(w)), b(std::move(bias)), class_names(std::move(names)) {
    require_same_dim(W.cols(), b.size(), "LinearModel bias");
  }

  static LinearModel zeros(int d, int c) {
    return LinearModel(Matrix::Zero(d, c), Vector::Zero(c));
  }

  int d() const noexcept { return static_cast<int>(W.rows()); }
  int c() const noexcept { return static_cast<int>(W.cols()); }
  bool finite() const { return W.allFinite() && b.allFinite(); }
};

template <class Derived>
Vector decision_scores(const LinearModel& model, const Eigen::MatrixBase<Derived>& x) {
  require_same_dim(model.d(), x.size(), "decision_scores");
  const Vector xv = x.derived().reshaped();
  return model.W.transpose() * xv + model.b;
}

// Index of the largest entry; ties go to the lowest index.
template <class Derived>
int argmax_lowest(const Eigen::MatrixBase<Derived>& v) {
  int best = 0;
  for (int k = 1; k < v.size(); ++k)
    if (v(k) > v(best)) best = k;
  return best;
}

template <class Derived>
int predict(const LinearModel& model, const Eigen::MatrixBase<Derived>& x) {
  return argmax_lowest(decision_scores(model, x));
}

// n x c score matrix for a whole dataset.
inline Matrix score_matrix(const LinearModel& model, const Matrix& x) {
  require_same_dim(model.d(), x.cols(), "score_matrix");
  return (x * model.W).rowwise() + model.b.transpose();
}

inline std::vector<int> predict_all(const LinearModel& model, const Matrix& x) {
  const Matrix s = score_matrix(model, x);
  std::vector<int> out(static_cast<std::size_t>(s.rows()));
  for (Eigen::Index i = 0; i < s.rows(); ++i) out[i] = argmax_lowest(s.row(i));
  return out;
}

inline double pairwise_margin(const LinearModel& model, int k, int l) {
  if (k == l || k < 0 || l < 0 || k >= model.c() || l >= model.c())
    throw config_error("pairwise_margin: invalid pair (" + std::to_string(k) +
                       ", " + std::to_string(l) + ")");
  const double norm = (model.W.col(k) - model.W.col(l)).norm();
  if (norm == 0.0) throw degenerate_pair_error(k, l);
  return 2.0 / norm;
}

struct PairMargin {
  int k;
  int l;
  double margin;
};

struct MarginReport {
  std::vector<PairMargin> pair_margins;  // k < l, lexicographic
  double min_margin = std::numeric_limits<double>::infinity();
  int argmin_k = -1;
  int argmin_l = -1;
};

inline MarginReport margin_report(const LinearModel& model) {
  MarginReport r;
  for (int k = 0; k < model.c(); ++k)
    for (int l = k + 1; l < model.c(); ++l) {
      const double m = pairwise_margin(model, k, l);
      r.pair_margins.push_back({k, l, m});
      if (m < r.min_margin) {
        r.min_margin = m;
        r.argmin_k = k;
        r.argmin_l = l;
      }
    }
  return r;
}

struct EvalReport {
  double accuracy = 0.0;
  int n = 0;
  // confusion(i, j): true class i predicted as j
  Eigen::MatrixXi confusion;
};

inline EvalReport evaluate_predictions(const std::vector<int>& predicted,
                                       const Dataset& data) {
  EvalReport r;
  r.n = data.n();
  r.confusion = Eigen::MatrixXi::Zero(data.c(), data.c());
  int correct = 0;
  for (int i = 0; i < data.n(); ++i) {
    ++r.confusion(data.label(i), predicted[i]);
    correct += predicted[i] == data.label(i);
  }
  r.accuracy = data.n() > 0 ? static_cast<double>(correct) / data.n() : 0.0;
  return r;
}

inline EvalReport evaluate(const LinearModel& model, const Dataset& data) {
  require_same_dim(model.d(), data.d(), "evaluate");
  require_same_dim(model.c(), data.c(), "evaluate classes");
  return evaluate_predictions(predict_all(model, data.features()), data);
}

}  // namespace m3svm
