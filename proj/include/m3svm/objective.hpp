#pragma once

// The max-min-margin objective: pairwise-difference regularizer, smoothed
// hinge or logistic pairwise loss, and the mean-zero penalty. Both the
// per-sample and the class-pair summation orders are provided, together with
// analytic gradients and the identities used by the verification suite.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "m3svm/dataset.hpp"
#include "m3svm/error.hpp"
#include "m3svm/model.hpp"

namespace m3svm {

enum class LossKind { smoothed_hinge, logistic };
enum class RegNorm { l2, l1 };

inline const char* to_string(LossKind k) {
  return k == LossKind::smoothed_hinge ? "smoothed_hinge" : "logistic";
}
inline const char* to_string(RegNorm r) { return r == RegNorm::l2 ? "l2" : "l1"; }

inline LossKind parse_loss_kind(const std::string& s) {
  if (s == "smoothed_hinge" || s == "hinge") return LossKind::smoothed_hinge;
  if (s == "logistic") return LossKind::logistic;
  throw config_error("unknown loss kind '" + s + "'");
}
inline RegNorm parse_reg_norm(const std::string& s) {
  if (s == "l2") return RegNorm::l2;
  if (s == "l1") return RegNorm::l1;
  throw config_error("unknown regularizer norm '" + s + "'");
}

struct ObjectiveConfig {
  LossKind loss = LossKind::smoothed_hinge;
  RegNorm reg_norm = RegNorm::l2;
  double p = 4.0;
  double lambda = 1e-3;
  double epsilon = 1e-6;
  double delta = 1e-3;  // smoothing width, smoothed_hinge only

  void validate() const {
    if (!(p > 0.0)) throw config_error("p must be positive");
    if (!(lambda >= 0.0)) throw config_error("lambda must be nonnegative");
    if (!(epsilon >= 0.0)) throw config_error("epsilon must be nonnegative");
    if (loss == LossKind::smoothed_hinge && !(delta >= 0.0))
      throw config_error("delta must be nonnegative");
  }
};

struct LossBreakdown {
  double data_loss = 0.0;
  double reg_term = 0.0;
  double eps_term = 0.0;
  double total = 0.0;
};

inline LossBreakdown combine(double data_loss, double reg_term, double eps_term,
                             double lambda, double epsilon) {
  return {data_loss, reg_term, eps_term,
          data_loss + lambda * reg_term + epsilon * eps_term};
}

// Gradient with respect to (W, b), same shapes as the model.
struct Gradient {
  Matrix W;
  Vector b;
};

// (x + sqrt(x^2 + delta^2)) / 2; exactly max(0, x) when delta = 0.
inline double smoothed_hinge(double x, double delta) {
  if (delta == 0.0) return x > 0.0 ? x : 0.0;
  return 0.5 * (x + std::sqrt(x * x + delta * delta));
}

// d/dx of smoothed_hinge: (x + r) / (2 r), r = sqrt(x^2 + delta^2).
// At the kink of the exact hinge (delta = 0, x = 0) the subgradient 1/2 is used.
inline double smoothed_hinge_slope(double x, double delta) {
  const double r = std::sqrt(x * x + delta * delta);
  if (r == 0.0) return 0.5;
  return (x + r) / (2.0 * r);
}

// log(1 + exp(t)) without overflow.
inline double softplus(double t) {
  return t > 0.0 ? t + std::log1p(std::exp(-t)) : std::log1p(std::exp(t));
}

inline double sigmoid(double t) {
  if (t >= 0.0) return 1.0 / (1.0 + std::exp(-t));
  const double e = std::exp(t);
  return e / (1.0 + e);
}

// Loss of a single functional margin m = f_{yk}(x) = s_y - s_k.
inline double margin_loss(const ObjectiveConfig& cfg, double m) {
  return cfg.loss == LossKind::smoothed_hinge ? smoothed_hinge(1.0 - m, cfg.delta)
                                              : softplus(-m);
}

// Loss and d(loss)/dm together, sharing the square root / exponential.
inline std::pair<double, double> margin_loss_and_slope(const ObjectiveConfig& cfg, double m) {
  if (cfg.loss == LossKind::smoothed_hinge) {
    const double x = 1.0 - m;
    const double r = std::sqrt(x * x + cfg.delta * cfg.delta);
    if (r == 0.0) return {0.0, -0.5};
    if (cfg.delta == 0.0) return {x > 0.0 ? x : 0.0, -(x + r) / (2.0 * r)};
    return {0.5 * (x + r), -(x + r) / (2.0 * r)};
  }
  return {softplus(-m), -sigmoid(-m)};
}

// d(margin_loss)/dm.
inline double margin_loss_slope(const ObjectiveConfig& cfg, double m) {
  return cfg.loss == LossKind::smoothed_hinge
             ? -smoothed_hinge_slope(1.0 - m, cfg.delta)
             : -sigmoid(-m);
}

namespace detail {

inline double column_distance(const Matrix& W, int k, int l, RegNorm norm) {
  return norm == RegNorm::l2 ? (W.col(k) - W.col(l)).norm()
                             : (W.col(k) - W.col(l)).lpNorm<1>();
}

inline void check_dims(const LinearModel& model, const Dataset& data, const char* what) {
  require_same_dim(model.d(), data.d(), what);
  require_same_dim(model.c(), data.c(), what);
  require_same_dim(model.c(), model.b.size(), what);
}

}  // namespace detail

// sum_{k<l} ||w_k - w_l||^p under the chosen norm.
inline double regularizer(const Matrix& W, double p, RegNorm norm = RegNorm::l2) {
  double sum = 0.0;
  const int c = static_cast<int>(W.cols());
  for (int k = 0; k < c; ++k)
    for (int l = k + 1; l < c; ++l)
      sum += std::pow(detail::column_distance(W, k, l, norm), p);
  return sum;
}

// Gradient of regularizer(). Pairs with identical columns contribute zero.
inline Matrix regularizer_gradient(const Matrix& W, double p, RegNorm norm = RegNorm::l2) {
  const int c = static_cast<int>(W.cols());
  Matrix g = Matrix::Zero(W.rows(), c);
  for (int k = 0; k < c; ++k)
    for (int l = k + 1; l < c; ++l) {
      const Vector diff = W.col(k) - W.col(l);
      const double dist = detail::column_distance(W, k, l, norm);
      if (dist == 0.0) continue;
      Vector term;
      if (norm == RegNorm::l2) {
        term = p * std::pow(dist, p - 2.0) * diff;
      } else {
        term = p * std::pow(dist, p - 1.0) * diff.array().sign().matrix();
      }
      g.col(k) += term;
      g.col(l) -= term;
    }
  return g;
}

inline double eps_penalty(const LinearModel& model) {
  return model.W.squaredNorm() + model.b.squaredNorm();
}

// Data term summed sample by sample: sum_i sum_{k != y_i} loss(f_{y_i k}(x_i)).
inline double persample_data_loss(const LinearModel& model, const Dataset& data,
                                  const ObjectiveConfig& cfg) {
  const Matrix s = score_matrix(model, data.features());
  double sum = 0.0;
  for (int i = 0; i < data.n(); ++i) {
    const int y = data.label(i);
    for (int k = 0; k < data.c(); ++k) {
      if (k == y) continue;
      sum += margin_loss(cfg, s(i, y) - s(i, k));
    }
  }
  return sum;
}

inline LossBreakdown persample_objective(const LinearModel& model, const Dataset& data,
                                         const ObjectiveConfig& cfg) {
  detail::check_dims(model, data, "persample_objective");
  return combine(persample_data_loss(model, data, cfg),
                 regularizer(model.W, cfg.p, cfg.reg_norm), eps_penalty(model),
                 cfg.lambda, cfg.epsilon);
}

// Same objective summed over class pairs k < l and the samples of those two
// classes, with y_ikl = +1 for class k and -1 for class l.
inline LossBreakdown pairwise_objective(const LinearModel& model, const Dataset& data,
                                        const ObjectiveConfig& cfg) {
  detail::check_dims(model, data, "pairwise_objective");
  std::vector<std::vector<int>> members(data.c());
  for (int i = 0; i < data.n(); ++i) members[data.label(i)].push_back(i);
  const Matrix& x = data.features();
  double sum = 0.0;
  for (int k = 0; k < data.c(); ++k)
    for (int l = k + 1; l < data.c(); ++l) {
      const Vector w_kl = model.W.col(k) - model.W.col(l);
      const double b_kl = model.b(k) - model.b(l);
      for (int cls : {k, l}) {
        const double sign = cls == k ? 1.0 : -1.0;
        for (int i : members[cls]) {
          const double f_kl = x.row(i).dot(w_kl) + b_kl;
          sum += margin_loss(cfg, sign * f_kl);
        }
      }
    }
  return combine(sum, regularizer(model.W, cfg.p, cfg.reg_norm), eps_penalty(model),
                 cfg.lambda, cfg.epsilon);
}

namespace detail {

// X * W + 1 b^T as one matrix-vector product per class. With a handful of
// classes this beats a blocked matrix product, which repacks X on every call.
inline void scores_into(const Matrix& x, const LinearModel& model, Matrix& s) {
  s.resize(x.rows(), model.c());
  for (int k = 0; k < model.c(); ++k) {
    s.col(k).noalias() = x * model.W.col(k);
    s.col(k).array() += model.b(k);
  }
}

// X^T G, same scheme.
inline void transpose_product_into(const Matrix& x, const Matrix& g, Matrix& out) {
  out.resize(x.cols(), g.cols());
  for (Eigen::Index k = 0; k < g.cols(); ++k) out.col(k).noalias() = x.transpose() * g.col(k);
}

}  // namespace detail

// Objective and gradient in one pass. Per-sample contributions are gathered
// into an n x c score-gradient matrix G (d loss / d score) and reduced in
// index order, so the result does not depend on threading.
inline LossBreakdown objective_and_gradient(const LinearModel& model, const Dataset& data,
                                            const ObjectiveConfig& cfg, Gradient& grad) {
  detail::check_dims(model, data, "gradient");
  const int n = data.n();
  const int c = data.c();
  Matrix s;
  detail::scores_into(data.features(), model, s);
  // margins(i, k) = s(i, y_i) - s(i, k); the k = y_i entries are masked out.
  Eigen::ArrayXd own(n);
  Eigen::ArrayXXd mask = Eigen::ArrayXXd::Ones(n, c);
  for (int i = 0; i < n; ++i) {
    own(i) = s(i, data.label(i));
    mask(i, data.label(i)) = 0.0;
  }
  const Eigen::ArrayXXd margins = (-s.array()).colwise() + own;
  Eigen::ArrayXXd loss(n, c);
  Eigen::ArrayXXd slope(n, c);
  if (cfg.loss == LossKind::smoothed_hinge && cfg.delta > 0.0) {
    const Eigen::ArrayXXd x = 1.0 - margins;
    const Eigen::ArrayXXd r = (x.square() + cfg.delta * cfg.delta).sqrt();
    loss = 0.5 * (x + r);
    slope = -(x + r) / (2.0 * r);
  } else if (cfg.loss == LossKind::logistic) {
    // softplus(-m) = max(-m, 0) + log1p(exp(-|m|)); slope = -sigmoid(-m)
    const Eigen::ArrayXXd e = (-margins.abs()).exp();
    loss = (-margins).max(0.0) + e.log1p();
    slope = (margins >= 0.0).select(-e / (1.0 + e), -1.0 / (1.0 + e));
  } else {
    for (int i = 0; i < n; ++i)
      for (int k = 0; k < c; ++k) {
        const auto [l, d] = margin_loss_and_slope(cfg, margins(i, k));
        loss(i, k) = l;
        slope(i, k) = d;
      }
  }
  loss *= mask;
  slope *= mask;
  const double sum = loss.sum();
  Eigen::ArrayXd own_slope = Eigen::ArrayXd::Zero(n);
  for (int k = 0; k < c; ++k) own_slope += slope.col(k);
  Matrix g = -slope.matrix();
  for (int i = 0; i < n; ++i) g(i, data.label(i)) = own_slope(i);
  detail::transpose_product_into(data.features(), g, grad.W);
  grad.b = g.colwise().sum().transpose();
  if (cfg.lambda != 0.0)
    grad.W += cfg.lambda * regularizer_gradient(model.W, cfg.p, cfg.reg_norm);
  grad.W += 2.0 * cfg.epsilon * model.W;
  grad.b += 2.0 * cfg.epsilon * model.b;
  return combine(sum, regularizer(model.W, cfg.p, cfg.reg_norm), eps_penalty(model),
                 cfg.lambda, cfg.epsilon);
}

inline Gradient gradient(const LinearModel& model, const Dataset& data,
                         const ObjectiveConfig& cfg) {
  Gradient g;
  objective_and_gradient(model, data, cfg, g);
  return g;
}

// Ridge form: data term + lambda * c * sum_k ||w_k||^2 + epsilon * ||b||^2.
// reg_term holds c * sum_k ||w_k||^2 and eps_term holds ||b||^2.
inline LossBreakdown l2_equivalent_objective(const LinearModel& model, const Dataset& data,
                                             double lambda, double epsilon,
                                             double delta = 1e-3) {
  detail::check_dims(model, data, "l2_equivalent_objective");
  ObjectiveConfig cfg;
  cfg.delta = delta;
  return combine(persample_data_loss(model, data, cfg),
                 model.c() * model.W.squaredNorm(), model.b.squaredNorm(), lambda,
                 epsilon);
}

// |sum_{k<l} ||w_k - w_l||^2 - c * sum_k ||w_k - mean||^2|
inline double variance_identity_residual(const Matrix& W) {
  const double pairwise = regularizer(W, 2.0, RegNorm::l2);
  const Vector mean = W.rowwise().mean();
  const double spread =
      static_cast<double>(W.cols()) * (W.colwise() - mean).squaredNorm();
  return std::abs(pairwise - spread);
}

struct BoundCheck {
  double lhs = 0.0;
  double rhs = 0.0;
};

// lhs = max_i (sum_{k<l} |(w_k - w_l)^T x_i|^p)^{1/p}
// rhs = max_i ||x_i||_2 * (sum_{k<l} ||w_k - w_l||_2^p)^{1/p}
inline BoundCheck srm_bound_check(const LinearModel& model, const Dataset& data, double p) {
  if (data.n() == 0) throw config_error("srm_bound_check: empty dataset");
  if (!(p >= 1.0)) throw config_error("srm_bound_check: p must be >= 1");
  require_same_dim(model.d(), data.d(), "srm_bound_check");
  const Matrix& x = data.features();
  const int c = model.c();
  BoundCheck out;
  double radius = 0.0;
  for (int i = 0; i < data.n(); ++i) {
    double sum = 0.0;
    for (int k = 0; k < c; ++k)
      for (int l = k + 1; l < c; ++l)
        sum += std::pow(std::abs(x.row(i).dot(model.W.col(k) - model.W.col(l))), p);
    out.lhs = std::max(out.lhs, std::pow(sum, 1.0 / p));
    radius = std::max(radius, x.row(i).norm());
  }
  out.rhs = radius * std::pow(regularizer(model.W, p, RegNorm::l2), 1.0 / p);
  return out;
}

// sum_i log(1 + sum_{j != y_i} exp(s_j - s_{y_i})), evaluated as
// logsumexp(s_i) - s_{y_i}.
inline double softmax_loss(const LinearModel& model, const Dataset& data) {
  detail::check_dims(model, data, "softmax_loss");
  const Matrix s = score_matrix(model, data.features());
  double sum = 0.0;
  for (int i = 0; i < data.n(); ++i) {
    const double top = s.row(i).maxCoeff();
    const double lse = top + std::log((s.row(i).array() - top).exp().sum());
    sum += lse - s(i, data.label(i));
  }
  return sum;
}

}  // namespace m3svm
