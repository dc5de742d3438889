#pragma once

// Comparison methods: binary smoothed-hinge SVM and its one-vs-rest /
// one-vs-one decompositions, Crammer-Singer, Weston-Watkins (ridge form) and
// multinomial logistic regression. All train with the shared Adam loop.

#include <Eigen/Dense>

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "m3svm/dataset.hpp"
#include "m3svm/error.hpp"
#include "m3svm/model.hpp"
#include "m3svm/objective.hpp"
#include "m3svm/optim.hpp"

namespace m3svm {

struct BinaryModel {
  Vector w;
  double b = 0.0;

  template <class Derived>
  double score(const Eigen::MatrixBase<Derived>& x) const {
    return x.derived().reshaped().dot(w) + b;
  }
};

// sum_i g(1 - y_i (w^T x_i + b); delta) + lambda ||w||^2, label 0 -> +1,
// label 1 -> -1. Parameters live in a d x 1 LinearModel.
struct BinarySvmObjective {
  const Dataset& data;
  double lambda;
  double delta;

  LossBreakdown value_and_gradient(const LinearModel& m, Gradient& g) const {
    const Vector s = data.features() * m.W.col(0);
    Vector coef(data.n());
    double sum = 0.0;
    for (int i = 0; i < data.n(); ++i) {
      const double y = data.label(i) == 0 ? 1.0 : -1.0;
      const double x = 1.0 - y * (s(i) + m.b(0));
      sum += smoothed_hinge(x, delta);
      coef(i) = -y * smoothed_hinge_slope(x, delta);
    }
    g.W = data.features().transpose() * coef + 2.0 * lambda * m.W;
    g.b = Vector::Constant(1, coef.sum());
    return combine(sum, m.W.squaredNorm(), 0.0, lambda, 0.0);
  }
  LossBreakdown value(const LinearModel& m) const {
    Gradient unused;
    return value_and_gradient(m, unused);
  }
  bool centering_exact() const { return false; }
};

inline BinaryModel train_binary_svm(const Dataset& data, double lambda, double delta,
                                    const TrainConfig& cfg) {
  if (data.c() != 2) throw config_error("binary SVM needs a 2-class dataset");
  const auto counts = data.class_counts();
  if (counts[0] == 0 || counts[1] == 0)
    throw config_error("binary SVM: single-class input");
  auto result =
      minimize(BinarySvmObjective{data, lambda, delta},
               random_init(data.d(), 1, cfg.init_scale, cfg.seed), cfg);
  return {result.model.W.col(0), result.model.b(0)};
}

struct OvRModel {
  int c = 0;
  std::vector<BinaryModel> members;  // member k: class k positive
  std::vector<std::string> class_names;

  template <class Derived>
  int predict(const Eigen::MatrixBase<Derived>& x) const {
    Vector scores(c);
    for (int k = 0; k < c; ++k) scores(k) = members[k].score(x);
    return argmax_lowest(scores);
  }
};

struct PairModel {
  int k;
  int l;
  BinaryModel model;  // positive score votes for k
};

struct OvOModel {
  int c = 0;
  std::vector<PairModel> members;  // (k, l) with k < l, lexicographic
  std::vector<std::string> class_names;

  // Majority vote; a zero score votes for k, tied vote counts go to the
  // lowest class index.
  template <class Derived>
  int predict(const Eigen::MatrixBase<Derived>& x) const {
    std::vector<int> outcomes;
    outcomes.reserve(members.size());
    for (const auto& m : members) outcomes.push_back(m.model.score(x) >= 0.0 ? m.k : m.l);
    return vote(c, outcomes);
  }

  static int vote(int c, const std::vector<int>& winners) {
    Eigen::VectorXi votes = Eigen::VectorXi::Zero(c);
    for (int w : winners) ++votes(w);
    return argmax_lowest(votes);
  }
};

// Per-pair lambda overrides for OvO, keyed by (k, l) with k < l.
using PairLambdas = std::map<std::pair<int, int>, double>;

inline OvRModel train_ovr(const Dataset& data, double lambda, double delta,
                          const TrainConfig& cfg) {
  OvRModel out{data.c(), {}, data.class_names()};
  for (int k = 0; k < data.c(); ++k) {
    std::vector<int> y(data.n());
    for (int i = 0; i < data.n(); ++i) y[i] = data.label(i) == k ? 0 : 1;
    const Dataset sub(data.features(), std::move(y), 2);
    out.members.push_back(train_binary_svm(sub, lambda, delta, cfg));
  }
  return out;
}

inline OvOModel train_ovo(const Dataset& data, double lambda, double delta,
                          const TrainConfig& cfg, const PairLambdas& overrides = {}) {
  OvOModel out{data.c(), {}, data.class_names()};
  for (int k = 0; k < data.c(); ++k)
    for (int l = k + 1; l < data.c(); ++l) {
      std::vector<int> rows;
      std::vector<int> y;
      for (int i = 0; i < data.n(); ++i) {
        if (data.label(i) != k && data.label(i) != l) continue;
        rows.push_back(i);
        y.push_back(data.label(i) == k ? 0 : 1);
      }
      const Dataset picked = data.subset(rows);
      const Dataset sub(picked.features(), std::move(y), 2);
      const auto counts = sub.class_counts();
      if (counts[0] == 0 || counts[1] == 0)
        throw config_error("OvO: empty pair subproblem (" + std::to_string(k) + ", " +
                           std::to_string(l) + ")");
      const auto it = overrides.find({k, l});
      const double lam = it == overrides.end() ? lambda : it->second;
      out.members.push_back({k, l, train_binary_svm(sub, lam, delta, cfg)});
    }
  return out;
}

// sum_i max_{k != y_i} g(1 - f_{y_i k}(x_i)) + lambda sum_k ||w_k||^2 + epsilon ||b||^2.
// The max passes its gradient through the first maximizing class.
struct CrammerSingerObjective {
  const Dataset& data;
  double lambda;
  double delta;
  double epsilon = 1e-6;

  LossBreakdown value_and_gradient(const LinearModel& m, Gradient& g) const {
    const Matrix s = score_matrix(m, data.features());
    Matrix coef = Matrix::Zero(data.n(), data.c());
    double sum = 0.0;
    for (int i = 0; i < data.n(); ++i) {
      const int y = data.label(i);
      int worst = -1;
      for (int k = 0; k < data.c(); ++k) {
        if (k == y) continue;
        if (worst < 0 || s(i, k) > s(i, worst)) worst = k;
      }
      const double x = 1.0 - (s(i, y) - s(i, worst));
      sum += smoothed_hinge(x, delta);
      const double slope = smoothed_hinge_slope(x, delta);
      coef(i, y) -= slope;
      coef(i, worst) += slope;
    }
    g.W = data.features().transpose() * coef + 2.0 * lambda * m.W;
    g.b = coef.colwise().sum().transpose() + 2.0 * epsilon * m.b;
    return combine(sum, m.W.squaredNorm(), m.b.squaredNorm(), lambda, epsilon);
  }
  LossBreakdown value(const LinearModel& m) const {
    Gradient unused;
    return value_and_gradient(m, unused);
  }
  bool centering_exact() const { return true; }
};

// Weston-Watkins in ridge form:
// sum_i sum_{k != y_i} g(1 - f_{y_i k}(x_i)) + lambda sum_k ||w_k||^2 + epsilon ||b||^2.
struct WestonWatkinsObjective {
  const Dataset& data;
  double lambda;
  double delta;
  double epsilon = 1e-6;

  LossBreakdown value_and_gradient(const LinearModel& m, Gradient& g) const {
    ObjectiveConfig cfg;
    cfg.delta = delta;
    const Matrix s = score_matrix(m, data.features());
    Matrix coef = Matrix::Zero(data.n(), data.c());
    double sum = 0.0;
    for (int i = 0; i < data.n(); ++i) {
      const int y = data.label(i);
      for (int k = 0; k < data.c(); ++k) {
        if (k == y) continue;
        const auto [loss, slope] = margin_loss_and_slope(cfg, s(i, y) - s(i, k));
        sum += loss;
        coef(i, y) += slope;
        coef(i, k) -= slope;
      }
    }
    g.W = data.features().transpose() * coef + 2.0 * lambda * m.W;
    g.b = coef.colwise().sum().transpose() + 2.0 * epsilon * m.b;
    return combine(sum, m.W.squaredNorm(), m.b.squaredNorm(), lambda, epsilon);
  }
  LossBreakdown value(const LinearModel& m) const {
    Gradient unused;
    return value_and_gradient(m, unused);
  }
  bool centering_exact() const { return true; }
};

// softmax_loss + lambda sum_k ||w_k||^2 + epsilon ||b||^2.
struct MultinomialLogisticObjective {
  const Dataset& data;
  double lambda;
  double epsilon = 1e-6;

  LossBreakdown value_and_gradient(const LinearModel& m, Gradient& g) const {
    const Matrix s = score_matrix(m, data.features());
    Matrix coef(data.n(), data.c());
    double sum = 0.0;
    for (int i = 0; i < data.n(); ++i) {
      const double top = s.row(i).maxCoeff();
      const Eigen::RowVectorXd e = (s.row(i).array() - top).exp().matrix();
      const double z = e.sum();
      sum += top + std::log(z) - s(i, data.label(i));
      coef.row(i) = e / z;
      coef(i, data.label(i)) -= 1.0;
    }
    g.W = data.features().transpose() * coef + 2.0 * lambda * m.W;
    g.b = coef.colwise().sum().transpose() + 2.0 * epsilon * m.b;
    return combine(sum, m.W.squaredNorm(), m.b.squaredNorm(), lambda, epsilon);
  }
  LossBreakdown value(const LinearModel& m) const {
    Gradient unused;
    return value_and_gradient(m, unused);
  }
  bool centering_exact() const { return true; }
};

// Trains any linear objective from the seeded initialization.
template <TrainableObjective Objective>
TrainResult train_objective(const Objective& objective, const Dataset& data,
                            const TrainConfig& cfg, const EvalHook& eval = {}) {
  if (data.n() == 0) throw config_error("train: empty dataset");
  auto result = minimize(
      objective, random_init(data.d(), data.c(), cfg.init_scale, cfg.seed), cfg, eval);
  result.model.class_names = data.class_names();
  return result;
}

inline LinearModel train_crammer(const Dataset& data, double lambda, double delta,
                                 const TrainConfig& cfg, double epsilon = 1e-6) {
  return train_objective(CrammerSingerObjective{data, lambda, delta, epsilon}, data, cfg).model;
}

inline LinearModel train_ww(const Dataset& data, double lambda, double delta,
                            const TrainConfig& cfg, double epsilon = 1e-6) {
  return train_objective(WestonWatkinsObjective{data, lambda, delta, epsilon}, data, cfg).model;
}

inline LinearModel train_multilr(const Dataset& data, double lambda, const TrainConfig& cfg,
                                 double epsilon = 1e-6) {
  return train_objective(MultinomialLogisticObjective{data, lambda, epsilon}, data, cfg).model;
}

}  // namespace m3svm
