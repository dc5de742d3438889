#pragma once

// Full-batch Adam, the generic training loop shared by every linear
// objective, and the finite-difference gradient check.

#include <Eigen/Dense>

#include <chrono>
#include <cmath>
#include <concepts>
#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "m3svm/dataset.hpp"
#include "m3svm/error.hpp"
#include "m3svm/model.hpp"
#include "m3svm/objective.hpp"

namespace m3svm {

enum class LrDecay { constant, linear };

inline const char* to_string(LrDecay d) { return d == LrDecay::constant ? "constant" : "linear"; }
inline LrDecay parse_lr_decay(const std::string& s) {
  if (s == "constant") return LrDecay::constant;
  if (s == "linear") return LrDecay::linear;
  throw config_error("unknown lr_decay '" + s + "'");
}

struct TrainConfig {
  double learning_rate = 5e-2;
  // linear: step size falls from learning_rate to 0 over max_iters.
  LrDecay lr_decay = LrDecay::linear;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  int max_iters = 2000;
  double rel_tol = 1e-8;
  int tol_window = 10;
  std::uint64_t seed = 0;
  double init_scale = 1e-2;
  // Re-center W's columns and b after every step. Only applied to objectives
  // whose non-penalty terms are invariant to adding the same vector to every
  // column (and the same scalar to every bias).
  bool center = true;

  void validate() const {
    if (!(learning_rate > 0.0)) throw config_error("learning_rate must be positive");
    if (!(beta1 >= 0.0 && beta1 < 1.0)) throw config_error("beta1 must be in [0, 1)");
    if (!(beta2 >= 0.0 && beta2 < 1.0)) throw config_error("beta2 must be in [0, 1)");
    if (!(adam_eps > 0.0)) throw config_error("adam_eps must be positive");
    if (max_iters < 1) throw config_error("max_iters must be >= 1");
    if (!(rel_tol >= 0.0)) throw config_error("rel_tol must be nonnegative");
    if (tol_window < 1) throw config_error("tol_window must be >= 1");
    if (!(init_scale >= 0.0)) throw config_error("init_scale must be nonnegative");
  }
};

struct AdamState {
  Matrix m_W, v_W;
  Vector m_b, v_b;
  long t = 0;

  static AdamState zeros_like(const LinearModel& m) {
    return {Matrix::Zero(m.W.rows(), m.W.cols()), Matrix::Zero(m.W.rows(), m.W.cols()),
            Vector::Zero(m.b.size()), Vector::Zero(m.b.size()), 0};
  }
};

namespace detail {

inline void check_finite_gradient(const Gradient& g) {
  for (Eigen::Index k = 0; k < g.W.cols(); ++k)
    for (Eigen::Index j = 0; j < g.W.rows(); ++j)
      if (!std::isfinite(g.W(j, k)))
        throw numeric_error("non-finite gradient at W(" + std::to_string(j) + ", " +
                            std::to_string(k) + ")");
  for (Eigen::Index k = 0; k < g.b.size(); ++k)
    if (!std::isfinite(g.b(k)))
      throw numeric_error("non-finite gradient at b(" + std::to_string(k) + ")");
}

template <class P, class G, class M, class V>
void adam_update(P& param, const G& grad, M& m, V& v, double lr, double c1, double c2,
                 const TrainConfig& cfg) {
  m = cfg.beta1 * m + (1.0 - cfg.beta1) * grad;
  v = cfg.beta2 * v + (1.0 - cfg.beta2) * grad.cwiseProduct(grad);
  param.array() -= lr * (m.array() / c1) / ((v.array() / c2).sqrt() + cfg.adam_eps);
}

}  // namespace detail

inline double step_size(const TrainConfig& cfg, int iter) {
  if (cfg.lr_decay == LrDecay::constant) return cfg.learning_rate;
  return cfg.learning_rate * (1.0 - static_cast<double>(iter) / cfg.max_iters);
}

// One bias-corrected Adam step on (W, b); lr defaults to cfg.learning_rate.
inline void adam_step(LinearModel& params, const Gradient& grads, AdamState& state,
                      const TrainConfig& cfg, std::optional<double> lr = std::nullopt) {
  const double rate = lr.value_or(cfg.learning_rate);
  require_same_dim(params.W.size(), grads.W.size(), "adam_step W");
  require_same_dim(params.b.size(), grads.b.size(), "adam_step b");
  detail::check_finite_gradient(grads);
  ++state.t;
  const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.t));
  const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.t));
  detail::adam_update(params.W, grads.W, state.m_W, state.v_W, rate, c1, c2, cfg);
  detail::adam_update(params.b, grads.b, state.m_b, state.v_b, rate, c1, c2, cfg);
}

// Subtracts the mean column from W and the mean from b.
inline void center_translation(LinearModel& model) {
  const Vector mean = model.W.rowwise().mean();
  model.W.colwise() -= mean;
  model.b.array() -= model.b.mean();
}

struct TraceEntry {
  int iter = 0;
  LossBreakdown loss;
  std::optional<double> eval_accuracy;
  double seconds = 0.0;  // wall clock spent on this iteration
};

struct TrainTrace {
  std::vector<TraceEntry> entries;

  std::size_t size() const { return entries.size(); }
  double objective(std::size_t i) const { return entries[i].loss.total; }
  double final_objective() const { return entries.back().loss.total; }
  double min_objective() const {
    double m = entries.front().loss.total;
    for (const auto& e : entries) m = std::min(m, e.loss.total);
    return m;
  }
};

// Anything the training loop can minimize.
template <class P>
concept TrainableObjective = requires(const P& p, const LinearModel& m, Gradient& g) {
  { p.value(m) } -> std::same_as<LossBreakdown>;
  { p.value_and_gradient(m, g) } -> std::same_as<LossBreakdown>;
  { p.centering_exact() } -> std::convertible_to<bool>;
};

// The max-min-margin objective (smoothed hinge or logistic data term).
struct MarginObjective {
  const Dataset& data;
  ObjectiveConfig cfg;

  LossBreakdown value(const LinearModel& m) const { return persample_objective(m, data, cfg); }
  LossBreakdown value_and_gradient(const LinearModel& m, Gradient& g) const {
    return objective_and_gradient(m, data, cfg, g);
  }
  bool centering_exact() const { return true; }
};

struct TrainResult {
  LinearModel model;
  TrainTrace trace;
  bool converged = false;  // stopped by rel_tol before max_iters
};

// Called after each recorded iteration; returns the eval accuracy to store.
using EvalHook = std::function<std::optional<double>(const LinearModel&)>;

inline LinearModel random_init(int d, int c, double scale, std::uint64_t seed) {
  if (scale == 0.0) return LinearModel::zeros(d, c);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, scale);
  LinearModel m = LinearModel::zeros(d, c);
  for (Eigen::Index k = 0; k < m.W.cols(); ++k)
    for (Eigen::Index j = 0; j < m.W.rows(); ++j) m.W(j, k) = normal(rng);
  for (Eigen::Index k = 0; k < m.b.size(); ++k) m.b(k) = normal(rng);
  return m;
}

template <TrainableObjective Objective>
TrainResult minimize(const Objective& objective, LinearModel init, const TrainConfig& cfg,
                     const EvalHook& eval = {}) {
  cfg.validate();
  using clock = std::chrono::steady_clock;
  const bool center = cfg.center && objective.centering_exact();
  TrainResult out{std::move(init), {}, false};
  LinearModel& model = out.model;
  if (center) center_translation(model);
  AdamState state = AdamState::zeros_like(model);
  Gradient grad;
  out.trace.entries.reserve(static_cast<std::size_t>(cfg.max_iters));
  for (int it = 0; it < cfg.max_iters; ++it) {
    const auto start = clock::now();
    const LossBreakdown loss = objective.value_and_gradient(model, grad);
    if (!std::isfinite(loss.total))
      throw numeric_error("objective became non-finite at iteration " + std::to_string(it) +
                          " (data_loss=" + std::to_string(loss.data_loss) +
                          ", reg_term=" + std::to_string(loss.reg_term) +
                          ", eps_term=" + std::to_string(loss.eps_term) + ")");
    TraceEntry entry{it, loss, eval ? eval(model) : std::nullopt, 0.0};
    const auto& prev = out.trace.entries;
    // Converged when every objective over the last tol_window steps lies
    // within rel_tol of the current one. Comparing only the two endpoints
    // stops on an oscillation that happens to revisit the same height.
    if (static_cast<int>(prev.size()) >= cfg.tol_window) {
      double lo = loss.total;
      double hi = loss.total;
      for (std::size_t j = prev.size() - cfg.tol_window; j < prev.size(); ++j) {
        lo = std::min(lo, prev[j].loss.total);
        hi = std::max(hi, prev[j].loss.total);
      }
      if (hi - lo <= cfg.rel_tol * std::abs(loss.total)) {
        entry.seconds = std::chrono::duration<double>(clock::now() - start).count();
        out.trace.entries.push_back(entry);
        out.converged = true;
        break;
      }
    }
    adam_step(model, grad, state, cfg, step_size(cfg, it));
    if (center) center_translation(model);
    entry.seconds = std::chrono::duration<double>(clock::now() - start).count();
    out.trace.entries.push_back(entry);
  }
  return out;
}

inline TrainResult train(const Dataset& data, const ObjectiveConfig& obj_cfg,
                         const TrainConfig& train_cfg,
                         const std::optional<Dataset>& eval_set = std::nullopt) {
  obj_cfg.validate();
  if (data.n() == 0) throw config_error("train: empty dataset");
  EvalHook hook;
  if (eval_set) {
    require_same_dim(data.d(), eval_set->d(), "train eval set");
    hook = [&eval_set](const LinearModel& m) -> std::optional<double> {
      return evaluate(m, *eval_set).accuracy;
    };
  }
  auto result = minimize(MarginObjective{data, obj_cfg},
                         random_init(data.d(), data.c(), train_cfg.init_scale, train_cfg.seed),
                         train_cfg, hook);
  result.model.class_names = data.class_names();
  return result;
}

struct GradcheckReport {
  double max_rel_error = 0.0;
  long coordinates_checked = 0;
  long coordinates_skipped = 0;  // both gradients below the absolute floor
  int trials = 0;
};

using GradientFn = std::function<Gradient(const LinearModel&)>;
// Objective values for differencing; long double keeps the cancellation in
// f(x + h) - f(x - h) well below the tolerance.
using ValueFn = std::function<long double(const LinearModel&)>;

// Straight-loop evaluation of the full objective in extended precision. Kept
// separate from the production code path so the check is independent of it.
inline long double objective_extended(const LinearModel& model, const Dataset& data,
                                      const ObjectiveConfig& cfg) {
  using real = long double;
  const int d = model.d();
  const int c = model.c();
  real data_loss = 0.0L;
  std::vector<real> score(static_cast<std::size_t>(c));
  for (int i = 0; i < data.n(); ++i) {
    for (int k = 0; k < c; ++k) {
      real acc = model.b(k);
      for (int j = 0; j < d; ++j) acc += static_cast<real>(data.features()(i, j)) * model.W(j, k);
      score[k] = acc;
    }
    const int y = data.label(i);
    for (int k = 0; k < c; ++k) {
      if (k == y) continue;
      const real m = score[y] - score[k];
      if (cfg.loss == LossKind::smoothed_hinge) {
        const real x = 1.0L - m;
        const real delta = cfg.delta;
        data_loss += delta == 0.0L ? std::max(x, 0.0L) : 0.5L * (x + std::sqrt(x * x + delta * delta));
      } else {
        data_loss += -m > 0.0L ? -m + std::log1p(std::exp(m)) : std::log1p(std::exp(-m));
      }
    }
  }
  real reg = 0.0L;
  for (int k = 0; k < c; ++k)
    for (int l = k + 1; l < c; ++l) {
      real dist = 0.0L;
      for (int j = 0; j < d; ++j) {
        const real diff = static_cast<real>(model.W(j, k)) - model.W(j, l);
        dist += cfg.reg_norm == RegNorm::l2 ? diff * diff : std::abs(diff);
      }
      if (cfg.reg_norm == RegNorm::l2) dist = std::sqrt(dist);
      reg += std::pow(dist, static_cast<real>(cfg.p));
    }
  real eps = 0.0L;
  for (int k = 0; k < c; ++k) {
    eps += static_cast<real>(model.b(k)) * model.b(k);
    for (int j = 0; j < d; ++j) eps += static_cast<real>(model.W(j, k)) * model.W(j, k);
  }
  return data_loss + static_cast<real>(cfg.lambda) * reg + static_cast<real>(cfg.epsilon) * eps;
}

// Central differences over every coordinate of W and b at one point. The step
// actually taken, (x + h) - (x - h) in double, is used as the denominator.
inline void gradcheck_point(const ValueFn& value, const GradientFn& grad,
                            const LinearModel& at, double step, double floor,
                            GradcheckReport& report) {
  const Gradient analytic = grad(at);
  LinearModel probe = at;
  auto check = [&](double& coord, double a) {
    const double saved = coord;
    const double up_at = saved + step;
    const double down_at = saved - step;
    coord = up_at;
    const long double up = value(probe);
    coord = down_at;
    const long double down = value(probe);
    coord = saved;
    const double numeric =
        static_cast<double>((up - down) / (static_cast<long double>(up_at) - down_at));
    const double scale = std::max(std::abs(a), std::abs(numeric));
    if (scale < floor) {
      ++report.coordinates_skipped;
      return;
    }
    ++report.coordinates_checked;
    report.max_rel_error = std::max(report.max_rel_error, std::abs(a - numeric) / scale);
  };
  for (Eigen::Index k = 0; k < probe.W.cols(); ++k)
    for (Eigen::Index j = 0; j < probe.W.rows(); ++j) check(probe.W(j, k), analytic.W(j, k));
  for (Eigen::Index k = 0; k < probe.b.size(); ++k) check(probe.b(k), analytic.b(k));
}

// Random models around unit scale; step 1e-6 central differences. Relative
// error per coordinate is |a - n| / max(|a|, |n|); coordinates where both are
// below `floor` are skipped.
inline GradcheckReport gradcheck(const Dataset& data, const ObjectiveConfig& cfg, int trials,
                                 std::uint64_t seed, const GradientFn& gradient_override = {},
                                 double step = 1e-6, double floor = 1e-12) {
  cfg.validate();
  GradcheckReport report;
  const ValueFn value = [&](const LinearModel& m) { return objective_extended(m, data, cfg); };
  const GradientFn grad = gradient_override
                              ? gradient_override
                              : GradientFn([&](const LinearModel& m) { return gradient(m, data, cfg); });
  for (int t = 0; t < trials; ++t) {
    const LinearModel m = random_init(data.d(), data.c(), 1.0, seed + static_cast<std::uint64_t>(t));
    gradcheck_point(value, grad, m, step, floor, report);
    ++report.trials;
  }
  return report;
}

}  // namespace m3svm
