#pragma once

// Method dispatch, cross-validation, grid search, nested model selection,
// p-sweeps and method comparison. Every batch of independent trainings runs
// through parallel_for and lands in an indexed slot, so results do not depend
// on the worker count.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <variant>
#include <vector>

#include "m3svm/baselines.hpp"
#include "m3svm/dataset.hpp"
#include "m3svm/error.hpp"
#include "m3svm/model.hpp"
#include "m3svm/objective.hpp"
#include "m3svm/optim.hpp"

namespace m3svm {

enum class Method { m3svm, ism3, ovr, ovo, crammer, ww, multilr };

inline const char* to_string(Method m) {
  switch (m) {
    case Method::m3svm: return "m3svm";
    case Method::ism3: return "ism3";
    case Method::ovr: return "ovr";
    case Method::ovo: return "ovo";
    case Method::crammer: return "crammer";
    case Method::ww: return "ww";
    case Method::multilr: return "multilr";
  }
  return "?";
}

inline Method parse_method(const std::string& s) {
  for (Method m : {Method::m3svm, Method::ism3, Method::ovr, Method::ovo, Method::crammer,
                   Method::ww, Method::multilr})
    if (s == to_string(m)) return m;
  throw config_error("unknown method '" + s + "'");
}

// Only the max-min-margin methods have a p.
inline bool uses_p(Method m) { return m == Method::m3svm || m == Method::ism3; }

inline const std::vector<Method>& all_methods() {
  static const std::vector<Method> list{Method::m3svm, Method::ism3,   Method::ovr,
                                        Method::ovo,   Method::crammer, Method::ww,
                                        Method::multilr};
  return list;
}

struct MethodConfig {
  Method method = Method::m3svm;
  // lambda, epsilon and delta are read by every method; p, loss and
  // reg_norm only by m3svm / ism3.
  ObjectiveConfig objective;
  TrainConfig train;
  PairLambdas pair_lambdas;  // ovo only

  ObjectiveConfig effective_objective() const {
    ObjectiveConfig o = objective;
    if (method == Method::ism3) o.loss = LossKind::logistic;
    if (method == Method::m3svm) o.loss = LossKind::smoothed_hinge;
    return o;
  }
};

using Classifier = std::variant<LinearModel, OvRModel, OvOModel>;

struct FittedClassifier {
  Method method = Method::m3svm;
  Classifier model;
  std::optional<StandardizationStats> scaler;
  std::optional<TrainTrace> trace;  // single-model methods only

  const LinearModel* linear() const { return std::get_if<LinearModel>(&model); }
  int c() const {
    return std::visit(
        [](const auto& m) {
          if constexpr (std::is_same_v<std::decay_t<decltype(m)>, LinearModel>)
            return m.c();
          else
            return m.c;
        },
        model);
  }
  std::vector<std::string> class_names() const {
    return std::visit([](const auto& m) { return m.class_names; }, model);
  }
};

inline std::vector<int> predict_all(const FittedClassifier& f, const Matrix& x) {
  Matrix scaled;
  const Matrix* in = &x;
  if (f.scaler) {
    require_same_dim(f.scaler->mean.size(), x.cols(), "predict");
    scaled = (x.rowwise() - f.scaler->mean.transpose()).array().rowwise() /
             f.scaler->std.transpose().array();
    in = &scaled;
  }
  return std::visit(
      [&](const auto& m) -> std::vector<int> {
        if constexpr (std::is_same_v<std::decay_t<decltype(m)>, LinearModel>) {
          return predict_all(m, *in);
        } else {
          std::vector<int> out(static_cast<std::size_t>(in->rows()));
          for (Eigen::Index i = 0; i < in->rows(); ++i) out[i] = m.predict(in->row(i));
          return out;
        }
      },
      f.model);
}

inline EvalReport evaluate(const FittedClassifier& f, const Dataset& data) {
  require_same_dim(f.c(), data.c(), "evaluate classes");
  return evaluate_predictions(predict_all(f, data.features()), data);
}

// Trains one classifier. With standardize set, the scaler is fit on `data`
// alone and applied to `eval_set` for the trace.
inline FittedClassifier fit(const MethodConfig& cfg, const Dataset& data, bool standardize,
                            const std::optional<Dataset>& eval_set = std::nullopt) {
  FittedClassifier out;
  out.method = cfg.method;
  const ObjectiveConfig obj = cfg.effective_objective();
  obj.validate();
  cfg.train.validate();
  std::optional<Dataset> scaled_train;
  std::optional<Dataset> scaled_eval;
  if (standardize) {
    out.scaler = fit_standardizer(data);
    scaled_train = apply_standardizer(*out.scaler, data);
    if (eval_set) scaled_eval = apply_standardizer(*out.scaler, *eval_set);
  } else if (eval_set) {
    scaled_eval = *eval_set;
  }
  const Dataset& train_set = scaled_train ? *scaled_train : data;
  EvalHook hook;
  if (scaled_eval) {
    require_same_dim(train_set.d(), scaled_eval->d(), "fit eval set");
    hook = [&scaled_eval](const LinearModel& m) -> std::optional<double> {
      return evaluate(m, *scaled_eval).accuracy;
    };
  }
  auto keep = [&](TrainResult r) {
    out.trace = std::move(r.trace);
    out.model = std::move(r.model);
  };
  switch (cfg.method) {
    case Method::m3svm:
    case Method::ism3:
      keep(train_objective(MarginObjective{train_set, obj}, train_set, cfg.train, hook));
      break;
    case Method::crammer:
      keep(train_objective(CrammerSingerObjective{train_set, obj.lambda, obj.delta, obj.epsilon},
                           train_set, cfg.train, hook));
      break;
    case Method::ww:
      keep(train_objective(WestonWatkinsObjective{train_set, obj.lambda, obj.delta, obj.epsilon},
                           train_set, cfg.train, hook));
      break;
    case Method::multilr:
      keep(train_objective(MultinomialLogisticObjective{train_set, obj.lambda, obj.epsilon},
                           train_set, cfg.train, hook));
      break;
    case Method::ovr:
      out.model = train_ovr(train_set, obj.lambda, obj.delta, cfg.train);
      break;
    case Method::ovo:
      out.model = train_ovo(train_set, obj.lambda, obj.delta, cfg.train, cfg.pair_lambdas);
      break;
  }
  return out;
}

// Runs body(0..count-1) on up to `jobs` threads. The first exception (lowest
// index) is rethrown after all workers finish.
inline void parallel_for(std::size_t count, int jobs, const std::function<void(std::size_t)>& body) {
  if (jobs < 1) throw config_error("jobs must be >= 1");
  const std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(jobs), count);
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(count);
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w)
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) {
        try {
          body(i);
        } catch (...) {
          errors[i] = std::current_exception();
        }
      }
    });
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

struct CVOptions {
  int k = 5;
  std::uint64_t seed = 0;
  int runs = 1;  // run r uses fold seed seed + r
  bool standardize = true;
  int jobs = 1;
};

struct GridCell {
  double p = 4.0;
  double lambda = 1e-3;
  bool operator==(const GridCell&) const = default;
};

struct FoldResult {
  int run = 0;
  int fold = 0;
  double accuracy = 0.0;
  std::optional<GridCell> selected;  // nested mode only
};

struct CVReport {
  Method method = Method::m3svm;
  int k = 0;
  int runs = 0;
  std::vector<FoldResult> folds;  // run-major, fold-minor
  std::vector<double> run_means;
  double mean = 0.0;
  double std = 0.0;  // across run means when runs > 1, else across folds
  std::optional<GridCell> refit_cell;
  std::optional<MarginReport> margins;  // refit single-model methods only
  std::optional<std::string> margin_error;
};

namespace detail {

inline double sample_std(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= static_cast<double>(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

inline double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

inline void validate_cv(const CVOptions& opt) {
  if (opt.runs < 1) throw config_error("runs must be >= 1");
  if (opt.jobs < 1) throw config_error("jobs must be >= 1");
}

inline MethodConfig at_cell(MethodConfig cfg, const GridCell& cell) {
  if (uses_p(cfg.method)) cfg.objective.p = cell.p;
  cfg.objective.lambda = cell.lambda;
  return cfg;
}

// Accuracy of one (run, fold) split.
inline double fold_accuracy(const MethodConfig& cfg, const Dataset& data, const FoldPlan& plan,
                            int fold, bool standardize) {
  const auto tr = plan.train_indices(fold);
  const auto te = plan.test_indices(fold);
  const Dataset train_set = data.subset(tr);
  const Dataset test_set = data.subset(te);
  return evaluate(fit(cfg, train_set, standardize), test_set).accuracy;
}

inline void summarize(CVReport& r) {
  r.run_means.assign(r.runs, 0.0);
  std::vector<double> all;
  for (const auto& f : r.folds) {
    r.run_means[f.run] += f.accuracy / r.k;
    all.push_back(f.accuracy);
  }
  r.mean = mean_of(all);
  r.std = r.runs > 1 ? sample_std(r.run_means) : sample_std(all);
}

inline void attach_margins(CVReport& r, const FittedClassifier& f) {
  const LinearModel* m = f.linear();
  if (!m) return;
  try {
    r.margins = margin_report(*m);
  } catch (const degenerate_pair_error& e) {
    r.margin_error = e.what();
  }
}

}  // namespace detail

// Plain k-fold CV of one configuration, repeated over `runs` fold seeds,
// followed by a refit on all of `data` for the margin report.
inline CVReport cross_validate(const MethodConfig& cfg, const Dataset& data,
                               const CVOptions& opt, bool refit = true) {
  detail::validate_cv(opt);
  std::vector<FoldPlan> plans;
  for (int r = 0; r < opt.runs; ++r)
    plans.push_back(make_folds(data, opt.k, opt.seed + static_cast<std::uint64_t>(r)));
  CVReport report;
  report.method = cfg.method;
  report.k = opt.k;
  report.runs = opt.runs;
  report.folds.resize(static_cast<std::size_t>(opt.runs * opt.k));
  const std::size_t splits = report.folds.size();
  std::optional<FittedClassifier> final_model;
  parallel_for(splits + (refit ? 1 : 0), opt.jobs, [&](std::size_t i) {
    if (i == splits) {
      final_model = fit(cfg, data, opt.standardize);
      return;
    }
    const int run = static_cast<int>(i) / opt.k;
    const int fold = static_cast<int>(i) % opt.k;
    report.folds[i] = {run, fold,
                       detail::fold_accuracy(cfg, data, plans[run], fold, opt.standardize),
                       std::nullopt};
  });
  detail::summarize(report);
  if (final_model) detail::attach_margins(report, *final_model);
  return report;
}

// Default grids: p = 1..8 and ten linearly spaced lambdas over [1e-4, 1e-1].
inline std::vector<double> default_p_grid() { return {1, 2, 3, 4, 5, 6, 7, 8}; }

inline std::vector<double> lambda_grid(double lo, double hi, int count, bool log_spaced) {
  if (count < 1) throw config_error("lambda grid needs at least one value");
  if (!(lo > 0.0) || !(hi >= lo)) throw config_error("lambda grid bounds must satisfy 0 < lo <= hi");
  std::vector<double> out;
  for (int i = 0; i < count; ++i) {
    const double t = count == 1 ? 0.0 : static_cast<double>(i) / (count - 1);
    out.push_back(log_spaced ? std::exp(std::log(lo) + t * (std::log(hi) - std::log(lo)))
                             : lo + t * (hi - lo));
  }
  return out;
}

inline std::vector<double> default_lambda_grid() { return lambda_grid(1e-4, 1e-1, 10, false); }

// p-major, lambda-minor. Methods without p get a single p entry (the
// configured one) so the grid collapses to lambda alone.
inline std::vector<GridCell> make_grid(Method method, const std::vector<double>& p_values,
                                       const std::vector<double>& lambda_values,
                                       double fixed_p) {
  if (lambda_values.empty()) throw config_error("empty lambda grid");
  std::vector<double> ps = uses_p(method) ? p_values : std::vector<double>{fixed_p};
  if (ps.empty()) throw config_error("empty p grid");
  std::vector<GridCell> cells;
  for (double p : ps)
    for (double lam : lambda_values) cells.push_back({p, lam});
  return cells;
}

struct GridRow {
  GridCell cell;
  double mean_acc = 0.0;
  double std = 0.0;
  std::optional<double> min_margin;  // from the refit on all data
};

struct GridOptions {
  bool margins = true;  // refit every cell on all data for min_margin
};

// CV accuracy for every grid cell. All (cell, run, fold) trainings share one
// task pool.
inline std::vector<GridRow> grid_search(const MethodConfig& base, const Dataset& data,
                                        const std::vector<GridCell>& cells,
                                        const CVOptions& opt, GridOptions gopt = {}) {
  detail::validate_cv(opt);
  if (cells.empty()) throw config_error("empty grid");
  std::vector<FoldPlan> plans;
  for (int r = 0; r < opt.runs; ++r)
    plans.push_back(make_folds(data, opt.k, opt.seed + static_cast<std::uint64_t>(r)));
  const std::size_t per_cell = static_cast<std::size_t>(opt.runs * opt.k) + (gopt.margins ? 1 : 0);
  std::vector<double> acc(cells.size() * per_cell, 0.0);
  std::vector<std::optional<double>> margins(cells.size());
  parallel_for(acc.size(), opt.jobs, [&](std::size_t i) {
    const std::size_t c = i / per_cell;
    const int j = static_cast<int>(i % per_cell);
    const MethodConfig cfg = detail::at_cell(base, cells[c]);
    if (j == opt.runs * opt.k) {
      const auto f = fit(cfg, data, opt.standardize);
      if (const LinearModel* m = f.linear()) {
        try {
          margins[c] = margin_report(*m).min_margin;
        } catch (const degenerate_pair_error&) {
        }
      }
      return;
    }
    acc[i] = detail::fold_accuracy(cfg, data, plans[j / opt.k], j % opt.k, opt.standardize);
  });
  std::vector<GridRow> rows;
  for (std::size_t c = 0; c < cells.size(); ++c) {
    CVReport r;
    r.k = opt.k;
    r.runs = opt.runs;
    for (int j = 0; j < opt.runs * opt.k; ++j)
      r.folds.push_back({j / opt.k, j % opt.k, acc[c * per_cell + j], std::nullopt});
    detail::summarize(r);
    rows.push_back({cells[c], r.mean, r.std, margins[c]});
  }
  return rows;
}

// Highest mean accuracy; ties go to the earliest row.
inline std::size_t best_row(const std::vector<GridRow>& rows) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < rows.size(); ++i)
    if (rows[i].mean_acc > rows[best].mean_acc) best = i;
  return best;
}

// Outer k-fold CV; inside each outer training fold an inner k-fold grid
// search (on that fold only) picks the cell used for the outer test. The
// final refit uses the cell selected most often (ties: earliest in grid).
inline CVReport nested_cv(const MethodConfig& base, const Dataset& data,
                          const std::vector<GridCell>& cells, const CVOptions& opt,
                          int inner_k = 5) {
  detail::validate_cv(opt);
  if (cells.empty()) throw config_error("empty grid");
  CVReport report;
  report.method = base.method;
  report.k = opt.k;
  report.runs = opt.runs;
  std::vector<FoldPlan> plans;
  for (int r = 0; r < opt.runs; ++r)
    plans.push_back(make_folds(data, opt.k, opt.seed + static_cast<std::uint64_t>(r)));
  const std::size_t splits = static_cast<std::size_t>(opt.runs * opt.k);
  report.folds.resize(splits);
  // Inner searches run single-threaded; parallelism is over outer splits.
  parallel_for(splits, opt.jobs, [&](std::size_t i) {
    const int run = static_cast<int>(i) / opt.k;
    const int fold = static_cast<int>(i) % opt.k;
    const Dataset train_set = data.subset(plans[run].train_indices(fold));
    const Dataset test_set = data.subset(plans[run].test_indices(fold));
    CVOptions inner{inner_k, opt.seed + 1000003ULL * (i + 1), 1, opt.standardize, 1};
    const auto rows = grid_search(base, train_set, cells, inner, GridOptions{false});
    const GridCell chosen = rows[best_row(rows)].cell;
    const auto f = fit(detail::at_cell(base, chosen), train_set, opt.standardize);
    report.folds[i] = {run, fold, evaluate(f, test_set).accuracy, chosen};
  });
  detail::summarize(report);
  std::vector<int> votes(cells.size(), 0);
  for (const auto& f : report.folds)
    for (std::size_t c = 0; c < cells.size(); ++c)
      if (cells[c] == *f.selected) ++votes[c];
  const std::size_t winner =
      static_cast<std::size_t>(std::max_element(votes.begin(), votes.end()) - votes.begin());
  report.refit_cell = cells[winner];
  detail::attach_margins(report, fit(detail::at_cell(base, cells[winner]), data, opt.standardize));
  return report;
}

struct SweepRow {
  double p = 0.0;
  std::optional<double> min_margin;  // model trained on all data
  double cv_accuracy = 0.0;
  double cv_std = 0.0;
};

// Per p: min pairwise margin of a model fit on all data, and CV accuracy.
inline std::vector<SweepRow> p_sweep(const MethodConfig& base, const Dataset& data,
                                     const std::vector<double>& p_values, const CVOptions& opt) {
  if (p_values.empty()) throw config_error("p_sweep: empty p list");
  if (!uses_p(base.method)) throw config_error("p_sweep: p not applicable to method " +
                                               std::string(to_string(base.method)));
  std::vector<GridCell> cells;
  for (double p : p_values) cells.push_back({p, base.objective.lambda});
  const auto rows = grid_search(base, data, cells, opt);
  std::vector<SweepRow> out;
  for (const auto& r : rows) out.push_back({r.cell.p, r.min_margin, r.mean_acc, r.std});
  return out;
}

struct CompareRow {
  Method method;
  GridCell best;
  double mean_acc = 0.0;
  double std = 0.0;
};

// Every method under the same folds and grid; each reports its best cell.
inline std::vector<CompareRow> compare(const MethodConfig& base, const std::vector<Method>& methods,
                                       const Dataset& data, const std::vector<double>& p_values,
                                       const std::vector<double>& lambda_values,
                                       const CVOptions& opt) {
  if (methods.empty()) throw config_error("compare: empty method list");
  std::vector<CompareRow> out;
  for (Method m : methods) {
    MethodConfig cfg = base;
    cfg.method = m;
    const auto cells = make_grid(m, p_values, lambda_values, base.objective.p);
    const auto rows = grid_search(cfg, data, cells, opt, GridOptions{false});
    const auto& b = rows[best_row(rows)];
    out.push_back({m, b.cell, b.mean_acc, b.std});
  }
  return out;
}

}  // namespace m3svm
