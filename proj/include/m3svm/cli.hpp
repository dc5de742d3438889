#pragma once

// maxmin-svm <train|predict|eval|cv|gridsearch|compare|margins|gradcheck|verify>
//
// Exit codes: 0 success, 1 check failure or runtime error, 2 usage or
// configuration error. Timing goes to the error stream only, so stdout and
// every written file are reproducible under fixed seeds.

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "m3svm/m3svm.hpp"

namespace m3svm {

namespace cli_detail {

// Re-encodes a dataset's labels into a model's class order, by class name.
inline Dataset align_labels(const Dataset& data, const std::vector<std::string>& model_names,
                            int model_c) {
  if (model_names.empty() || data.class_names().empty()) {
    if (data.c() > model_c)
      throw config_error("data has " + std::to_string(data.c()) + " classes, model has " +
                         std::to_string(model_c));
    return Dataset(data.features(), data.labels(), model_c, model_names);
  }
  std::vector<int> remap(data.c(), -1);
  for (int k = 0; k < data.c(); ++k) {
    for (int m = 0; m < static_cast<int>(model_names.size()); ++m)
      if (model_names[m] == data.class_names()[k]) remap[k] = m;
    if (remap[k] < 0)
      throw config_error("class '" + data.class_names()[k] + "' is unknown to the model");
  }
  std::vector<int> y(data.labels().size());
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = remap[data.labels()[i]];
  return Dataset(data.features(), std::move(y), model_c, model_names);
}

inline std::string path_in(const RunConfig& rc, const std::string& name) {
  std::filesystem::create_directories(rc.out);
  return (std::filesystem::path(rc.out) / name).string();
}

inline std::string fixed(double x, int digits = 4) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(digits) << x;
  return s.str();
}

inline Dataset main_data(const RunConfig& rc) {
  return load_dataset(rc.data, rc.format, rc.label_column, rc.header);
}

inline void print_margins(std::ostream& out, const MarginReport& r) {
  out << "pair     margin\n";
  for (const auto& p : r.pair_margins)
    out << "(" << p.k << ", " << p.l << ")  " << std::setprecision(10) << p.margin << "\n";
  out << "min margin " << std::setprecision(10) << r.min_margin << " at (" << r.argmin_k << ", "
      << r.argmin_l << ")\n";
}

inline void print_cv(std::ostream& out, const CVReport& r) {
  out << "method " << to_string(r.method) << ", " << r.k << " folds x " << r.runs << " runs\n";
  for (const auto& f : r.folds) {
    out << "run " << f.run << " fold " << f.fold << "  acc " << fixed(f.accuracy);
    if (f.selected) out << "  p " << f.selected->p << " lambda " << f.selected->lambda;
    out << "\n";
  }
  out << "mean " << fixed(r.mean) << " +- " << fixed(r.std) << "\n";
  if (r.refit_cell) out << "refit at p " << r.refit_cell->p << " lambda " << r.refit_cell->lambda << "\n";
  if (r.margins) print_margins(out, *r.margins);
  if (r.margin_error) out << "margins unavailable: " << *r.margin_error << "\n";
}

inline int cmd_train(const RunConfig& rc, std::ostream& out, std::ostream& err) {
  const Dataset data = main_data(rc);
  std::optional<Dataset> eval_set;
  if (!rc.eval_data.empty())
    eval_set = align_labels(load_dataset(rc.eval_data, rc.format, rc.label_column, rc.header),
                            data.class_names(), data.c());
  const auto t0 = std::chrono::steady_clock::now();
  const FittedClassifier f = fit(rc.method, data, rc.cv.standardize, eval_set);
  err << "trained in "
      << std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count() << " s\n";
  save_model(path_in(rc, "model.json"), f, rc.method);
  out << "method " << to_string(f.method) << "  n " << data.n() << "  d " << data.d() << "  c "
      << data.c() << "\n";
  if (f.trace) {
    detail::write_text(path_in(rc, "trace.csv"), trace_csv(*f.trace));
    out << "iterations " << f.trace->size() << "  final objective " << std::setprecision(12)
        << f.trace->final_objective() << "\n";
  }
  out << "train accuracy " << fixed(evaluate(f, data).accuracy) << "\n";
  if (eval_set) out << "eval accuracy " << fixed(evaluate(f, *eval_set).accuracy) << "\n";
  out << "wrote " << path_in(rc, "model.json") << "\n";
  return 0;
}

inline LoadedModel need_model(const RunConfig& rc) {
  if (rc.model.empty()) throw config_error("no model file given (model = PATH)");
  return load_model(rc.model);
}

inline int cmd_predict(const RunConfig& rc, std::ostream& out, std::ostream&) {
  const LoadedModel lm = need_model(rc);
  const Dataset data = main_data(rc);
  const auto pred = predict_all(lm.classifier, data.features());
  const auto names = lm.classifier.class_names();
  out << "index,predicted,class_name\n";
  for (std::size_t i = 0; i < pred.size(); ++i)
    out << i << "," << pred[i] << "," << (names.empty() ? std::to_string(pred[i]) : names[pred[i]])
        << "\n";
  return 0;
}

inline int cmd_eval(const RunConfig& rc, std::ostream& out, std::ostream&) {
  const LoadedModel lm = need_model(rc);
  const Dataset data =
      align_labels(main_data(rc), lm.classifier.class_names(), lm.classifier.c());
  const EvalReport r = evaluate(lm.classifier, data);
  detail::write_text(path_in(rc, "eval.json"), to_json(r).dump(2) + "\n");
  out << "accuracy " << fixed(r.accuracy) << " on " << r.n << " samples\nconfusion (rows: true)\n";
  for (Eigen::Index i = 0; i < r.confusion.rows(); ++i) {
    for (Eigen::Index j = 0; j < r.confusion.cols(); ++j) out << std::setw(6) << r.confusion(i, j);
    out << "\n";
  }
  return 0;
}

inline int cmd_cv(const RunConfig& rc, std::ostream& out, std::ostream& err) {
  const Dataset data = main_data(rc);
  const auto t0 = std::chrono::steady_clock::now();
  CVReport r;
  if (rc.grid) {
    const auto cells = make_grid(rc.method.method, rc.grid_p, rc.grid_lambda, rc.method.objective.p);
    r = nested_cv(rc.method, data, cells, rc.cv, rc.inner_k);
  } else {
    r = cross_validate(rc.method, data, rc.cv);
  }
  err << "cv finished in "
      << std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count() << " s\n";
  detail::write_text(path_in(rc, "cv_report.json"), to_json(r).dump(2) + "\n");
  print_cv(out, r);
  return 0;
}

inline int cmd_gridsearch(const RunConfig& rc, bool p_sweep_mode, std::ostream& out, std::ostream& err) {
  const Dataset data = main_data(rc);
  const auto t0 = std::chrono::steady_clock::now();
  if (p_sweep_mode) {
    const auto rows = p_sweep(rc.method, data, rc.grid_p, rc.cv);
    detail::write_text(path_in(rc, "p_sweep.csv"), sweep_csv(rows));
    out << sweep_csv(rows);
  } else {
    const auto cells = make_grid(rc.method.method, rc.grid_p, rc.grid_lambda, rc.method.objective.p);
    const auto rows = grid_search(rc.method, data, cells, rc.cv);
    detail::write_text(path_in(rc, "grid.csv"), grid_csv(rows));
    out << grid_csv(rows);
    const auto& b = rows[best_row(rows)];
    out << "best p " << b.cell.p << " lambda " << b.cell.lambda << " mean " << fixed(b.mean_acc)
        << " +- " << fixed(b.std) << "\n";
  }
  err << "grid finished in "
      << std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count() << " s\n";
  return 0;
}

inline int cmd_compare(const RunConfig& rc, std::ostream& out, std::ostream& err) {
  const Dataset data = main_data(rc);
  const auto methods = rc.methods.empty() ? all_methods() : rc.methods;
  const auto t0 = std::chrono::steady_clock::now();
  const auto rows = compare(rc.method, methods, data, rc.grid_p, rc.grid_lambda, rc.cv);
  err << "compare finished in "
      << std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count() << " s\n";
  std::ostringstream md;
  md << "| method | mean acc | std | p | lambda |\n|---|---|---|---|---|\n";
  for (const auto& r : rows)
    md << "| " << to_string(r.method) << " | " << fixed(r.mean_acc) << " | " << fixed(r.std)
       << " | " << (uses_p(r.method) ? detail::num(r.best.p) : "-") << " | "
       << detail::num(r.best.lambda) << " |\n";
  detail::write_text(path_in(rc, "compare.json"), to_json(rows).dump(2) + "\n");
  detail::write_text(path_in(rc, "compare.md"), md.str());
  out << md.str();
  return 0;
}

inline int cmd_margins(const RunConfig& rc, std::ostream& out, std::ostream&) {
  const LoadedModel lm = need_model(rc);
  const LinearModel* m = lm.classifier.linear();
  if (!m) throw config_error("margins need a single-model method (not ovr / ovo)");
  if (!rc.data.empty()) require_same_dim(m->d(), main_data(rc).d(), "margins data");
  const MarginReport r = margin_report(*m);
  detail::write_text(path_in(rc, "margins.csv"), margins_csv(r));
  detail::write_text(path_in(rc, "margins.json"), to_json(r).dump(2) + "\n");
  print_margins(out, r);
  return 0;
}

inline int cmd_gradcheck(const RunConfig& rc, int trials, std::ostream& out, std::ostream&) {
  const ObjectiveConfig cfg = rc.method.effective_objective();
  if (!uses_p(rc.method.method))
    throw config_error("gradcheck covers the m3svm / ism3 objective only");
  if (cfg.loss == LossKind::smoothed_hinge && cfg.delta < 1e-3)
    throw config_error("gradcheck needs delta >= 1e-3 for the smoothed hinge");
  Dataset data;
  if (rc.data.empty()) {
    std::mt19937_64 rng(rc.method.train.seed);
    data = detail::random_dataset(rng, 40, 5, 4);
  } else {
    data = main_data(rc);
    if (rc.cv.standardize) data = apply_standardizer(fit_standardizer(data), data);
  }
  const auto rep = gradcheck(data, cfg, trials, rc.method.train.seed);
  const bool ok = rep.max_rel_error <= 1e-5;
  const json j{{"max_rel_error", rep.max_rel_error},
               {"coordinates_checked", rep.coordinates_checked},
               {"coordinates_skipped", rep.coordinates_skipped},
               {"trials", rep.trials},
               {"tolerance", 1e-5},
               {"passed", ok}};
  out << j.dump(2) << "\n";
  return ok ? 0 : 1;
}

inline int cmd_verify(const RunConfig& rc, bool corrupt, bool quick, std::ostream& out, std::ostream& err) {
  VerifyOptions opt;
  opt.seed = rc.method.train.seed;
  opt.corrupt_gradient = corrupt;
  opt.skip_training = quick;
  const auto t0 = std::chrono::steady_clock::now();
  const VerifyReport r = run_verification(opt);
  err << "verify finished in "
      << std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count() << " s\n";
  for (const auto& c : r.checks)
    err << (c.passed ? "PASS " : "FAIL ") << c.name << "  worst " << c.worst << "\n";
  out << to_json(r).dump(2) << "\n";
  return r.passed() ? 0 : 1;
}

}  // namespace cli_detail

// Default seed for verify when neither the environment nor a flag sets one.
inline constexpr std::uint64_t default_verify_seed = 20240607;

inline int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Multi-class linear SVM toolkit (max-min margin objective and baselines)",
               "maxmin-svm"};
  app.require_subcommand(1, 1);
  const std::vector<std::pair<std::string, std::string>> commands{
      {"train", "train one model; writes model.json and trace.csv"},
      {"predict", "predict labels for a data file with a saved model"},
      {"eval", "accuracy and confusion matrix of a saved model"},
      {"cv", "k-fold cross-validation (with grid = true: nested grid search)"},
      {"gridsearch", "CV accuracy and min margin for every (p, lambda) cell"},
      {"compare", "best-cell CV accuracy of several methods"},
      {"margins", "pairwise margins 2 / ||w_k - w_l|| of a saved model"},
      {"gradcheck", "analytic vs finite-difference gradients"},
      {"verify", "run the property suites; JSON report"}};

  std::map<std::string, std::string> values;   // --key VALUE
  std::map<std::string, CLI::Option*> handles;
  std::vector<std::pair<std::string, std::string>> flag_settings;
  std::string config_path;
  int trials = 5;
  bool corrupt = false;
  bool quick = false;
  bool sweep = false;
  static const std::set<std::string> bool_keys{"header", "center", "standardize", "grid",
                                                "grid.log_lambda"};

  for (const auto& [name, help] : commands) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->add_option("--config", config_path, "flat key = value file");
    for (const auto& key : run_config_keys()) {
      std::string flag = key;
      std::replace(flag.begin(), flag.end(), '.', '-');
      std::string dashed = flag;
      std::replace(dashed.begin(), dashed.end(), '_', '-');
      std::string names = "--" + flag;
      if (dashed != flag) names += ",--" + dashed;
      if (bool_keys.count(key)) {
        sub->add_flag_callback("--" + dashed, [&flag_settings, key] { flag_settings.emplace_back(key, "true"); },
                               "set " + key + " = true");
        sub->add_flag_callback("--no-" + dashed, [&flag_settings, key] { flag_settings.emplace_back(key, "false"); },
                               "set " + key + " = false");
        continue;
      }
      handles[name + ":" + key] = sub->add_option(names, values[name + ":" + key], "config key " + key);
    }
    if (name == "gradcheck") sub->add_option("--trials", trials, "random points to check")->check(CLI::PositiveNumber);
    if (name == "verify") {
      sub->add_flag("--corrupt-gradient", corrupt, "test hook: perturb the analytic gradient");
      sub->add_flag("--quick", quick, "skip the checks that train models");
    }
    if (name == "gridsearch") sub->add_flag("--p-sweep", sweep, "sweep grid.p at the configured lambda");
  }

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      out << app.help();
      for (auto* sub : app.get_subcommands())
        if (sub->parsed()) out << sub->help();
      return 0;
    }
    err << "error: " << e.what() << "\n" << app.help();
    return 2;
  }
  CLI::App* sub = app.get_subcommands().front();
  const std::string cmd = sub->get_name();

  try {
    RunConfig rc;
    if (cmd == "verify") {
      rc.method.train.seed = default_verify_seed;
      rc.cv.seed = default_verify_seed;
    }
    apply_seed_env(rc);
    if (!config_path.empty()) apply_config_file(rc, config_path);
    for (const auto& key : run_config_keys()) {
      const auto it = handles.find(cmd + ":" + key);
      if (it != handles.end() && it->second->count() > 0) apply_setting(rc, key, values[cmd + ":" + key]);
    }
    for (const auto& [k, v] : flag_settings) apply_setting(rc, k, v);
    validate(rc);

    if (cmd == "train") return cli_detail::cmd_train(rc, out, err);
    if (cmd == "predict") return cli_detail::cmd_predict(rc, out, err);
    if (cmd == "eval") return cli_detail::cmd_eval(rc, out, err);
    if (cmd == "cv") return cli_detail::cmd_cv(rc, out, err);
    if (cmd == "gridsearch") return cli_detail::cmd_gridsearch(rc, sweep, out, err);
    if (cmd == "compare") return cli_detail::cmd_compare(rc, out, err);
    if (cmd == "margins") return cli_detail::cmd_margins(rc, out, err);
    if (cmd == "gradcheck") return cli_detail::cmd_gradcheck(rc, trials, out, err);
    if (cmd == "verify") return cli_detail::cmd_verify(rc, corrupt, quick, out, err);
  } catch (const config_error& e) {
    err << "error: " << e.what() << "\nusage: maxmin-svm " << cmd
        << " [--config FILE] [--key VALUE ...]; see maxmin-svm " << cmd << " --help\n";
    return 2;
  } catch (const parse_error& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const io_error& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const dimension_error& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}

}  // namespace m3svm
