#pragma once

// Flat key = value run configuration shared by the config file and the
// command-line flags. Later sources override earlier ones: defaults, then
// MAXMIN_SVM_SEED, then the file, then flags.

#include <charconv>
#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "m3svm/dataset.hpp"
#include "m3svm/error.hpp"
#include "m3svm/experiment.hpp"

namespace m3svm {

struct RunConfig {
  std::string data;
  std::string format = "auto";  // csv | libsvm | auto (by extension)
  std::string label_column = "-1";
  bool header = true;
  std::string eval_data;
  std::string model;
  std::string out = ".";

  MethodConfig method;
  std::vector<Method> methods;  // compare; empty = all

  CVOptions cv;
  int inner_k = 5;
  bool grid = false;  // cv: select (p, lambda) by inner grid search
  std::vector<double> grid_p = default_p_grid();
  std::vector<double> grid_lambda = default_lambda_grid();
  bool grid_log_lambda = false;  // default lambda grid log-spaced instead of linear

  std::set<std::string> explicit_keys;  // keys given by file or flag

  CVOptions cv_options() const { return cv; }
};

namespace detail {

inline bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw config_error(key + ": expected true/false, got '" + v + "'");
}

inline double parse_double(const std::string& key, const std::string& v) {
  const auto r = parse_real(trim(v));
  if (!r) throw config_error(key + ": expected a number, got '" + v + "'");
  return *r;
}

inline long parse_long(const std::string& key, const std::string& v) {
  const auto r = parse_int(trim(v));
  if (!r) throw config_error(key + ": expected an integer, got '" + v + "'");
  return *r;
}

inline std::uint64_t parse_seed(const std::string& key, const std::string& v) {
  const auto t = trim(v);
  std::uint64_t out = 0;
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), out);
  if (ec != std::errc() || ptr != t.data() + t.size() || t.empty())
    throw config_error(key + ": expected a nonnegative integer, got '" + v + "'");
  return out;
}

inline std::vector<double> parse_list(const std::string& key, const std::string& v) {
  std::vector<double> out;
  for (auto tok : split(v, ',')) {
    tok = trim(tok);
    if (tok.empty()) continue;
    out.push_back(parse_double(key, std::string(tok)));
  }
  if (out.empty()) throw config_error(key + ": empty list");
  return out;
}

}  // namespace detail

// Every accepted key, in documentation order.
inline const std::vector<std::string>& run_config_keys() {
  static const std::vector<std::string> keys{
      "data",        "format",     "label_column", "header",     "eval_data",  "model",
      "out",         "method",     "methods",      "loss",       "reg_norm",   "p",
      "lambda",      "epsilon",    "delta",        "learning_rate", "lr_decay", "beta1",
      "beta2",       "adam_eps",   "max_iters",    "rel_tol",    "tol_window", "init_scale",
      "center",      "seed",       "cv.k",         "cv.seed",    "cv.runs",    "cv.inner_k",
      "standardize", "jobs",       "grid",         "grid.p",     "grid.lambda",
      "grid.log_lambda"};
  return keys;
}

inline void apply_setting(RunConfig& rc, const std::string& key, const std::string& value) {
  using namespace detail;
  ObjectiveConfig& o = rc.method.objective;
  TrainConfig& t = rc.method.train;
  if (key == "data") rc.data = value;
  else if (key == "format") {
    if (value != "csv" && value != "libsvm" && value != "auto")
      throw config_error("format: expected csv, libsvm or auto");
    rc.format = value;
  } else if (key == "label_column") rc.label_column = value;
  else if (key == "header") rc.header = parse_bool(key, value);
  else if (key == "eval_data") rc.eval_data = value;
  else if (key == "model") rc.model = value;
  else if (key == "out") rc.out = value;
  else if (key == "method") rc.method.method = parse_method(value);
  else if (key == "methods") {
    rc.methods.clear();
    for (auto tok : split(value, ','))
      if (!trim(tok).empty()) rc.methods.push_back(parse_method(std::string(trim(tok))));
  } else if (key == "loss") o.loss = parse_loss_kind(value);
  else if (key == "reg_norm") o.reg_norm = parse_reg_norm(value);
  else if (key == "p") o.p = parse_double(key, value);
  else if (key == "lambda") o.lambda = parse_double(key, value);
  else if (key == "epsilon") o.epsilon = parse_double(key, value);
  else if (key == "delta") o.delta = parse_double(key, value);
  else if (key == "learning_rate") t.learning_rate = parse_double(key, value);
  else if (key == "lr_decay") t.lr_decay = parse_lr_decay(value);
  else if (key == "beta1") t.beta1 = parse_double(key, value);
  else if (key == "beta2") t.beta2 = parse_double(key, value);
  else if (key == "adam_eps") t.adam_eps = parse_double(key, value);
  else if (key == "max_iters") t.max_iters = static_cast<int>(parse_long(key, value));
  else if (key == "rel_tol") t.rel_tol = parse_double(key, value);
  else if (key == "tol_window") t.tol_window = static_cast<int>(parse_long(key, value));
  else if (key == "init_scale") t.init_scale = parse_double(key, value);
  else if (key == "center") t.center = parse_bool(key, value);
  else if (key == "seed") {
    t.seed = parse_seed(key, value);
    if (!rc.explicit_keys.count("cv.seed")) rc.cv.seed = t.seed;
  } else if (key == "cv.k") rc.cv.k = static_cast<int>(parse_long(key, value));
  else if (key == "cv.seed") rc.cv.seed = parse_seed(key, value);
  else if (key == "cv.runs") rc.cv.runs = static_cast<int>(parse_long(key, value));
  else if (key == "cv.inner_k") rc.inner_k = static_cast<int>(parse_long(key, value));
  else if (key == "standardize") rc.cv.standardize = parse_bool(key, value);
  else if (key == "jobs") rc.cv.jobs = static_cast<int>(parse_long(key, value));
  else if (key == "grid") rc.grid = parse_bool(key, value);
  else if (key == "grid.p") rc.grid_p = parse_list(key, value);
  else if (key == "grid.lambda") rc.grid_lambda = parse_list(key, value);
  else if (key == "grid.log_lambda") {
    rc.grid_log_lambda = parse_bool(key, value);
    if (!rc.explicit_keys.count("grid.lambda"))
      rc.grid_lambda = lambda_grid(1e-4, 1e-1, 10, rc.grid_log_lambda);
  }
  else throw config_error("unknown config key '" + key + "'");
  rc.explicit_keys.insert(key);
}

// key = value lines; '#' starts a comment; blank lines ignored.
inline std::vector<std::pair<std::string, std::string>> parse_config_text(const std::string& text) {
  std::vector<std::pair<std::string, std::string>> out;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const auto t = detail::trim(line);
    if (t.empty()) continue;
    const auto eq = t.find('=');
    if (eq == std::string_view::npos)
      throw config_error("config line " + std::to_string(lineno) + ": expected key = value");
    const auto key = detail::trim(t.substr(0, eq));
    const auto value = detail::trim(t.substr(eq + 1));
    if (key.empty()) throw config_error("config line " + std::to_string(lineno) + ": empty key");
    out.emplace_back(std::string(key), std::string(value));
  }
  return out;
}

inline void apply_config_file(RunConfig& rc, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw config_error("cannot open config file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  for (const auto& [k, v] : parse_config_text(ss.str())) apply_setting(rc, k, v);
}

// Default seed from the environment, if set.
inline void apply_seed_env(RunConfig& rc) {
  if (const char* env = std::getenv("MAXMIN_SVM_SEED")) {
    const std::uint64_t s = detail::parse_seed("MAXMIN_SVM_SEED", env);
    rc.method.train.seed = s;
    rc.cv.seed = s;
  }
}

// Field combinations that no single setter can see.
inline void validate(const RunConfig& rc) {
  const Method m = rc.method.method;
  if (!uses_p(m) && (rc.explicit_keys.count("p") || rc.explicit_keys.count("grid.p")))
    throw config_error(std::string("p not applicable to method ") + to_string(m));
  if (!uses_p(m) && (rc.explicit_keys.count("loss") || rc.explicit_keys.count("reg_norm")))
    throw config_error(std::string("loss / reg_norm not applicable to method ") + to_string(m));
  if (m == Method::m3svm && rc.explicit_keys.count("loss") &&
      rc.method.objective.loss != LossKind::smoothed_hinge)
    throw config_error("method m3svm uses the smoothed hinge; use method=ism3 for the logistic loss");
  if (m == Method::ism3 && rc.explicit_keys.count("loss") &&
      rc.method.objective.loss != LossKind::logistic)
    throw config_error("method ism3 uses the logistic loss");
  rc.method.effective_objective().validate();
  rc.method.train.validate();
  if (rc.cv.k < 2) throw config_error("cv.k must be >= 2");
  if (rc.cv.runs < 1) throw config_error("cv.runs must be >= 1");
  if (rc.inner_k < 2) throw config_error("cv.inner_k must be >= 2");
  if (rc.cv.jobs < 1) throw config_error("jobs must be >= 1");
  for (double p : rc.grid_p)
    if (!(p > 0.0)) throw config_error("grid.p entries must be positive");
  for (double l : rc.grid_lambda)
    if (!(l >= 0.0)) throw config_error("grid.lambda entries must be nonnegative");
}

inline Dataset load_dataset(const std::string& path, const std::string& format,
                            const std::string& label_column, bool header) {
  if (path.empty()) throw config_error("no data file given (data = PATH)");
  std::string fmt = format;
  if (fmt == "auto") {
    const auto dot = path.rfind('.');
    const std::string ext = dot == std::string::npos ? "" : path.substr(dot + 1);
    fmt = ext == "libsvm" || ext == "svm" || ext == "txt" ? "libsvm" : "csv";
  }
  if (fmt == "libsvm") return load_libsvm(path);
  if (const auto idx = detail::parse_int(label_column))
    return load_csv(path, static_cast<int>(*idx), header);
  return load_csv(path, label_column, header);
}

}  // namespace m3svm
