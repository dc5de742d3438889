#pragma once

// JSON model files, trace CSV and report documents. Doubles are written with
// shortest round-trip formatting, so a save/load cycle is value-identical.

#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "m3svm/experiment.hpp"

namespace m3svm {

using json = nlohmann::ordered_json;

namespace detail {

inline json vector_to_json(const Vector& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

inline Vector vector_from_json(const json& a, long expected, const char* what) {
  if (!a.is_array()) throw parse_error(std::string(what) + ": expected an array");
  require_same_dim(expected, static_cast<long>(a.size()), what);
  Vector v(static_cast<Eigen::Index>(a.size()));
  for (std::size_t i = 0; i < a.size(); ++i) v(static_cast<Eigen::Index>(i)) = a[i].get<double>();
  return v;
}

// %.17g; used for CSV so numbers reload bit-exactly.
inline std::string num(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

inline void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw io_error("cannot write '" + path + "'");
  out << text;
  if (!out) throw io_error("write failed for '" + path + "'");
}

inline std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw io_error("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline json binary_to_json(const BinaryModel& m) {
  return json{{"w", vector_to_json(m.w)}, {"b", m.b}};
}

inline BinaryModel binary_from_json(const json& j, int d) {
  return {vector_from_json(j.at("w"), d, "member w"), j.at("b").get<double>()};
}

}  // namespace detail

inline json to_json(const ObjectiveConfig& c) {
  return json{{"loss", to_string(c.loss)}, {"reg_norm", to_string(c.reg_norm)},
              {"p", c.p},       {"lambda", c.lambda},
              {"epsilon", c.epsilon}, {"delta", c.delta}};
}

inline ObjectiveConfig objective_config_from_json(const json& j) {
  ObjectiveConfig c;
  c.loss = parse_loss_kind(j.at("loss").get<std::string>());
  c.reg_norm = parse_reg_norm(j.at("reg_norm").get<std::string>());
  c.p = j.at("p").get<double>();
  c.lambda = j.at("lambda").get<double>();
  c.epsilon = j.at("epsilon").get<double>();
  c.delta = j.at("delta").get<double>();
  return c;
}

inline json to_json(const TrainConfig& c) {
  return json{{"learning_rate", c.learning_rate},
              {"lr_decay", to_string(c.lr_decay)},
              {"beta1", c.beta1},
              {"beta2", c.beta2},
              {"adam_eps", c.adam_eps},
              {"max_iters", c.max_iters},
              {"rel_tol", c.rel_tol},
              {"tol_window", c.tol_window},
              {"seed", c.seed},
              {"init_scale", c.init_scale},
              {"center", c.center}};
}

inline TrainConfig train_config_from_json(const json& j) {
  TrainConfig c;
  c.learning_rate = j.at("learning_rate").get<double>();
  c.lr_decay = parse_lr_decay(j.at("lr_decay").get<std::string>());
  c.beta1 = j.at("beta1").get<double>();
  c.beta2 = j.at("beta2").get<double>();
  c.adam_eps = j.at("adam_eps").get<double>();
  c.max_iters = j.at("max_iters").get<int>();
  c.rel_tol = j.at("rel_tol").get<double>();
  c.tol_window = j.at("tol_window").get<int>();
  c.seed = j.at("seed").get<std::uint64_t>();
  c.init_scale = j.at("init_scale").get<double>();
  c.center = j.at("center").get<bool>();
  return c;
}

// Model document. W is stored row-major (d rows of c entries).
inline json to_json(const FittedClassifier& f, const MethodConfig& cfg) {
  json j;
  j["format"] = "maxmin-svm-model";
  j["version"] = 1;
  j["method"] = to_string(f.method);
  std::visit(
      [&](const auto& m) {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, LinearModel>) {
          j["d"] = m.d();
          j["c"] = m.c();
          json w = json::array();
          for (int r = 0; r < m.d(); ++r)
            for (int k = 0; k < m.c(); ++k) w.push_back(m.W(r, k));
          j["W"] = std::move(w);
          j["b"] = detail::vector_to_json(m.b);
          j["class_names"] = m.class_names;
        } else {
          j["d"] = 0;  // filled in below from the first member
          j["c"] = m.c;
          j["class_names"] = m.class_names;
        }
      },
      f.model);
  if (const auto* ovr = std::get_if<OvRModel>(&f.model)) {
    j["d"] = ovr->members.empty() ? 0 : static_cast<int>(ovr->members.front().w.size());
    json members = json::array();
    for (int k = 0; k < ovr->c; ++k) {
      json mj = detail::binary_to_json(ovr->members[k]);
      mj["positive"] = k;
      members.push_back(std::move(mj));
    }
    j["members"] = std::move(members);
  }
  if (const auto* ovo = std::get_if<OvOModel>(&f.model)) {
    j["d"] = ovo->members.empty() ? 0 : static_cast<int>(ovo->members.front().model.w.size());
    json members = json::array();
    for (const auto& pm : ovo->members) {
      json mj{{"k", pm.k}, {"l", pm.l}};
      mj.update(detail::binary_to_json(pm.model));
      members.push_back(std::move(mj));
    }
    j["members"] = std::move(members);
  }
  j["objective_config"] = to_json(cfg.effective_objective());
  j["train_config"] = to_json(cfg.train);
  if (f.scaler)
    j["standardization"] = json{{"mean", detail::vector_to_json(f.scaler->mean)},
                                {"std", detail::vector_to_json(f.scaler->std)}};
  else
    j["standardization"] = nullptr;
  return j;
}

struct LoadedModel {
  FittedClassifier classifier;
  MethodConfig config;
};

inline LoadedModel model_from_json(const json& j) {
  try {
    if (j.value("format", "") != "maxmin-svm-model")
      throw parse_error("not a model file (format tag missing)");
    LoadedModel out;
    out.config.method = parse_method(j.at("method").get<std::string>());
    out.config.objective = objective_config_from_json(j.at("objective_config"));
    out.config.train = train_config_from_json(j.at("train_config"));
    out.classifier.method = out.config.method;
    const int d = j.at("d").get<int>();
    const int c = j.at("c").get<int>();
    const auto names = j.at("class_names").get<std::vector<std::string>>();
    switch (out.config.method) {
      case Method::ovr: {
        OvRModel m{c, {}, names};
        const auto& members = j.at("members");
        require_same_dim(c, static_cast<long>(members.size()), "ovr members");
        for (const auto& mj : members) m.members.push_back(detail::binary_from_json(mj, d));
        out.classifier.model = std::move(m);
        break;
      }
      case Method::ovo: {
        OvOModel m{c, {}, names};
        const auto& members = j.at("members");
        require_same_dim(static_cast<long>(c) * (c - 1) / 2, static_cast<long>(members.size()),
                         "ovo members");
        for (const auto& mj : members)
          m.members.push_back(
              {mj.at("k").get<int>(), mj.at("l").get<int>(), detail::binary_from_json(mj, d)});
        out.classifier.model = std::move(m);
        break;
      }
      default: {
        const auto& w = j.at("W");
        require_same_dim(static_cast<long>(d) * c, static_cast<long>(w.size()), "model W");
        Matrix W(d, c);
        for (int r = 0; r < d; ++r)
          for (int k = 0; k < c; ++k) W(r, k) = w[static_cast<std::size_t>(r * c + k)].get<double>();
        out.classifier.model = LinearModel(std::move(W), detail::vector_from_json(j.at("b"), c, "model b"),
                                           names);
      }
    }
    const auto& st = j.at("standardization");
    if (!st.is_null())
      out.classifier.scaler = StandardizationStats{detail::vector_from_json(st.at("mean"), d, "standardization mean"),
                                                   detail::vector_from_json(st.at("std"), d, "standardization std")};
    return out;
  } catch (const json::exception& e) {
    throw parse_error(std::string("model file: ") + e.what());
  }
}

inline void save_model(const std::string& path, const FittedClassifier& f, const MethodConfig& cfg) {
  detail::write_text(path, to_json(f, cfg).dump(2) + "\n");
}

inline LoadedModel load_model(const std::string& path) {
  json j;
  try {
    j = json::parse(detail::read_text(path));
  } catch (const json::parse_error& e) {
    throw parse_error("model file '" + path + "': " + e.what());
  }
  return model_from_json(j);
}

// iter,objective,data_loss,reg_term,eps_term[,eval_acc]
inline std::string trace_csv(const TrainTrace& trace) {
  const bool with_eval = !trace.entries.empty() && trace.entries.front().eval_accuracy.has_value();
  std::string out = "iter,objective,data_loss,reg_term,eps_term";
  if (with_eval) out += ",eval_acc";
  out += "\n";
  for (const auto& e : trace.entries) {
    out += std::to_string(e.iter) + "," + detail::num(e.loss.total) + "," +
           detail::num(e.loss.data_loss) + "," + detail::num(e.loss.reg_term) + "," +
           detail::num(e.loss.eps_term);
    if (with_eval) out += "," + detail::num(e.eval_accuracy.value_or(0.0));
    out += "\n";
  }
  return out;
}

inline json to_json(const MarginReport& r) {
  json pairs = json::array();
  for (const auto& p : r.pair_margins) pairs.push_back(json{{"k", p.k}, {"l", p.l}, {"margin", p.margin}});
  return json{{"pair_margins", std::move(pairs)},
              {"min_margin", r.min_margin},
              {"argmin_pair", json::array({r.argmin_k, r.argmin_l})}};
}

inline std::string margins_csv(const MarginReport& r) {
  std::string out = "k,l,margin\n";
  for (const auto& p : r.pair_margins)
    out += std::to_string(p.k) + "," + std::to_string(p.l) + "," + detail::num(p.margin) + "\n";
  return out;
}

inline json to_json(const EvalReport& r) {
  json conf = json::array();
  for (Eigen::Index i = 0; i < r.confusion.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < r.confusion.cols(); ++j) row.push_back(r.confusion(i, j));
    conf.push_back(std::move(row));
  }
  return json{{"accuracy", r.accuracy}, {"n", r.n}, {"confusion", std::move(conf)}};
}

inline json to_json(const GridCell& c) { return json{{"p", c.p}, {"lambda", c.lambda}}; }

inline json to_json(const CVReport& r) {
  json folds = json::array();
  for (const auto& f : r.folds) {
    json fj{{"run", f.run}, {"fold", f.fold}, {"accuracy", f.accuracy}};
    if (f.selected) fj["selected"] = to_json(*f.selected);
    folds.push_back(std::move(fj));
  }
  json j{{"method", to_string(r.method)}, {"k", r.k},           {"runs", r.runs},
         {"folds", std::move(folds)},    {"run_means", r.run_means},
         {"mean", r.mean},               {"std", r.std}};
  j["refit_cell"] = r.refit_cell ? to_json(*r.refit_cell) : json(nullptr);
  j["margins"] = r.margins ? to_json(*r.margins) : json(nullptr);
  if (r.margin_error) j["margin_error"] = *r.margin_error;
  return j;
}

// p,lambda,mean_acc,std,min_margin (empty when no margin is defined)
inline std::string grid_csv(const std::vector<GridRow>& rows) {
  std::string out = "p,lambda,mean_acc,std,min_margin\n";
  for (const auto& r : rows)
    out += detail::num(r.cell.p) + "," + detail::num(r.cell.lambda) + "," + detail::num(r.mean_acc) +
           "," + detail::num(r.std) + "," + (r.min_margin ? detail::num(*r.min_margin) : "") + "\n";
  return out;
}

inline std::string sweep_csv(const std::vector<SweepRow>& rows) {
  std::string out = "p,min_margin,cv_accuracy,cv_std\n";
  for (const auto& r : rows)
    out += detail::num(r.p) + "," + (r.min_margin ? detail::num(*r.min_margin) : "") + "," +
           detail::num(r.cv_accuracy) + "," + detail::num(r.cv_std) + "\n";
  return out;
}

inline json to_json(const std::vector<CompareRow>& rows) {
  json a = json::array();
  for (const auto& r : rows)
    a.push_back(json{{"method", to_string(r.method)},
                     {"best", to_json(r.best)},
                     {"mean_acc", r.mean_acc},
                     {"std", r.std}});
  return a;
}

}  // namespace m3svm
