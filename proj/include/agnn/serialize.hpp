#pragma once

#include <fstream>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "agnn/common.hpp"
#include "agnn/data.hpp"
#include "agnn/model.hpp"
#include "agnn/oracle_report.hpp"
#include "agnn/trainer.hpp"

namespace agnn {

using json = nlohmann::ordered_json;

inline json config_to_json(const TrainConfig& c) {
  return json{{"layers", c.layers},
              {"hidden", c.hidden},
              {"lr", c.lr},
              {"lr_min", c.lr_min},
              {"weight_decay", c.weight_decay},
              {"max_epochs", c.max_epochs},
              {"patience", c.patience},
              {"theta1", c.theta1},
              {"theta2", c.theta2},
              {"lambda", c.lambda},
              {"rho", c.rho},
              {"epsilon", c.epsilon},
              {"adam_beta1", c.adam_beta1},
              {"adam_beta2", c.adam_beta2},
              {"adam_eps", c.adam_eps},
              {"seed", c.seed},
              {"gcl_activation", c.gcl_activation},
              {"classifier_activation", c.classifier_activation},
              {"gel_activation", c.gel_activation},
              {"plain_gcn", c.plain_gcn},
              {"per_class", c.per_class},
              {"n_valid", c.n_valid},
              {"n_test", c.n_test}};
}

// Missing keys keep their defaults; unknown keys are rejected so typos in a
// config file cannot silently change a run.
inline TrainConfig config_from_json(const json& j) {
  TrainConfig c;
  const json reference = config_to_json(c);
  for (const auto& [key, value] : j.items())
    if (!reference.contains(key))
      throw DataError("config: unknown key '" + key + "'");
  auto get = [&](const char* key, auto& slot) {
    if (j.contains(key)) slot = j.at(key).get<std::decay_t<decltype(slot)>>();
  };
  get("layers", c.layers);
  get("hidden", c.hidden);
  get("lr", c.lr);
  get("lr_min", c.lr_min);
  get("weight_decay", c.weight_decay);
  get("max_epochs", c.max_epochs);
  get("patience", c.patience);
  get("theta1", c.theta1);
  get("theta2", c.theta2);
  get("lambda", c.lambda);
  get("rho", c.rho);
  get("epsilon", c.epsilon);
  get("adam_beta1", c.adam_beta1);
  get("adam_beta2", c.adam_beta2);
  get("adam_eps", c.adam_eps);
  get("seed", c.seed);
  get("gcl_activation", c.gcl_activation);
  get("classifier_activation", c.classifier_activation);
  get("gel_activation", c.gel_activation);
  get("plain_gcn", c.plain_gcn);
  get("per_class", c.per_class);
  get("n_valid", c.n_valid);
  get("n_test", c.n_test);
  return c;
}

inline TrainConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open config file '" + path + "'");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw DataError("config '" + path + "': " + e.what());
  }
  return config_from_json(j);
}

inline json split_to_json(const Split& s) {
  return json{{"train", s.train}, {"valid", s.valid}, {"test", s.test}};
}

inline Split split_from_json(const json& j) {
  Split s;
  s.train = j.at("train").get<std::vector<int>>();
  s.valid = j.at("valid").get<std::vector<int>>();
  s.test = j.at("test").get<std::vector<int>>();
  return s;
}

inline Split load_split_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open split file '" + path + "'");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw DataError("split '" + path + "': " + e.what());
  }
  return split_from_json(j);
}

inline json matrix_to_json(const Mat& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline Mat matrix_from_json(const json& j) {
  const auto rows = j.get<std::vector<std::vector<double>>>();
  if (rows.empty()) throw DataError("model: empty matrix");
  Mat m(rows.size(), rows[0].size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != rows[0].size())
      throw DataError("model: ragged matrix");
    for (std::size_t k = 0; k < rows[i].size(); ++k) m(i, k) = rows[i][k];
  }
  return m;
}

inline json model_to_json(AgnnModel& model) {
  json j{{"format", "agnn-model"},
         {"plain_gcn", model.cfg.plain_gcn},
         {"layers", model.layer_count()},
         {"hidden", model.cfg.hidden},
         {"in_dim", model.cfg.in_dim},
         {"classes", model.cfg.classes},
         {"lambda", model.cfg.lambda},
         {"theta1", model.cfg.msrelu.theta1},
         {"theta2", model.cfg.msrelu.theta2},
         {"gcl_activation", to_string(model.cfg.gcl_activation)},
         {"classifier_activation", to_string(model.cfg.classifier_activation)},
         {"gel_activation", to_string(model.cfg.gel_activation)}};
  json params = json::object();
  for (ParamTensor* p : model.params()) params[p->name] = matrix_to_json(p->value);
  j["params"] = std::move(params);
  return j;
}

inline AgnnModel model_from_json(const json& j, const TrainConfig& run_cfg) {
  if (!j.contains("format") || j.at("format") != "agnn-model")
    throw DataError("model file: unrecognized format");
  TrainConfig cfg = run_cfg;
  cfg.plain_gcn = j.at("plain_gcn").get<bool>();
  cfg.layers = j.at("layers").get<int>();
  cfg.hidden = j.at("hidden").get<int>();
  cfg.lambda = j.at("lambda").get<double>();
  cfg.theta1 = j.at("theta1").get<double>();
  cfg.theta2 = j.at("theta2").get<double>();
  cfg.gcl_activation = j.at("gcl_activation").get<std::string>();
  cfg.classifier_activation = j.at("classifier_activation").get<std::string>();
  cfg.gel_activation = j.at("gel_activation").get<std::string>();
  const ModelConfig mc = model_config_from(cfg, j.at("in_dim").get<int>(),
                                           j.at("classes").get<int>());
  AgnnModel model = make_model(mc, 0);
  const json& params = j.at("params");
  for (ParamTensor* p : model.params()) {
    if (!params.contains(p->name))
      throw DataError("model file: missing parameter '" + p->name + "'");
    Mat v = matrix_from_json(params.at(p->name));
    if (v.rows() != p->value.rows() || v.cols() != p->value.cols())
      throw DataError("model file: shape mismatch for '" + p->name + "'");
    p->value = std::move(v);
  }
  return model;
}

inline AgnnModel load_model_file(const std::string& path,
                                 const TrainConfig& run_cfg) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open model file '" + path + "'");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw DataError("model '" + path + "': " + e.what());
  }
  return model_from_json(j, run_cfg);
}

inline json oracle_report_to_json(const oracle::OracleReport& report) {
  json checks = json::array();
  for (const auto& c : report.checks) {
    json jc{{"name", c.name},
            {"seed", c.seed},
            {"metric", c.metric},
            {"threshold", c.threshold},
            {"pass", c.pass}};
    if (!c.note.empty()) jc["note"] = c.note;
    checks.push_back(std::move(jc));
  }
  return json{
      {"seed", report.seed}, {"all_pass", report.all_pass}, {"checks", checks}};
}

}  // namespace agnn
