#include "dnc/config.hpp"

#include <yaml-cpp/yaml.h>

#include <string>

#include "dnc/error.hpp"
#include "dnc/io.hpp"

namespace dnc {

namespace {

[[noreturn]] void config_error(const std::string& key, const std::string& what) {
  throw Error(ErrorKind::Config, "config key '" + key + "': " + what);
}

template <class T>
T scalar(const YAML::Node& node, const std::string& key) {
  if (!node.IsScalar()) config_error(key, "expected a scalar value");
  try {
    return node.as<T>();
  } catch (const YAML::Exception&) {
    config_error(key, "cannot parse '" + node.Scalar() + "'");
  }
}

void check_unit(double v, const std::string& key) {
  if (!(v >= 0.0 && v <= 1.0)) config_error(key, "value " + std::to_string(v) + " outside [0,1]");
}

void check_half_open_unit(double v, const std::string& key) {
  if (!(v > 0.0 && v <= 1.0)) config_error(key, "value " + std::to_string(v) + " outside (0,1]");
}

}  // namespace

void PipelineConfig::validate() const {
  check_unit(tau, "tau");
  if (thetas.empty()) config_error("thetas", "ladder is empty");
  for (std::size_t i = 0; i < thetas.size(); ++i) {
    if (!(thetas[i] > 0.0 && thetas[i] < 1.0)) config_error("thetas", "every threshold must be in (0,1)");
    if (i > 0 && !(thetas[i] < thetas[i - 1])) config_error("thetas", "ladder must be strictly decreasing");
  }
  check_unit(tau_self_train, "tau_self_train");
  check_half_open_unit(selftrain_dedup_iou, "selftrain_dedup_iou");
  check_unit(tau_plus, "tau_plus");
  if (!(tau_ncut > 0.0 && tau_ncut < 1.0)) config_error("tau_ncut", "must be in (0,1)");
  if (!(epsilon > 0.0 && epsilon < tau_ncut)) config_error("epsilon", "must satisfy 0 < epsilon < tau_ncut");
  if (t_max < 1) config_error("t_max", "must be >= 1");
  check_half_open_unit(nms_iou, "nms_iou");
  if (k_point < 1) config_error("k_point", "must be >= 1");
  if (min_area < 0) config_error("min_area", "must be >= 0");
  check_unit(refine_delta, "refine_delta");
  if (workers < 1) config_error("workers", "must be >= 1");
}

PipelineConfig parse_config(std::string_view text) {
  YAML::Node root;
  try {
    root = YAML::Load(std::string(text));
  } catch (const YAML::Exception& e) {
    throw Error(ErrorKind::Config, std::string("config is not valid YAML: ") + e.what());
  }
  PipelineConfig cfg;
  if (root.IsNull()) return cfg;
  if (!root.IsMap()) throw Error(ErrorKind::Config, "config must be a mapping of key: value");

  for (const auto& entry : root) {
    const std::string key = entry.first.as<std::string>();
    const YAML::Node& v = entry.second;
    if (key == "tau") cfg.tau = scalar<double>(v, key);
    else if (key == "thetas") {
      if (!v.IsSequence()) config_error(key, "expected a list of thresholds");
      cfg.thetas.clear();
      for (const auto& t : v) cfg.thetas.push_back(scalar<double>(t, key));
    }
    else if (key == "tau_self_train") cfg.tau_self_train = scalar<double>(v, key);
    else if (key == "selftrain_dedup_iou") cfg.selftrain_dedup_iou = scalar<double>(v, key);
    else if (key == "tau_plus") cfg.tau_plus = scalar<double>(v, key);
    else if (key == "tau_ncut") cfg.tau_ncut = scalar<double>(v, key);
    else if (key == "epsilon") cfg.epsilon = scalar<double>(v, key);
    else if (key == "t_max") cfg.t_max = scalar<int>(v, key);
    else if (key == "nms_iou") cfg.nms_iou = scalar<double>(v, key);
    else if (key == "k_point") cfg.k_point = scalar<int>(v, key);
    else if (key == "min_area") cfg.min_area = scalar<std::int64_t>(v, key);
    else if (key == "refine_delta") cfg.refine_delta = scalar<double>(v, key);
    else if (key == "refine_first") cfg.refine_first = scalar<bool>(v, key);
    else if (key == "workers") cfg.workers = scalar<int>(v, key);
    else config_error(key, "unknown key");
  }
  cfg.validate();
  return cfg;
}

PipelineConfig load_config(const std::filesystem::path& path) {
  return parse_config(read_file(path));
}

}  // namespace dnc
