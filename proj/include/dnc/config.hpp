#pragma once

#include <cstdint>
#include <filesystem>
#include <string_view>
#include <vector>

namespace dnc {

/// Pipeline tunables. Defaults are the published settings where they exist.
struct PipelineConfig {
  double tau = 0.3;  // divide-stage confidence filter (strict >)
  std::vector<double> thetas{0.6, 0.5, 0.4, 0.3, 0.2, 0.1};
  double tau_self_train = 0.7;
  double selftrain_dedup_iou = 0.5;
  double tau_plus = 0.02;
  double tau_ncut = 0.15;
  double epsilon = 1e-5;
  int t_max = 3;
  double nms_iou = 0.9;
  int k_point = 6;
  std::int64_t min_area = 100;
  double refine_delta = 0.5;
  bool refine_first = true;
  int workers = 1;

  /// Throws Error(Config) naming the first out-of-range key.
  void validate() const;
};

/// Parses a YAML mapping of config keys. Empty text yields the defaults;
/// unknown keys and bad values are errors, and nothing is returned on error.
PipelineConfig parse_config(std::string_view text);
PipelineConfig load_config(const std::filesystem::path& path);

}  // namespace dnc
