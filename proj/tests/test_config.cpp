#include "doctest.h"

#include <filesystem>
#include <fstream>

#include "dnc/config.hpp"
#include "dnc/error.hpp"
#include "support/check.hpp"

using namespace dnc;

namespace {

std::string config_error(std::string_view text) {
  try {
    parse_config(text);
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Config);
    return e.what();
  }
  FAIL("expected a config error");
  return {};
}

}  // namespace

TEST_CASE("empty config yields the defaults") {
  for (const char* text : {"", "\n", "# nothing here\n", "~"}) {
    const PipelineConfig c = parse_config(text);
    CHECK(c.tau == 0.3);
    CHECK(c.thetas == std::vector<double>{0.6, 0.5, 0.4, 0.3, 0.2, 0.1});
    CHECK(c.tau_self_train == 0.7);
    CHECK(c.selftrain_dedup_iou == 0.5);
    CHECK(c.tau_plus == 0.02);
    CHECK(c.tau_ncut == 0.15);
    CHECK(c.epsilon == 1e-5);
    CHECK(c.t_max == 3);
    CHECK(c.nms_iou == 0.9);
    CHECK(c.k_point == 6);
    CHECK(c.min_area == 100);
  }
}

TEST_CASE("keys override defaults") {
  const PipelineConfig c = parse_config(
      "tau: 0.25\nthetas: [0.9, 0.45]\nt_max: 5\nmin_area: 0\nrefine_first: false\nworkers: 4\n");
  CHECK(c.tau == 0.25);
  CHECK(c.thetas == std::vector<double>{0.9, 0.45});
  CHECK(c.t_max == 5);
  CHECK(c.min_area == 0);
  CHECK_FALSE(c.refine_first);
  CHECK(c.workers == 4);
  CHECK(c.tau_plus == 0.02);
}

TEST_CASE("bad values name their key") {
  CHECK(config_error("tau: 1.5").find("tau") != std::string::npos);
  CHECK(config_error("thetas: [0.3, 0.6]").find("thetas") != std::string::npos);
  CHECK(config_error("thetas: [0.6, 0.6]").find("thetas") != std::string::npos);
  CHECK(config_error("thetas: []").find("thetas") != std::string::npos);
  CHECK(config_error("thetas: 0.5").find("thetas") != std::string::npos);
  CHECK(config_error("thetas: [1.0, 0.5]").find("thetas") != std::string::npos);
  CHECK(config_error("nms_iou: 0").find("nms_iou") != std::string::npos);
  CHECK(config_error("epsilon: 0.5").find("epsilon") != std::string::npos);
  CHECK(config_error("t_max: 0").find("t_max") != std::string::npos);
  CHECK(config_error("t_max: 2.5").find("t_max") != std::string::npos);
  CHECK(config_error("min_area: -1").find("min_area") != std::string::npos);
  CHECK(config_error("tau: high").find("tau") != std::string::npos);
  CHECK(config_error("tua: 0.3").find("tua") != std::string::npos);
  CHECK(config_error("tua: 0.3").find("unknown") != std::string::npos);
  CHECK_FALSE(config_error("- 1\n- 2").empty());
  CHECK_FALSE(config_error("tau: [0.3").empty());
}

TEST_CASE("load_config reads a file") {
  const auto path = std::filesystem::temp_directory_path() / "dnc_config_test.yaml";
  std::ofstream(path) << "tau_plus: 0.05\n";
  CHECK(load_config(path).tau_plus == 0.05);
  std::filesystem::remove(path);
  CHECK_THROWS_KIND(load_config(path), ErrorKind::Io);
}
