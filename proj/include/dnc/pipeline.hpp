#pragma once

#include <atomic>
#include <cstdint>
#include <exception>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "dnc/annotation.hpp"
#include "dnc/config.hpp"
#include "dnc/conquer.hpp"
#include "dnc/divide.hpp"
#include "dnc/feature_grid.hpp"
#include "dnc/postprocess.hpp"

namespace dnc {

MaskCutOptions maskcut_options(const PipelineConfig& cfg);
AssembleOptions assemble_options(const PipelineConfig& cfg);

/// Everything the pipeline needs for one image. `crops` holds optional
/// externally extracted local grids keyed by parent mask id; parents without
/// one are conquered on a native-resolution cut of `grid`.
struct ImageJob {
  std::string image_id;
  FeatureGrid grid;
  std::optional<AnnotationSet> proposals;
  std::map<std::int64_t, FeatureGrid> crops;
};

/// Level-0 masks: proposals filtered by tau when present, maskcut otherwise.
std::vector<ScoredMask> run_divide(const ImageJob& job, const PipelineConfig& cfg);

/// One hierarchy per parent. Parents covering fewer than two local patches
/// have no parts and are skipped.
std::vector<Hierarchy> run_conquer(const ImageJob& job, const std::vector<ScoredMask>& parents,
                                   const PipelineConfig& cfg);

/// divide -> conquer per parent -> assemble.
AnnotationSet run_pipeline(const ImageJob& job, const PipelineConfig& cfg,
                           const Refiner& refiner = {});

/// Runs fn(i) for i in [0, n) on at most `workers` threads. Every index runs;
/// if any threw, the exception of the smallest failing index is rethrown.
void parallel_for(std::size_t n, int workers, const std::function<void(std::size_t)>& fn);

}  // namespace dnc
