#pragma once

#include <vector>

#include "dnc/annotation.hpp"
#include "dnc/feature_grid.hpp"
#include "dnc/ncut.hpp"

namespace dnc {

struct MaskCutOptions {
  int t_max = 3;
  double tau_ncut = 0.15;
  double epsilon = 1e-5;
  /// Cuts with fewer patches are discarded as noise.
  int min_patches = 2;
  EigenOptions eigen;
};

/// Trace of one extraction iteration, for tests and diagnostics.
struct MaskCutStep {
  std::vector<int> excluded;  // patches masked out before this cut
  FiedlerVector fiedler;
  std::vector<std::uint8_t> foreground;  // empty when the cut was rejected
};

/// Iterative Normalized Cuts on the patch graph. Returns level-0 masks with
/// ids 0..k-1, pairwise disjoint in patch space. Each mask's score is the mean
/// pairwise cosine similarity of its patches, clamped to [0, 1].
std::vector<ScoredMask> maskcut(const FeatureGrid& grid, const MaskCutOptions& options = {},
                                std::vector<MaskCutStep>* trace = nullptr);

/// Mean pairwise cosine similarity between the listed patches, clamped to [0, 1].
double mean_pairwise_cosine(const FeatureGrid& grid, std::span<const int> patches);

/// Divide stage from features: maskcut, then keep masks with score > tau.
std::vector<ScoredMask> divide_stage(const FeatureGrid& grid, double tau,
                                     const MaskCutOptions& options = {});

/// Divide stage from an external proposal set (e.g. a learned detector's
/// output): keep masks with score > tau, normalized to level 0 with no parent.
std::vector<ScoredMask> divide_stage(const AnnotationSet& proposals, double tau);

}  // namespace dnc
