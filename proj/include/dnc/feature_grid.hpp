#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace dnc {

/// gh x gw grid of patch features, row-major by (y, x, channel).
struct FeatureGrid {
  int gh = 0;
  int gw = 0;
  int dim = 0;
  int patch_size = 1;
  std::vector<float> data;

  FeatureGrid() = default;
  FeatureGrid(int gh, int gw, int dim, int patch_size);

  int patches() const { return gh * gw; }
  int image_height() const { return gh * patch_size; }
  int image_width() const { return gw * patch_size; }

  std::span<const float> feature(int patch) const {
    return {data.data() + static_cast<std::size_t>(patch) * dim, static_cast<std::size_t>(dim)};
  }
  std::span<float> feature(int patch) {
    return {data.data() + static_cast<std::size_t>(patch) * dim, static_cast<std::size_t>(dim)};
  }

  /// Checks sizes, finiteness and nonzero feature norms. `min_patches` is 4 for
  /// whole-image grids; local crops may be smaller.
  void validate(int min_patches = 4) const;
};

/// Unit-normalized copies of every patch feature, in double precision.
std::vector<double> normalized_features(const FeatureGrid& grid);

}  // namespace dnc
