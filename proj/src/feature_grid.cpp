#include "dnc/feature_grid.hpp"

#include <cmath>
#include <string>

#include "dnc/error.hpp"

namespace dnc {

FeatureGrid::FeatureGrid(int gh_, int gw_, int dim_, int patch_size_)
    : gh(gh_), gw(gw_), dim(dim_), patch_size(patch_size_),
      data(static_cast<std::size_t>(gh_) * gw_ * dim_, 0.0f) {}

void FeatureGrid::validate(int min_patches) const {
  if (gh <= 0 || gw <= 0 || dim <= 0 || patch_size <= 0) {
    throw Error(ErrorKind::InvalidArgument, "feature grid dimensions must be positive");
  }
  if (gh * gw < min_patches) {
    throw Error(ErrorKind::InvalidArgument, "feature grid has " + std::to_string(gh * gw) +
                                                " patches, need at least " +
                                                std::to_string(min_patches));
  }
  if (data.size() != static_cast<std::size_t>(gh) * gw * dim) {
    throw Error(ErrorKind::DimensionMismatch, "feature grid payload size mismatch");
  }
  for (int p = 0; p < patches(); ++p) {
    double nn = 0.0;
    for (float v : feature(p)) {
      if (!std::isfinite(v)) {
        throw Error(ErrorKind::NonFiniteValue,
                    "patch " + std::to_string(p) + " has a non-finite feature value");
      }
      nn += static_cast<double>(v) * v;
    }
    if (nn == 0.0) {
      throw Error(ErrorKind::ZeroNormFeature, "patch " + std::to_string(p) + " (y=" +
                                                  std::to_string(p / gw) + ", x=" +
                                                  std::to_string(p % gw) +
                                                  ") has a zero-norm feature");
    }
  }
}

std::vector<double> normalized_features(const FeatureGrid& grid) {
  std::vector<double> out(grid.data.size());
  for (int p = 0; p < grid.patches(); ++p) {
    const auto f = grid.feature(p);
    double nn = 0.0;
    for (float v : f) nn += static_cast<double>(v) * v;
    const double norm = std::sqrt(nn);
    if (norm == 0.0) {
      throw Error(ErrorKind::ZeroNormFeature,
                  "patch " + std::to_string(p) + " has a zero-norm feature");
    }
    for (int c = 0; c < grid.dim; ++c) {
      out[static_cast<std::size_t>(p) * grid.dim + c] = f[c] / norm;
    }
  }
  return out;
}

}  // namespace dnc
