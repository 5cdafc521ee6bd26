#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "dnc/feature_grid.hpp"
#include "dnc/mask.hpp"

namespace dnc {

/// Dense symmetric patch affinity. Entries are stored in single precision;
/// every computation on them runs in double.
class AffinityMatrix {
 public:
  AffinityMatrix() = default;
  AffinityMatrix(int n, float fill);

  /// Builds from a row-major n x n array; rejects asymmetric or non-positive input.
  static AffinityMatrix from_dense(int n, std::span<const double> values);

  int size() const { return n_; }
  float operator()(int i, int j) const { return w_[index(i, j)]; }
  void set_symmetric(int i, int j, float v) {
    w_[index(i, j)] = v;
    w_[index(j, i)] = v;
  }
  std::span<const float> row(int i) const {
    return {w_.data() + static_cast<std::size_t>(i) * n_, static_cast<std::size_t>(n_)};
  }
  std::vector<double> degrees() const;

  bool operator==(const AffinityMatrix&) const = default;

 private:
  std::size_t index(int i, int j) const { return static_cast<std::size_t>(i) * n_ + j; }

  int n_ = 0;
  std::vector<float> w_;
};

/// Binarized cosine affinity: 1 where cos(K_i, K_j) >= tau_ncut, epsilon elsewhere.
AffinityMatrix cosine_affinity(const FeatureGrid& grid, double tau_ncut, double epsilon);

/// Cuts every excluded patch off the graph: its row and column become epsilon
/// and its diagonal stays 1 so the degree matrix remains invertible.
AffinityMatrix mask_affinity(const AffinityMatrix& w, std::span<const int> excluded, double epsilon);

struct EigenOptions {
  /// Graphs up to this many nodes use the dense LAPACK solve; larger ones use Lanczos.
  int dense_limit = 256;
  /// Matrix-vector product budget for the iterative path.
  int max_iterations = 10000;
  /// Bound on the generalized residual of the unit-norm iterative result.
  double tolerance = 1e-8;
  int krylov_dim = 256;
};

struct FiedlerVector {
  /// Generalized eigenvector of (D - W) x = lambda D x, unit 2-norm, sign fixed
  /// so that the largest-magnitude entry is positive.
  std::vector<double> x;
  double eigenvalue = 0.0;
  /// ||(D - W) x - lambda D x||_2 for the returned pair.
  double residual = 0.0;
  bool dense = true;
  int iterations = 0;
};

FiedlerVector ncut_second_eigvec(const AffinityMatrix& w, const EigenOptions& options = {});

/// ||(D - W) x - lambda D x||_2.
double generalized_residual(const AffinityMatrix& w, std::span<const double> x, double lambda);

/// Patch-level split of `x` at its mean; the side holding the largest |x_i|
/// is the foreground. `active` (optional, same length) restricts both the mean
/// and the seed search to active patches; inactive patches are never foreground.
std::vector<std::uint8_t> bipartition_patches(std::span<const double> x,
                                              std::span<const std::uint8_t> active = {});

/// bipartition_patches upsampled to pixels, each patch covering patch_size^2 pixels.
BinaryMask bipartition(std::span<const double> x, int gh, int gw, int patch_size);

/// Replicates a row-major gh x gw patch set into a (gh*ps) x (gw*ps) mask.
BinaryMask upsample_patches(std::span<const std::uint8_t> patches, int gh, int gw,
                            int patch_size);

}  // namespace dnc
