#pragma once

#include <cstdint>
#include <set>
#include <span>
#include <vector>

#include "dnc/feature_grid.hpp"
#include "dnc/mask.hpp"

namespace dnc {

/// Geometry linking a local feature grid to the image it was cropped from.
/// The local grid covers local_height x local_width pixels, which stand for
/// `box` in image pixels; both directions use nearest-neighbour sampling.
struct CropFrame {
  BBox box;
  int local_height = 0;
  int local_width = 0;

  /// Image pixel sampled by a local pixel center.
  Point to_image(double local_x, double local_y) const;
  /// Local pixel whose area contains the center of an image pixel inside `box`.
  Point to_local(int image_x, int image_y) const;
};

/// Local grid for a parent mask cut straight out of the whole-image grid:
/// the patch-aligned cover of the mask's bbox at native resolution.
struct LocalGrid {
  FeatureGrid grid;
  CropFrame frame;
};
LocalGrid crop_from_image_grid(const FeatureGrid& image_grid, const BinaryMask& parent);

/// Frame for an externally extracted crop grid (e.g. 256x256 pixels -> 32x32
/// patches) of the parent's bounding box.
CropFrame crop_frame_for(const BinaryMask& parent, const FeatureGrid& local);

struct Cluster {
  /// Smallest member patch index; stable across merges.
  int id = 0;
  std::vector<int> patches;  // sorted local patch indices
  std::vector<double> feature;
  /// Mean cosine of member patch features to `feature`; 1 for singletons.
  double score = 1.0;

  int size() const { return static_cast<int>(patches.size()); }
  bool operator==(const Cluster&) const = default;
};

/// Mutable partition of the in-mask patches with cluster adjacency.
class ClusterSet {
 public:
  ClusterSet() = default;
  ClusterSet(int grid_patches, int dim);

  void add_singleton(int patch, std::span<const float> feature);
  void connect(int a, int b);

  /// Live clusters ordered by id.
  std::vector<Cluster> clusters() const;
  std::size_t live_count() const { return live_; }
  bool alive(int id) const { return alive_[id] != 0; }
  const Cluster& cluster(int id) const { return slots_[id]; }
  const std::set<int>& neighbors(int id) const { return adjacency_[id]; }
  std::uint32_t stamp(int id) const { return stamp_[id]; }

  /// Merges `b` into `a` (a < b): size-weighted feature average, patch and
  /// adjacency union. The merged cluster keeps id a.
  void merge(int a, int b);

  /// Cosine similarity between two cluster features.
  double similarity(int a, int b) const;

 private:
  std::vector<Cluster> slots_;
  std::vector<std::uint8_t> alive_;
  std::vector<std::set<int>> adjacency_;
  std::vector<std::uint32_t> stamp_;
  std::size_t live_ = 0;
  int dim_ = 0;
};

/// Cosine similarity with a fixed reduction order, so results are reproducible.
double feature_cosine(std::span<const double> a, std::span<const double> b);

/// One singleton cluster per local patch whose center lands on the parent
/// mask, with 4-connected adjacency among those patches.
ClusterSet init_clusters(const BinaryMask& parent, const FeatureGrid& local,
                         const CropFrame& frame);

/// Greedily merges the most similar adjacent pair while its similarity is at
/// least theta. Ties go to the smallest (min_id, max_id). Returns merge count.
int merge_pass(ClusterSet& clusters, double theta);

struct Hierarchy {
  ScoredMask parent;
  std::vector<double> thetas;
  /// levels[0] = {whole parent}; levels[t] for t = 1..l, where levels[l] was
  /// produced by the largest threshold.
  std::vector<std::vector<Cluster>> levels;
  int local_gh = 0;
  int local_gw = 0;
  int local_patch_size = 1;
  CropFrame frame;
};

/// Runs merge_pass for each threshold, largest first, carrying state over.
Hierarchy conquer(const ScoredMask& parent, const FeatureGrid& local, const CropFrame& frame,
                  std::span<const double> thetas);

/// Pixel masks for levels 1..l (coarse first), intersected with the parent
/// mask, in image coordinates, scored by Cluster::score. Ids start at `first_id`.
std::vector<ScoredMask> hierarchy_masks(const Hierarchy& h, std::int64_t first_id);

}  // namespace dnc
