#include "dnc/conquer.hpp"

#include <algorithm>
#include <cmath>
#include <queue>

#include "dnc/error.hpp"

namespace dnc {

Point CropFrame::to_image(double local_x, double local_y) const {
  const int ix = box.x1 + static_cast<int>(std::floor(local_x * box.width() / local_width));
  const int iy = box.y1 + static_cast<int>(std::floor(local_y * box.height() / local_height));
  return Point{std::clamp(ix, box.x1, box.x2 - 1), std::clamp(iy, box.y1, box.y2 - 1)};
}

Point CropFrame::to_local(int image_x, int image_y) const {
  const int lx = static_cast<int>(
      std::floor((image_x - box.x1 + 0.5) * local_width / static_cast<double>(box.width())));
  const int ly = static_cast<int>(
      std::floor((image_y - box.y1 + 0.5) * local_height / static_cast<double>(box.height())));
  return Point{std::clamp(lx, 0, local_width - 1), std::clamp(ly, 0, local_height - 1)};
}

LocalGrid crop_from_image_grid(const FeatureGrid& image_grid, const BinaryMask& parent) {
  if (parent.height() != image_grid.image_height() || parent.width() != image_grid.image_width()) {
    throw Error(ErrorKind::DimensionMismatch, "parent mask does not match the feature grid image");
  }
  const int ps = image_grid.patch_size;
  const BBox b = bbox_of(parent);
  const int px0 = b.x1 / ps, py0 = b.y1 / ps;
  const int px1 = (b.x2 + ps - 1) / ps, py1 = (b.y2 + ps - 1) / ps;
  LocalGrid out;
  out.grid = FeatureGrid(py1 - py0, px1 - px0, image_grid.dim, ps);
  for (int y = py0; y < py1; ++y) {
    for (int x = px0; x < px1; ++x) {
      const auto src = image_grid.feature(y * image_grid.gw + x);
      auto dst = out.grid.feature((y - py0) * out.grid.gw + (x - px0));
      std::copy(src.begin(), src.end(), dst.begin());
    }
  }
  out.frame.box = BBox{px0 * ps, py0 * ps, px1 * ps, py1 * ps};
  out.frame.local_height = out.grid.image_height();
  out.frame.local_width = out.grid.image_width();
  return out;
}

CropFrame crop_frame_for(const BinaryMask& parent, const FeatureGrid& local) {
  CropFrame f;
  f.box = bbox_of(parent);
  f.local_height = local.image_height();
  f.local_width = local.image_width();
  return f;
}

double feature_cosine(std::span<const double> a, std::span<const double> b) {
  double ab = 0.0, aa = 0.0, bb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ab += a[i] * b[i];
    aa += a[i] * a[i];
    bb += b[i] * b[i];
  }
  return ab / (std::sqrt(aa) * std::sqrt(bb));
}

ClusterSet::ClusterSet(int grid_patches, int dim)
    : slots_(grid_patches), alive_(grid_patches, 0), adjacency_(grid_patches),
      stamp_(grid_patches, 0), dim_(dim) {}

void ClusterSet::add_singleton(int patch, std::span<const float> feature) {
  Cluster& c = slots_[patch];
  c.id = patch;
  c.patches = {patch};
  c.feature.assign(feature.begin(), feature.end());
  if (!alive_[patch]) ++live_;
  alive_[patch] = 1;
}

void ClusterSet::connect(int a, int b) {
  adjacency_[a].insert(b);
  adjacency_[b].insert(a);
}

std::vector<Cluster> ClusterSet::clusters() const {
  std::vector<Cluster> out;
  out.reserve(live_);
  for (std::size_t i = 0; i < slots_.size(); ++i) {
    if (alive_[i]) out.push_back(slots_[i]);
  }
  return out;
}

double ClusterSet::similarity(int a, int b) const {
  return feature_cosine(slots_[a].feature, slots_[b].feature);
}

void ClusterSet::merge(int a, int b) {
  if (a >= b || !alive_[a] || !alive_[b]) {
    throw Error(ErrorKind::InvalidArgument, "merge needs two live clusters with a < b");
  }
  Cluster& ca = slots_[a];
  Cluster& cb = slots_[b];
  const double wa = ca.size(), wb = cb.size();
  for (int c = 0; c < dim_; ++c) {
    ca.feature[c] = (wa * ca.feature[c] + wb * cb.feature[c]) / (wa + wb);
  }
  std::vector<int> merged;
  merged.reserve(ca.patches.size() + cb.patches.size());
  std::merge(ca.patches.begin(), ca.patches.end(), cb.patches.begin(), cb.patches.end(),
             std::back_inserter(merged));
  ca.patches = std::move(merged);
  cb.patches.clear();
  cb.feature.clear();

  for (int n : adjacency_[b]) {
    adjacency_[n].erase(b);
    if (n != a) {
      adjacency_[n].insert(a);
      adjacency_[a].insert(n);
    }
  }
  adjacency_[a].erase(b);
  adjacency_[b].clear();
  alive_[b] = 0;
  ++stamp_[a];
  ++stamp_[b];
  --live_;
}

ClusterSet init_clusters(const BinaryMask& parent, const FeatureGrid& local,
                         const CropFrame& frame) {
  if (frame.local_height != local.image_height() || frame.local_width != local.image_width()) {
    throw Error(ErrorKind::DimensionMismatch, "crop frame does not match the local grid");
  }
  const BBox& b = frame.box;
  if (b.x1 < 0 || b.y1 < 0 || b.x2 > parent.width() || b.y2 > parent.height() || b.x1 >= b.x2 ||
      b.y1 >= b.y2) {
    throw Error(ErrorKind::OutOfBounds, "crop box is empty or outside the parent image");
  }
  const Bitmap pm = parent.decode();
  const int ps = local.patch_size;
  ClusterSet set(local.patches(), local.dim);
  std::vector<std::uint8_t> inside(local.patches(), 0);
  int count = 0;
  for (int py = 0; py < local.gh; ++py) {
    for (int px = 0; px < local.gw; ++px) {
      const Point p = frame.to_image(px * ps + ps / 2.0, py * ps + ps / 2.0);
      if (p.x < 0 || p.y < 0 || p.x >= pm.width || p.y >= pm.height) {
        throw Error(ErrorKind::OutOfBounds, "crop frame maps outside the image");
      }
      if (pm.at(p.y, p.x)) {
        const int idx = py * local.gw + px;
        inside[idx] = 1;
        set.add_singleton(idx, local.feature(idx));
        ++count;
      }
    }
  }
  if (count < 2) {
    throw Error(ErrorKind::MaskTooSmall, "mask too small to conquer (" + std::to_string(count) +
                                             " patch" + (count == 1 ? "" : "es") + ")");
  }
  for (int py = 0; py < local.gh; ++py) {
    for (int px = 0; px < local.gw; ++px) {
      const int idx = py * local.gw + px;
      if (!inside[idx]) continue;
      if (px + 1 < local.gw && inside[idx + 1]) set.connect(idx, idx + 1);
      if (py + 1 < local.gh && inside[idx + local.gw]) set.connect(idx, idx + local.gw);
    }
  }
  return set;
}

namespace {

struct Candidate {
  double sim;
  int a;  // a < b
  int b;
  std::uint32_t stamp_a;
  std::uint32_t stamp_b;
};

// Max-heap order: higher similarity first, then smaller (a, b).
struct LowerPriority {
  bool operator()(const Candidate& x, const Candidate& y) const {
    if (x.sim != y.sim) return x.sim < y.sim;
    if (x.a != y.a) return x.a > y.a;
    return x.b > y.b;
  }
};

}  // namespace

int merge_pass(ClusterSet& clusters, double theta) {
  if (!(theta > 0.0 && theta < 1.0)) {
    throw Error(ErrorKind::InvalidArgument, "merge threshold must be in (0,1)");
  }
  std::priority_queue<Candidate, std::vector<Candidate>, LowerPriority> heap;
  auto push = [&](int a, int b) {
    if (a > b) std::swap(a, b);
    heap.push(Candidate{clusters.similarity(a, b), a, b, clusters.stamp(a), clusters.stamp(b)});
  };
  for (const auto& c : clusters.clusters()) {
    for (int n : clusters.neighbors(c.id)) {
      if (c.id < n) push(c.id, n);
    }
  }
  int merges = 0;
  while (!heap.empty()) {
    const Candidate top = heap.top();
    heap.pop();
    if (!clusters.alive(top.a) || !clusters.alive(top.b) || clusters.stamp(top.a) != top.stamp_a ||
        clusters.stamp(top.b) != top.stamp_b) {
      continue;
    }
    if (top.sim < theta) break;
    clusters.merge(top.a, top.b);
    ++merges;
    for (int n : clusters.neighbors(top.a)) push(top.a, n);
  }
  return merges;
}

namespace {

double centroid_agreement(const FeatureGrid& local, const Cluster& c) {
  if (c.size() <= 1) return 1.0;
  double acc = 0.0;
  std::vector<double> f(local.dim);
  for (int p : c.patches) {
    const auto src = local.feature(p);
    std::copy(src.begin(), src.end(), f.begin());
    acc += feature_cosine(f, c.feature);
  }
  return std::clamp(acc / c.size(), 0.0, 1.0);
}

}  // namespace

Hierarchy conquer(const ScoredMask& parent, const FeatureGrid& local, const CropFrame& frame,
                  std::span<const double> thetas) {
  if (thetas.empty()) throw Error(ErrorKind::InvalidArgument, "threshold ladder is empty");
  for (std::size_t i = 0; i < thetas.size(); ++i) {
    if (!(thetas[i] > 0.0 && thetas[i] < 1.0)) {
      throw Error(ErrorKind::InvalidArgument, "thresholds must lie in (0,1)");
    }
    if (i > 0 && !(thetas[i] < thetas[i - 1])) {
      throw Error(ErrorKind::InvalidArgument, "threshold ladder must be strictly decreasing");
    }
  }
  ClusterSet set = init_clusters(parent.mask, local, frame);

  Hierarchy h;
  h.parent = parent;
  h.thetas.assign(thetas.begin(), thetas.end());
  h.local_gh = local.gh;
  h.local_gw = local.gw;
  h.local_patch_size = local.patch_size;
  h.frame = frame;
  const std::size_t l = thetas.size();
  h.levels.resize(l + 1);

  Cluster whole;
  whole.feature.assign(local.dim, 0.0);
  for (const auto& c : set.clusters()) {
    whole.patches.push_back(c.id);
    for (int k = 0; k < local.dim; ++k) whole.feature[k] += c.feature[k];
  }
  whole.id = whole.patches.front();
  for (double& v : whole.feature) v /= static_cast<double>(whole.patches.size());
  h.levels[0] = {whole};

  for (std::size_t i = 0; i < l; ++i) {
    merge_pass(set, thetas[i]);
    h.levels[l - i] = set.clusters();
  }
  for (auto& level : h.levels) {
    for (auto& c : level) c.score = centroid_agreement(local, c);
  }
  return h;
}

std::vector<ScoredMask> hierarchy_masks(const Hierarchy& h, std::int64_t first_id) {
  const BinaryMask& parent = h.parent.mask;
  const BBox box = h.frame.box;
  const int bw = box.width(), bh = box.height();
  const int ps = h.local_patch_size;
  const Bitmap pm = parent.decode();

  // Local patch index for every in-parent image pixel of the box, -1 elsewhere.
  std::vector<int> patch_of(static_cast<std::size_t>(bw) * bh, -1);
  for (int y = 0; y < bh; ++y) {
    for (int x = 0; x < bw; ++x) {
      if (!pm.at(box.y1 + y, box.x1 + x)) continue;
      const Point lp = h.frame.to_local(box.x1 + x, box.y1 + y);
      patch_of[static_cast<std::size_t>(y) * bw + x] = (lp.y / ps) * h.local_gw + (lp.x / ps);
    }
  }

  std::vector<ScoredMask> out;
  std::int64_t next_id = first_id;
  std::vector<int> label(static_cast<std::size_t>(h.local_gh) * h.local_gw, -1);
  for (std::size_t t = 1; t < h.levels.size(); ++t) {
    const auto& clusters = h.levels[t];
    std::fill(label.begin(), label.end(), -1);
    for (std::size_t k = 0; k < clusters.size(); ++k) {
      for (int p : clusters[k].patches) label[p] = static_cast<int>(k);
    }
    std::vector<BBox> extent(clusters.size(), BBox{bw, bh, -1, -1});
    for (int y = 0; y < bh; ++y) {
      for (int x = 0; x < bw; ++x) {
        const int p = patch_of[static_cast<std::size_t>(y) * bw + x];
        if (p < 0 || label[p] < 0) continue;
        BBox& e = extent[label[p]];
        e.x1 = std::min(e.x1, x);
        e.y1 = std::min(e.y1, y);
        e.x2 = std::max(e.x2, x + 1);
        e.y2 = std::max(e.y2, y + 1);
      }
    }
    for (std::size_t k = 0; k < clusters.size(); ++k) {
      const BBox& e = extent[k];
      if (e.x2 < 0) continue;  // no pixel of the parent maps to this cluster
      Bitmap bm(e.height(), e.width());
      for (int y = e.y1; y < e.y2; ++y) {
        for (int x = e.x1; x < e.x2; ++x) {
          const int p = patch_of[static_cast<std::size_t>(y) * bw + x];
          if (p >= 0 && label[p] == static_cast<int>(k)) bm.set(y - e.y1, x - e.x1);
        }
      }
      const BBox global{box.x1 + e.x1, box.y1 + e.y1, box.x1 + e.x2, box.y1 + e.y2};

      ScoredMask sm;
      sm.id = next_id++;
      sm.mask = encode_in_box(parent.height(), parent.width(), global, bm);
      sm.score = clusters[k].score;
      sm.level = static_cast<int>(t);
      sm.parent_id = h.parent.id;
      sm.provenance = "conquer";
      out.push_back(std::move(sm));
    }
  }
  return out;
}

}  // namespace dnc
