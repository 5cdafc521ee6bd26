#include "dnc/divide.hpp"

#include <algorithm>
#include <cmath>
#include <queue>

#include "dnc/error.hpp"

namespace dnc {

namespace {

int corners_in(std::span<const std::uint8_t> fg, int gh, int gw) {
  const int corners[4] = {0, gw - 1, (gh - 1) * gw, gh * gw - 1};
  int c = 0;
  for (int p : corners) c += fg[p] ? 1 : 0;
  return c;
}

// 4-connected component of `fg` containing `seed`.
std::vector<std::uint8_t> component_of(std::span<const std::uint8_t> fg, int gh, int gw,
                                       int seed) {
  std::vector<std::uint8_t> out(fg.size(), 0);
  std::queue<int> frontier;
  out[seed] = 1;
  frontier.push(seed);
  while (!frontier.empty()) {
    const int p = frontier.front();
    frontier.pop();
    const int y = p / gw, x = p % gw;
    const int nbrs[4][2] = {{y - 1, x}, {y + 1, x}, {y, x - 1}, {y, x + 1}};
    for (const auto& nb : nbrs) {
      if (nb[0] < 0 || nb[0] >= gh || nb[1] < 0 || nb[1] >= gw) continue;
      const int q = nb[0] * gw + nb[1];
      if (fg[q] && !out[q]) {
        out[q] = 1;
        frontier.push(q);
      }
    }
  }
  return out;
}

// Applies the corner prior, then keeps the seed's connected component. Returns
// an empty vector when neither side of the cut is acceptable.
std::vector<std::uint8_t> select_foreground(std::span<const double> x,
                                            std::span<const std::uint8_t> side,
                                            std::span<const std::uint8_t> active, int gh, int gw,
                                            int min_patches) {
  const std::size_t n = x.size();
  for (int attempt = 0; attempt < 2; ++attempt) {
    std::vector<std::uint8_t> fg(n, 0);
    for (std::size_t i = 0; i < n; ++i) {
      const bool on_side = attempt == 0 ? side[i] != 0 : side[i] == 0;
      fg[i] = (on_side && active[i]) ? 1 : 0;
    }
    if (corners_in(fg, gh, gw) >= 3) continue;
    int seed = -1;
    for (std::size_t i = 0; i < n; ++i) {
      if (fg[i] && (seed < 0 || std::abs(x[i]) > std::abs(x[seed]))) seed = static_cast<int>(i);
    }
    if (seed < 0) continue;
    auto cc = component_of(fg, gh, gw, seed);
    if (std::count(cc.begin(), cc.end(), 1) < min_patches) continue;
    return cc;
  }
  return {};
}

// Mean of the n-1 nontrivial eigenvalues of D^-1 (D - W), from its trace. The
// second eigenvalue reaches it only when all of them coincide, and then every
// vector orthogonal to the trivial one is an eigenvector and the cut is arbitrary.
double mean_nontrivial_eigenvalue(const AffinityMatrix& w) {
  const auto d = w.degrees();
  double trace = 0.0;
  for (int i = 0; i < w.size(); ++i) trace += 1.0 - static_cast<double>(w(i, i)) / d[i];
  return trace / (w.size() - 1);
}

}  // namespace

double mean_pairwise_cosine(const FeatureGrid& grid, std::span<const int> patches) {
  const std::size_t m = patches.size();
  if (m < 2) return 1.0;
  // sum_{i != j} <u_i, u_j> = |sum u|^2 - m for unit vectors u.
  std::vector<double> total(grid.dim, 0.0);
  for (int p : patches) {
    const auto f = grid.feature(p);
    double nn = 0.0;
    for (float v : f) nn += static_cast<double>(v) * v;
    const double inv = 1.0 / std::sqrt(nn);
    for (int c = 0; c < grid.dim; ++c) total[c] += f[c] * inv;
  }
  double ss = 0.0;
  for (double v : total) ss += v * v;
  const double md = static_cast<double>(m);
  return std::clamp((ss - md) / (md * (md - 1.0)), 0.0, 1.0);
}

std::vector<ScoredMask> maskcut(const FeatureGrid& grid, const MaskCutOptions& options,
                                std::vector<MaskCutStep>* trace) {
  if (options.t_max < 1) throw Error(ErrorKind::InvalidArgument, "t_max must be >= 1");
  grid.validate(4);
  const int n = grid.patches();
  const AffinityMatrix base = cosine_affinity(grid, options.tau_ncut, options.epsilon);

  std::vector<std::uint8_t> active(n, 1);
  std::vector<int> excluded;
  std::vector<ScoredMask> out;

  for (int t = 0; t < options.t_max; ++t) {
    if (n - static_cast<int>(excluded.size()) < options.min_patches) break;
    const AffinityMatrix w = mask_affinity(base, excluded, options.epsilon);
    MaskCutStep step;
    step.excluded = excluded;
    step.fiedler = ncut_second_eigvec(w, options.eigen);
    const auto& x = step.fiedler.x;
    const double flat = mean_nontrivial_eigenvalue(w);

    std::vector<std::uint8_t> fg;
    if (step.fiedler.eigenvalue < flat - 1e-9 * std::max(1.0, flat)) {
      try {
        const auto side = bipartition_patches(x, active);
        fg = select_foreground(x, side, active, grid.gh, grid.gw, options.min_patches);
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::DegenerateEigenvector) throw;
      }
    }
    step.foreground = fg;
    if (trace) trace->push_back(std::move(step));
    // Nothing new gets masked, so further iterations would repeat this cut.
    if (fg.empty()) break;

    std::vector<int> members;
    for (int p = 0; p < n; ++p) {
      if (fg[p]) {
        members.push_back(p);
        active[p] = 0;
        excluded.push_back(p);
      }
    }
    ScoredMask sm;
    sm.id = static_cast<std::int64_t>(out.size());
    sm.mask = upsample_patches(fg, grid.gh, grid.gw, grid.patch_size);
    sm.score = mean_pairwise_cosine(grid, members);
    sm.level = 0;
    sm.provenance = "divide";
    out.push_back(std::move(sm));
  }
  return out;
}

std::vector<ScoredMask> divide_stage(const FeatureGrid& grid, double tau,
                                     const MaskCutOptions& options) {
  if (!(tau >= 0.0 && tau <= 1.0)) throw Error(ErrorKind::InvalidArgument, "tau must be in [0,1]");
  auto masks = maskcut(grid, options);
  std::erase_if(masks, [&](const ScoredMask& m) { return !(m.score > tau); });
  return masks;
}

std::vector<ScoredMask> divide_stage(const AnnotationSet& proposals, double tau) {
  if (!(tau >= 0.0 && tau <= 1.0)) throw Error(ErrorKind::InvalidArgument, "tau must be in [0,1]");
  std::vector<ScoredMask> out;
  for (const auto& m : proposals.masks) {
    if (!(m.score > tau)) continue;
    ScoredMask copy = m;
    copy.level = 0;
    copy.parent_id.reset();
    if (copy.provenance.empty()) copy.provenance = "external";
    out.push_back(std::move(copy));
  }
  return out;
}

}  // namespace dnc
