#include "dnc/ncut.hpp"

#include <lapacke.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>
#include <string>

#include "dnc/error.hpp"

namespace dnc {

namespace {

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

void scale(std::span<double> a, double s) {
  for (double& v : a) v *= s;
}

// a -= c * b
void axpy_sub(std::span<double> a, double c, std::span<const double> b) {
  for (std::size_t i = 0; i < a.size(); ++i) a[i] -= c * b[i];
}

void fix_sign_and_normalize(std::vector<double>& x) {
  const double nrm = norm2(x);
  scale(x, 1.0 / nrm);
  std::size_t best = 0;
  for (std::size_t i = 1; i < x.size(); ++i) {
    if (std::abs(x[i]) > std::abs(x[best])) best = i;
  }
  if (x[best] < 0) scale(x, -1.0);
}

// y = D^-1/2 W D^-1/2 v, with inv_sqrt_d = D^-1/2.
void normalized_matvec(const AffinityMatrix& w, std::span<const double> inv_sqrt_d,
                       std::span<const double> v, std::span<double> out,
                       std::vector<double>& scratch) {
  const int n = w.size();
  scratch.resize(n);
  for (int j = 0; j < n; ++j) scratch[j] = inv_sqrt_d[j] * v[j];
  for (int i = 0; i < n; ++i) {
    const auto row = w.row(i);
    double s = 0.0;
    for (int j = 0; j < n; ++j) s += static_cast<double>(row[j]) * scratch[j];
    out[i] = inv_sqrt_d[i] * s;
  }
}

FiedlerVector dense_fiedler(const AffinityMatrix& w, std::span<const double> inv_sqrt_d) {
  const int n = w.size();
  std::vector<double> lap(static_cast<std::size_t>(n) * n);
  for (int i = 0; i < n; ++i) {
    const auto row = w.row(i);
    for (int j = 0; j < n; ++j) {
      const double v = -inv_sqrt_d[i] * static_cast<double>(row[j]) * inv_sqrt_d[j];
      lap[static_cast<std::size_t>(i) * n + j] = (i == j ? 1.0 : 0.0) + v;
    }
  }
  std::vector<double> evals(n);
  std::vector<double> evecs(static_cast<std::size_t>(n) * 2);
  std::vector<lapack_int> support(4);
  lapack_int found = 0;
  const lapack_int info =
      LAPACKE_dsyevr(LAPACK_ROW_MAJOR, 'V', 'I', 'U', n, lap.data(), n, 0.0, 0.0, 1, 2, 0.0,
                     &found, evals.data(), evecs.data(), 2, support.data());
  if (info != 0 || found != 2) {
    throw Error(ErrorKind::NoConvergence,
                "dense eigensolver failed (LAPACK info " + std::to_string(info) + ")");
  }
  FiedlerVector out;
  out.eigenvalue = evals[1];
  out.x.resize(n);
  for (int i = 0; i < n; ++i) out.x[i] = inv_sqrt_d[i] * evecs[static_cast<std::size_t>(i) * 2 + 1];
  out.dense = true;
  out.iterations = 0;
  return out;
}

// Largest eigenpair of S = D^-1/2 W D^-1/2 restricted to the complement of
// its trivial eigenvector D^1/2 1, via explicitly restarted Lanczos with full
// reorthogonalization. lambda_2(L) = 1 - mu.
//
// For x = D^-1/2 y / c with c = ||D^-1/2 y||, the generalized residual is
// ||D^1/2 (S y - mu y)|| / c <= sqrt(dmax) * ||S y - mu y|| / c, and c >= 1/sqrt(dmax);
// the tolerance is applied to that bound.
FiedlerVector lanczos_fiedler(const AffinityMatrix& w, std::span<const double> inv_sqrt_d,
                              std::span<const double> degrees, const EigenOptions& opt) {
  const int n = w.size();
  std::vector<double> trivial(n);
  for (int i = 0; i < n; ++i) trivial[i] = std::sqrt(degrees[i]);
  scale(trivial, 1.0 / norm2(trivial));

  auto deflate = [&](std::span<double> v) { axpy_sub(v, dot(trivial, v), trivial); };

  std::mt19937_64 rng(0x6e637574ULL);
  std::uniform_real_distribution<double> uni(-1.0, 1.0);
  std::vector<double> start(n);
  for (double& v : start) v = uni(rng);
  deflate(start);
  scale(start, 1.0 / norm2(start));

  const int m_max = std::max(2, std::min(opt.krylov_dim, n - 1));
  const double dmax = *std::max_element(degrees.begin(), degrees.end());
  const double inner_tolerance = opt.tolerance / std::max(1.0, dmax);
  std::vector<double> scratch, wv(n), y(n), sy(n);
  int matvecs = 0;
  double mu = 0.0;
  double residual = std::numeric_limits<double>::infinity();

  while (true) {
    std::vector<std::vector<double>> basis;
    std::vector<double> alpha, beta;
    std::vector<double> ritz;  // coefficients of the top Ritz vector
    std::vector<double> q = start;
    for (int j = 0; j < m_max; ++j) {
      basis.push_back(q);
      normalized_matvec(w, inv_sqrt_d, q, wv, scratch);
      ++matvecs;
      const double a = dot(q, wv);
      alpha.push_back(a);
      axpy_sub(wv, a, q);
      if (j > 0) axpy_sub(wv, beta.back(), basis[j - 1]);
      for (int pass = 0; pass < 2; ++pass) {
        deflate(wv);
        for (const auto& b : basis) axpy_sub(wv, dot(b, wv), b);
      }
      const double b = norm2(wv);
      const int k = j + 1;
      const bool check = (k % 10 == 0) || k == m_max || b < 1e-13 || matvecs >= opt.max_iterations;
      if (check) {
        std::vector<double> d(alpha), e(beta), z(static_cast<std::size_t>(k) * k);
        const lapack_int info =
            LAPACKE_dstev(LAPACK_ROW_MAJOR, 'V', k, d.data(), e.data(), z.data(), k);
        if (info != 0) {
          throw Error(ErrorKind::NoConvergence, "tridiagonal eigensolver failed");
        }
        mu = d[k - 1];
        ritz.assign(k, 0.0);
        for (int r = 0; r < k; ++r) ritz[r] = z[static_cast<std::size_t>(r) * k + (k - 1)];
        const double estimate = b * std::abs(ritz[k - 1]);
        if (estimate <= 0.1 * inner_tolerance || b < 1e-13 || matvecs >= opt.max_iterations) break;
      }
      beta.push_back(b);
      q = wv;
      scale(q, 1.0 / b);
    }

    std::fill(y.begin(), y.end(), 0.0);
    for (std::size_t r = 0; r < ritz.size(); ++r) {
      for (int i = 0; i < n; ++i) y[i] += ritz[r] * basis[r][i];
    }
    deflate(y);
    scale(y, 1.0 / norm2(y));
    normalized_matvec(w, inv_sqrt_d, y, sy, scratch);
    ++matvecs;
    mu = dot(y, sy);
    axpy_sub(sy, mu, y);
    double c = 0.0;
    for (int i = 0; i < n; ++i) c += inv_sqrt_d[i] * inv_sqrt_d[i] * y[i] * y[i];
    residual = std::sqrt(dmax) * norm2(sy) / std::sqrt(c);
    if (residual <= opt.tolerance) break;
    if (matvecs >= opt.max_iterations) {
      std::ostringstream msg;
      msg << "Lanczos did not converge within " << opt.max_iterations
          << " matrix-vector products (residual " << residual << ")";
      throw Error(ErrorKind::NoConvergence, msg.str());
    }
    start = y;
  }

  FiedlerVector out;
  out.eigenvalue = 1.0 - mu;
  out.x.resize(n);
  for (int i = 0; i < n; ++i) out.x[i] = inv_sqrt_d[i] * y[i];
  out.dense = false;
  out.iterations = matvecs;
  return out;
}

}  // namespace

AffinityMatrix::AffinityMatrix(int n, float fill)
    : n_(n), w_(static_cast<std::size_t>(n) * n, fill) {}

AffinityMatrix AffinityMatrix::from_dense(int n, std::span<const double> values) {
  if (n <= 0 || values.size() != static_cast<std::size_t>(n) * n) {
    throw Error(ErrorKind::DimensionMismatch, "affinity values must be n*n");
  }
  AffinityMatrix m(n, 0.0f);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const double v = values[static_cast<std::size_t>(i) * n + j];
      if (!(v > 0.0) || !std::isfinite(v)) {
        throw Error(ErrorKind::InvalidArgument, "affinity entries must be finite and positive");
      }
      if (v != values[static_cast<std::size_t>(j) * n + i]) {
        throw Error(ErrorKind::InvalidArgument, "affinity matrix is not symmetric");
      }
      m.w_[m.index(i, j)] = static_cast<float>(v);
    }
  }
  return m;
}

std::vector<double> AffinityMatrix::degrees() const {
  std::vector<double> d(n_, 0.0);
  for (int i = 0; i < n_; ++i) {
    double s = 0.0;
    for (float v : row(i)) s += v;
    d[i] = s;
  }
  return d;
}

AffinityMatrix cosine_affinity(const FeatureGrid& grid, double tau_ncut, double epsilon) {
  if (!(epsilon > 0.0 && epsilon < tau_ncut && tau_ncut < 1.0)) {
    throw Error(ErrorKind::InvalidArgument, "need 0 < epsilon < tau_ncut < 1");
  }
  grid.validate(1);
  const auto unit = normalized_features(grid);
  const int n = grid.patches();
  const int dim = grid.dim;
  AffinityMatrix w(n, static_cast<float>(epsilon));
  for (int i = 0; i < n; ++i) {
    w.set_symmetric(i, i, 1.0f);
    const double* fi = unit.data() + static_cast<std::size_t>(i) * dim;
    for (int j = i + 1; j < n; ++j) {
      const double* fj = unit.data() + static_cast<std::size_t>(j) * dim;
      double c = 0.0;
      for (int k = 0; k < dim; ++k) c += fi[k] * fj[k];
      if (c >= tau_ncut) w.set_symmetric(i, j, 1.0f);
    }
  }
  return w;
}

AffinityMatrix mask_affinity(const AffinityMatrix& w, std::span<const int> excluded,
                             double epsilon) {
  const int n = w.size();
  AffinityMatrix out = w;
  const auto eps = static_cast<float>(epsilon);
  for (int p : excluded) {
    if (p < 0 || p >= n) {
      throw Error(ErrorKind::OutOfBounds, "excluded patch index " + std::to_string(p) +
                                              " outside [0, " + std::to_string(n) + ")");
    }
    for (int j = 0; j < n; ++j) out.set_symmetric(p, j, eps);
  }
  for (int p : excluded) out.set_symmetric(p, p, 1.0f);
  return out;
}

double generalized_residual(const AffinityMatrix& w, std::span<const double> x, double lambda) {
  const int n = w.size();
  const auto d = w.degrees();
  double acc = 0.0;
  for (int i = 0; i < n; ++i) {
    const auto row = w.row(i);
    double wx = 0.0;
    for (int j = 0; j < n; ++j) wx += static_cast<double>(row[j]) * x[j];
    const double r = d[i] * x[i] - wx - lambda * d[i] * x[i];
    acc += r * r;
  }
  return std::sqrt(acc);
}

FiedlerVector ncut_second_eigvec(const AffinityMatrix& w, const EigenOptions& options) {
  const int n = w.size();
  if (n < 2) throw Error(ErrorKind::InvalidArgument, "need at least two nodes for a cut");
  const auto degrees = w.degrees();
  std::vector<double> inv_sqrt_d(n);
  for (int i = 0; i < n; ++i) {
    if (!(degrees[i] > 0.0)) {
      throw Error(ErrorKind::InvalidArgument, "node " + std::to_string(i) + " has zero degree");
    }
    inv_sqrt_d[i] = 1.0 / std::sqrt(degrees[i]);
  }
  FiedlerVector out = n <= options.dense_limit ? dense_fiedler(w, inv_sqrt_d)
                                               : lanczos_fiedler(w, inv_sqrt_d, degrees, options);
  fix_sign_and_normalize(out.x);
  out.residual = generalized_residual(w, out.x, out.eigenvalue);
  return out;
}

std::vector<std::uint8_t> bipartition_patches(std::span<const double> x,
                                              std::span<const std::uint8_t> active) {
  const std::size_t n = x.size();
  if (!active.empty() && active.size() != n) {
    throw Error(ErrorKind::DimensionMismatch, "active set length differs from eigenvector");
  }
  auto is_active = [&](std::size_t i) { return active.empty() || active[i] != 0; };

  double sum = 0.0, lo = std::numeric_limits<double>::infinity(), hi = -lo;
  std::size_t count = 0, seed = n;
  for (std::size_t i = 0; i < n; ++i) {
    if (!is_active(i)) continue;
    sum += x[i];
    lo = std::min(lo, x[i]);
    hi = std::max(hi, x[i]);
    ++count;
    if (seed == n || std::abs(x[i]) > std::abs(x[seed])) seed = i;
  }
  if (count == 0 || !(hi - lo > 1e-12 * std::max(std::abs(hi), std::abs(lo)))) {
    throw Error(ErrorKind::DegenerateEigenvector, "degenerate eigenvector: no split possible");
  }
  const double mean = sum / static_cast<double>(count);
  const bool seed_above = x[seed] > mean;
  std::vector<std::uint8_t> fg(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    if (is_active(i) && ((x[i] > mean) == seed_above)) fg[i] = 1;
  }
  return fg;
}

BinaryMask upsample_patches(std::span<const std::uint8_t> patches, int gh, int gw,
                            int patch_size) {
  if (patches.size() != static_cast<std::size_t>(gh) * gw) {
    throw Error(ErrorKind::DimensionMismatch, "patch set does not match grid shape");
  }
  Bitmap bm(gh * patch_size, gw * patch_size);
  for (int py = 0; py < gh; ++py) {
    for (int px = 0; px < gw; ++px) {
      if (!patches[static_cast<std::size_t>(py) * gw + px]) continue;
      for (int dy = 0; dy < patch_size; ++dy)
        for (int dx = 0; dx < patch_size; ++dx) bm.set(py * patch_size + dy, px * patch_size + dx);
    }
  }
  return rle_encode(bm);
}

BinaryMask bipartition(std::span<const double> x, int gh, int gw, int patch_size) {
  if (x.size() != static_cast<std::size_t>(gh) * gw) {
    throw Error(ErrorKind::DimensionMismatch, "eigenvector length differs from gh*gw");
  }
  return upsample_patches(bipartition_patches(x), gh, gw, patch_size);
}

}  // namespace dnc
