#include "doctest.h"

#include <numeric>

#include "dnc/ncut.hpp"
#include "support/check.hpp"
#include "support/oracles.hpp"

using namespace dnc;
using namespace dnc::testing;

namespace {

FeatureGrid grid_from(int gh, int gw, const std::vector<std::vector<float>>& feats) {
  FeatureGrid g(gh, gw, static_cast<int>(feats[0].size()), 1);
  for (std::size_t p = 0; p < feats.size(); ++p)
    std::copy(feats[p].begin(), feats[p].end(), g.feature(static_cast<int>(p)).begin());
  return g;
}

std::vector<double> dense_of(const AffinityMatrix& w) {
  std::vector<double> out;
  for (int i = 0; i < w.size(); ++i)
    for (float v : w.row(i)) out.push_back(v);
  return out;
}

}  // namespace

TEST_CASE("cosine_affinity of identical features is all ones") {
  const auto g = grid_from(2, 3, std::vector<std::vector<float>>(6, {0.3f, -1.0f, 2.0f}));
  const auto w = cosine_affinity(g, 0.15, 1e-5);
  for (int i = 0; i < 6; ++i)
    for (int j = 0; j < 6; ++j) CHECK(w(i, j) == 1.0f);
}

TEST_CASE("cosine_affinity of two orthogonal blocks is block diagonal") {
  const auto g = grid_from(2, 2, {{1, 0}, {2, 0}, {0, 1}, {0, 3}});
  const auto w = cosine_affinity(g, 0.15, 1e-5);
  const float e = 1e-5f;
  const std::vector<double> expected{1, 1, e, e, 1, 1, e, e, e, e, 1, 1, e, e, 1, 1};
  CHECK(dense_of(w) == expected);
}

TEST_CASE("cosine_affinity uses >= at the threshold") {
  // Normalized (1,0,0,0) . (0.5,0.5,0.5,0.5) is exactly 0.5.
  const auto g = grid_from(2, 2, {{1, 0, 0, 0}, {1, 1, 1, 1}, {1, 0, 0, 0}, {1, 0, 0, 0}});
  CHECK(cosine_affinity(g, 0.5, 1e-5)(0, 1) == 1.0f);
  CHECK(cosine_affinity(g, 0.5 + 1e-9, 1e-5)(0, 1) == 1e-5f);
}

TEST_CASE("cosine_affinity is symmetric, unit-diagonal and scale free") {
  Rng rng(21);
  for (int t = 0; t < 20; ++t) {
    FeatureGrid g = random_grid(rng, uniform_int(rng, 2, 8), uniform_int(rng, 2, 8), 6);
    const auto w = cosine_affinity(g, 0.15, 1e-5);
    for (int i = 0; i < w.size(); ++i) {
      CHECK(w(i, i) == 1.0f);
      for (int j = 0; j < w.size(); ++j) CHECK(w(i, j) == w(j, i));
    }
    for (auto& v : g.data) v *= 2.0f;
    CHECK(cosine_affinity(g, 0.15, 1e-5) == w);
  }
}

TEST_CASE("cosine_affinity rejects bad input") {
  auto g = grid_from(2, 2, {{1, 0}, {1, 1}, {0, 0}, {0, 1}});
  try {
    cosine_affinity(g, 0.15, 1e-5);
    FAIL("expected ZeroNormFeature");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::ZeroNormFeature);
    CHECK(std::string(e.what()).find("patch 2") != std::string::npos);
  }
  g.feature(2)[0] = 1;
  CHECK_THROWS_KIND(cosine_affinity(g, 0.15, 0.2), ErrorKind::InvalidArgument);
  CHECK_THROWS_KIND(cosine_affinity(g, 1.0, 1e-5), ErrorKind::InvalidArgument);
}

TEST_CASE("mask_affinity") {
  const float e = 1e-5f;
  const std::vector<double> blocks{1, 1, e, e, 1, 1, e, e, e, e, 1, 1, e, e, 1, 1};
  const auto w = AffinityMatrix::from_dense(4, blocks);
  CHECK(mask_affinity(w, {}, 1e-5) == w);

  const std::vector<int> all{0, 1, 2, 3};
  const auto cut_all = mask_affinity(w, all, 1e-5);
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) CHECK(cut_all(i, j) == (i == j ? 1.0f : e));

  // Excluding the first block keeps the second and cuts everything touching the first.
  const std::vector<int> first{0, 1};
  const std::vector<double> expected{1, e, e, e, e, 1, e, e, e, e, 1, 1, e, e, 1, 1};
  CHECK(dense_of(mask_affinity(w, first, 1e-5)) == expected);

  const std::vector<int> bad{4};
  CHECK_THROWS_KIND(mask_affinity(w, bad, 1e-5), ErrorKind::OutOfBounds);
}

TEST_CASE("from_dense validates") {
  CHECK_THROWS_KIND(AffinityMatrix::from_dense(2, std::vector<double>{1, 0.5, 0.4, 1}),
                    ErrorKind::InvalidArgument);
  CHECK_THROWS_KIND(AffinityMatrix::from_dense(2, std::vector<double>{1, 0, 0, 1}),
                    ErrorKind::InvalidArgument);
  CHECK_THROWS_KIND(AffinityMatrix::from_dense(2, std::vector<double>{1, 1, 1}),
                    ErrorKind::DimensionMismatch);
}

TEST_CASE("fiedler vector of two weakly joined components") {
  const int half = 6, n = 2 * half;
  std::vector<double> w(n * n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) w[i * n + j] = (i < half) == (j < half) ? 1.0 : static_cast<float>(1e-6);
  const auto f = ncut_second_eigvec(AffinityMatrix::from_dense(n, w));
  const auto ref = reference_fiedler(n, w);
  CHECK(distance_up_to_sign(f.x, ref.x) < 1e-6);
  CHECK(f.eigenvalue == doctest::Approx(ref.lambda).epsilon(1e-8));
  for (int i = 1; i < half; ++i) {
    CHECK(f.x[i] == doctest::Approx(f.x[0]).epsilon(1e-9));
    CHECK(f.x[half + i] == doctest::Approx(f.x[half]).epsilon(1e-9));
  }
  CHECK(f.x[0] * f.x[half] < 0);
}

TEST_CASE("fiedler eigenvalue of a uniform complete graph") {
  const int n = 7;
  std::vector<double> w(n * n, 1.0);
  const auto f = ncut_second_eigvec(AffinityMatrix::from_dense(n, w));
  const auto ref = reference_fiedler(n, w);
  // Unit self-loops: every nontrivial eigenvalue of D^-1 (D - W) is exactly 1.
  CHECK(f.eigenvalue == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(ref.lambda == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(f.residual < 1e-10);
}

TEST_CASE("fiedler vector is permutation equivariant") {
  Rng rng(22);
  for (int t = 0; t < 10; ++t) {
    const int n = uniform_int(rng, 4, 60);
    auto w = random_affinity(rng, n);
    std::vector<int> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    std::vector<double> pw(n * n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) pw[i * n + j] = w[perm[i] * n + perm[j]];
    const auto ref = reference_fiedler(n, w);
    if (ref.next_lambda - ref.lambda < 1e-3) continue;  // eigenvector not unique enough
    const auto f = ncut_second_eigvec(AffinityMatrix::from_dense(n, w));
    const auto pf = ncut_second_eigvec(AffinityMatrix::from_dense(n, pw));
    std::vector<double> unpermuted(n);
    for (int i = 0; i < n; ++i) unpermuted[perm[i]] = pf.x[i];
    CHECK(distance_up_to_sign(f.x, unpermuted) < 1e-8);
  }
}

TEST_CASE("dense and iterative paths agree with the reference") {
  Rng rng(23);
  EigenOptions iterative;
  iterative.dense_limit = 0;
  for (int t = 0; t < 40; ++t) {
    const int n = uniform_int(rng, 2, 200);
    const auto w = random_affinity(rng, n);
    const auto am = AffinityMatrix::from_dense(n, w);
    const auto ref = reference_fiedler(n, w);
    for (const auto& opts : {EigenOptions{}, iterative}) {
      const auto f = ncut_second_eigvec(am, opts);
      CAPTURE(n);
      CAPTURE(f.dense);
      CHECK(f.dense == (n <= opts.dense_limit));
      CHECK(f.residual <= 1e-6);
      CHECK(generalized_residual(am, f.x, f.eigenvalue) == f.residual);
      CHECK(std::abs(f.eigenvalue - ref.lambda) <= 1e-8);
      if (ref.next_lambda - ref.lambda > 1e-4) CHECK(distance_up_to_sign(f.x, ref.x) <= 1e-6);
    }
  }
}

TEST_CASE("iterative path on a large clustered graph") {
  Rng rng(24);
  const int n = 1400;
  const auto w = random_affinity(rng, n);
  const auto am = AffinityMatrix::from_dense(n, w);
  EigenOptions dense;
  dense.dense_limit = n;
  const auto fi = ncut_second_eigvec(am);
  const auto fd = ncut_second_eigvec(am, dense);
  CHECK_FALSE(fi.dense);
  CHECK(fd.dense);
  CHECK(fi.residual <= 1e-6);
  CHECK(std::abs(fi.eigenvalue - fd.eigenvalue) <= 1e-8);
  CHECK(distance_up_to_sign(fi.x, fd.x) <= 1e-6);
}

TEST_CASE("iterative path reports non-convergence") {
  Rng rng(25);
  const int n = 300;
  const auto am = AffinityMatrix::from_dense(n, random_affinity(rng, n));
  EigenOptions starved;
  starved.dense_limit = 0;
  starved.max_iterations = 3;
  starved.krylov_dim = 3;
  CHECK_THROWS_KIND(ncut_second_eigvec(am, starved), ErrorKind::NoConvergence);
}

TEST_CASE("bipartition of step vectors") {
  const std::vector<double> x{0.1, 0.1, -0.3, -0.3};
  const auto fg = bipartition_patches(x);
  CHECK(fg == std::vector<std::uint8_t>{0, 0, 1, 1});
  std::vector<double> neg(x.size());
  std::transform(x.begin(), x.end(), neg.begin(), [](double v) { return -v; });
  CHECK(bipartition_patches(neg) == fg);

  CHECK_THROWS_KIND(bipartition_patches(std::vector<double>{0.5, 0.5, 0.5, 0.5}),
                    ErrorKind::DegenerateEigenvector);
  const std::vector<std::uint8_t> active{1, 1, 0, 0};
  CHECK_THROWS_KIND(bipartition_patches(x, active), ErrorKind::DegenerateEigenvector);
}

TEST_CASE("bipartition matches a direct mean threshold") {
  Rng rng(26);
  for (int t = 0; t < 200; ++t) {
    const int n = uniform_int(rng, 2, 50);
    std::vector<double> x(n);
    const double a = uniform_real(rng, -1, 1), b = uniform_real(rng, -1, 1);
    for (auto& v : x) v = (uniform_int(rng, 0, 1) ? a : b) + uniform_real(rng, -0.05, 0.05);
    const double mean = std::accumulate(x.begin(), x.end(), 0.0) / n;
    std::size_t seed = 0;
    for (std::size_t i = 1; i < x.size(); ++i)
      if (std::abs(x[i]) > std::abs(x[seed])) seed = i;
    std::vector<std::uint8_t> expected(n);
    for (int i = 0; i < n; ++i) expected[i] = (x[i] > mean) == (x[seed] > mean);
    CHECK(bipartition_patches(x) == expected);
  }
}

TEST_CASE("bipartition upsamples patches to pixels") {
  const std::vector<double> x{0.9, -0.1, -0.1, -0.1, -0.1, -0.1};  // 2x3 patches
  const BinaryMask m = bipartition(x, 2, 3, 4);
  CHECK(m.height() == 8);
  CHECK(m.width() == 12);
  CHECK(m == rle_encode(rect_bitmap(8, 12, 0, 0, 4, 4)));
  CHECK_THROWS_KIND(bipartition(x, 3, 3, 4), ErrorKind::DimensionMismatch);
}
