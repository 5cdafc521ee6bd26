#include "doctest.h"

#include <atomic>
#include <stdexcept>

#include "dnc/eval.hpp"
#include "dnc/pipeline.hpp"
#include "support/check.hpp"
#include "support/planted.hpp"

using namespace dnc;
using namespace dnc::testing;

namespace {

double best_iou(const AnnotationSet& preds, const BinaryMask& target) {
  double best = 0.0;
  for (const auto& m : preds.masks) best = std::max(best, iou(m.mask, target));
  return best;
}

// A 32x32-patch crop of `parent`'s bbox resampled from the image grid, as an
// external extractor would produce it.
FeatureGrid resampled_crop(const FeatureGrid& image, const BinaryMask& parent) {
  FeatureGrid crop(32, 32, image.dim, 8);
  const CropFrame f = crop_frame_for(parent, crop);
  for (int py = 0; py < 32; ++py)
    for (int px = 0; px < 32; ++px) {
      const Point ip = f.to_image(px * 8 + 4.0, py * 8 + 4.0);
      const auto src = image.feature((ip.y / image.patch_size) * image.gw + ip.x / image.patch_size);
      std::copy(src.begin(), src.end(), crop.feature(py * 32 + px).begin());
    }
  return crop;
}

}  // namespace

TEST_CASE("pipeline recovers a planted scene") {
  const auto scene = make_planted_scene();
  ImageJob job{"planted", scene.grid, std::nullopt, {}};
  const PipelineConfig cfg;
  const auto out = run_pipeline(job, cfg);
  CHECK(out.image_id == "planted");
  CHECK(out.height == 512);
  CHECK_NOTHROW(out.validate());
  for (const auto& g : scene.truth.masks) CHECK(best_iou(out, g.mask) >= 0.9);
  CHECK(average_recall(std::vector<AnnotationSet>{out}, std::vector<AnnotationSet>{scene.truth}, 1000) >= 0.9);

  std::size_t parents = 0;
  for (const auto& m : out.masks) {
    if (m.level == 0) {
      ++parents;
      continue;
    }
    const auto parent = std::find_if(out.masks.begin(), out.masks.end(),
                                     [&](const ScoredMask& p) { return p.id == *m.parent_id; });
    REQUIRE(parent != out.masks.end());
    CHECK(intersection_area(m.mask, parent->mask) == m.mask.area());
  }
  CHECK(parents == 3);
  CHECK(run_pipeline(job, cfg) == out);
}

TEST_CASE("pipeline uses external proposals and crops") {
  const auto scene = make_planted_scene(11);
  AnnotationSet proposals{"planted", 512, 512, {}};
  for (std::size_t k = 0; k < scene.blocks.size(); ++k)
    proposals.masks.push_back({static_cast<std::int64_t>(10 + k), scene.blocks[k], 0.9, 0, std::nullopt, ""});
  proposals.masks.push_back({20, scene.blocks[0], 0.1, 0, std::nullopt, ""});

  ImageJob job{"planted", scene.grid, proposals, {}};
  const PipelineConfig cfg;
  const auto parents = run_divide(job, cfg);
  CHECK(parents.size() == 3);
  for (const auto& p : parents) CHECK(p.provenance == "external");

  for (std::size_t k = 0; k < scene.blocks.size(); ++k)
    job.crops.emplace(static_cast<std::int64_t>(10 + k), resampled_crop(scene.grid, scene.blocks[k]));
  const auto hierarchies = run_conquer(job, parents, cfg);
  REQUIRE(hierarchies.size() == 3);
  CHECK(hierarchies[0].local_gh == 32);
  const auto out = run_pipeline(job, cfg);
  for (const auto& g : scene.truth.masks) CHECK(best_iou(out, g.mask) >= 0.9);

  job.proposals->height = 256;
  CHECK_THROWS_KIND(run_divide(job, cfg), ErrorKind::DimensionMismatch);
}

TEST_CASE("conquer skips parents too small to split") {
  const auto scene = make_planted_scene();
  ImageJob job{"planted", scene.grid, std::nullopt, {}};
  Bitmap dot(512, 512);
  dot.set(100, 100);
  const std::vector<ScoredMask> parents{{0, rle_encode(dot), 0.9, 0, std::nullopt, ""},
                                        {1, BinaryMask::empty(512, 512), 0.9, 0, std::nullopt, ""},
                                        {2, scene.blocks[1], 0.9, 0, std::nullopt, ""}};
  const auto h = run_conquer(job, parents, PipelineConfig{});
  REQUIRE(h.size() == 1);
  CHECK(h[0].parent.id == 2);
}

TEST_CASE("pipeline rejects an invalid config") {
  const auto scene = make_planted_scene();
  PipelineConfig cfg;
  cfg.thetas = {0.2, 0.4};
  CHECK_THROWS_KIND(run_pipeline(ImageJob{"planted", scene.grid, std::nullopt, {}}, cfg), ErrorKind::Config);
}

TEST_CASE("parallel_for runs every index once") {
  for (int workers : {1, 2, 8}) {
    std::vector<std::atomic<int>> hits(1000);
    parallel_for(hits.size(), workers, [&](std::size_t i) { hits[i]++; });
    CHECK(std::all_of(hits.begin(), hits.end(), [](const std::atomic<int>& h) { return h.load() == 1; }));
  }
  parallel_for(0, 4, [](std::size_t) { FAIL("no indices to run"); });
}

TEST_CASE("parallel_for rethrows the smallest failing index") {
  std::atomic<int> ran{0};
  try {
    parallel_for(100, 4, [&](std::size_t i) {
      ran++;
      if (i == 70 || i == 30) throw std::runtime_error("index " + std::to_string(i));
    });
    FAIL("expected a rethrow");
  } catch (const std::runtime_error& e) {
    CHECK(std::string(e.what()) == "index 30");
  }
  CHECK(ran == 100);
}

TEST_CASE("parallel and sequential runs agree") {
  std::vector<ImageJob> jobs;
  for (std::uint64_t seed : {1, 2, 3, 4}) {
    auto s = make_planted_scene(seed, 32, 4, 32, 0.05);
    jobs.push_back({"img" + std::to_string(seed), s.grid, std::nullopt, {}});
  }
  PipelineConfig cfg;
  std::vector<AnnotationSet> seq(jobs.size()), par(jobs.size());
  for (std::size_t i = 0; i < jobs.size(); ++i) seq[i] = run_pipeline(jobs[i], cfg);
  parallel_for(jobs.size(), 4, [&](std::size_t i) { par[i] = run_pipeline(jobs[i], cfg); });
  CHECK(seq == par);
}
