#include "dnc/pipeline.hpp"

#include <algorithm>

#include "dnc/error.hpp"

namespace dnc {

MaskCutOptions maskcut_options(const PipelineConfig& cfg) {
  MaskCutOptions o;
  o.t_max = cfg.t_max;
  o.tau_ncut = cfg.tau_ncut;
  o.epsilon = cfg.epsilon;
  return o;
}

AssembleOptions assemble_options(const PipelineConfig& cfg) {
  AssembleOptions o;
  o.nms_iou = cfg.nms_iou;
  o.min_area = cfg.min_area;
  o.refine_delta = cfg.refine_delta;
  o.refine_first = cfg.refine_first;
  return o;
}

std::vector<ScoredMask> run_divide(const ImageJob& job, const PipelineConfig& cfg) {
  if (job.proposals) {
    if (job.proposals->height != job.grid.image_height() ||
        job.proposals->width != job.grid.image_width()) {
      throw Error(ErrorKind::DimensionMismatch,
                  "proposals for image " + job.image_id + " are " +
                      std::to_string(job.proposals->height) + "x" +
                      std::to_string(job.proposals->width) + " but the feature grid covers " +
                      std::to_string(job.grid.image_height()) + "x" +
                      std::to_string(job.grid.image_width()));
    }
    return divide_stage(*job.proposals, cfg.tau);
  }
  return divide_stage(job.grid, cfg.tau, maskcut_options(cfg));
}

std::vector<Hierarchy> run_conquer(const ImageJob& job, const std::vector<ScoredMask>& parents,
                                   const PipelineConfig& cfg) {
  std::vector<Hierarchy> out;
  for (const auto& parent : parents) {
    if (parent.mask.is_empty()) continue;
    try {
      if (auto it = job.crops.find(parent.id); it != job.crops.end()) {
        out.push_back(conquer(parent, it->second, crop_frame_for(parent.mask, it->second), cfg.thetas));
      } else {
        const LocalGrid local = crop_from_image_grid(job.grid, parent.mask);
        out.push_back(conquer(parent, local.grid, local.frame, cfg.thetas));
      }
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::MaskTooSmall) throw;
    }
  }
  return out;
}

AnnotationSet run_pipeline(const ImageJob& job, const PipelineConfig& cfg, const Refiner& refiner) {
  cfg.validate();
  const auto parents = run_divide(job, cfg);
  const auto hierarchies = run_conquer(job, parents, cfg);
  AssembleOptions opts = assemble_options(cfg);
  opts.refiner = refiner;
  return assemble_pseudo_labels(job.image_id, job.grid.image_height(), job.grid.image_width(),
                                parents, hierarchies, opts);
}

void parallel_for(std::size_t n, int workers, const std::function<void(std::size_t)>& fn) {
  if (n == 0) return;
  const std::size_t threads =
      std::min<std::size_t>(n, static_cast<std::size_t>(std::max(1, workers)));
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace dnc
