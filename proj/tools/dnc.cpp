// dnc: hierarchical pseudo-mask pipeline over precomputed patch features.
#include <algorithm>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "dnc/annotation.hpp"
#include "dnc/config.hpp"
#include "dnc/error.hpp"
#include "dnc/eval.hpp"
#include "dnc/io.hpp"
#include "dnc/pipeline.hpp"
#include "dnc/postprocess.hpp"

namespace fs = std::filesystem;
using namespace dnc;

namespace {

struct Overrides {
  std::string config_path;
  std::optional<double> tau, tau_self_train, selftrain_dedup_iou, tau_plus, tau_ncut, epsilon,
      nms_iou, refine_delta;
  std::optional<std::vector<double>> thetas;
  std::optional<int> t_max, k_point, workers;
  std::optional<std::int64_t> min_area;
  std::optional<bool> refine_first;

  PipelineConfig resolve() const {
    PipelineConfig c = config_path.empty() ? PipelineConfig{} : load_config(config_path);
    if (tau) c.tau = *tau;
    if (thetas) c.thetas = *thetas;
    if (tau_self_train) c.tau_self_train = *tau_self_train;
    if (selftrain_dedup_iou) c.selftrain_dedup_iou = *selftrain_dedup_iou;
    if (tau_plus) c.tau_plus = *tau_plus;
    if (tau_ncut) c.tau_ncut = *tau_ncut;
    if (epsilon) c.epsilon = *epsilon;
    if (t_max) c.t_max = *t_max;
    if (nms_iou) c.nms_iou = *nms_iou;
    if (k_point) c.k_point = *k_point;
    if (min_area) c.min_area = *min_area;
    if (refine_delta) c.refine_delta = *refine_delta;
    if (refine_first) c.refine_first = *refine_first;
    if (workers) c.workers = *workers;
    c.validate();
    return c;
  }
};

void add_config_options(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--config", o.config_path, "YAML config file")->check(CLI::ExistingFile);
  cmd->add_option("--tau", o.tau, "divide-stage confidence threshold");
  cmd->add_option("--thetas", o.thetas, "merge threshold ladder, descending")->delimiter(',');
  cmd->add_option("--tau-self-train", o.tau_self_train);
  cmd->add_option("--selftrain-dedup-iou", o.selftrain_dedup_iou);
  cmd->add_option("--tau-plus", o.tau_plus);
  cmd->add_option("--tau-ncut", o.tau_ncut);
  cmd->add_option("--epsilon", o.epsilon);
  cmd->add_option("--t-max", o.t_max);
  cmd->add_option("--nms-iou", o.nms_iou);
  cmd->add_option("--k-point", o.k_point);
  cmd->add_option("--min-area", o.min_area);
  cmd->add_option("--refine-delta", o.refine_delta);
  cmd->add_option("--refine-first", o.refine_first);
  cmd->add_option("--workers", o.workers, "parallel images");
}

std::vector<fs::path> list_files(const fs::path& dir, const std::string& ext) {
  std::vector<fs::path> out;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().extension() == ext) out.push_back(e.path());
  }
  std::sort(out.begin(), out.end());
  if (out.empty()) throw Error(ErrorKind::Io, "no " + ext + " files in " + dir.string());
  return out;
}

void require_exists(const fs::path& p) {
  if (!fs::exists(p)) throw Error(ErrorKind::Io, "no such file or directory: " + p.string());
}

std::vector<AnnotationSet> load_sets(const fs::path& p) {
  require_exists(p);
  std::vector<AnnotationSet> out;
  if (fs::is_directory(p)) {
    for (const auto& f : list_files(p, ".json")) out.push_back(read_annotation_set(f));
  } else {
    out.push_back(read_annotation_set(p));
  }
  return out;
}

// Results are written only after every image succeeded.
void write_sets(const fs::path& out, bool as_dir, const std::vector<AnnotationSet>& sets) {
  if (as_dir) {
    fs::create_directories(out);
    for (const auto& s : sets) write_annotation_set(out / (s.image_id + ".json"), s);
  } else {
    write_annotation_set(out, sets.front());
  }
}

struct FeatureInputs {
  std::vector<ImageJob> jobs;
  bool dir = false;
};

std::map<std::int64_t, FeatureGrid> load_crops(const fs::path& dir, const std::string& image_id) {
  std::map<std::int64_t, FeatureGrid> crops;
  const std::string prefix = image_id + "_";
  for (const auto& e : fs::directory_iterator(dir)) {
    const std::string stem = e.path().stem().string();
    if (e.path().extension() != ".ufg" || stem.rfind(prefix, 0) != 0) continue;
    const std::string tail = stem.substr(prefix.size());
    if (tail.empty() || !std::all_of(tail.begin(), tail.end(), ::isdigit)) continue;
    crops.emplace(std::stoll(tail), read_feature_grid(e.path()));
  }
  return crops;
}

FeatureInputs load_jobs(const fs::path& features, const std::string& proposals,
                        const std::string& crops) {
  require_exists(features);
  FeatureInputs in;
  in.dir = fs::is_directory(features);
  const auto files = in.dir ? list_files(features, ".ufg") : std::vector<fs::path>{features};
  std::map<std::string, AnnotationSet> props;
  if (!proposals.empty()) {
    for (auto& s : load_sets(proposals)) {
      const std::string id = s.image_id;
      if (!props.emplace(id, std::move(s)).second) {
        throw Error(ErrorKind::ImageMismatch, "duplicate proposal image id '" + id + "'");
      }
    }
  }
  if (!crops.empty()) require_exists(crops);
  for (const auto& f : files) {
    ImageJob job;
    job.image_id = f.stem().string();
    job.grid = read_feature_grid(f);
    if (!proposals.empty()) {
      auto it = props.find(job.image_id);
      // A single proposal file pairs with a single feature file whatever its id.
      if (it == props.end() && !in.dir && props.size() == 1) it = props.begin();
      if (it == props.end()) {
        throw Error(ErrorKind::ImageMismatch, "no proposals for image '" + job.image_id + "'");
      }
      job.proposals = std::move(it->second);
      props.erase(it);
    }
    if (!crops.empty()) job.crops = load_crops(crops, job.image_id);
    in.jobs.push_back(std::move(job));
  }
  if (!props.empty()) {
    throw Error(ErrorKind::ImageMismatch,
                "proposals without features for image '" + props.begin()->first + "'");
  }
  return in;
}

template <class Fn>
std::vector<AnnotationSet> fan_out(const std::vector<ImageJob>& jobs, int workers, Fn fn) {
  std::vector<AnnotationSet> out(jobs.size());
  parallel_for(jobs.size(), workers, [&](std::size_t i) {
    try {
      out[i] = fn(jobs[i]);
    } catch (const Error& e) {
      throw Error(e.kind(), "image " + jobs[i].image_id + ": " + e.what());
    }
  });
  return out;
}

std::map<std::string, AnnotationSet> by_image(std::vector<AnnotationSet> sets, const char* what) {
  std::map<std::string, AnnotationSet> out;
  for (auto& s : sets) {
    const std::string id = s.image_id;
    if (!out.emplace(id, std::move(s)).second) {
      throw Error(ErrorKind::ImageMismatch, std::string("duplicate ") + what + " image id '" + id + "'");
    }
  }
  return out;
}

// Pairs two annotation inputs by image id; every image must appear in both.
std::vector<std::pair<AnnotationSet, AnnotationSet>> pair_inputs(const fs::path& a, const char* a_name,
                                                                 const fs::path& b, const char* b_name) {
  auto left = by_image(load_sets(a), a_name);
  auto right = by_image(load_sets(b), b_name);
  if (left.size() == 1 && right.size() == 1 && !fs::is_directory(a) && !fs::is_directory(b)) {
    return {{std::move(left.begin()->second), std::move(right.begin()->second)}};
  }
  std::vector<std::pair<AnnotationSet, AnnotationSet>> out;
  for (auto& [id, s] : left) {
    auto it = right.find(id);
    if (it == right.end()) {
      throw Error(ErrorKind::ImageMismatch, std::string("image '") + id + "' has no " + b_name);
    }
    out.emplace_back(std::move(s), std::move(it->second));
    right.erase(it);
  }
  if (!right.empty()) {
    throw Error(ErrorKind::ImageMismatch,
                "image '" + right.begin()->first + "' has no " + a_name);
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Divide-and-conquer hierarchical pseudo-mask pipeline"};
  app.require_subcommand(1);

  Overrides ov;
  std::string features, proposals, parents, crops, gt, unsup, pseudo, predictions, out;

  auto* divide = app.add_subcommand("divide", "level-0 masks from features or proposals");
  add_config_options(divide, ov);
  divide->add_option("--features", features, "UFG1 file or directory");
  divide->add_option("--proposals", proposals, "annotation file or directory");
  divide->add_option("--out", out)->required();

  auto* conquer_cmd = app.add_subcommand("conquer", "given parent masks plus their part hierarchies");
  add_config_options(conquer_cmd, ov);
  conquer_cmd->add_option("--features", features, "UFG1 file or directory")->required();
  conquer_cmd->add_option("--parents", parents, "level-0 annotation file or directory")->required();
  conquer_cmd->add_option("--crops", crops, "directory of <image_id>_<mask_id>.ufg crop grids");
  conquer_cmd->add_option("--out", out)->required();

  auto* pipeline = app.add_subcommand("pipeline", "divide, conquer and assemble pseudo labels");
  add_config_options(pipeline, ov);
  pipeline->add_option("--features", features, "UFG1 file or directory")->required();
  pipeline->add_option("--proposals", proposals, "annotation file or directory");
  pipeline->add_option("--crops", crops, "directory of <image_id>_<mask_id>.ufg crop grids");
  pipeline->add_option("--out", out)->required();

  auto* fuse = app.add_subcommand("fuse", "add unsupervised masks that miss every GT mask");
  add_config_options(fuse, ov);
  fuse->add_option("--gt", gt)->required();
  fuse->add_option("--unsup", unsup)->required();
  fuse->add_option("--out", out)->required();

  auto* merge = app.add_subcommand("selftrain-merge", "merge confident predictions into pseudo labels");
  add_config_options(merge, ov);
  merge->add_option("--pseudo", pseudo)->required();
  merge->add_option("--predictions", predictions)->required();
  merge->add_option("--out", out)->required();

  auto* eval_cmd = app.add_subcommand("eval", "AR, AP and point-prompt IoU");
  add_config_options(eval_cmd, ov);
  eval_cmd->add_option("--predictions", predictions)->required();
  eval_cmd->add_option("--gt", gt)->required();
  eval_cmd->add_option("--out", out, "JSON report file");

  CLI11_PARSE(app, argc, argv);

  try {
    const PipelineConfig cfg = ov.resolve();

    if (divide->parsed()) {
      if (features.empty() && proposals.empty()) {
        throw Error(ErrorKind::InvalidArgument, "divide needs --features or --proposals");
      }
      std::vector<AnnotationSet> sets;
      bool dir = false;
      if (features.empty()) {
        dir = fs::is_directory(proposals);
        for (const auto& p : load_sets(proposals)) {
          AnnotationSet s{p.image_id, p.height, p.width, divide_stage(p, cfg.tau)};
          sets.push_back(std::move(s));
        }
      } else {
        const auto in = load_jobs(features, proposals, "");
        dir = in.dir;
        sets = fan_out(in.jobs, cfg.workers, [&](const ImageJob& job) {
          return AnnotationSet{job.image_id, job.grid.image_height(), job.grid.image_width(),
                               run_divide(job, cfg)};
        });
      }
      write_sets(out, dir, sets);
    } else if (conquer_cmd->parsed()) {
      const auto in = load_jobs(features, parents, crops);
      const auto sets = fan_out(in.jobs, cfg.workers, [&](const ImageJob& job) {
        const std::vector<ScoredMask>& level0 = job.proposals->masks;
        return assemble_pseudo_labels(job.image_id, job.grid.image_height(), job.grid.image_width(),
                                      level0, run_conquer(job, level0, cfg), assemble_options(cfg));
      });
      write_sets(out, in.dir, sets);
    } else if (pipeline->parsed()) {
      const auto in = load_jobs(features, proposals, crops);
      const auto sets = fan_out(in.jobs, cfg.workers,
                                [&](const ImageJob& job) { return run_pipeline(job, cfg); });
      write_sets(out, in.dir, sets);
    } else if (fuse->parsed()) {
      std::vector<AnnotationSet> sets;
      for (const auto& [g, u] : pair_inputs(gt, "ground truth", unsup, "unsupervised masks")) {
        sets.push_back(fuse_with_ground_truth(g, u, cfg.tau_plus));
      }
      write_sets(out, fs::is_directory(gt), sets);
    } else if (merge->parsed()) {
      std::vector<AnnotationSet> sets;
      for (const auto& [p, q] : pair_inputs(pseudo, "pseudo labels", predictions, "predictions")) {
        sets.push_back(self_train_merge(p, q, cfg.tau_self_train, cfg.selftrain_dedup_iou));
      }
      write_sets(out, fs::is_directory(pseudo), sets);
    } else if (eval_cmd->parsed()) {
      const auto preds = load_sets(predictions);
      const auto gts = load_sets(gt);
      const EvalReport report = evaluate(preds, gts, cfg.k_point);
      if (!out.empty()) write_file_atomic(out, eval_report_to_json(report));
      std::cout << format_report(report);
    }
  } catch (const Error& e) {
    std::cerr << "dnc: " << to_string(e.kind()) << ": " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "dnc: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
