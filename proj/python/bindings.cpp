#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "dnc/error.hpp"
#include "dnc/eval.hpp"
#include "dnc/io.hpp"
#include "dnc/pipeline.hpp"

namespace py = pybind11;
using namespace dnc;

namespace {

using BoolArray = py::array_t<bool, py::array::c_style | py::array::forcecast>;
using FloatArray = py::array_t<float, py::array::c_style | py::array::forcecast>;

BinaryMask mask_from_array(const BoolArray& a) {
  if (a.ndim() != 2) throw Error(ErrorKind::InvalidArgument, "mask array must be 2-D");
  Bitmap b(static_cast<int>(a.shape(0)), static_cast<int>(a.shape(1)));
  const bool* src = a.data();
  for (std::size_t i = 0; i < b.pixels.size(); ++i) b.pixels[i] = src[i] ? 1 : 0;
  return rle_encode(b);
}

py::array_t<bool> mask_to_array(const BinaryMask& m) {
  const Bitmap b = m.decode();
  py::array_t<bool> out({b.height, b.width});
  bool* dst = out.mutable_data();
  for (std::size_t i = 0; i < b.pixels.size(); ++i) dst[i] = b.pixels[i] != 0;
  return out;
}

FeatureGrid grid_from_array(const FloatArray& a, int patch_size) {
  if (a.ndim() != 3) throw Error(ErrorKind::InvalidArgument, "features must have shape (gh, gw, dim)");
  FeatureGrid g(static_cast<int>(a.shape(0)), static_cast<int>(a.shape(1)), static_cast<int>(a.shape(2)),
                patch_size);
  std::copy(a.data(), a.data() + a.size(), g.data.begin());
  return g;
}

py::array_t<float> grid_to_array(const FeatureGrid& g) {
  py::array_t<float> out({g.gh, g.gw, g.dim});
  std::copy(g.data.begin(), g.data.end(), out.mutable_data());
  return out;
}

std::vector<double> thetas_or_default(const std::optional<std::vector<double>>& t) {
  return t ? *t : PipelineConfig{}.thetas;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Hierarchical pseudo-mask generation from patch features.";

  py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      py::object exc = py::module_::import("dnc._core").attr("Error")(e.what());
      exc.attr("kind") = std::string(to_string(e.kind()));
      PyErr_SetObject(py::type::of(exc).ptr(), exc.ptr());
    }
  });

  py::class_<BinaryMask>(m, "BinaryMask")
      .def(py::init(&mask_from_array), py::arg("array"))
      .def_static("from_counts", &BinaryMask::from_counts, py::arg("height"), py::arg("width"), py::arg("counts"))
      .def_property_readonly("height", &BinaryMask::height)
      .def_property_readonly("width", &BinaryMask::width)
      .def_property_readonly("counts", [](const BinaryMask& b) {
        return std::vector<std::uint32_t>(b.counts().begin(), b.counts().end());
      })
      .def_property_readonly("area", &BinaryMask::area)
      .def("to_array", &mask_to_array)
      .def("__eq__", [](const BinaryMask& a, const BinaryMask& b) { return a == b; })
      .def("__repr__", [](const BinaryMask& b) {
        return "BinaryMask(" + std::to_string(b.height()) + "x" + std::to_string(b.width()) +
               ", area=" + std::to_string(b.area()) + ")";
      });

  py::class_<ScoredMask>(m, "ScoredMask")
      .def(py::init([](std::int64_t id, BinaryMask mask, double score, int level, std::optional<std::int64_t> parent_id,
                       std::string provenance) {
             return ScoredMask{id, std::move(mask), score, level, parent_id, std::move(provenance)};
           }),
           py::arg("id"), py::arg("mask"), py::arg("score"), py::arg("level") = 0, py::arg("parent_id") = py::none(),
           py::arg("provenance") = "")
      .def_readwrite("id", &ScoredMask::id)
      .def_readwrite("mask", &ScoredMask::mask)
      .def_readwrite("score", &ScoredMask::score)
      .def_readwrite("level", &ScoredMask::level)
      .def_readwrite("parent_id", &ScoredMask::parent_id)
      .def_readwrite("provenance", &ScoredMask::provenance)
      .def("__eq__", [](const ScoredMask& a, const ScoredMask& b) { return a == b; });

  py::class_<AnnotationSet>(m, "AnnotationSet")
      .def(py::init([](std::string image_id, int height, int width, std::vector<ScoredMask> masks) {
             return AnnotationSet{std::move(image_id), height, width, std::move(masks)};
           }),
           py::arg("image_id"), py::arg("height"), py::arg("width"), py::arg("masks") = std::vector<ScoredMask>{})
      .def_readwrite("image_id", &AnnotationSet::image_id)
      .def_readwrite("height", &AnnotationSet::height)
      .def_readwrite("width", &AnnotationSet::width)
      .def_readwrite("masks", &AnnotationSet::masks)
      .def("validate", &AnnotationSet::validate)
      .def("to_json", &annotation_set_to_json)
      .def_static("from_json", [](const std::string& s) { return annotation_set_from_json(s); })
      .def("__eq__", [](const AnnotationSet& a, const AnnotationSet& b) { return a == b; });

  py::class_<FeatureGrid>(m, "FeatureGrid")
      .def(py::init(&grid_from_array), py::arg("features"), py::arg("patch_size"))
      .def_readonly("gh", &FeatureGrid::gh)
      .def_readonly("gw", &FeatureGrid::gw)
      .def_readonly("dim", &FeatureGrid::dim)
      .def_readonly("patch_size", &FeatureGrid::patch_size)
      .def("to_array", &grid_to_array);

  py::class_<PipelineConfig>(m, "PipelineConfig")
      .def(py::init<>())
      .def_readwrite("tau", &PipelineConfig::tau)
      .def_readwrite("thetas", &PipelineConfig::thetas)
      .def_readwrite("tau_self_train", &PipelineConfig::tau_self_train)
      .def_readwrite("selftrain_dedup_iou", &PipelineConfig::selftrain_dedup_iou)
      .def_readwrite("tau_plus", &PipelineConfig::tau_plus)
      .def_readwrite("tau_ncut", &PipelineConfig::tau_ncut)
      .def_readwrite("epsilon", &PipelineConfig::epsilon)
      .def_readwrite("t_max", &PipelineConfig::t_max)
      .def_readwrite("nms_iou", &PipelineConfig::nms_iou)
      .def_readwrite("k_point", &PipelineConfig::k_point)
      .def_readwrite("min_area", &PipelineConfig::min_area)
      .def_readwrite("refine_delta", &PipelineConfig::refine_delta)
      .def_readwrite("refine_first", &PipelineConfig::refine_first)
      .def_readwrite("workers", &PipelineConfig::workers)
      .def("validate", &PipelineConfig::validate)
      .def_static("parse", [](const std::string& s) { return parse_config(s); })
      .def_static("load", &load_config);

  m.def("iou", &iou, py::arg("a"), py::arg("b"));
  m.def("center_point", [](const BinaryMask& mk) {
    const Point p = center_point(mk);
    return py::make_tuple(p.x, p.y);
  });

  m.def(
      "ncut_second_eigvec",
      [](py::array_t<double, py::array::c_style | py::array::forcecast> w) {
        if (w.ndim() != 2 || w.shape(0) != w.shape(1))
          throw Error(ErrorKind::InvalidArgument, "affinity must be square");
        const int n = static_cast<int>(w.shape(0));
        const auto f = ncut_second_eigvec(
            AffinityMatrix::from_dense(n, std::span<const double>(w.data(), static_cast<std::size_t>(w.size()))));
        return py::make_tuple(py::array_t<double>(f.x.size(), f.x.data()), f.eigenvalue);
      },
      py::arg("affinity"), "Second generalized eigenpair of (D - W) x = lambda D x.");

  m.def(
      "maskcut",
      [](const FeatureGrid& g, int t_max, double tau_ncut) {
        MaskCutOptions o;
        o.t_max = t_max;
        o.tau_ncut = tau_ncut;
        return maskcut(g, o);
      },
      py::arg("grid"), py::arg("t_max") = 3, py::arg("tau_ncut") = 0.15);
  m.def(
      "divide",
      [](const FeatureGrid& g, const PipelineConfig& cfg) { return divide_stage(g, cfg.tau, maskcut_options(cfg)); },
      py::arg("grid"), py::arg("config") = PipelineConfig{});

  m.def(
      "conquer",
      [](const FeatureGrid& g, const ScoredMask& parent, const std::optional<std::vector<double>>& thetas,
         std::int64_t first_id) {
        const auto local = crop_from_image_grid(g, parent.mask);
        const auto t = thetas_or_default(thetas);
        return hierarchy_masks(conquer(parent, local.grid, local.frame, t), first_id);
      },
      py::arg("grid"), py::arg("parent"), py::arg("thetas") = py::none(), py::arg("first_id") = 0,
      "Part masks of `parent`, finest level last.");

  m.def(
      "run_pipeline",
      [](const FeatureGrid& g, const std::string& image_id, const PipelineConfig& cfg,
         const std::optional<AnnotationSet>& proposals) {
        py::gil_scoped_release release;
        return run_pipeline(ImageJob{image_id, g, proposals, {}}, cfg);
      },
      py::arg("grid"), py::arg("image_id") = "image", py::arg("config") = PipelineConfig{},
      py::arg("proposals") = py::none());

  m.def("nms", &nms, py::arg("masks"), py::arg("iou_thresh") = 0.9);
  m.def("self_train_merge", &self_train_merge, py::arg("pseudo"), py::arg("predictions"),
        py::arg("tau_self") = 0.7, py::arg("dedup_iou") = 0.5);
  m.def("fuse", &fuse_with_ground_truth, py::arg("gt"), py::arg("unsup"), py::arg("tau_plus") = 0.02);

  m.def(
      "evaluate",
      [](const std::vector<AnnotationSet>& preds, const std::vector<AnnotationSet>& gts, int k_point) {
        const EvalReport r = evaluate(preds, gts, k_point);
        py::dict d;
        d["ar_1000"] = r.ar_1000;
        d["ar_s"] = r.ar_s;
        d["ar_m"] = r.ar_m;
        d["ar_l"] = r.ar_l;
        d["ap"] = r.ap;
        d["max_iou"] = r.max_iou;
        d["oracle_iou"] = r.oracle_iou;
        d["recall_curve"] = r.recall_curve;
        d["images"] = r.images;
        return d;
      },
      py::arg("predictions"), py::arg("gts"), py::arg("k_point") = 6);

  m.def("read_feature_grid", &read_feature_grid, py::arg("path"));
  m.def("write_feature_grid", &write_feature_grid, py::arg("path"), py::arg("grid"));
  m.def("encode_feature_grid", [](const FeatureGrid& g) {
    const auto b = encode_feature_grid(g);
    return py::bytes(reinterpret_cast<const char*>(b.data()), b.size());
  });
  m.def("decode_feature_grid", [](const py::bytes& b) {
    const std::string s = b;
    return decode_feature_grid(std::span(reinterpret_cast<const std::uint8_t*>(s.data()), s.size()));
  });
  m.def("read_annotation_set", &read_annotation_set, py::arg("path"));
  m.def("write_annotation_set", &write_annotation_set, py::arg("path"), py::arg("set"));
}
