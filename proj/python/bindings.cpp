#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <torch/torch.h>

#include "synsal/checkpoint.hpp"
#include "synsal/datasets.hpp"
#include "synsal/errors.hpp"
#include "synsal/metrics.hpp"
#include "synsal/run_config.hpp"
#include "synsal/trainer.hpp"

namespace py = pybind11;
namespace fs = std::filesystem;

namespace {

using DoubleArray = py::array_t<double, py::array::c_style | py::array::forcecast>;
using ByteArray = py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast>;

cv::Mat as_map(const DoubleArray& a, const char* what) {
  if (a.ndim() != 2) throw synsal::ShapeError(std::string(what) + " must be a 2-d array");
  cv::Mat view(static_cast<int>(a.shape(0)), static_cast<int>(a.shape(1)), CV_64F,
               const_cast<double*>(a.data()));
  return view.clone();
}

template <double (*Fn)(const cv::Mat&, const cv::Mat&)>
double metric(const DoubleArray& pred, const DoubleArray& gt) {
  return Fn(as_map(pred, "pred"), as_map(gt, "gt"));
}

py::dict result_dict(const synsal::metrics::EvalResult& r) {
  py::dict d;
  d["mae"] = r.mae;
  d["f_measure"] = r.f_measure;
  d["s_measure"] = r.s_measure;
  d["e_measure"] = r.e_measure;
  d["n_images"] = r.n_images;
  d["f_skipped"] = r.f_skipped;
  return d;
}

py::array_t<float> predict_array(const synsal::Predictor& predictor, const ByteArray& rgb) {
  if (rgb.ndim() != 3 || rgb.shape(2) != 3) throw synsal::ShapeError("expected an HxWx3 uint8 array");
  const cv::Mat view(static_cast<int>(rgb.shape(0)), static_cast<int>(rgb.shape(1)), CV_8UC3,
                     const_cast<std::uint8_t*>(rgb.data()));
  cv::Mat map;
  {
    py::gil_scoped_release release;
    map = predictor.predict(view.clone());
  }
  py::array_t<float> out({map.rows, map.cols});
  std::memcpy(out.mutable_data(), map.ptr<float>(), sizeof(float) * map.total());
  return out;
}

}  // namespace

PYBIND11_MODULE(_synsal, m) {
  m.doc() = "Semi-supervised RGB-D saliency: metrics, toy data, training and inference.";
  torch::set_num_threads(1);

  py::register_exception<synsal::ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<synsal::FormatError>(m, "FormatError", PyExc_ValueError);
  py::register_exception<synsal::DatasetEmptyError>(m, "DatasetEmptyError", PyExc_RuntimeError);
  py::register_exception<synsal::NonFiniteError>(m, "NonFiniteError", PyExc_RuntimeError);

  m.def("mae", &metric<synsal::metrics::mae>, py::arg("pred"), py::arg("gt"));
  m.def("f_measure", &metric<synsal::metrics::f_measure>, py::arg("pred"), py::arg("gt"));
  m.def("s_measure", &metric<synsal::metrics::s_measure>, py::arg("pred"), py::arg("gt"));
  m.def("e_measure", &metric<synsal::metrics::e_measure>, py::arg("pred"), py::arg("gt"));
  m.def("adaptive_threshold",
        [](const DoubleArray& pred) { return synsal::metrics::adaptive_threshold(as_map(pred, "pred")); },
        py::arg("pred"));
  m.def("evaluate_dataset",
        [](const fs::path& pred_dir, const fs::path& gt_dir) {
          return result_dict(synsal::metrics::evaluate_dataset(pred_dir, gt_dir));
        },
        py::arg("pred_dir"), py::arg("gt_dir"));

  m.def("generate_toy_dataset",
        [](const fs::path& out, int n_rgb, int n_rgbd, int n_test, int size, std::uint64_t seed) {
          synsal::ToyDatasetSpec spec;
          spec.n_rgb = n_rgb;
          spec.n_rgbd = n_rgbd;
          spec.n_test = n_test;
          spec.image_size = size;
          spec.seed = seed;
          const auto s = synsal::generate_toy_dataset(spec, out);
          py::dict d;
          d["rgb"] = s.rgb_dir;
          d["rgbd"] = s.rgbd_dir;
          d["test"] = s.test_dir;
          return d;
        },
        py::arg("out"), py::arg("n_rgb") = 200, py::arg("n_rgbd") = 200, py::arg("n_test") = 50,
        py::arg("size") = 64, py::arg("seed") = 0);

  m.def("normalize_config",
        [](const std::string& text) { return synsal::format_run_config(synsal::parse_run_config(text)); },
        py::arg("text"), "Parses a key = value config and returns every key with its value.");

  m.def("train",
        [](const std::string& text) {
          const auto rc = synsal::parse_run_config(text);
          synsal::TrainResult result;
          {
            py::gil_scoped_release release;
            result = synsal::train(rc.training, rc.rgb_root, rc.rgbd_root);
          }
          return result.final_checkpoint;
        },
        py::arg("config_text"), "Trains from a config string; returns the final checkpoint path.");

  m.def("checkpoint_info",
        [](const fs::path& path) {
          const auto ck = synsal::read_checkpoint(path);
          py::dict d;
          d["version"] = ck.format_version;
          d["step"] = ck.step;
          d["seed"] = ck.seed;
          d["config"] = ck.config;
          py::list groups;
          for (const auto& g : ck.groups) groups.append(py::make_tuple(g.name, g.tensors.size()));
          d["groups"] = groups;
          return d;
        },
        py::arg("path"));

  py::class_<synsal::Predictor>(m, "Predictor")
      .def(py::init<const fs::path&>(), py::arg("checkpoint"))
      .def_property_readonly("input_size", &synsal::Predictor::input_size)
      .def("predict", &predict_array, py::arg("rgb"), "HxWx3 uint8 RGB -> HxW float32 map in [0, 1].");
}
