/* Copyright 2026 The drivemt Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>

#include "drivemt/cli.hpp"
#include "drivemt/harness.hpp"
#include "drivemt/models.hpp"
#include "drivemt/translator.hpp"

namespace py = pybind11;
using namespace drivemt;

namespace {

using FloatArray = py::array_t<float, py::array::c_style | py::array::forcecast>;

Image to_image(const FloatArray& a) {
  if (a.ndim() != 3) throw DimensionError("expected an (height, width, channels) array");
  const auto h = static_cast<int>(a.shape(0)), w = static_cast<int>(a.shape(1)), c = static_cast<int>(a.shape(2));
  return Image(h, w, c, std::vector<float>(a.data(), a.data() + a.size()));
}

py::array_t<float> to_array(const Image& img) {
  py::array_t<float> out({img.height(), img.width(), img.channels()});
  std::copy(img.data().begin(), img.data().end(), out.mutable_data());
  return out;
}

Domain domain_of(const std::string& s) { return parse_domain(s); }

std::vector<PredictionPair> make_pairs(const std::vector<double>& original, const std::vector<double>& transformed) {
  std::vector<Prediction> a, b;
  for (std::size_t i = 0; i < original.size(); ++i) a.push_back({std::to_string(i), original[i]});
  for (std::size_t i = 0; i < transformed.size(); ++i) b.push_back({std::to_string(i), transformed[i]});
  return pair_predictions(a, b);
}

class PyModel {
 public:
  explicit PyModel(std::unique_ptr<SteeringModel> m) : model_(std::move(m)) {}
  std::string id() const { return model_->id(); }
  int window_size() const { return model_->window_size(); }
  double predict(const FloatArray& image) {
    FrameRecord r;
    r.frame_id = "frame";
    r.image = to_image(image);
    return model_->predict(r);
  }
  std::vector<double> predict_stream(const std::vector<FloatArray>& images) {
    std::vector<FrameRecord> stream;
    for (std::size_t i = 0; i < images.size(); ++i) {
      FrameRecord r;
      r.frame_id = "frame_" + std::to_string(i);
      r.image = to_image(images[i]);
      r.sequence_index = i;
      stream.push_back(std::move(r));
    }
    std::vector<double> out;
    for (const auto& p : run_model(*model_, stream)) out.push_back(p.degrees);
    return out;
  }
  void reset() { model_->reset(); }

 private:
  std::unique_ptr<SteeringModel> model_;
};

}  // namespace

PYBIND11_MODULE(_drivemt, m) {
  m.doc() = "Metamorphic testing of steering models under scene translation";

  auto error = py::register_exception<Error>(m, "Error");
  auto data_error = py::register_exception<DataError>(m, "DataError", error.ptr());
  py::register_exception<ModelError>(m, "ModelError", error.ptr());
  py::register_exception<ConfigError>(m, "ConfigError", data_error.ptr());

  m.def(
      "run_cli",
      [](const std::vector<std::string>& args) {
        std::ostringstream out, err;
        const int code = run_cli(args, out, err);
        return py::make_tuple(code, out.str(), err.str());
      },
      py::arg("args"), "Runs a CLI verb in-process; returns (exit_code, stdout, stderr).");

  m.def(
      "inconsistency_count",
      [](const std::vector<double>& original, const std::vector<double>& transformed, double epsilon) {
        return inconsistency_count(make_pairs(original, transformed), ErrorBound(epsilon));
      },
      py::arg("original"), py::arg("transformed"), py::arg("epsilon"));

  m.def(
      "sweep_bounds",
      [](const std::vector<double>& original, const std::vector<double>& transformed,
         const std::vector<double>& bounds) {
        const auto pairs = make_pairs(original, transformed);
        std::vector<std::tuple<double, std::size_t, std::size_t>> rows;
        for (const auto& r : sweep_bounds(pairs, parse_bounds(bounds))) rows.emplace_back(r.epsilon, r.count, r.total_frames);
        return rows;
      },
      py::arg("original"), py::arg("transformed"), py::arg("bounds") = std::vector<double>{10, 20, 30, 40},
      "Rows of (epsilon, count, total_frames).");

  m.def(
      "apply_transform",
      [](const std::string& spec, const FloatArray& image) {
        return to_array(parse_transform_spec(spec).input_transform(to_image(image)));
      },
      py::arg("spec"), py::arg("image"), "Applies identity, fog:w, blur:s, rain[:d[:seed]] or affine:...");

  py::class_<PyModel>(m, "SteeringModel")
      .def_property_readonly("id", &PyModel::id)
      .def_property_readonly("window_size", &PyModel::window_size)
      .def("predict", &PyModel::predict, py::arg("image"))
      .def("predict_stream", &PyModel::predict_stream, py::arg("images"))
      .def("reset", &PyModel::reset);

  m.def(
      "model",
      [](const std::string& spec, std::uint64_t seed, int cnn_epochs) {
        ModelSpecOptions o;
        o.seed = seed;
        o.cnn_epochs = cnn_epochs;
        auto named = parse_model_spec(spec, o);
        return PyModel(std::move(named.model));
      },
      py::arg("spec"), py::arg("seed") = 0, py::arg("cnn_epochs") = 200,
      "constant:a, brightness:g, cnn:<manifest>, windowed:W:<spec> or external:<command>.");

  py::class_<TranslatorParams>(m, "Translator")
      .def(py::init([](const std::string& preset, std::uint64_t seed, int height, int width) {
             return make_translator({preset, height, width, 0}, seed);
           }),
           py::arg("preset") = "toy32", py::arg("seed") = 0, py::arg("height") = 0, py::arg("width") = 0)
      .def_static(
          "load", [](const std::filesystem::path& p) { return load_checkpoint(p).state.params; }, py::arg("path"))
      .def_readonly("preset", &TranslatorParams::preset)
      .def_readonly("height", &TranslatorParams::height)
      .def_readonly("width", &TranslatorParams::width)
      .def_property_readonly("parameter_count", &TranslatorParams::parameter_count)
      .def(
          "translate",
          [](const TranslatorParams& p, const FloatArray& image, const std::string& from, const std::string& to) {
            return to_array(translate_frame(p, to_image(image), domain_of(from), domain_of(to)));
          },
          py::arg("image"), py::arg("source") = "S1", py::arg("target") = "S2");
}
