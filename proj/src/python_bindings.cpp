// Copyright 2026 The PatchShield Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <optional>
#include <string>
#include <vector>

#include "patchshield/adversary.hpp"
#include "patchshield/certifier.hpp"
#include "patchshield/classifier.hpp"
#include "patchshield/defense.hpp"
#include "patchshield/error.hpp"
#include "patchshield/geometry.hpp"
#include "patchshield/protocol.hpp"
#include "patchshield/serialization.hpp"

namespace py = pybind11;
using namespace patchshield;

namespace {

using FloatArray = py::array_t<float, py::array::c_style | py::array::forcecast>;

// HxW or HxWxC float array in [0, 1].
Image ToImage(const FloatArray& array) {
  const py::buffer_info info = array.request();
  Require(info.ndim == 2 || info.ndim == 3, "images must be HxW or HxWxC arrays");
  const ImageGeometry g{static_cast<int>(info.shape[0]), static_cast<int>(info.shape[1]),
                        info.ndim == 3 ? static_cast<int>(info.shape[2]) : 1};
  const float* data = static_cast<const float*>(info.ptr);
  return Image(g, std::vector<float>(data, data + info.size));
}

MaskSet ParseMasks(const std::string& text) {
  return MaskSetFromJson(nlohmann::json::parse(text));
}

PatchThreatModel Threat(const std::vector<std::pair<int, int>>& shapes, int patches) {
  PatchThreatModel t;
  for (auto [h, w] : shapes) t.shapes.push_back({h, w});
  t.patch_count = patches;
  return t;
}

std::string Predict(const FloatArray& image, const std::string& masks_json,
                    const std::string& backend, const std::string& algo, float fill,
                    std::optional<std::uint64_t> seed) {
  const Image img = ToImage(image);
  const MaskSet masks = ParseMasks(masks_json);
  const auto classifier = OpenBackend(backend);
  DefenseOptions o;
  o.mask_fill = fill;
  o.shuffle_seed = seed;
  py::gil_scoped_release release;
  DefenseOutcome out;
  if (algo == "double") {
    out = DoubleMasking(img, *classifier, masks, o);
  } else if (algo == "challenger") {
    out = ChallengerMasking(img, *classifier, masks, o);
  } else {
    Fail(ErrorKind::kInvalidArgument, "algo must be 'double' or 'challenger'");
  }
  return ToJson(out).dump();
}

std::string CertifyImage(const FloatArray& image, Label label, const std::string& masks_json,
                         const std::string& backend, int patch_h, int patch_w, int patches,
                         bool full_matrix, float fill) {
  const Image img = ToImage(image);
  const MaskSet masks = ParseMasks(masks_json);
  const auto classifier = OpenBackend(backend);
  const PatchThreatModel threat = Threat({{patch_h, patch_w}}, patches);
  CertifyOptions o;
  o.full_matrix = full_matrix;
  o.mask_fill = fill;
  py::gil_scoped_release release;
  const Certificate cert = patches >= 2
                               ? CertifyMultiPatch(img, label, *classifier, masks, threat, o)
                               : Certify(img, label, *classifier, masks, threat, o);
  return ToJson(cert).dump();
}

std::string Simulate(const std::string& game_json, const std::string& algo,
                     std::optional<std::uint64_t> trials, std::optional<std::uint64_t> seed) {
  const GameInstance game = GameInstanceFromJson(nlohmann::json::parse(game_json));
  std::vector<Algorithm> algos;
  if (algo == "both") {
    algos = {Algorithm::kDoubleMasking, Algorithm::kChallengerMasking};
  } else {
    algos = {AlgorithmFromString(algo)};
  }
  py::gil_scoped_release release;
  AttackReport report;
  if (trials) {
    if (!seed) Fail(ErrorKind::kInvalidArgument, "randomized search needs a seed");
    report = RandomizedAttack(game, algos, *trials, *seed);
  } else {
    report = ExhaustiveAttack(game, algos);
  }
  nlohmann::json doc = ToJson(report);
  doc["certificate"] = ToJson(CertifyInstance(game));
  return doc.dump();
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Certified patch-robust classification core";

  py::exception<Error>(m, "PatchShieldError", PyExc_RuntimeError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      const py::object cls = py::module_::import("patchshield._core").attr("PatchShieldError");
      py::object exc = cls(std::string(ToString(e.kind())) + ": " + e.what());
      exc.attr("kind") = std::string(ToString(e.kind()));
      PyErr_SetObject(cls.ptr(), exc.ptr());
    } catch (const nlohmann::json::exception& e) {
      PyErr_SetString(PyExc_ValueError, e.what());
    }
  });

  m.def("compute_mask_params",
        [](int n, int p, int k) {
          const AxisParams a = ComputeMaskParams(n, p, k);
          return std::make_pair(a.stride, a.size);
        },
        py::arg("n"), py::arg("p_est"), py::arg("k"), "Returns (stride, size).");
  m.def("generate_1d_index_set", &Generate1dIndexSet, py::arg("n"), py::arg("m"), py::arg("s"));
  m.def("mask_set_size", &MaskSetSize, py::arg("n"), py::arg("m"), py::arg("s"));
  m.def("max_certified_patch_size", &MaxCertifiedPatchSize, py::arg("m"), py::arg("s"));

  m.def("generate_mask_set_2d",
        [](int height, int width, int patch_h, int patch_w, int budget_h, int budget_w,
           int channels) {
          return ToJson(GenerateMaskSet2d({height, width, channels}, {patch_h, patch_w},
                                          budget_h, budget_w))
              .dump();
        },
        py::arg("height"), py::arg("width"), py::arg("patch_h"), py::arg("patch_w"),
        py::arg("budget_h"), py::arg("budget_w"), py::arg("channels") = 1);
  m.def("generate_shape_cover_set",
        [](long budget, int height, int width, int max_shapes) {
          std::vector<std::pair<int, int>> out;
          for (const PatchShape& s : GenerateShapeCoverSet(budget, {height, width, 1}, max_shapes)) {
            out.emplace_back(s.height, s.width);
          }
          return out;
        },
        py::arg("area_budget"), py::arg("height"), py::arg("width"), py::arg("max_shapes") = 6);
  m.def("shapes_dominate",
        [](const std::vector<std::pair<int, int>>& shapes, long budget, int height, int width) {
          return ShapesDominate(Threat(shapes, 1).shapes, budget, {height, width, 1});
        },
        py::arg("shapes"), py::arg("area_budget"), py::arg("height"), py::arg("width"));
  m.def("generate_shape_cover_mask_set",
        [](int height, int width, const std::vector<std::pair<int, int>>& shapes, int budget_h,
           int budget_w, int channels) {
          return ToJson(GenerateShapeCoverMaskSet({height, width, channels},
                                                  Threat(shapes, 1).shapes, budget_h, budget_w))
              .dump();
        },
        py::arg("height"), py::arg("width"), py::arg("shapes"), py::arg("budget_h"),
        py::arg("budget_w"), py::arg("channels") = 1);
  m.def("generate_multi_patch_mask_set",
        [](const std::string& masks_json, int patches) {
          return ToJson(GenerateMultiPatchMaskSet(ParseMasks(masks_json), patches)).dump();
        },
        py::arg("masks_json"), py::arg("patches"));
  m.def("verify_r_covering",
        [](const std::string& masks_json, const std::vector<std::pair<int, int>>& shapes) {
          return VerifyRCovering(ParseMasks(masks_json), Threat(shapes, 1));
        },
        py::arg("masks_json"), py::arg("shapes"));

  m.def("predict", &Predict, py::arg("image"), py::arg("masks_json"), py::arg("backend"),
        py::arg("algo") = "double", py::arg("fill") = 0.0f, py::arg("seed") = py::none());
  m.def("certify", &CertifyImage, py::arg("image"), py::arg("label"), py::arg("masks_json"),
        py::arg("backend"), py::arg("patch_h"), py::arg("patch_w"), py::arg("patches") = 1,
        py::arg("full_matrix") = false, py::arg("fill") = 0.0f);
  m.def("simulate", &Simulate, py::arg("game_json"), py::arg("algo") = "both",
        py::arg("trials") = py::none(), py::arg("seed") = py::none());

  m.def("encode_request",
        [](const std::vector<FloatArray>& images) {
          std::vector<Image> batch;
          for (const FloatArray& a : images) batch.push_back(ToImage(a));
          return py::bytes(protocol::EncodeRequest(batch));
        },
        py::arg("images"));
  m.def("decode_response",
        [](const py::bytes& body, std::size_t expected) {
          return protocol::DecodeResponse(std::string(body), expected);
        },
        py::arg("body"), py::arg("expected"));
}
