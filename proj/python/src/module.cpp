/* Copyright 2026 The LaSS Lab Authors. All Rights Reserved.

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
#include <pybind11/operators.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>

#include "lass/analysis.hpp"
#include "lass/checkpoint.hpp"
#include "lass/errors.hpp"
#include "lass/evaluation.hpp"
#include "lass/io.hpp"
#include "lass/mask.hpp"
#include "lass/pipeline.hpp"

namespace py = pybind11;
using namespace lass;

namespace {

std::string kind_name(ErrorKind k) {
  switch (k) {
    case ErrorKind::kConfig: return "config";
    case ErrorKind::kData: return "data";
    case ErrorKind::kNumerical: return "numerical";
    case ErrorKind::kStructural: return "structural";
    case ErrorKind::kFormat: return "format";
    case ErrorKind::kLookup: return "lookup";
    case ErrorKind::kUsage: return "usage";
    case ErrorKind::kPrecondition: return "precondition";
    case ErrorKind::kCapacity: return "capacity";
    case ErrorKind::kPrerequisite: return "prerequisite";
    case ErrorKind::kIo: return "io";
  }
  return "unknown";
}

py::array_t<bool> mask_bits(const ParameterMask& m, const std::string& name) {
  const PackedBits* bits = m.find(name);
  if (!bits) throw py::key_error(name);
  py::array_t<bool> out(static_cast<py::ssize_t>(bits->size()));
  auto v = out.mutable_unchecked<1>();
  for (std::size_t i = 0; i < bits->size(); ++i) v(i) = bits->test(i);
  return out;
}

py::dict checkpoint_dict(const Checkpoint& ck) {
  py::dict params;
  for (const auto& e : ck.params.entries()) {
    std::vector<py::ssize_t> shape(e.shape.begin(), e.shape.end());
    py::array_t<float> a(shape);
    std::copy(e.values.begin(), e.values.end(), a.mutable_data());
    params[py::str(e.name)] = a;
  }
  const auto& c = ck.config;
  py::dict config;
  config["num_layers"] = c.num_layers;
  config["d_model"] = c.d_model;
  config["num_heads"] = c.num_heads;
  config["d_ff"] = c.d_ff;
  config["vocab_size"] = c.vocab_size;
  config["max_seq_len"] = c.max_seq_len;
  config["dropout"] = c.dropout;
  config["label_smoothing"] = c.label_smoothing;
  config["seed"] = c.seed;
  py::dict out;
  out["config"] = config;
  out["meta"] = ck.meta;
  out["params"] = params;
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Bindings for the LaSS toy lab core library.";

  static py::exception<Error> lass_error(m, "LassError");
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      py::object cls = py::reinterpret_borrow<py::object>(lass_error.ptr());
      py::object exc = cls(e.what());
      exc.attr("kind") = kind_name(e.kind());
      PyErr_SetObject(lass_error.ptr(), exc.ptr());
    }
  });

  m.def("commands", &pipeline_commands);

  m.def(
      "run",
      [](const std::string& command, const std::filesystem::path& run_dir,
         std::optional<std::filesystem::path> config, std::optional<std::uint64_t> seed,
         bool force, bool use_env) {
        RunOptions o;
        o.run_dir = run_dir;
        o.config_path = std::move(config);
        o.seed = seed;
        o.force = force;
        o.use_env = use_env;
        std::ostringstream log;
        o.log = &log;
        int code;
        {
          py::gil_scoped_release nogil;
          code = run_command(command, o);
        }
        return py::make_tuple(code, log.str());
      },
      py::arg("command"), py::arg("run_dir"), py::arg("config") = py::none(),
      py::arg("seed") = py::none(), py::arg("force") = false, py::arg("use_env") = true,
      "Runs one pipeline command; returns (exit_code, log_text).");

  py::class_<LangPair>(m, "LangPair")
      .def(py::init([](const std::string& s) { return LangPair::parse(s); }))
      .def_readonly("src", &LangPair::src)
      .def_readonly("tgt", &LangPair::tgt)
      .def("__str__", &LangPair::str)
      .def("__repr__", [](const LangPair& p) { return "LangPair('" + p.str() + "')"; });

  py::class_<ParameterMask>(m, "Mask")
      .def_property_readonly("pair", [](const ParameterMask& x) { return x.pair.str(); })
      .def_readonly("alpha", &ParameterMask::alpha)
      .def_property_readonly(
          "provenance", [](const ParameterMask& x) { return std::string(to_string(x.provenance)); })
      .def_readonly("fingerprint", &ParameterMask::fingerprint)
      .def_property_readonly("ones", &ParameterMask::ones)
      .def_property_readonly("size", &ParameterMask::bit_count)
      .def_property_readonly("density", &ParameterMask::density)
      .def("tensor_names",
           [](const ParameterMask& x) {
             std::vector<std::string> names;
             for (const auto& [k, v] : x.tensors) names.push_back(k);
             return names;
           })
      .def("bits", &mask_bits, py::arg("name"))
      .def("to_bytes",
           [](const ParameterMask& x) {
             auto b = serialize_mask(x);
             return py::bytes(reinterpret_cast<const char*>(b.data()), b.size());
           })
      .def("save", [](const ParameterMask& x, const std::filesystem::path& p) { save_mask(p, x); })
      .def(py::self == py::self);

  m.def("load_mask", &load_mask, py::arg("path"));
  m.def(
      "mask_from_bytes",
      [](py::bytes data) {
        std::string s = data;
        return deserialize_mask(
            std::span(reinterpret_cast<const std::uint8_t*>(s.data()), s.size()));
      },
      py::arg("data"));
  m.def(
      "load_mask_dir",
      [](const std::filesystem::path& dir) {
        std::map<std::string, ParameterMask> out;
        const auto set = load_mask_set(dir);
        for (const auto& p : set.pairs()) out.emplace(p.str(), set.at(p));
        return out;
      },
      py::arg("dir"));
  m.def("similarity", py::overload_cast<const ParameterMask&, const ParameterMask&>(&similarity),
        py::arg("m1"), py::arg("m2"), "|M1 and M2| / |M1|");
  m.def("intersection_count", &intersection_count);

  m.def(
      "load_checkpoint",
      [](const std::filesystem::path& p) { return checkpoint_dict(load_checkpoint(p)); },
      py::arg("path"), "Returns {'config', 'meta', 'params'} with numpy arrays.");

  m.def("corpus_bleu", &corpus_bleu, py::arg("hypotheses"), py::arg("references"));
  m.def(
      "spearman",
      [](const std::vector<double>& x, const std::vector<double>& y) { return spearman(x, y); },
      py::arg("x"), py::arg("y"));
  m.def(
      "crc32",
      [](py::bytes data) {
        std::string s = data;
        return crc32_of(std::span(reinterpret_cast<const std::uint8_t*>(s.data()), s.size()));
      },
      py::arg("data"));
}
