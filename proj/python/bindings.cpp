#include <pybind11/numpy.h>
#include <pybind11/operators.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "rvc/concept_io.hpp"
#include "rvc/config.hpp"
#include "rvc/error.hpp"
#include "rvc/image_io.hpp"

namespace py = pybind11;
using namespace rvc;

namespace {

py::array_t<std::uint8_t> to_array(const BinaryImage& img) {
  py::array_t<std::uint8_t> a({img.res.height, img.res.width});
  std::copy(img.pixels.begin(), img.pixels.end(), a.mutable_data());
  return a;
}

py::array_t<double> to_array(const MeanImage& img) {
  py::array_t<double> a({img.res.height, img.res.width});
  std::copy(img.prob.begin(), img.prob.end(), a.mutable_data());
  return a;
}

BinaryImage from_array(const py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast>& a) {
  if (a.ndim() != 2) throw py::value_error("image must be two-dimensional");
  BinaryImage img(Resolution{static_cast<int>(a.shape(1)), static_cast<int>(a.shape(0))});
  const std::uint8_t* p = a.data();
  for (std::size_t i = 0; i < img.pixels.size(); ++i) img.pixels[i] = p[i] ? 1 : 0;
  return img;
}

RenderSettings settings_for(int resolution) {
  RenderSettings s;
  s.res = {resolution, resolution};
  s.ink = fitted_ink_params();
  return s;
}

py::dict state_dict(const ChainState& s) {
  py::dict d;
  d["lsystem"] = s.lsystem;
  d["depth"] = s.depth;
  d["log_prior"] = s.log_prior;
  d["log_likelihood"] = s.log_likelihood;
  d["log_posterior"] = s.log_posterior;
  return d;
}

}  // namespace

PYBIND11_MODULE(_rvc, m) {
  m.doc() = "L-system concepts: rewriting, rendering, prior and posterior inference";

  py::register_exception<Error>(m, "Error");
  py::register_exception<CapExceeded>(m, "CapExceeded", m.attr("Error"));
  py::register_exception<ParseError>(m, "ParseError", m.attr("Error"));
  py::register_exception<NotInSupport>(m, "NotInSupport", m.attr("Error"));
  py::register_exception<DimensionMismatch>(m, "DimensionMismatch", m.attr("Error"));

  m.attr("MAX_SYMBOLS") = kMaxSymbols;

  py::class_<LSystem>(m, "LSystem")
      .def(py::init([](const std::string& f_rule, double angle_deg, const std::string& axiom,
                       const std::string& g_rule) {
             return LSystem{SymbolString(axiom), angle_deg, SymbolString(f_rule), SymbolString(g_rule)};
           }),
           py::arg("f_rule"), py::arg("angle_deg") = 60.0, py::arg("axiom") = "F", py::arg("g_rule") = "G")
      .def_property_readonly("f_rule", [](const LSystem& l) { return l.f_rule.str(); })
      .def_property_readonly("g_rule", [](const LSystem& l) { return l.g_rule.str(); })
      .def_property_readonly("axiom", [](const LSystem& l) { return l.axiom.str(); })
      .def_readonly("angle_deg", &LSystem::angle_deg)
      .def("to_json", &concept_to_json)
      .def_static("from_json", &concept_from_json)
      .def(py::self == py::self)
      .def("__repr__", [](const LSystem& l) { return "LSystem(" + concept_to_json(l) + ")"; });

  m.def(
      "expand_once",
      [](const std::string& s, const LSystem& l, std::size_t cap) {
        return expand_once(SymbolString(s), l, cap).str();
      },
      py::arg("s"), py::arg("lsystem"), py::arg("cap") = kMaxSymbols);
  m.def(
      "expand", [](const LSystem& l, int depth, std::size_t cap) { return expand_to_depth(l, depth, cap).str(); },
      py::arg("lsystem"), py::arg("depth"), py::arg("cap") = kMaxSymbols);

  m.def(
      "render",
      [](const LSystem& l, int depth, int resolution) {
        const SymbolString s = expand_to_depth(l, depth, std::numeric_limits<std::size_t>::max());
        return to_array(render_display(s, l.angle_deg, settings_for(resolution)));
      },
      py::arg("lsystem"), py::arg("depth"), py::arg("resolution") = 200,
      "Display-pen image (1 = black) of the concept at `depth`.");
  m.def(
      "render_mean",
      [](const LSystem& l, int depth, int resolution) {
        const SymbolString s = expand_to_depth(l, depth, std::numeric_limits<std::size_t>::max());
        return to_array(render_mean(s, l.angle_deg, settings_for(resolution)));
      },
      py::arg("lsystem"), py::arg("depth"), py::arg("resolution") = 200);

  m.def(
      "log_prior", [](const LSystem& l) { return log_prior(MetaGrammar::builtin(), l); }, py::arg("lsystem"));
  m.def(
      "sample",
      [](std::uint64_t seed, bool stimulus) {
        Rng rng(seed);
        return sample_lsystem(MetaGrammar::builtin(), rng, stimulus ? SampleMode::Stimulus : SampleMode::Prior)
            .first;
      },
      py::arg("seed"), py::arg("stimulus") = true);
  m.def("builtin_grammar", [] { return std::string(MetaGrammar::builtin_text()); });

  m.def("modified_hausdorff", [](const py::array_t<std::uint8_t>& a, const py::array_t<std::uint8_t>& b) {
    return modified_hausdorff(from_array(a), from_array(b));
  });
  m.def("encode_pbm", [](const py::array_t<std::uint8_t>& a) { return py::bytes(encode_pbm(from_array(a))); });
  m.def("decode_pbm", [](const py::bytes& b) { return to_array(decode_pbm(std::string(b))); });

  m.def(
      "infer",
      [](const std::vector<py::array_t<std::uint8_t>>& images, std::optional<std::vector<int>> depths,
         std::size_t steps, std::size_t chains, std::uint64_t seed) {
        std::vector<BinaryImage> observed;
        for (const auto& a : images) observed.push_back(from_array(a));
        if (observed.empty()) throw py::value_error("at least one image is required");
        InferenceProblem problem;
        if (depths) {
          problem = InferenceProblem::known(observed, *depths);
        } else if (observed.size() == 1) {
          problem = InferenceProblem::unknown(observed[0]);
        } else {
          std::vector<int> d(observed.size());
          for (std::size_t i = 0; i < d.size(); ++i) d[i] = static_cast<int>(i);
          problem = InferenceProblem::known(observed, d);
        }
        ModelConfig config;
        config.render = settings_for(problem.resolution().width);
        config.render.res = problem.resolution();
        ChainState best;
        {
          py::gil_scoped_release release;
          Evaluator ev(config, problem);
          best = best_of_chains(ev, chains, steps, seed);
        }
        return state_dict(best);
      },
      py::arg("images"), py::arg("depths") = py::none(), py::arg("steps") = 20000, py::arg("chains") = 4,
      py::arg("seed") = 1,
      "Best-by-posterior concept. One image without depths is treated as unknown depth.");
}
