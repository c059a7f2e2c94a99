#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "projdebias/default_data.hpp"
#include "projdebias/encoder.hpp"
#include "projdebias/error.hpp"
#include "projdebias/harness.hpp"
#include "projdebias/interventions.hpp"
#include "projdebias/linalg.hpp"
#include "projdebias/nli.hpp"
#include "projdebias/spearman.hpp"
#include "projdebias/stereoset.hpp"
#include "projdebias/subspace.hpp"

namespace py = pybind11;
using namespace projdebias;

namespace {

using DoubleArray = py::array_t<double, py::array::c_style | py::array::forcecast>;

Matrix to_matrix(const DoubleArray& a) {
  if (a.ndim() != 2) throw py::value_error("expected a 2-d array");
  const auto rows = static_cast<std::size_t>(a.shape(0));
  const auto cols = static_cast<std::size_t>(a.shape(1));
  return Matrix(rows, cols, std::vector<double>(a.data(), a.data() + rows * cols));
}

Vector to_vector(const DoubleArray& a) {
  if (a.ndim() != 1) throw py::value_error("expected a 1-d array");
  return Vector(a.data(), a.data() + a.shape(0));
}

py::array_t<double> to_array(const Vector& v) {
  py::array_t<double> out(std::vector<py::ssize_t>{static_cast<py::ssize_t>(v.size())});
  std::copy(v.begin(), v.end(), out.mutable_data());
  return out;
}

Centering parse_centering(const std::string& name) {
  if (name == "mean") return Centering::Mean;
  if (name == "none") return Centering::None;
  throw py::value_error("centering must be 'mean' or 'none'");
}

PValueMethod parse_method(const std::string& name) {
  if (name == "auto") return PValueMethod::Auto;
  if (name == "t") return PValueMethod::TDistribution;
  if (name == "permutation") return PValueMethod::Permutation;
  throw py::value_error("method must be 'auto', 't' or 'permutation'");
}

std::string method_name(PValueMethod m) {
  switch (m) {
    case PValueMethod::Auto: return "auto";
    case PValueMethod::TDistribution: return "t";
    case PValueMethod::Permutation: return "permutation";
  }
  return "?";
}

py::dict trace_dict(const ForwardTrace& t) {
  py::dict d;
  d["sent"] = to_array(t.sent);
  d["cls_final"] = to_array(t.cls_final);
  d["nsp"] = py::make_tuple(t.nsp_probs[0], t.nsp_probs[1]);
  d["nli"] = py::make_tuple(t.nli_probs[0], t.nli_probs[1], t.nli_probs[2]);
  return d;
}

// Python-side handle owning the model the encoder points at.
struct PyEncoder {
  std::shared_ptr<const EncoderModel> model;
  std::shared_ptr<TransformerEncoder> encoder;

  explicit PyEncoder(EncoderModel m)
      : model(std::make_shared<const EncoderModel>(std::move(m))),
        encoder(std::make_shared<TransformerEncoder>(model)) {}
};

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Projection-based gender debiasing of a toy BERT-style encoder.";

  // Translators run newest first, so InputError is matched before its base.
  const auto& error = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<InputError>(m, "InputError", error.ptr());

  py::class_<Basis>(m, "Basis")
      .def(py::init([](const std::vector<Vector>& vectors, const Vector& weights) {
             Basis b{vectors, weights};
             b.validate();
             return b;
           }),
           py::arg("vectors"), py::arg("weights"))
      .def_property_readonly("vectors", [](const Basis& b) { return b.vectors; })
      .def_property_readonly("weights", [](const Basis& b) { return b.weights; })
      .def("truncated", &Basis::truncated)
      .def("__len__", &Basis::size);

  m.def(
      "pca",
      [](const DoubleArray& rows, std::size_t k, const std::string& centering) {
        return pca(to_matrix(rows), k, parse_centering(centering));
      },
      py::arg("rows"), py::arg("k"), py::arg("centering") = "mean");
  m.def(
      "project_out",
      [](const DoubleArray& h, const Basis& basis, bool soft) { return to_array(project_out(to_vector(h), basis, soft)); },
      py::arg("h"), py::arg("basis"), py::arg("soft") = false);

  py::enum_<Level>(m, "Level")
      .value("NONE", Level::None)
      .value("SENT", Level::Sent)
      .value("FINAL_LAYER", Level::FinalLayer)
      .value("PENULT_LAYER", Level::PenultLayer)
      .value("PENULT_ATTN", Level::PenultAttn);

  py::class_<DebiasConfig>(m, "DebiasConfig")
      .def(py::init<>())
      .def_readwrite("level", &DebiasConfig::level)
      .def_readwrite("n_pen", &DebiasConfig::n_pen)
      .def_readwrite("c_pen", &DebiasConfig::c_pen)
      .def_readwrite("n_fin", &DebiasConfig::n_fin)
      .def_readwrite("c_fin", &DebiasConfig::c_fin)
      .def_readwrite("n_p", &DebiasConfig::n_p)
      .def_property_readonly("label", &DebiasConfig::label)
      .def_property_readonly("settings", &DebiasConfig::settings)
      .def("__eq__", [](const DebiasConfig& a, const DebiasConfig& b) { return a == b; })
      .def("__repr__", [](const DebiasConfig& c) { return "DebiasConfig(" + c.label() + ")"; });
  m.def("enumerate_grid", &enumerate_grid);
  m.def("parse_config_label", [](const std::string& s) { return parse_config_label(s); });
  m.def("parse_config_text", [](const std::string& s) { return parse_config_text(s); });
  m.def("format_config_text", &format_config_text);

  py::class_<TripleScores>(m, "TripleScores")
      .def(py::init([](std::string id, double st, double an, double un, double st_gs, double an_gs, double un_gs) {
             return TripleScores{std::move(id), st, an, un, st_gs, an_gs, un_gs};
           }),
           py::arg("id"), py::arg("p_stereo"), py::arg("p_anti"), py::arg("p_unr"), py::arg("p_stereo_gs"),
           py::arg("p_anti_gs"), py::arg("p_unr_gs"))
      .def_readonly("id", &TripleScores::id)
      .def_readonly("p_stereo", &TripleScores::p_stereo)
      .def_readonly("p_anti", &TripleScores::p_anti)
      .def_readonly("p_unr", &TripleScores::p_unr)
      .def_readonly("p_stereo_gs", &TripleScores::p_stereo_gs)
      .def_readonly("p_anti_gs", &TripleScores::p_anti_gs)
      .def_readonly("p_unr_gs", &TripleScores::p_unr_gs);
  m.def("pair_strength", &pair_strength);
  m.def("pair_distance", &pair_distance);
  m.def("strength_S", &strength_S, py::arg("scores"), py::arg("top_frac") = 0.1);
  m.def("distance_D", &distance_D, py::arg("scores"), py::arg("top_frac") = 0.1);
  m.def("ss_score", &ss_score);

  m.def(
      "spearman",
      [](const std::vector<double>& x, const std::vector<double>& y, const std::string& method) {
        const CorrelationResult r = spearman(x, y, parse_method(method));
        py::dict d;
        d["rho"] = r.rho;
        d["p_value"] = r.p_value;
        d["n"] = r.n;
        d["method"] = method_name(r.method);
        return d;
      },
      py::arg("x"), py::arg("y"), py::arg("method") = "auto");
  m.def("average_ranks", [](const std::vector<double>& v) { return average_ranks(v); });

  py::class_<ProbeTemplate>(m, "ProbeTemplate")
      .def(py::init([](std::string id, std::string activity) { return ProbeTemplate{std::move(id), std::move(activity)}; }),
           py::arg("id"), py::arg("activity"))
      .def_readwrite("id", &ProbeTemplate::id)
      .def_readwrite("activity", &ProbeTemplate::activity)
      .def_readwrite("premise", &ProbeTemplate::premise)
      .def_readwrite("hypothesis", &ProbeTemplate::hypothesis);
  py::class_<NLIProbe>(m, "NLIProbe")
      .def_readonly("occupation", &NLIProbe::occupation)
      .def_readonly("template_id", &NLIProbe::template_id)
      .def_readonly("premise", &NLIProbe::premise)
      .def_readonly("hyp_male", &NLIProbe::hyp_male)
      .def_readonly("hyp_female", &NLIProbe::hyp_female);
  m.def("generate_probes", &generate_probes, py::arg("occupations"), py::arg("templates"));
  m.def("sentence_pair_count", &sentence_pair_count);
  m.def("fairness_score", &fairness_score, py::arg("parity"), py::arg("accuracy"));
  m.def("default_occupations", &default_occupations);
  m.def("default_templates", &default_templates);

  py::class_<GenderPair>(m, "GenderPair")
      .def(py::init([](std::string male, std::string female) { return GenderPair{std::move(male), std::move(female)}; }))
      .def_readonly("male", &GenderPair::male)
      .def_readonly("female", &GenderPair::female);
  m.def("default_gender_pairs", &default_gender_pairs);

  py::class_<SubspaceSet>(m, "SubspaceSet")
      .def("__len__", &SubspaceSet::size)
      .def("keys",
           [](const SubspaceSet& s) {
             std::vector<std::string> keys;
             for (const auto& item : s.items()) keys.push_back(item.location.key());
             return keys;
           })
      .def("basis", [](const SubspaceSet& s, const std::string& key) { return s.at(Location::parse(key)).basis; })
      .def("save", [](const SubspaceSet& s, const std::filesystem::path& p) { s.save(p); })
      .def_static("load", &SubspaceSet::load);

  py::class_<PyEncoder>(m, "Encoder")
      .def_static(
          "seeded",
          [](std::uint64_t seed, std::vector<std::string> words, std::size_t d_model, std::size_t n_layers,
             std::size_t n_heads, std::size_t d_ff, std::size_t max_len) {
            EncoderConfig c;
            c.d_model = d_model;
            c.n_layers = n_layers;
            c.n_heads = n_heads;
            c.d_ff = d_ff == 0 ? 4 * d_model : d_ff;
            c.max_len = max_len;
            if (words.empty()) words = default_vocab_words();
            return PyEncoder(EncoderModel::seeded(seed, c, Vocab::from_words(words)));
          },
          py::arg("seed"), py::arg("words") = std::vector<std::string>{}, py::arg("d_model") = 64,
          py::arg("n_layers") = 4, py::arg("n_heads") = 4, py::arg("d_ff") = 0, py::arg("max_len") = 64)
      .def_static("load", [](const std::filesystem::path& p) { return PyEncoder(load_weights(p)); })
      .def("save", [](const PyEncoder& e, const std::filesystem::path& p) { save_weights(*e.model, p); })
      .def(
          "run",
          [](const PyEncoder& e, const std::string& a, const std::string& b, const std::optional<DebiasConfig>& config,
             const SubspaceSet* subspaces) {
            if (!config || config->level == Level::None) return trace_dict(e.encoder->run(a, b));
            if (subspaces == nullptr) throw py::value_error("a debiasing config needs subspaces");
            const HookSet hs = bind(*config, e.encoder->shape(), *subspaces);
            return trace_dict(e.encoder->run(a, b, hs.hooks()));
          },
          py::arg("sent_a"), py::arg("sent_b"), py::arg("config") = py::none(), py::arg("subspaces") = nullptr)
      .def(
          "estimate_subspaces",
          [](const PyEncoder& e, const GenderPairSet& pairs, const std::string& centering) {
            return estimate_all(*e.encoder, pairs, parse_centering(centering));
          },
          py::arg("pairs"), py::arg("centering") = "none");
}
