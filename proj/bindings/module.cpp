// Copyright 2026 The EmoDynamiX Authors
// SPDX-License-Identifier: Apache-2.0

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "emodynamix/cli.hpp"
#include "emodynamix/error.hpp"
#include "emodynamix/metrics.hpp"
#include "emodynamix/serialize.hpp"
#include "emodynamix/trace.hpp"
#include "emodynamix/train.hpp"

namespace py = pybind11;
using namespace emx;

namespace {

py::object to_py(const json& j) { return py::module_::import("json").attr("loads")(j.dump()); }

ConfusionMatrix matrix_from(const std::vector<std::vector<std::uint64_t>>& rows) {
  std::vector<std::uint64_t> flat;
  for (const auto& r : rows) {
    if (r.size() != rows.size()) throw ShapeError("confusion matrix must be square");
    flat.insert(flat.end(), r.begin(), r.end());
  }
  return ConfusionMatrix(rows.size(), std::move(flat));
}

// A checkpoint plus a feature source, answering single-history queries.
class Predictor {
 public:
  Predictor(const std::string& checkpoint, const std::string& features)
      : loaded_(load_model<double>(checkpoint)),
        provider_(make_provider(features, loaded_.model.config().context_dim)) {
    if (provider_->context_dim() != loaded_.model.config().context_dim) {
      throw ValidationError("feature context width does not match the checkpoint");
    }
  }

  std::vector<std::string> strategies() const { return loaded_.strategies.labels(); }
  py::object config() const { return to_py(json(loaded_.model.config())); }
  double tau() const { return loaded_.model.tau(); }

  py::dict predict(const py::list& history, const std::string& dialogue_id) {
    const Example e = example(history, dialogue_id);
    Tape<double> tape(true);
    const auto out = loaded_.model.forward(tape, e.graph, e.bundle.context);
    py::dict d;
    d["probabilities"] = out.probabilities;
    d["predicted"] = loaded_.strategies.label(out.predicted());
    return d;
  }

  py::object trace(const py::list& history, const std::string& dialogue_id) {
    const Example e = example(history, dialogue_id);
    return to_py(json(trace_sample(loaded_.model, e)));
  }

 private:
  // history: list of {"role": str, "text": str, "strategy": str (agent turns)}.
  Example example(const py::list& history, const std::string& dialogue_id) const {
    WindowSample w;
    w.dialogue_id = dialogue_id;
    for (const auto& item : history) {
      const auto turn = item.cast<py::dict>();
      Turn t;
      t.role = parse_role(turn["role"].cast<std::string>());
      t.text = turn["text"].cast<std::string>();
      if (turn.contains("strategy")) t.strategy = loaded_.strategies.resolve(turn["strategy"].cast<std::string>());
      w.history.push_back(std::move(t));
    }
    if (w.history.empty()) throw ValidationError("history must contain at least one turn");
    w.target_position = w.history.size();
    Example e;
    e.sample = w;
    e.bundle = provider_->provide(w);
    e.graph = build_graph(w, e.bundle, loaded_.strategies, loaded_.model.config().graph_options());
    return e;
  }

  LoadedModel<double> loaded_;
  std::unique_ptr<FeatureProvider> provider_;
};

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "EmoDynamiX dialogue-strategy predictor";

  py::register_exception<Error>(m, "Error", PyExc_RuntimeError);

  m.def("emotion_labels", [] { return emotion_labels(); });
  m.def("discourse_relations", [] { return discourse_relations(); });

  m.def(
      "preference_bias",
      [](const std::vector<std::vector<std::uint64_t>>& cm, std::size_t iterations, bool sample_std) {
        const auto pb = preference_bias(matrix_from(cm), iterations, sample_std);
        return py::make_tuple(pb.bias, pb.preferences);
      },
      py::arg("confusion"), py::arg("iterations") = 20, py::arg("sample_std") = false,
      "Bias score and preference vector of a confusion matrix indexed [predicted][truth].");

  m.def(
      "f1_scores",
      [](const std::vector<std::vector<std::uint64_t>>& cm) {
        const auto f = f1_scores(matrix_from(cm));
        std::vector<double> per_class;
        for (const auto& c : f.per_class) per_class.push_back(c.f1);
        py::dict d;
        d["macro"] = f.macro;
        d["weighted"] = f.weighted;
        d["per_class"] = per_class;
        return d;
      },
      py::arg("confusion"));

  m.def(
      "run",
      [](const std::vector<std::string>& args) {
        std::ostringstream out, err;
        int code;
        {
          py::gil_scoped_release release;
          code = cli_main(args, out, err);
        }
        return py::make_tuple(code, out.str(), err.str());
      },
      py::arg("args"), "Runs the command-line tool in-process; returns (exit_code, stdout, stderr).");

  py::class_<Predictor>(m, "Predictor")
      .def(py::init<const std::string&, const std::string&>(), py::arg("checkpoint"), py::arg("features") = "fallback")
      .def_property_readonly("strategies", &Predictor::strategies)
      .def_property_readonly("config", &Predictor::config)
      .def_property_readonly("tau", &Predictor::tau)
      .def("predict", &Predictor::predict, py::arg("history"), py::arg("dialogue_id") = "query")
      .def("trace", &Predictor::trace, py::arg("history"), py::arg("dialogue_id") = "query");
}
