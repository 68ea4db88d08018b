#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "dcl/config.hpp"
#include "dcl/distributions.hpp"
#include "dcl/losses.hpp"
#include "dcl/metrics.hpp"
#include "dcl/rehearsal.hpp"
#include "dcl/selftest.hpp"
#include "dcl/specialfn.hpp"
#include "dcl/taskgen.hpp"

namespace py = pybind11;
using namespace dcl;
using nlohmann::json;

namespace {

ad::Tensor row(const std::vector<double>& v) { return ad::Tensor::matrix(1, v.size(), v); }

double dirichlet_kl(const std::vector<double>& q, const std::vector<double>& p) {
  if (q.size() != p.size()) throw std::invalid_argument("dirichlet_kl: dimension mismatch");
  ad::NoGradGuard guard;
  return dist::dirichlet_kl(dist::DirichletParams(row(q)), dist::DirichletParams(row(p))).item();
}

double gaussian_kl(const std::vector<double>& q_mean, const std::vector<double>& q_logvar,
                   const std::vector<double>& p_mean, const std::vector<double>& p_logvar) {
  ad::NoGradGuard guard;
  return dist::gaussian_kl(dist::GaussianParams(row(q_mean), row(q_logvar)),
                           dist::GaussianParams(row(p_mean), row(p_logvar)))
      .item();
}

double js_divergence(const std::vector<double>& p, const std::vector<double>& q, double tau) {
  ad::NoGradGuard guard;
  return loss::js_divergence(row(p), row(q), tau).item();
}

double avg_jga(const std::vector<std::vector<double>>& r) {
  metrics::ResultMatrix m(r.size());
  for (std::size_t i = 0; i < r.size(); ++i) {
    if (r[i].size() != r.size()) throw std::invalid_argument("avg_jga: R must be square");
    for (std::size_t j = 0; j < r.size(); ++j) m.set(i, j, r[i][j]);
  }
  return metrics::avg_jga(m);
}

double lca(const std::vector<std::pair<double, double>>& points) {
  metrics::LearningCurve c;
  for (const auto& [s, v] : points) c.push_back({s, v});
  return metrics::lca(c);
}

std::string stream_json(const std::string& config_json) {
  const auto cfg = config::from_json(json::parse(config_json));
  json out = json::array();
  for (const auto& t : data::realize_stream(data::make_stream(cfg.stream))) {
    json task = {{"id", t.spec.id}, {"name", t.spec.name}, {"kind", data::to_string(t.spec.kind)},
                 {"labels", t.spec.labels}};
    for (const auto& [name, split] : {std::pair{"train", &t.train}, {"dev", &t.dev}, {"test", &t.test}}) {
      json rows = json::array();
      for (const auto& s : *split) rows.push_back({{"x", s.x}, {"y", s.y}});
      task[name] = std::move(rows);
    }
    out.push_back(std::move(task));
  }
  return out.dump();
}

std::string config_json(const std::string& base, const std::vector<std::string>& overrides) {
  json doc = base.empty() ? config::to_json(cl::RunConfig{}) : json::parse(base);
  for (const auto& o : overrides) config::apply_override(doc, o);
  return config::to_json(config::from_json(doc)).dump();
}

std::string run_json(const std::string& config) {
  const auto cfg = config::from_json(json::parse(config));
  py::gil_scoped_release release;
  return cl::run_stream(cfg).to_json().dump();
}

std::vector<py::dict> selftest_results() {
  std::vector<py::dict> out;
  for (const auto& r : selftest::run_all()) {
    py::dict d;
    d["name"] = r.name;
    d["error"] = r.error;
    d["tolerance"] = r.tolerance;
    d["passed"] = r.passed;
    out.push_back(std::move(d));
  }
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Dirichlet continual learning core";

  py::register_exception<config::ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<ad::NumericalError>(m, "NumericalError", PyExc_ArithmeticError);

  m.def("lgamma", &special::lgamma, py::arg("x"));
  m.def("digamma", &special::digamma, py::arg("x"));
  m.def("trigamma", &special::trigamma, py::arg("x"));
  m.def("dirichlet_kl", &dirichlet_kl, py::arg("q"), py::arg("p"));
  m.def("gaussian_kl", &gaussian_kl, py::arg("q_mean"), py::arg("q_logvar"), py::arg("p_mean"),
        py::arg("p_logvar"));
  m.def("js_divergence", &js_divergence, py::arg("p_logits"), py::arg("q_logits"), py::arg("tau") = 1.0);
  m.def("accuracy", &metrics::accuracy, py::arg("preds"), py::arg("golds"));
  m.def("span_f1", &metrics::span_f1, py::arg("preds"), py::arg("golds"));
  m.def("avg_jga", &avg_jga, py::arg("r"));
  m.def("lca", &lca, py::arg("curve"));
  m.def("dist_n", &metrics::dist_n, py::arg("corpus"), py::arg("n"));
  m.def("_config_json", &config_json, py::arg("base"), py::arg("overrides"));
  m.def("_stream_json", &stream_json, py::arg("config"));
  m.def("_run_json", &run_json, py::arg("config"));
  m.def("selftest", &selftest_results);
}
