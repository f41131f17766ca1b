#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cmath>
#include <string>
#include <vector>

#include "arbfree/activations.hpp"
#include "arbfree/config.hpp"
#include "arbfree/constraints.hpp"
#include "arbfree/datasets.hpp"
#include "arbfree/errors.hpp"
#include "arbfree/experiments.hpp"
#include "arbfree/network.hpp"
#include "arbfree/sabr.hpp"
#include "arbfree/surface.hpp"
#include "arbfree/training.hpp"

namespace py = pybind11;
using namespace arbfree;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

Array to_array(const std::vector<double>& v) { return Array(static_cast<py::ssize_t>(v.size()), v.data()); }

Array to_matrix(const std::vector<double>& v, std::size_t rows, std::size_t cols) {
  Array out({static_cast<py::ssize_t>(rows), static_cast<py::ssize_t>(cols)});
  std::copy(v.begin(), v.end(), out.mutable_data());
  return out;
}

std::vector<double> to_vector(const Array& a) { return {a.data(), a.data() + a.size()}; }

Mesh mesh_from_array(const Array& a) {
  if (a.ndim() != 2 || a.shape(1) != 2) throw InputError("mesh must be an (M, 2) array of (moneyness, tau)");
  Mesh mesh(static_cast<std::size_t>(a.shape(0)));
  for (std::size_t j = 0; j < mesh.size(); ++j) mesh[j] = {a.at(j, 0), a.at(j, 1)};
  return mesh;
}

Array mesh_to_array(const Mesh& mesh) {
  std::vector<double> flat;
  flat.reserve(2 * mesh.size());
  for (const auto& p : mesh) flat.insert(flat.end(), {p.moneyness, p.tau});
  return to_matrix(flat, mesh.size(), 2);
}

template <typename Get>
Array column(const QuoteGrid& g, Get get) {
  Array out(static_cast<py::ssize_t>(g.size()));
  auto* d = out.mutable_data();
  for (std::size_t i = 0; i < g.size(); ++i) d[i] = get(g.points[i]);
  return out;
}

QuoteGrid grid_from_arrays(const Array& moneyness, const Array& tau, const Array& premium) {
  if (moneyness.size() != tau.size() || tau.size() != premium.size())
    throw InputError("moneyness, tau and premium must have the same length");
  QuoteGrid g;
  g.provenance = Provenance::MarketCsv;
  for (py::ssize_t i = 0; i < moneyness.size(); ++i)
    g.points.push_back({moneyness.data()[i], tau.data()[i], premium.data()[i]});
  return g;
}

py::dict loss_dict(double e_mse, double e_penalty, const std::array<double, kTermCount>& terms,
                   const std::array<std::size_t, kTermCount>& violations) {
  py::dict d;
  d["e_mse"] = e_mse;
  d["e_penalty"] = e_penalty;
  d["terms"] = py::dict(py::arg("delta") = terms[0], py::arg("gamma") = terms[1], py::arg("theta") = terms[2],
                        py::arg("lower") = terms[3]);
  d["violations"] = py::dict(py::arg("delta") = violations[0], py::arg("gamma") = violations[1],
                             py::arg("theta") = violations[2], py::arg("lower") = violations[3]);
  return d;
}

py::dict metrics_dict(const MetricsRow& r) {
  py::dict d;
  d["e_mse"] = r.e_mse;
  d["e_penalty"] = r.e_penalty;
  d["e_mse_sigma"] = r.e_mse_sigma;
  d["sigma_points"] = r.sigma_points;
  d["invalid_iv"] = r.invalid_iv;
  return d;
}

py::dict bundle_dict(const DerivativeBundle& b) {
  py::dict d;
  d["value"] = b.value;
  d["grad"] = to_array(b.grad);
  d["diag2"] = to_array(b.diag2);
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Derivative-constrained neural option premium surfaces";

  auto base = py::register_exception<Error>(m, "ArbfreeError", PyExc_RuntimeError);
  py::register_exception<ConfigError>(m, "ConfigError", base);
  py::register_exception<InputError>(m, "InputError", base);
  py::register_exception<DomainError>(m, "DomainError", base);
  py::register_exception<NumericalError>(m, "NumericalError", base);
  py::register_exception<ConsistencyError>(m, "ConsistencyError", base);
  py::register_exception<IoError>(m, "IoError", base);
  py::register_exception<TrainingError>(m, "TrainingError", base);

  // activations
  py::class_<Activation>(m, "Activation")
      .def(py::init([](const std::string& name) { return parse_activation(name); }), py::arg("name") = "softplus")
      .def_static("relu", &Activation::relu, py::arg("slope") = 0.0)
      .def_static("elu", &Activation::elu, py::arg("alpha") = 1.0, py::arg("beta") = 1.0)
      .def_property_readonly("name", [](const Activation& a) { return activation_name(a); })
      .def("__call__", [](const Activation& a, double x) { return act_eval(a, x); })
      .def("d1", [](const Activation& a, double x) { return act_d1(a, x); })
      .def("d2", [](const Activation& a, double x) { return act_d2(a, x); })
      .def("d3", [](const Activation& a, double x) { return act_d3(a, x); })
      .def("jet", [](const Activation& a, double x) {
        const ActivationJet j = act_jet(a, x);
        return py::make_tuple(j.f, j.d1, j.d2, j.d3);
      })
      .def("__eq__", [](const Activation& a, const Activation& b) { return a == b; })
      .def("__repr__", [](const Activation& a) { return "Activation('" + activation_name(a) + "')"; });

  // pricing
  py::class_<SabrParams>(m, "SabrParams")
      .def(py::init([](double alpha, double beta, double rho, double nu, double forward, double rate) {
             SabrParams p{alpha, beta, rho, nu, forward, rate};
             p.validate();
             return p;
           }),
           py::arg("alpha") = 0.2, py::arg("beta") = 1.0, py::arg("rho") = 0.0, py::arg("nu") = 0.0,
           py::arg("forward") = 1.0, py::arg("rate") = 0.04)
      .def_readwrite("alpha", &SabrParams::alpha)
      .def_readwrite("beta", &SabrParams::beta)
      .def_readwrite("rho", &SabrParams::rho)
      .def_readwrite("nu", &SabrParams::nu)
      .def_readwrite("forward", &SabrParams::forward)
      .def_readwrite("rate", &SabrParams::rate)
      .def("validate", &SabrParams::validate)
      .def("__eq__", [](const SabrParams& a, const SabrParams& b) { return a == b; });

  m.def("sabr_iv", &sabr_iv, py::arg("strike"), py::arg("tau"), py::arg("params"));
  m.def("sabr_premium", &sabr_premium, py::arg("moneyness"), py::arg("tau"), py::arg("params"));
  m.def("sabr_derivatives", [](const SabrParams& p, double moneyness, double tau) {
    return bundle_dict(SabrSurface(p).derivatives(moneyness, tau));
  }, py::arg("params"), py::arg("moneyness"), py::arg("tau"));
  m.def("norm_cdf", &norm_cdf);
  m.def("black_call", &black_call, py::arg("forward"), py::arg("strike"), py::arg("rate"), py::arg("tau"),
        py::arg("sigma"));
  m.def("black_vega", &black_vega, py::arg("forward"), py::arg("strike"), py::arg("rate"), py::arg("tau"),
        py::arg("sigma"));
  m.def("implied_vol", [](double price, double forward, double strike, double rate, double tau) {
    const IvResult r = implied_vol_black(price, forward, strike, rate, tau);
    return py::make_tuple(r.ok() ? py::cast(r.sigma) : py::none(), iv_status_name(r.status));
  }, py::arg("price"), py::arg("forward"), py::arg("strike"), py::arg("rate"), py::arg("tau"),
        "Returns (sigma or None, status).");

  // network
  py::class_<MlpParams>(m, "Network")
      .def(py::init([](const std::vector<std::size_t>& arch, const Activation& act, std::uint64_t seed) {
             return init_params(arch, act, seed);
           }),
           py::arg("architecture") = std::vector<std::size_t>{2, 16, 16, 1},
           py::arg("activation") = Activation::softplus(), py::arg("seed") = 0)
      .def_property_readonly("architecture", &MlpParams::architecture)
      .def_property_readonly("parameter_count", &MlpParams::parameter_count)
      .def_property_readonly("activation", [](const MlpParams& p) { return p.activation; })
      .def("__call__", [](const MlpParams& p, const Array& x) { return evaluate(p, to_vector(x)); })
      .def("evaluate_many", [](const MlpParams& p, const Array& xs) {
        if (xs.ndim() != 2) throw InputError("expected an (N, n) array");
        const std::size_t n = static_cast<std::size_t>(xs.shape(1));
        Array out(xs.shape(0));
        for (py::ssize_t i = 0; i < xs.shape(0); ++i)
          out.mutable_data()[i] = evaluate(p, std::span<const double>(xs.data() + i * n, n));
        return out;
      })
      .def("jacobian", [](const MlpParams& p, const Array& x) { return to_array(forward_jacobian(p, to_vector(x))); })
      .def("second", [](const MlpParams& p, const Array& x) { return to_array(forward_second(p, to_vector(x))); })
      .def("hessian", [](const MlpParams& p, const Array& x) {
        const std::size_t n = p.input_dim();
        return to_matrix(forward_hessian(p, to_vector(x)), n, n);
      })
      .def("to_json", &checkpoint_to_json)
      .def_static("from_json", &checkpoint_from_json)
      .def("save", [](const MlpParams& p, const std::string& path) { save_checkpoint(p, path); })
      .def_static("load", &load_checkpoint)
      .def("__eq__", [](const MlpParams& a, const MlpParams& b) { return a == b; });

  // data
  py::class_<GridSpec>(m, "GridSpec")
      .def(py::init(&GridSpec::standard))
      .def_readwrite("moneyness", &GridSpec::moneyness)
      .def_readwrite("tau", &GridSpec::tau)
      .def_readwrite("boundary_tau0", &GridSpec::boundary_tau0)
      .def_readwrite("boundary_k0", &GridSpec::boundary_k0)
      .def_readwrite("mesh_moneyness", &GridSpec::mesh_moneyness)
      .def_readwrite("mesh_tau", &GridSpec::mesh_tau)
      .def_readwrite("out_moneyness", &GridSpec::out_moneyness)
      .def_readwrite("out_tau", &GridSpec::out_tau)
      .def("validate", &GridSpec::validate);

  py::class_<QuoteGrid>(m, "QuoteGrid")
      .def(py::init(&grid_from_arrays), py::arg("moneyness"), py::arg("tau"), py::arg("premium"))
      .def("__len__", &QuoteGrid::size)
      .def_property_readonly("boundary_count", &QuoteGrid::boundary_count)
      .def_property_readonly("moneyness", [](const QuoteGrid& g) { return column(g, [](auto& q) { return q.moneyness; }); })
      .def_property_readonly("tau", [](const QuoteGrid& g) { return column(g, [](auto& q) { return q.tau; }); })
      .def_property_readonly("premium", [](const QuoteGrid& g) { return column(g, [](auto& q) { return q.premium; }); })
      .def_property_readonly("sigma", [](const QuoteGrid& g) { return column(g, [](auto& q) { return q.sigma; }); })
      .def_property_readonly("is_boundary", [](const QuoteGrid& g) {
        py::array_t<bool> out(static_cast<py::ssize_t>(g.size()));
        for (std::size_t i = 0; i < g.size(); ++i) out.mutable_data()[i] = g.points[i].is_boundary;
        return out;
      })
      .def("to_csv", &quotes_to_csv)
      .def("save", [](const QuoteGrid& g, const std::string& path) { write_quotes_csv(g, path); })
      .def_static("load", [](const std::string& path) { return load_quotes_csv(path).grid; });

  m.def("synth_in_sample", &synth_in_sample, py::arg("params"), py::arg("spec") = GridSpec::standard());
  m.def("synth_out_sample", &synth_out_sample, py::arg("params"), py::arg("spec") = GridSpec::standard());
  m.def("penalty_mesh", [](const GridSpec& spec) { return mesh_to_array(penalty_mesh(spec)); },
        py::arg("spec") = GridSpec::standard(), "(M, 2) array of (moneyness, tau)");

  // penalty and training
  py::class_<PenaltyConfig>(m, "PenaltyConfig")
      .def(py::init([](double m_k, double m_kk, double m_tau, const std::string& g, bool lower_bound,
                       bool self_adaptive, double eta_m) {
             PenaltyConfig c{m_k, m_kk, m_tau, parse_intensifier(g), lower_bound, self_adaptive, eta_m};
             c.validate();
             return c;
           }),
           py::arg("m_k") = 0.001, py::arg("m_kk") = 0.01, py::arg("m_tau") = 0.001, py::arg("g") = "identity",
           py::arg("lower_bound") = false, py::arg("self_adaptive") = false, py::arg("eta_m") = 0.1)
      .def_static("disabled", &PenaltyConfig::disabled)
      .def_readwrite("m_k", &PenaltyConfig::m_k)
      .def_readwrite("m_kk", &PenaltyConfig::m_kk)
      .def_readwrite("m_tau", &PenaltyConfig::m_tau)
      .def_readwrite("lower_bound", &PenaltyConfig::lower_bound)
      .def_readwrite("self_adaptive", &PenaltyConfig::self_adaptive)
      .def_readwrite("eta_m", &PenaltyConfig::eta_m)
      .def_property_readonly("active", &PenaltyConfig::active);

  m.def("penalty_loss", [](const MlpParams& net, const Array& mesh, const PenaltyConfig& cfg, double rate) {
    const PenaltyEvaluation ev = penalty_loss(net, mesh_from_array(mesh), cfg, rate);
    return loss_dict(0.0, ev.e_penalty, ev.terms, ev.violations);
  }, py::arg("network"), py::arg("mesh"), py::arg("penalty") = PenaltyConfig::baseline(), py::arg("rate") = 0.0);

  m.def("total_cost", [](const MlpParams& net, const QuoteGrid& data, const Array& mesh, const PenaltyConfig& cfg,
                         double rate) {
    const LossReport r = total_cost(net, data, mesh_from_array(mesh), cfg, rate);
    py::dict d = loss_dict(r.e_mse, r.e_penalty, r.terms, r.violations);
    d["total"] = r.total;
    return d;
  }, py::arg("network"), py::arg("data"), py::arg("mesh"), py::arg("penalty") = PenaltyConfig::baseline(),
        py::arg("rate") = 0.0);

  py::class_<TrainConfig>(m, "TrainConfig")
      .def(py::init([](std::size_t epochs, double learning_rate, std::uint64_t seed,
                       const std::vector<std::size_t>& architecture, const Activation& activation,
                       const PenaltyConfig& penalty, std::size_t history_stride) {
             TrainConfig c;
             c.epochs = epochs;
             c.adam.learning_rate = learning_rate;
             c.seed = seed;
             c.architecture = architecture;
             c.activation = activation;
             c.penalty = penalty;
             c.history_stride = history_stride;
             c.validate();
             return c;
           }),
           py::arg("epochs") = 10000, py::arg("learning_rate") = 1e-3, py::arg("seed") = 0,
           py::arg("architecture") = std::vector<std::size_t>{2, 16, 16, 1},
           py::arg("activation") = Activation::softplus(), py::arg("penalty") = PenaltyConfig::baseline(),
           py::arg("history_stride") = 10)
      .def_readwrite("epochs", &TrainConfig::epochs)
      .def_readwrite("seed", &TrainConfig::seed)
      .def_readwrite("architecture", &TrainConfig::architecture)
      .def_readwrite("penalty", &TrainConfig::penalty)
      .def_readwrite("history_stride", &TrainConfig::history_stride)
      .def_property("learning_rate", [](const TrainConfig& c) { return c.adam.learning_rate; },
                    [](TrainConfig& c, double lr) { c.adam.learning_rate = lr; });

  m.def("train", [](const QuoteGrid& data, const Array& mesh, const TrainConfig& cfg, double rate) {
    const Mesh mp = mesh_from_array(mesh);
    TrainReport r;
    {
      py::gil_scoped_release release;
      r = train(data, mp, cfg, rate);
    }
    std::vector<double> hist;
    for (const auto& h : r.history)
      hist.insert(hist.end(), {static_cast<double>(h.epoch), h.e_mse, h.e_penalty});
    py::dict d;
    d["network"] = r.params;
    d["history"] = to_matrix(hist, r.history.size(), 3);
    d["final"] = loss_dict(r.final_report.e_mse, r.final_report.e_penalty, r.final_report.terms,
                           r.final_report.violations);
    d["seconds"] = r.seconds;
    d["epochs"] = r.epochs;
    return d;
  }, py::arg("data"), py::arg("mesh"), py::arg("config"), py::arg("rate") = 0.0,
        "Returns {network, history (rows of epoch, e_mse, e_penalty), final, seconds, epochs}.");

  // evaluation
  m.def("eval_metrics", [](const MlpParams& net, const QuoteGrid& truth, const Array& mesh,
                           const PenaltyConfig& cfg, double rate) {
    const MlpSurface s(net);
    return metrics_dict(eval_metrics(s, truth, mesh_from_array(mesh), cfg, rate));
  }, py::arg("network"), py::arg("truth"), py::arg("mesh"), py::arg("penalty") = PenaltyConfig::baseline(),
        py::arg("rate") = 0.04);
  m.def("eval_oracle", [](const SabrParams& p, const QuoteGrid& truth, const Array& mesh, const PenaltyConfig& cfg) {
    const SabrSurface s(p);
    return metrics_dict(eval_metrics(s, truth, mesh_from_array(mesh), cfg, p.rate));
  }, py::arg("params"), py::arg("truth"), py::arg("mesh"), py::arg("penalty") = PenaltyConfig::baseline());

  m.def("normalize_config", [](const std::string& text) { return dump_config(parse_config(text)); },
        py::arg("json_text"), "Validated config with every default filled in, as JSON text.");
  m.def("config_reference", &config_reference);
}
