#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <json.hpp>

#include "lsgo/harness.hpp"
#include "lsgo/stats.hpp"
#include "lsgo/wsn_problem.hpp"

namespace py = pybind11;
using namespace lsgo;

namespace {

wsn::SolvePath parse_path(const std::string& s) {
    if (s == "auto") return wsn::SolvePath::automatic;
    if (s == "dense") return wsn::SolvePath::dense;
    if (s == "structured") return wsn::SolvePath::structured;
    throw std::invalid_argument("path must be 'auto', 'dense' or 'structured'");
}

py::dict solve(const wsn::WsnInstance& inst, const std::string& algorithm, std::int64_t max_evals,
               std::size_t population, std::uint64_t seed, const std::string& overrides, double lower, double upper) {
    wsn::WsnObjective obj(inst);
    Rng rng(seed);
    harness::AlgorithmSpec spec{algorithm, overrides.empty() ? nlohmann::json::object() : nlohmann::json::parse(overrides)};
    SolverResult r;
    {
        py::gil_scoped_release release;
        r = harness::run_algorithm(spec, obj, Bounds{lower, upper}, max_evals, population, rng);
    }
    std::vector<std::pair<std::int64_t, double>> trace;
    for (const auto& p : r.trace) trace.emplace_back(p.evals, p.best);
    py::dict out;
    out["best_position"] = r.best_position;
    out["best_fitness"] = r.best_fitness;
    out["evaluations"] = r.evaluations;
    out["trace"] = trace;
    out["power"] = wsn::total_power(r.best_position);
    out["feasible"] = wsn::is_feasible(inst, r.best_position);
    return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Power allocation for decentralized detection: model, solvers and statistics";

    py::class_<wsn::WsnConfig>(m, "WsnConfig")
        .def(py::init([](std::size_t L, double snr_db, double rho, double spacing, double sigma_v2, double sigma_w2,
                         double epsilon, double prior_ratio, std::uint64_t fading_seed) {
                 wsn::WsnConfig c{L, snr_db, rho, spacing, sigma_v2, sigma_w2, epsilon, prior_ratio, fading_seed};
                 c.validate();
                 return c;
             }),
             py::arg("num_sensors"), py::arg("snr_db") = 10.0, py::arg("correlation") = 0.0, py::arg("spacing") = 1.0,
             py::arg("sigma_v2") = 1.0, py::arg("sigma_w2") = 1.0, py::arg("epsilon") = 0.1,
             py::arg("prior_ratio") = 1.0, py::arg("fading_seed") = 0)
        .def_readwrite("num_sensors", &wsn::WsnConfig::num_sensors)
        .def_readwrite("snr_db", &wsn::WsnConfig::snr_db)
        .def_readwrite("correlation", &wsn::WsnConfig::correlation)
        .def_readwrite("spacing", &wsn::WsnConfig::spacing)
        .def_readwrite("sigma_v2", &wsn::WsnConfig::sigma_v2)
        .def_readwrite("sigma_w2", &wsn::WsnConfig::sigma_w2)
        .def_readwrite("epsilon", &wsn::WsnConfig::epsilon)
        .def_readwrite("prior_ratio", &wsn::WsnConfig::prior_ratio)
        .def_readwrite("fading_seed", &wsn::WsnConfig::fading_seed)
        .def_property_readonly("signal_power", &wsn::WsnConfig::signal_power);

    py::class_<wsn::WsnInstance>(m, "WsnInstance")
        .def(py::init<const wsn::WsnConfig&>(), py::arg("config"))
        .def(py::init([](const wsn::WsnConfig& c, std::vector<double> h) {
                 return wsn::WsnInstance(c, wsn::FadingProfile{std::move(h)});
             }),
             py::arg("config"), py::arg("fading"))
        .def_property_readonly("config", &wsn::WsnInstance::config)
        .def_property_readonly("fading", [](const wsn::WsnInstance& i) { return i.fading().h; })
        .def_property_readonly("dimension", &wsn::WsnInstance::dimension)
        .def_property_readonly("signal_covariance", &wsn::WsnInstance::signal_covariance)
        .def("error_probability",
             [](const wsn::WsnInstance& i, const std::vector<double>& g, const std::string& path) {
                 return wsn::fusion_error_probability(i, g, parse_path(path));
             },
             py::arg("g"), py::arg("path") = "auto")
        .def("constraint", [](const wsn::WsnInstance& i, const std::vector<double>& g) { return wsn::constraint_zeta(i, g); })
        .def("penalized",
             [](const wsn::WsnInstance& i, const std::vector<double>& g, std::int64_t it) {
                 return wsn::penalized_objective(i, g, it);
             },
             py::arg("g"), py::arg("iteration") = 1)
        .def("is_feasible",
             [](const wsn::WsnInstance& i, const std::vector<double>& g, double tol) { return wsn::is_feasible(i, g, tol); },
             py::arg("g"), py::arg("tolerance") = 1e-6)
        .def("uniform_feasible_gain", &wsn::uniform_feasible_gain, py::arg("upper") = 15.0)
        .def("monte_carlo",
             [](const wsn::WsnInstance& i, const std::vector<double>& g, std::int64_t n, std::uint64_t seed) {
                 std::mt19937_64 rng(seed);
                 const auto e = wsn::monte_carlo_pe(i, g, n, rng);
                 return py::dict(py::arg("error_rate") = e.error_rate, py::arg("false_alarm_rate") = e.false_alarm_rate,
                                 py::arg("miss_rate") = e.miss_rate);
             },
             py::arg("g"), py::arg("samples"), py::arg("seed") = 0);

    m.def("signal_covariance", &wsn::build_signal_covariance, py::arg("config"));
    m.def("q_function", &wsn::q_function, py::arg("x"));
    m.def("total_power", [](const std::vector<double>& g) { return wsn::total_power(g); }, py::arg("g"));
    m.def("algorithm_names", &harness::algorithm_names);
    m.def("fading_seed", &harness::fading_seed, py::arg("base_seed"), py::arg("sensors"));
    m.def("_solve", &solve, py::arg("instance"), py::arg("algorithm"), py::arg("max_evals"), py::arg("population"),
          py::arg("seed"), py::arg("overrides"), py::arg("lower"), py::arg("upper"));

    m.def("friedman_ranks",
          [](const std::vector<std::vector<double>>& rows) {
              const auto f = stats::friedman_ranks(rows);
              return py::dict(py::arg("mean_ranks") = f.mean_ranks, py::arg("normalized") = f.normalized,
                              py::arg("order") = f.order);
          },
          py::arg("rows"));
    m.def("wilcoxon",
          [](const std::vector<double>& x, const std::vector<double>& y) {
              const auto w = stats::wilcoxon_signed_rank(x, y);
              return py::dict(py::arg("p_value") = w.p_value, py::arg("w_plus") = w.w_plus,
                              py::arg("w_minus") = w.w_minus, py::arg("n") = w.n, py::arg("exact") = w.exact,
                              py::arg("degenerate") = w.degenerate);
          },
          py::arg("x"), py::arg("y"));
    m.def("_run_experiment",
          [](const std::string& config_json, const std::string& base) {
              auto cfg = harness::ExperimentConfig::from_json(nlohmann::json::parse(config_json), base);
              harness::ExperimentResult r;
              {
                  py::gil_scoped_release release;
                  r = harness::run_experiment(cfg);
              }
              py::dict means;
              for (std::size_t c = 0; c < r.cases.size(); ++c) {
                  py::dict row;
                  for (std::size_t a = 0; a < r.algorithms.size(); ++a) row[py::str(r.algorithms[a])] = r.cells[c][a].mean;
                  means[py::str(r.cases[c])] = row;
              }
              return means;
          },
          py::arg("config_json"), py::arg("base") = "");
}
