#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <memory>
#include <sstream>

#include "bermex/baselines.hpp"
#include "bermex/config.hpp"
#include "bermex/dos.hpp"
#include "bermex/errors.hpp"
#include "bermex/exposure.hpp"
#include "bermex/pipeline.hpp"
#include "bermex/regression.hpp"
#include "bermex/rng.hpp"

namespace py = pybind11;
using namespace bermex;

namespace {

// (paths, dates, dim) view that keeps the path set alive.
py::array_t<double> states_array(const std::shared_ptr<PathSet>& p) {
    const auto d = static_cast<py::ssize_t>(sizeof(double));
    const py::ssize_t dim = p->dim(), dates = p->dates();
    py::array_t<double> out({static_cast<py::ssize_t>(p->paths()), dates, dim}, {dates * dim * d, dim * d, d},
                            p->raw().data(), py::cast(p));
    py::detail::array_proxy(out.ptr())->flags &= ~py::detail::npy_api::NPY_ARRAY_WRITEABLE_;
    return out;
}

RowMatrix as_states(const py::array_t<double, py::array::c_style | py::array::forcecast>& x) {
    if (x.ndim() == 1) {
        RowMatrix m(1, x.shape(0));
        std::copy(x.data(), x.data() + x.size(), m.data());
        return m;
    }
    if (x.ndim() != 2) throw std::invalid_argument("states must be a 1-d or 2-d array");
    RowMatrix m(x.shape(0), x.shape(1));
    std::copy(x.data(), x.data() + x.size(), m.data());
    return m;
}

py::array_t<std::uint8_t> as_array(const std::vector<std::uint8_t>& v) { return py::array_t<std::uint8_t>(v.size(), v.data()); }

py::dict price_dict(const MeanSe& p) {
    py::dict d;
    d["value"] = p.mean;
    d["std_err"] = p.std_err;
    return d;
}

py::list exposure_rows(const ExposureProfile& prof) {
    py::list out;
    for (const auto& r : prof.rows) {
        py::dict d;
        d["date_index"] = r.date_index;
        d["t"] = r.t;
        d["estimator"] = r.estimator;
        d["measure"] = r.measure;
        d["value"] = r.value;
        d["std_err"] = r.std_err ? py::cast(*r.std_err) : py::none();
        d["alpha"] = r.alpha ? py::cast(*r.alpha) : py::none();
        d["paths"] = r.paths;
        d["seed"] = r.seed;
        out.append(d);
    }
    return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Deep optimal stopping and exposure profiles of Bermudan options.";

    py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
    py::register_exception<NumericError>(m, "NumericError", PyExc_ArithmeticError);

    m.def("derive_seed", [](std::uint64_t master, const std::string& label) { return derive_seed(master, label); },
          py::arg("master"), py::arg("label"));

    py::class_<TimeGrid>(m, "TimeGrid")
        .def(py::init<std::vector<double>, int>(), py::arg("dates"), py::arg("substeps") = 1)
        .def_static("uniform", &TimeGrid::uniform, py::arg("maturity"), py::arg("intervals"), py::arg("substeps") = 1,
                    py::arg("t0") = 0.0)
        .def_property_readonly("dates", &TimeGrid::dates)
        .def_property_readonly("intervals", &TimeGrid::intervals)
        .def_property_readonly("substeps", &TimeGrid::substeps);

    py::class_<GbmModel>(m, "GbmModel")
        .def(py::init([](Eigen::VectorXd s0, double r, Eigen::VectorXd q, Eigen::VectorXd sigma, Eigen::MatrixXd rho,
                         std::optional<Eigen::VectorXd> mu_p) {
                 GbmModel g{std::move(s0), r, std::move(q), std::move(sigma), std::move(rho), std::move(mu_p)};
                 g.validate();
                 return g;
             }),
             py::arg("s0"), py::arg("r"), py::arg("q"), py::arg("sigma"), py::arg("rho"), py::arg("mu_p") = py::none())
        .def_static("symmetric", &GbmModel::symmetric, py::arg("d"), py::arg("s0"), py::arg("r"), py::arg("q"),
                    py::arg("sigma"), py::arg("rho") = 0.0)
        .def_readwrite("s0", &GbmModel::s0)
        .def_readwrite("r", &GbmModel::r)
        .def_readwrite("q", &GbmModel::q)
        .def_readwrite("sigma", &GbmModel::sigma)
        .def_readwrite("rho", &GbmModel::rho)
        .def_readwrite("mu_p", &GbmModel::mu_p)
        .def_property_readonly("dim", &GbmModel::dim);

    py::class_<HestonModel>(m, "HestonModel")
        .def(py::init([](double s0, double nu0, double r, double q, double kappa, double theta, double xi, double rho) {
                 HestonModel h{s0, nu0, r, q, kappa, theta, xi, rho};
                 h.validate();
                 return h;
             }),
             py::arg("s0"), py::arg("nu0"), py::arg("r"), py::arg("q"), py::arg("kappa"), py::arg("theta"), py::arg("xi"),
             py::arg("rho"))
        .def_property_readonly("feller_satisfied", &HestonModel::feller_satisfied);

    py::class_<PathSet, std::shared_ptr<PathSet>>(m, "PathSet")
        .def_property_readonly("paths", &PathSet::paths)
        .def_property_readonly("dates", &PathSet::dates)
        .def_property_readonly("dim", &PathSet::dim)
        .def_property_readonly("seed", &PathSet::seed)
        .def_property_readonly("grid", &PathSet::grid)
        .def_property_readonly("measure", [](const PathSet& p) { return p.measure().label(); })
        .def_property_readonly("states", &states_array, "Read-only (paths, dates, dim) array.");

    m.def(
        "simulate_gbm",
        [](const GbmModel& model, const TimeGrid& grid, std::size_t paths, std::uint64_t seed, const std::string& measure) {
            const Measure ms = measure == "P" ? Measure::p() : Measure::q();
            if (measure != "P" && measure != "Q") throw std::invalid_argument("measure must be 'Q' or 'P'");
            py::gil_scoped_release release;
            return std::make_shared<PathSet>(simulate_gbm(model, grid, paths, ms, seed));
        },
        py::arg("model"), py::arg("grid"), py::arg("paths"), py::arg("seed"), py::arg("measure") = "Q");
    m.def(
        "simulate_switched",
        [](const GbmModel& model, const TimeGrid& grid, int switch_index, std::size_t paths, std::uint64_t seed) {
            py::gil_scoped_release release;
            return std::make_shared<PathSet>(simulate_switched(model, grid, switch_index, paths, seed));
        },
        py::arg("model"), py::arg("grid"), py::arg("switch_index"), py::arg("paths"), py::arg("seed"));
    m.def(
        "simulate_heston",
        [](const HestonModel& model, const TimeGrid& grid, std::size_t paths, std::uint64_t seed, bool martingale_correction) {
            py::gil_scoped_release release;
            return std::make_shared<PathSet>(
                simulate_heston(model, grid, paths, seed, QeOptions{1.5, martingale_correction}));
        },
        py::arg("model"), py::arg("grid"), py::arg("paths"), py::arg("seed"), py::arg("martingale_correction") = false);

    py::class_<Contract>(m, "Contract")
        .def(py::init([](const std::string& payoff, double strike, int assets, int state_offset) {
                 Contract c{payoff_kind_from_string(payoff), strike, assets, state_offset};
                 c.validate();
                 return c;
             }),
             py::arg("payoff"), py::arg("strike"), py::arg("assets") = 1, py::arg("state_offset") = 0)
        .def_property_readonly("payoff", [](const Contract& c) { return to_string(c.kind); })
        .def_readonly("strike", &Contract::strike)
        .def_readonly("assets", &Contract::assets)
        .def_readonly("state_offset", &Contract::state_offset)
        .def("__call__", [](const Contract& c, const py::array_t<double, py::array::c_style | py::array::forcecast>& x) {
            return Eigen::VectorXd(payoff_rows(c, as_states(x)));
        });

    py::class_<StoppingRule, std::shared_ptr<StoppingRule>>(m, "StoppingRule")
        .def("decide", [](const StoppingRule& r, int n, const py::array_t<double, py::array::c_style | py::array::forcecast>& x) {
            return as_array(r.decide(n, as_states(x)));
        }, py::arg("n"), py::arg("states"));

    py::class_<DecisionPolicy, StoppingRule, std::shared_ptr<DecisionPolicy>>(m, "DecisionPolicy")
        .def("probabilities", [](const DecisionPolicy& p, int n, const py::array_t<double, py::array::c_style | py::array::forcecast>& x) {
            return Eigen::VectorXd(p.probabilities(n, as_states(x)));
        }, py::arg("n"), py::arg("states"))
        .def_property_readonly("filter", [](const DecisionPolicy& p) { return to_string(p.mode()); })
        .def("save", &DecisionPolicy::save, py::arg("dir"))
        .def_static("load", [](const std::filesystem::path& dir) { return std::make_shared<DecisionPolicy>(DecisionPolicy::load(dir)); },
                    py::arg("dir"));

    m.def(
        "train_policy",
        [](const PathSet& paths, const Contract& contract, double r, int steps_fresh, int steps_warm, int batch_size,
           const std::string& filter, std::uint64_t seed) {
            TrainConfig t;
            t.steps_fresh = steps_fresh;
            t.steps_warm = steps_warm;
            t.batch_size = batch_size;
            t.filter = filter_mode_from_string(filter);
            t.seed = seed;
            py::gil_scoped_release release;
            return std::make_shared<DecisionPolicy>(train_policy(paths, contract, r, t));
        },
        py::arg("paths"), py::arg("contract"), py::arg("r"), py::arg("steps_fresh") = 1500, py::arg("steps_warm") = 500,
        py::arg("batch_size") = 8192, py::arg("filter") = "A2", py::arg("seed") = 0);

    m.def(
        "price_lower_bound",
        [](const StoppingRule& rule, const PathSet& paths, double r) { return price_dict(price_lower_bound(rule, paths, r)); },
        py::arg("rule"), py::arg("paths"), py::arg("r"));
    m.def("exercise_fraction", &exercise_fraction, py::arg("rule"), py::arg("paths"));

    py::class_<ValueFunction, std::shared_ptr<ValueFunction>>(m, "ValueFunction")
        .def("value", [](const ValueFunction& v, int n, const py::array_t<double, py::array::c_style | py::array::forcecast>& x) {
            return Eigen::VectorXd(v.value(n, as_states(x)));
        }, py::arg("n"), py::arg("states"));

    py::class_<ValueSurface, ValueFunction, std::shared_ptr<ValueSurface>>(m, "ValueSurface")
        .def("regression_value", [](const ValueSurface& v, int n, const py::array_t<double, py::array::c_style | py::array::forcecast>& x) {
            return Eigen::VectorXd(v.regression_value(n, as_states(x)));
        }, py::arg("n"), py::arg("states"))
        .def("save", &ValueSurface::save, py::arg("dir"));

    m.def(
        "fit_surface",
        [](std::shared_ptr<DecisionPolicy> rule, const PathSet& paths, double r, const std::string& method,
           const std::string& output_mode, int steps, int batch_size, double learning_rate, double final_learning_rate,
           const std::string& basis,
           int degree, int bundles, std::vector<int> hidden, std::uint64_t seed) {
            RegressionConfig c;
            c.method = regression_method_from_string(method);
            c.output_mode = output_mode_from_string(output_mode);
            c.steps = steps;
            c.batch_size = batch_size;
            c.learning_rate = learning_rate;
            c.final_learning_rate = final_learning_rate;
            c.basis = basis_preset_from_string(basis);
            c.degree = degree;
            c.bundles = bundles;
            c.hidden = std::move(hidden);
            c.seed = seed;
            py::gil_scoped_release release;
            return std::make_shared<ValueSurface>(fit_surface(std::move(rule), paths, r, c));
        },
        py::arg("rule"), py::arg("paths"), py::arg("r"), py::arg("method") = "nn", py::arg("output_mode") = "identity",
        py::arg("steps") = 1500, py::arg("batch_size") = 8192, py::arg("learning_rate") = 1e-3,
        py::arg("final_learning_rate") = 1e-5,        py::arg("basis") = "monomial", py::arg("degree") = 2, py::arg("bundles") = 32,
        py::arg("hidden") = std::vector<int>{}, py::arg("seed") = 0);

    py::class_<BaselineModel, StoppingRule, ValueFunction, std::shared_ptr<BaselineModel>>(m, "BaselineModel")
        .def_property_readonly("price", [](const BaselineModel& b) { return price_dict(b.price); })
        .def_readonly("warnings", &BaselineModel::warnings);

    m.def(
        "lsm_fit",
        [](const PathSet& paths, const Contract& contract, double r, const std::string& basis, bool itm_only) {
            py::gil_scoped_release release;
            return std::make_shared<BaselineModel>(
                lsm_fit(paths, contract, BasisSet::make(basis_preset_from_string(basis), contract), itm_only, r));
        },
        py::arg("paths"), py::arg("contract"), py::arg("r"), py::arg("basis") = "lsm_bs", py::arg("itm_only") = true);
    m.def(
        "sgbm_fit",
        [](const PathSet& paths, const Contract& contract, double r, const std::string& basis, int bundles) {
            py::gil_scoped_release release;
            return std::make_shared<BaselineModel>(
                sgbm_fit(paths, contract, BasisSet::make(basis_preset_from_string(basis), contract), bundles, r));
        },
        py::arg("paths"), py::arg("contract"), py::arg("r"), py::arg("basis") = "sgbm_bs", py::arg("bundles") = 32);

    m.def(
        "exposure_q",
        [](const StoppingRule& rule, const ValueFunction* surface, const PathSet& paths, double r, std::vector<double> alphas) {
            return exposure_rows(exposure_q(rule, surface, paths, r, alphas));
        },
        py::arg("rule"), py::arg("surface"), py::arg("paths"), py::arg("r"), py::arg("alphas") = std::vector<double>{});
    m.def(
        "exposure_p",
        [](const StoppingRule& rule, const ValueFunction* surface, const GbmModel& model, std::size_t paths,
           std::uint64_t seed, std::vector<double> alphas, const std::string& measure) {
            const auto provider = switched_provider(model, rule.grid(), paths, seed);
            return exposure_rows(exposure_p_switched(rule, surface, provider, model.r, alphas, measure));
        },
        py::arg("rule"), py::arg("surface"), py::arg("model"), py::arg("paths"), py::arg("seed"),
        py::arg("alphas") = std::vector<double>{}, py::arg("measure") = "P");
    m.def(
        "ee_p_likelihood",
        [](const StoppingRule& rule, const PathSet& paths, const GbmModel& model, const std::string& measure) {
            return exposure_rows(ee_p_likelihood(rule, paths, model, model.r, measure));
        },
        py::arg("rule"), py::arg("paths"), py::arg("model"), py::arg("measure") = "P");
    m.def(
        "likelihood_ratio_means",
        [](const GbmModel& model, const PathSet& paths) {
            py::list out;
            for (const auto& s : likelihood_ratio_means(model, paths)) out.append(price_dict(s));
            return out;
        },
        py::arg("model"), py::arg("paths"));
    m.def("pfe_index", &pfe_index, py::arg("alpha"), py::arg("paths"));

    py::class_<ExperimentConfig>(m, "ExperimentConfig")
        .def_readwrite("name", &ExperimentConfig::name)
        .def_readwrite("seed", &ExperimentConfig::seed)
        .def_readwrite("output_dir", &ExperimentConfig::output_dir)
        .def_readwrite("train_paths", &ExperimentConfig::train_paths)
        .def_readwrite("valuation_paths", &ExperimentConfig::valuation_paths)
        .def_readwrite("regression_paths", &ExperimentConfig::regression_paths)
        .def_readwrite("exposure_paths", &ExperimentConfig::exposure_paths)
        .def_readwrite("estimators", &ExperimentConfig::estimators)
        .def_readwrite("alphas", &ExperimentConfig::alphas)
        .def_readwrite("lsm", &ExperimentConfig::lsm)
        .def_readwrite("sgbm", &ExperimentConfig::sgbm)
        .def_readwrite("regression_enabled", &ExperimentConfig::regression_enabled)
        .def_readwrite("exposure_enabled", &ExperimentConfig::exposure_enabled)
        .def_property(
            "training_steps", [](const ExperimentConfig& c) { return std::pair{c.training.steps_fresh, c.training.steps_warm}; },
            [](ExperimentConfig& c, std::pair<int, int> s) { std::tie(c.training.steps_fresh, c.training.steps_warm) = s; })
        .def_property(
            "regression_steps", [](const ExperimentConfig& c) { return c.regression.steps; },
            [](ExperimentConfig& c, int s) { c.regression.steps = s; })
        .def_property(
            "boundary_enabled", [](const ExperimentConfig& c) { return c.boundary.enabled; },
            [](ExperimentConfig& c, bool b) { c.boundary.enabled = b; })
        .def_property_readonly("contract", [](const ExperimentConfig& c) { return c.contract; })
        .def_property_readonly("grid", &ExperimentConfig::grid)
        .def("validate", &ExperimentConfig::validate)
        .def("to_ini", &serialize_config);

    m.def("load_config", &load_config, py::arg("path"));
    m.def(
        "parse_config",
        [](const std::string& text) {
            std::istringstream in(text);
            return parse_config(in);
        },
        py::arg("text"));

    m.def(
        "run_pipeline",
        [](const ExperimentConfig& config, std::optional<std::filesystem::path> output_dir, bool exposure,
           bool write_artifacts) {
            RunOptions opt;
            opt.exposure = exposure;
            opt.write_artifacts = write_artifacts;
            if (output_dir) opt.output_dir = *output_dir;
            RunReport r;
            {
                py::gil_scoped_release release;
                r = run_pipeline(config, opt);
            }
            py::dict d;
            d["name"] = r.name;
            py::list prices;
            for (const auto& p : r.prices) {
                py::dict row;
                row["method"] = p.method;
                row["estimate"] = p.estimate;
                row["value"] = p.value;
                row["std_err"] = p.std_err;
                row["paths"] = p.paths;
                row["seed"] = p.seed;
                prices.append(row);
            }
            d["prices"] = prices;
            d["exposure"] = exposure_rows(r.exposure);
            d["exposure_lsm"] = exposure_rows(r.exposure_lsm);
            d["exposure_sgbm"] = exposure_rows(r.exposure_sgbm);
            py::dict timings;
            for (const auto& t : r.timings) timings[py::str(t.stage)] = t.seconds;
            d["timings"] = timings;
            d["warnings"] = r.warnings;
            return d;
        },
        py::arg("config"), py::arg("output_dir") = py::none(), py::arg("exposure") = true, py::arg("write_artifacts") = true);
}
