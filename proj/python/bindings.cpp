#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <json.hpp>

#include "conewarp/coeffs.hpp"
#include "conewarp/errors.hpp"
#include "conewarp/experiment.hpp"

namespace py = pybind11;
using namespace conewarp;

namespace {

std::string report_json(const VerificationReport& report) {
    return report.to_json(true).dump();
}

ConeSpec cone_from_json_str(const std::string& text) {
    return ConeSpec::from_json(nlohmann::json::parse(text));
}

} // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "generalized-cone curvature verification core";

    m.def("generalized_sin", &generalized_sin, py::arg("kappa"), py::arg("theta"));
    m.def("sigma", [](double kappa, double t, double theta) {
        return sigma_coeff(kappa, t, theta);
    });
    m.def("sigma_kn", &sigma_KN, py::arg("K"), py::arg("N"), py::arg("t"), py::arg("theta"));
    m.def("tau", &tau_coeff, py::arg("K"), py::arg("N"), py::arg("t"), py::arg("theta"));

    py::class_<DensityProfile>(m, "DensityProfile")
        .def_static("closed_form", &DensityProfile::closed_form)
        .def_static("sampled", &DensityProfile::sampled)
        .def_static("from_json",
                    [](const std::string& s) {
                        return DensityProfile::from_json(nlohmann::json::parse(s));
                    })
        .def("value", &DensityProfile::value)
        .def("lo", &DensityProfile::lo)
        .def("hi", &DensityProfile::hi)
        .def("mass", &DensityProfile::mass)
        .def("to_json", [](const DensityProfile& p) { return p.to_json().dump(); });
    m.def("model_density",
          py::overload_cast<const std::string&, double, double, double>(&model_density));
    m.def("natural_eta", &DensityProfile::natural_eta);
    m.def("check_cd_density", [](const DensityProfile& h, double eta, double N, double tol) {
        const auto res = check_cd_density(h, eta, N, tol);
        return py::make_tuple(res.passed, res.min_slack,
                              py::make_tuple(res.witness[0], res.witness[1], res.witness[2]));
    });
    m.def("power_convolution", &power_convolution);

    py::class_<WarpingFunction>(m, "WarpingFunction")
        .def_static("closed_form", &WarpingFunction::closed_form)
        .def_static("from_json",
                    [](const std::string& s) {
                        return WarpingFunction::from_json(nlohmann::json::parse(s));
                    })
        .def("truncated", &WarpingFunction::truncated)
        .def("f", &WarpingFunction::f)
        .def("d1", &WarpingFunction::d1)
        .def("d2", &WarpingFunction::d2)
        .def("to_json", [](const WarpingFunction& w) { return w.to_json().dump(); });

    py::enum_<Signature>(m, "Signature")
        .value("riemannian", Signature::Riemannian)
        .value("lorentzian", Signature::Lorentzian);

    m.def("catalog", [](const std::string& tag) {
        const auto entry = catalog(tag);
        return py::make_tuple(entry.tag, entry.name, entry.warper, entry.budget.kappa,
                              entry.budget.eta);
    });
    m.def("catalog_json", [] { return catalog_json().dump(); });
    m.def("check_warper", [](const WarpingFunction& f, double kappa, double tol) {
        const auto res = check_warper(f, kappa, tol);
        return py::make_tuple(res.passed, res.min_slack, res.witness[0]);
    });
    m.def("compute_eta", [](const WarpingFunction& f, double kappa) {
        const auto budget = compute_eta(f, kappa);
        return py::make_tuple(budget.eta, budget.eta_is_sup);
    });
    m.def("sheet_ricci",
          [](const WarpingFunction& f, const DensityProfile& h, double N, double t, double r,
             double a, double b) {
              const auto out = sheet_ricci_N(f, h, N, {t, r}, {a, b});
              return py::make_tuple(out.value_ricci, out.value_metric);
          });

    py::class_<Fiber>(m, "Fiber")
        .def_static("interval", py::overload_cast<double, double>(&Fiber::interval))
        .def_static("interval_with_measure",
                    py::overload_cast<double, double, DensityProfile>(&Fiber::interval))
        .def_static("circle", py::overload_cast<double>(&Fiber::circle))
        .def_static("finite", &Fiber::finite)
        .def("distance", &Fiber::distance)
        .def("total_mass", &Fiber::total_mass);

    py::class_<ConeSpec>(m, "ConeSpec")
        .def(py::init<WarpingFunction, Fiber, double>())
        .def_static("from_json", &cone_from_json_str)
        .def_static("from_catalog", &ConeSpec::from_catalog)
        .def("to_json", [](const ConeSpec& c) { return c.to_json().dump(); })
        .def("N", &ConeSpec::N);

    m.def("causal_relation", [](const ConeSpec& cone, double t0, double x0, double t1, double x1) {
        const auto v = causal_relation(cone, {t0, x0}, {t1, x1});
        const char* rel = v.relation == CausalRelation::Chronological ? "chronological"
                          : v.relation == CausalRelation::Causal     ? "causal"
                                                                     : "unrelated";
        return py::make_tuple(rel, v.margin);
    });
    m.def("time_separation", [](const ConeSpec& cone, double t0, double x0, double t1, double x1) {
        return time_separation(cone, {t0, x0}, {t1, x1});
    });
    m.def("metric_distance", [](const ConeSpec& cone, double t0, double x0, double t1, double x1,
                                int resolution) {
        GeodesicOptions opts;
        opts.grid_resolution = resolution;
        return metric_distance(cone, {t0, x0}, {t1, x1}, opts);
    });
    m.def("geodesic_nodes", [](const WarpingFunction& f, double t0, double r0, double t1,
                               double r1) {
        const auto path = geodesic_2d(f, {t0, r0}, {t1, r1});
        std::vector<std::tuple<double, double, double>> nodes;
        for (const auto& node : path.nodes) nodes.emplace_back(node.s, node.t, node.r);
        return py::make_tuple(path.length, path.shooting_constant, nodes);
    });

    m.def("wasserstein",
          [](const ConeSpec& cone, const std::vector<std::pair<double, double>>& mu_pts,
             const std::vector<double>& mu_w, const std::vector<std::pair<double, double>>& nu_pts,
             const std::vector<double>& nu_w, double p) {
              DiscreteMeasure mu, nu;
              for (const auto& [t, x] : mu_pts) mu.support.push_back({t, x});
              for (const auto& [t, x] : nu_pts) nu.support.push_back({t, x});
              mu.weights = mu_w;
              nu.weights = nu_w;
              const auto [value, plan] = wasserstein_p(cone, mu, nu, p);
              return py::make_tuple(value, plan.matrix);
          });
    m.def("lorentz_wasserstein",
          [](const ConeSpec& cone, const std::vector<std::pair<double, double>>& mu_pts,
             const std::vector<double>& mu_w, const std::vector<std::pair<double, double>>& nu_pts,
             const std::vector<double>& nu_w, double p) {
              DiscreteMeasure mu, nu;
              for (const auto& [t, x] : mu_pts) mu.support.push_back({t, x});
              for (const auto& [t, x] : nu_pts) nu.support.push_back({t, x});
              mu.weights = mu_w;
              nu.weights = nu_w;
              const auto [value, plan] = lorentz_wasserstein_p(cone, mu, nu, p);
              return py::make_tuple(value, plan.matrix, plan.causal_feasible);
          });

    m.def("verify_needle_concavity",
          [](const WarpingFunction& f, const DensityProfile& h, double kappa, double N,
             int samples, std::uint64_t seed) {
              NeedleOptions opts;
              opts.sample_count = samples;
              opts.seed = seed;
              return report_json(verify_needle_concavity(f, h, kappa, N, opts));
          });
    m.def("check_volume_singularity", [](const ConeSpec& cone, double r0) {
        const auto [value, rep] = check_volume_singularity(cone, r0);
        return py::make_tuple(value, report_json(rep));
    });
    m.def("run_experiment", [](const std::string& config_json, const std::string& out_dir) {
        const auto cfg = ExperimentConfig::parse(nlohmann::json::parse(config_json));
        const auto outcome = run_experiment(cfg, out_dir);
        return py::make_tuple(outcome.all_passed, outcome.manifest.dump());
    });

#ifdef CONEWARP_VERSION
    m.attr("__version__") = CONEWARP_VERSION;
#else
    m.attr("__version__") = "dev";
#endif
}
