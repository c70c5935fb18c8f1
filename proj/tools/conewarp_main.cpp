#include <cstdio>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "conewarp/errors.hpp"
#include "conewarp/experiment.hpp"

namespace {

using nlohmann::json;
using namespace conewarp;

void print_fp(std::FILE* out, double x) { std::fprintf(out, "%.17g", x); }

int cmd_catalog(const std::string& signature, bool as_json) {
    auto rows = full_catalog();
    if (!signature.empty()) {
        const Signature want = signature_from_string(signature);
        std::erase_if(rows, [&](const CatalogEntry& e) { return e.warper.signature() != want; });
    }
    if (as_json) {
        json filtered = json::array();
        for (const auto& row : catalog_json()) {
            if (!signature.empty() &&
                row.at("signature") != to_string(signature_from_string(signature)))
                continue;
            filtered.push_back(row);
        }
        std::cout << filtered.dump(2) << "\n";
        return 0;
    }
    std::printf("%-4s %-28s %-14s %-6s %6s %6s\n", "tag", "name", "interval", "f", "eta",
                "kappa");
    for (const auto& e : rows) {
        char interval[64];
        auto fmt_end = [](double v, bool lo) {
            if (std::isinf(v)) return std::string(lo ? "-inf" : "inf");
            char b[32];
            std::snprintf(b, sizeof(b), "%g", v);
            return std::string(b);
        };
        std::snprintf(interval, sizeof(interval), "[%s, %s]",
                      fmt_end(e.warper.lo(), true).c_str(),
                      fmt_end(e.warper.hi(), false).c_str());
        std::printf("%-4s %-28s %-14s %-6s %6g %6g\n", e.tag.c_str(), e.name.c_str(), interval,
                    e.warper.tag().c_str(), e.budget.eta, e.budget.kappa);
    }
    return 0;
}

int cmd_verify(const std::string& config_path, const std::string& out_override) {
    ExperimentConfig cfg = ExperimentConfig::load(config_path);
    std::string out_dir = out_override;
    if (out_dir.empty()) out_dir = cfg.raw.value("output_dir", "out");
    const auto outcome = run_experiment(cfg, out_dir);
    for (const auto& [name, report] : outcome.reports)
        std::printf("[%s] %s min_slack=%.17g tol=%.17g\n", report.passed ? "PASS" : "FAIL",
                    name.c_str(), report.min_slack, report.tolerance);
    return outcome.all_passed ? 0 : 1;
}

int cmd_geodesic(const std::string& catalog_tag, const std::string& warper_path, double t0,
                 double r0, double t1, double r1, const std::string& out_path,
                 const std::string& json_out) {
    WarpingFunction warper = [&] {
        if (!catalog_tag.empty()) return catalog(catalog_tag).warper;
        std::ifstream in(warper_path);
        if (!in) throw ConfigError("cannot open warper file: " + warper_path);
        json j;
        in >> j;
        return WarpingFunction::from_json(j);
    }();
    const auto path = geodesic_2d(warper, {t0, r0}, {t1, r1});
    std::FILE* out = std::fopen(out_path.c_str(), "w");
    if (!out) throw ConfigError("cannot open output file: " + out_path);
    std::fprintf(out, "s,t,r,v_beta,integrand\n");
    for (const auto& node : path.nodes) {
        print_fp(out, node.s);
        std::fputc(',', out);
        print_fp(out, node.t);
        std::fputc(',', out);
        print_fp(out, node.r);
        std::fputc(',', out);
        print_fp(out, node.v_beta);
        std::fputc(',', out);
        print_fp(out, node.integrand);
        std::fputc('\n', out);
    }
    std::fclose(out);
    if (!json_out.empty()) {
        std::ofstream jout(json_out);
        jout << path.to_json().dump(2) << "\n";
    }
    std::printf("{\"kind\":%d,\"length\":%.17g,\"shooting_constant\":%.17g}\n",
                static_cast<int>(path.kind), path.length, path.shooting_constant);
    return 0;
}

DiscreteMeasure measure_from_json(const json& j) {
    DiscreteMeasure m;
    for (const auto& pt : j.at("support"))
        m.support.push_back({pt.at(0).get<double>(), pt.at(1).get<double>()});
    m.weights = j.at("weights").get<std::vector<double>>();
    m.validate();
    return m;
}

int cmd_transport(const std::string& instance_path, const std::string& out_path, bool sweep) {
    std::ifstream in(instance_path);
    if (!in) throw ConfigError("cannot open instance file: " + instance_path);
    json j;
    in >> j;
    const ConeSpec cone = ConeSpec::from_json(j.at("cone"));
    const auto mu = measure_from_json(j.at("mu"));
    const auto nu = measure_from_json(j.at("nu"));
    const std::string mode = j.value("mode", "wasserstein");
    const double p = j.value("p", mode == "wasserstein" ? 2.0 : 0.5);
    if (sweep && mode == "lorentz") {
        // p-independence probe across the conjectured-equivalent exponents.
        for (double ps : {0.25, 0.5, 0.75}) {
            const auto [v, pl] = lorentz_wasserstein_p(cone, mu, nu, ps);
            std::printf("{\"p\":%.2f,\"value\":%.17g,\"feasible\":%s}\n", ps, v,
                        pl.causal_feasible ? "true" : "false");
        }
        return 0;
    }
    double value;
    TransportPlan plan;
    if (mode == "wasserstein")
        std::tie(value, plan) = wasserstein_p(cone, mu, nu, p);
    else if (mode == "lorentz")
        std::tie(value, plan) = lorentz_wasserstein_p(cone, mu, nu, p);
    else
        throw ConfigError("unknown transport mode: " + mode);
    if (!out_path.empty()) {
        std::FILE* out = std::fopen(out_path.c_str(), "w");
        if (!out) throw ConfigError("cannot open output file: " + out_path);
        std::fprintf(out, "i,j,mass\n");
        for (const auto& [i, jj, mass] : plan.triplets()) {
            std::fprintf(out, "%d,%d,", i, jj);
            print_fp(out, mass);
            std::fputc('\n', out);
        }
        std::fclose(out);
    }
    std::printf("{\"value\":%.17g,\"feasible\":%s}\n", value,
                plan.causal_feasible ? "true" : "false");
    return 0;
}

int cmd_density_check(const std::string& profile_path, const std::string& tag, double N, double a,
                      double b, double eta, double tol) {
    DensityProfile profile = [&] {
        if (!profile_path.empty()) {
            std::ifstream in(profile_path);
            if (!in) throw ConfigError("cannot open profile file: " + profile_path);
            json j;
            in >> j;
            return DensityProfile::from_json(j);
        }
        return model_density(tag, N, a, b);
    }();
    const auto res = check_cd_density(profile, eta, N, tol);
    json out;
    out["passed"] = res.passed;
    out["min_slack"] = res.min_slack;
    out["witness"] = {res.witness[0], res.witness[1], res.witness[2]};
    out["vanishing"] = res.vanishing;
    std::cout << out.dump(2) << "\n";
    return res.passed ? 0 : 1;
}

json strip_runtime(json j) {
    if (j.is_object()) {
        j.erase("runtime_ms");
        for (auto& [k, v] : j.items()) v = strip_runtime(v);
    } else if (j.is_array()) {
        for (auto& v : j) v = strip_runtime(v);
    }
    return j;
}

int cmd_report_diff(const std::string& path_a, const std::string& path_b) {
    std::ifstream ia(path_a), ib(path_b);
    if (!ia || !ib) {
        std::cerr << "cannot open report files\n";
        return 2;
    }
    json a, b;
    try {
        ia >> a;
        ib >> b;
    } catch (const std::exception& e) {
        std::cerr << "report parse error: " << e.what() << "\n";
        return 2;
    }
    if (strip_runtime(a) == strip_runtime(b)) {
        std::printf("identical\n");
        return 0;
    }
    const json diff = json::diff(strip_runtime(a), strip_runtime(b));
    std::cout << diff.dump(2) << "\n";
    return 1;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"generalized-cone curvature verification toolkit"};
    app.require_subcommand(1);

    std::string signature;
    bool as_json = false;
    auto* cat = app.add_subcommand("catalog", "print the 12 model-cone rows");
    cat->add_option("--signature", signature, "filter: riemann|lorentz");
    cat->add_flag("--json", as_json, "machine-readable dump");

    std::string config_path, out_dir;
    auto* ver = app.add_subcommand("verify", "run a verifier suite from a config");
    ver->add_option("config", config_path, "experiment config JSON")->required();
    ver->add_option("--out", out_dir, "output directory override");

    std::string geo_catalog, warper_path, geo_out, geo_json;
    double t0 = 0, r0 = 0, t1 = 1, r1 = 0;
    auto* geo = app.add_subcommand("geodesic", "solve a 2D sheet geodesic, write the node CSV");
    geo->add_option("--catalog", geo_catalog, "catalog warper tag");
    geo->add_option("--warper", warper_path, "warper JSON file");
    geo->add_option("--t0", t0)->required();
    geo->add_option("--r0", r0)->required();
    geo->add_option("--t1", t1)->required();
    geo->add_option("--r1", r1)->required();
    geo->add_option("--out", geo_out, "CSV output path")->required();
    geo->add_option("--json-out", geo_json, "full geodesic dump as JSON");

    std::string instance_path, plan_out;
    bool p_sweep = false;
    auto* tra = app.add_subcommand("transport", "solve a discrete transport instance");
    tra->add_option("instance", instance_path, "instance JSON")->required();
    tra->add_option("--out", plan_out, "plan CSV output path");
    tra->add_flag("--sweep", p_sweep, "sweep p over {0.25, 0.5, 0.75} (lorentz mode)");

    std::string profile_path, dtag = "const";
    double dN = 2.0, da = 0.0, db = 1.0, deta = 0.0, dtol = 1e-6;
    auto* den = app.add_subcommand("density-check", "check a CD-density candidate");
    den->add_option("--profile", profile_path, "density profile JSON file");
    den->add_option("--tag", dtag, "catalog density tag");
    den->add_option("--N", dN);
    den->add_option("--a", da);
    den->add_option("--b", db);
    den->add_option("--eta", deta);
    den->add_option("--tol", dtol);

    std::string diff_a, diff_b;
    auto* dif = app.add_subcommand("report-diff", "semantic comparison of two report files");
    dif->add_option("a", diff_a)->required();
    dif->add_option("b", diff_b)->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (cat->parsed()) return cmd_catalog(signature, as_json);
        if (ver->parsed()) return cmd_verify(config_path, out_dir);
        if (geo->parsed())
            return cmd_geodesic(geo_catalog, warper_path, t0, r0, t1, r1, geo_out, geo_json);
        if (tra->parsed()) return cmd_transport(instance_path, plan_out, p_sweep);
        if (den->parsed()) return cmd_density_check(profile_path, dtag, dN, da, db, deta, dtol);
        if (dif->parsed()) return cmd_report_diff(diff_a, diff_b);
    } catch (const conewarp::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const conewarp::NoCausalCurveError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const conewarp::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return 70;
    }
    return 0;
}
