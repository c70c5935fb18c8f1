#include "conewarp/experiment.hpp"

#include <chrono>
#include <filesystem>
#include <fstream>
#include <set>

#include "conewarp/coeffs.hpp"
#include "conewarp/errors.hpp"

namespace conewarp {

namespace {

using nlohmann::json;

void require_keys(const json& j, const std::string& where, const std::set<std::string>& known) {
    if (!j.is_object()) throw ConfigError(where + " must be an object");
    for (auto it = j.begin(); it != j.end(); ++it)
        if (!known.count(it.key())) throw ConfigError("unknown key '" + it.key() + "' in " + where);
}

const std::set<std::string> kTopKeys{"schema_version", "seed",      "resolution", "threads",
                                     "output_dir",     "cone",      "density",    "tolerances",
                                     "verifiers",      "params"};
const std::set<std::string> kConeKeys{"catalog", "warper", "fiber", "N", "truncation"};
const std::set<std::string> kParamKeys{"kappa",        "eta",        "K",       "Ncoeff",
                                       "p",            "needle_samples", "triple_nodes",
                                       "contraction",  "hawking",    "volume_r0", "cdcon",
                                       "tcd"};
const std::set<std::string> kContractionKeys{"t_lo", "t_hi", "r_lo",   "r_hi",
                                             "cells", "target_t", "target_r"};
const std::set<std::string> kHawkingKeys{"r0", "H", "K", "N", "D"};
const std::set<std::string> kCdconKeys{"K", "N", "p"};
const std::set<std::string> kTcdKeys{"K", "Ncoeff", "p", "block0", "block1", "cells"};
const std::set<std::string> kBlockKeys{"t_lo", "t_hi", "r_lo", "r_hi"};
const std::set<std::string> kVerifierNames{"warper",  "density",  "needle",   "contraction",
                                           "volume",  "hawking",  "splitting", "cdcon",
                                           "tcd"};

} // namespace

ExperimentConfig ExperimentConfig::parse(const nlohmann::json& j) {
    require_keys(j, "config", kTopKeys);
    if (!j.contains("schema_version") || j.at("schema_version").get<int>() != 1)
        throw ConfigError("config requires schema_version 1");
    if (!j.contains("cone")) throw ConfigError("config requires a cone block");
    require_keys(j.at("cone"), "cone", kConeKeys);
    if (!j.at("cone").contains("catalog") && !j.at("cone").contains("warper"))
        throw ConfigError("cone requires either a catalog tag or a warper");
    if (!j.contains("verifiers") || !j.at("verifiers").is_array() || j.at("verifiers").empty())
        throw ConfigError("config requires a non-empty verifier list");
    for (const auto& v : j.at("verifiers"))
        if (!kVerifierNames.count(v.get<std::string>()))
            throw ConfigError("unknown verifier: " + v.get<std::string>());
    if (j.contains("params")) {
        require_keys(j.at("params"), "params", kParamKeys);
        if (j.at("params").contains("contraction"))
            require_keys(j.at("params").at("contraction"), "params.contraction",
                         kContractionKeys);
        if (j.at("params").contains("hawking"))
            require_keys(j.at("params").at("hawking"), "params.hawking", kHawkingKeys);
        if (j.at("params").contains("cdcon"))
            require_keys(j.at("params").at("cdcon"), "params.cdcon", kCdconKeys);
        if (j.at("params").contains("tcd")) {
            require_keys(j.at("params").at("tcd"), "params.tcd", kTcdKeys);
            require_keys(j.at("params").at("tcd").at("block0"), "params.tcd.block0", kBlockKeys);
            require_keys(j.at("params").at("tcd").at("block1"), "params.tcd.block1", kBlockKeys);
        }
    }
    ExperimentConfig cfg;
    cfg.raw = j;
    return cfg;
}

ExperimentConfig ExperimentConfig::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    json j;
    try {
        in >> j;
    } catch (const std::exception& e) {
        throw ConfigError(std::string("config parse error: ") + e.what());
    }
    return parse(j);
}

std::uint64_t ExperimentConfig::seed() const { return raw.value("seed", 12345u); }
int ExperimentConfig::resolution() const { return raw.value("resolution", 400); }
int ExperimentConfig::threads() const { return raw.value("threads", 0); }

std::vector<std::string> ExperimentConfig::verifiers() const {
    std::vector<std::string> out;
    for (const auto& v : raw.at("verifiers")) out.push_back(v.get<std::string>());
    return out;
}

double ExperimentConfig::tolerance(const std::string& verifier, double fallback) const {
    if (raw.contains("tolerances") && raw.at("tolerances").contains(verifier))
        return raw.at("tolerances").at(verifier).get<double>();
    return fallback;
}

std::string config_hash(const nlohmann::json& j) {
    const std::string dump = j.dump();
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : dump) {
        h ^= c;
        h *= 1099511628211ull;
    }
    char buf[32];
    std::snprintf(buf, sizeof(buf), "fnv1a64:%016llx", static_cast<unsigned long long>(h));
    return buf;
}

nlohmann::json catalog_json() {
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& entry : full_catalog()) {
        nlohmann::json r;
        r["tag"] = entry.tag;
        r["name"] = entry.name;
        const auto& w = entry.warper;
        r["interval"] = {std::isinf(w.lo()) ? nlohmann::json(nullptr) : nlohmann::json(w.lo()),
                         std::isinf(w.hi()) ? nlohmann::json(nullptr) : nlohmann::json(w.hi())};
        r["f"] = w.tag();
        r["signature"] = to_string(w.signature());
        r["eta"] = entry.budget.eta;
        r["kappa"] = entry.budget.kappa;
        rows.push_back(r);
    }
    return rows;
}

std::vector<CatalogEntry> parse_catalog_json(const nlohmann::json& j) {
    std::vector<CatalogEntry> out;
    for (const auto& r : j) {
        require_keys(r, "catalog row",
                     {"tag", "name", "interval", "f", "signature", "eta", "kappa"});
        CatalogEntry ref = catalog(r.at("tag").get<std::string>());
        if (ref.warper.tag() != r.at("f").get<std::string>() ||
            ref.budget.eta != r.at("eta").get<double>() ||
            ref.budget.kappa != r.at("kappa").get<double>() ||
            to_string(ref.warper.signature()) != r.at("signature").get<std::string>())
            throw ConfigError("catalog row does not match the built-in table: " +
                              r.at("tag").get<std::string>());
        out.push_back(ref);
    }
    return out;
}

namespace {

struct BuiltExperiment {
    WarpingFunction warper;
    double kappa;
    double eta;
    std::optional<DensityProfile> density;
    std::optional<ConeSpec> cone;
    double N;
};

BuiltExperiment build(const ExperimentConfig& cfg) {
    const json& j = cfg.raw;
    const json& cj = j.at("cone");
    const double N = cj.value("N", 2.0);

    std::optional<WarpingFunction> warper;
    double kappa = 0.0, eta = 0.0;
    if (cj.contains("catalog")) {
        const auto entry = catalog(cj.at("catalog").get<std::string>());
        warper = entry.warper;
        kappa = entry.budget.kappa;
        eta = entry.budget.eta;
    } else {
        warper = WarpingFunction::from_json(cj.at("warper"));
    }
    if (cj.contains("truncation")) {
        const auto tr = cj.at("truncation");
        warper = warper->truncated(tr.at(0).get<double>(), tr.at(1).get<double>());
    }
    if (j.contains("params")) {
        const json& pj = j.at("params");
        if (pj.contains("kappa")) kappa = pj.at("kappa").get<double>();
        if (pj.contains("eta"))
            eta = pj.at("eta").get<double>();
        else if (!cj.contains("catalog"))
            eta = compute_eta(*warper, kappa).eta;
    } else if (!cj.contains("catalog")) {
        eta = compute_eta(*warper, kappa).eta;
    }

    std::optional<DensityProfile> density;
    if (j.contains("density")) density = DensityProfile::from_json(j.at("density"));

    std::optional<ConeSpec> cone;
    if (cj.contains("fiber")) {
        cone.emplace(*warper, Fiber::from_json(cj.at("fiber")), N);
    } else if (density) {
        cone.emplace(*warper, Fiber::interval(density->lo(), density->hi(), *density), N);
    }

    return {*warper, kappa, eta, density, cone, N};
}

} // namespace

RunOutcome run_experiment(const ExperimentConfig& cfg, const std::string& output_dir) {
    const json& j = cfg.raw;
    const auto built = build(cfg);
    const json params = j.value("params", json::object());

    RunOutcome outcome;
    outcome.all_passed = true;
    json wall = json::object();

    for (const std::string& name : cfg.verifiers()) {
        const auto t0 = std::chrono::steady_clock::now();
        VerificationReport report;
        if (name == "warper") {
            const auto res = check_warper(built.warper, built.kappa, cfg.tolerance(name, 1e-9));
            report.condition = "warper";
            report.K = built.kappa;
            report.N = built.N;
            report.signature = built.warper.signature();
            report.tolerance = cfg.tolerance(name, 1e-9);
            report.min_slack = res.min_slack;
            report.samples = 2001;
            report.anchor = "f'' +- kappa f <= 0";
            report.record({res.witness[0], res.witness[1], 0, 0, 0, res.min_slack});
            report.finalize();
        } else if (name == "density") {
            if (!built.density) throw ConfigError("density verifier requires a density block");
            const auto res =
                check_cd_density(*built.density, built.eta, built.N, cfg.tolerance(name, 1e-6));
            report.condition = "density-concavity";
            report.K = built.eta * (built.N - 1.0);
            report.N = built.N;
            report.tolerance = cfg.tolerance(name, 1e-6);
            report.min_slack = res.min_slack;
            report.samples = 1;
            report.anchor = "concavity of h^{1/(N-1)} and its distributional form";
            report.record({res.witness[0], res.witness[1], res.witness[2], 0, 0, res.min_slack});
            report.finalize();
        } else if (name == "needle") {
            if (!built.density) throw ConfigError("needle verifier requires a density block");
            NeedleOptions nopts;
            nopts.sample_count = params.value("needle_samples", 1000);
            nopts.triple_nodes = params.value("triple_nodes", 33);
            nopts.seed = cfg.seed();
            nopts.tol = cfg.tolerance(name, 1e-6);
            nopts.threads = cfg.threads();
            report = verify_needle_concavity(built.warper, *built.density, built.kappa, built.N,
                                             nopts);
        } else if (name == "contraction") {
            if (!built.cone) throw ConfigError("contraction verifier requires a cone fiber");
            if (!params.contains("contraction"))
                throw ConfigError("contraction verifier requires params.contraction");
            const json& cj = params.at("contraction");
            ContractionExperiment exp;
            exp.t_lo = cj.at("t_lo").get<double>();
            exp.t_hi = cj.at("t_hi").get<double>();
            exp.r_lo = cj.at("r_lo").get<double>();
            exp.r_hi = cj.at("r_hi").get<double>();
            exp.cells_t = exp.cells_r = cj.value("cells", cfg.resolution() / 25);
            exp.target = {cj.at("target_t").get<double>(), cj.at("target_r").get<double>()};
            ContractionOptions copts;
            copts.tol_rel = cfg.tolerance(name, 0.02);
            report = verify_contraction(*built.cone, exp, params.value("K", 0.0),
                                        params.value("Ncoeff", built.N + 1.0), copts);
        } else if (name == "volume") {
            if (!built.cone) throw ConfigError("volume verifier requires a cone fiber");
            auto [value, rep] = check_volume_singularity(*built.cone, params.value("volume_r0", 0.0));
            report = rep;
            report.note += ", value " + std::to_string(value);
        } else if (name == "hawking") {
            if (!built.cone) throw ConfigError("hawking verifier requires a cone fiber");
            if (!params.contains("hawking"))
                throw ConfigError("hawking verifier requires params.hawking");
            const json& hj = params.at("hawking");
            HawkingOptions hopts;
            hopts.seed = cfg.seed();
            if (hj.contains("D")) hopts.comparison_bound = hj.at("D").get<double>();
            report = check_hawking(*built.cone, hj.at("r0").get<double>(),
                                   hj.at("H").get<double>(), hj.at("K").get<double>(),
                                   hj.at("N").get<double>(), hopts);
        } else if (name == "splitting") {
            if (!built.cone) throw ConfigError("splitting verifier requires a cone fiber");
            report = check_splitting_hypotheses(*built.cone);
        } else if (name == "cdcon") {
            if (!built.density) throw ConfigError("cdcon verifier requires a density block");
            if (!params.contains("cdcon")) throw ConfigError("cdcon requires params.cdcon");
            const json& dj = params.at("cdcon");
            report = classify_cdcon(*built.density, dj.at("K").get<double>(),
                                    dj.at("N").get<double>(), dj.value("p", 0.5));
        } else if (name == "tcd") {
            if (!built.cone) throw ConfigError("tcd verifier requires a cone fiber");
            if (!params.contains("tcd")) throw ConfigError("tcd verifier requires params.tcd");
            const json& tj = params.at("tcd");
            const int cells = tj.value("cells", 4);
            const auto block_measure = [&](const json& bj, double& cw, double& ch) {
                const double t_lo = bj.at("t_lo").get<double>();
                const double t_hi = bj.at("t_hi").get<double>();
                const double r_lo = bj.at("r_lo").get<double>();
                const double r_hi = bj.at("r_hi").get<double>();
                cw = (t_hi - t_lo) / cells;
                ch = (r_hi - r_lo) / cells;
                DiscreteMeasure m;
                for (int i = 0; i < cells; ++i)
                    for (int k = 0; k < cells; ++k)
                        m.support.push_back({t_lo + (i + 0.5) * cw, r_lo + (k + 0.5) * ch});
                m.weights.assign(m.support.size(), 1.0 / static_cast<double>(m.support.size()));
                return m;
            };
            double cw0, ch0, cw1, ch1;
            const auto mu0 = block_measure(tj.at("block0"), cw0, ch0);
            const auto mu1 = block_measure(tj.at("block1"), cw1, ch1);
            if (std::fabs(cw0 - cw1) > 1e-12 || std::fabs(ch0 - ch1) > 1e-12)
                throw ConfigError("tcd blocks must share the cell geometry");
            PointwiseTcdOptions topts;
            topts.tol_rel = cfg.tolerance(name, 0.02);
            report = verify_pointwise_tcd(*built.cone, tj.value("K", 0.0),
                                          tj.value("Ncoeff", built.N + 1.0),
                                          tj.value("p", 0.5), mu0, mu1, cw0, ch0, topts);
        }
        const auto t1 = std::chrono::steady_clock::now();
        report.runtime_ms =
            std::chrono::duration_cast<std::chrono::milliseconds>(t1 - t0).count();
        wall[name] = report.runtime_ms;
        outcome.all_passed = outcome.all_passed && report.passed;
        outcome.reports[name] = report;
    }

    json manifest;
    manifest["config_hash"] = config_hash(j);
    manifest["tool_version"] = kToolVersion;
    manifest["wall_clock_ms"] = wall;
    json paths = json::object();
    if (!output_dir.empty()) {
        std::filesystem::create_directories(output_dir);
        for (const auto& [name, report] : outcome.reports) {
            const std::string path = output_dir + "/" + name + ".json";
            std::ofstream out(path);
            out << report.to_json(false).dump(2) << "\n";
            paths[name] = path;
        }
        manifest["reports"] = paths;
        const auto now = std::chrono::system_clock::now().time_since_epoch();
        manifest["started_at_unix_ms"] =
            std::chrono::duration_cast<std::chrono::milliseconds>(now).count();
        std::ofstream mout(output_dir + "/manifest.json");
        mout << manifest.dump(2) << "\n";
    }
    outcome.manifest = manifest;
    return outcome;
}

} // namespace conewarp
