#include <doctest.h>

#include <cmath>

#include "conewarp/coeffs.hpp"
#include "conewarp/errors.hpp"
#include "conewarp/verify.hpp"

using namespace conewarp;

namespace {

NeedleOptions quick_needle(int samples = 200) {
    NeedleOptions opts;
    opts.sample_count = samples;
    opts.seed = 2025;
    opts.threads = 2;
    return opts;
}

} // namespace

TEST_CASE("needle concavity: L4 with h = 1 passes") {
    const auto warper = catalog("L4").warper.truncated(0.2, 3.0);
    const auto h = model_density("const", 2.0, 0.0, 1.0);
    const auto report = verify_needle_concavity(warper, h, 1.0, 2.0, quick_needle());
    INFO(report.min_slack);
    CHECK(report.passed);
    CHECK(report.samples > 100);
}

TEST_CASE("needle concavity: flat product with h = 1 sits at slack 0") {
    const auto warper = catalog("L3").warper.truncated(-2.0, 2.0);
    const auto h = model_density("const", 2.0, 0.0, 1.0);
    const auto report = verify_needle_concavity(warper, h, 0.0, 2.0, quick_needle());
    CHECK(report.passed);
    CHECK(std::fabs(report.min_slack) < 1e-9);
}

TEST_CASE("needle concavity: equality pairs have zero slack, violations are caught") {
    // L1 (sin, kappa=-1) with its equality density sinh^{N-1} (eta = -1).
    const auto warper = catalog("L1").warper.truncated(0.05, kPi - 0.05);
    const auto h = model_density("sinh", 2.0, 0.2, 1.8);
    const auto report = verify_needle_concavity(warper, h, -1.0, 2.0, quick_needle());
    CHECK(report.passed);
    CHECK(report.min_slack >= -1e-6);
    CHECK(report.min_slack <= 1e-6);

    // Violation: budget eta broken on purpose (cosh warper passes f''-2f<=0
    // but its budget exceeds the eta the density was built for).
    const auto bad = WarpingFunction::closed_form("cosh", Signature::Lorentzian, -1.5, 1.5);
    CHECK(check_warper(bad, 2.0, 1e-9).passed); // cosh'' - 2cosh = -cosh <= 0
    const auto hbad = model_density("sinh", 2.0, 0.2, 1.8); // equality for eta=-1
    // True budget: sup(-sinh^2 + 2 cosh^2) = sup(cosh^2 + 1) > -1.
    const auto rep = verify_needle_concavity(bad, hbad, 2.0, 2.0, quick_needle(400));
    CHECK_FALSE(rep.passed);
    CHECK(rep.min_slack < -1e-4);
}

TEST_CASE("contraction on the Minkowski cone over sinh^{N-1}") {
    const double N = 2.0;
    const auto warper = catalog("L2").warper.truncated(0.0, 6.0);
    const auto h = model_density("sinh", N, 0.5, 1.5);
    ConeSpec cone(warper, Fiber::interval(0.5, 1.5, h), N);
    ContractionExperiment exp;
    exp.t_lo = 1.0;
    exp.t_hi = 1.5;
    exp.r_lo = 0.7;
    exp.r_hi = 1.3;
    exp.cells_t = exp.cells_r = 20;

    // Toward the apex the contraction is the exact radial homothety:
    // m(A_s) = s^{N+1} m(A), so the slack is pure discretization noise.
    exp.target = {0.0, 1.0};
    const auto apex = verify_contraction(cone, exp, 0.0, N + 1.0);
    INFO(apex.min_slack);
    CHECK(apex.passed);
    CHECK(std::fabs(apex.min_slack) < 5e-3);

    // An interior target satisfies the inequality with genuine margin.
    exp.target = {3.0, 1.0};
    const auto interior = verify_contraction(cone, exp, 0.0, N + 1.0);
    CHECK(interior.passed);
    CHECK(interior.min_slack > 0.0);
}

TEST_CASE("contraction slack shrinks under refinement") {
    const double N = 2.0;
    const auto warper = catalog("L2").warper.truncated(0.0, 6.0);
    const auto h = model_density("sinh", N, 0.5, 1.5);
    ConeSpec cone(warper, Fiber::interval(0.5, 1.5, h), N);
    ContractionExperiment exp;
    exp.t_lo = 1.0;
    exp.t_hi = 1.5;
    exp.r_lo = 0.7;
    exp.r_hi = 1.3;
    exp.target = {0.0, 1.0};
    exp.cells_t = exp.cells_r = 10;
    const double coarse = std::fabs(verify_contraction(cone, exp, 0.0, N + 1.0).min_slack);
    exp.cells_t = exp.cells_r = 20;
    const double fine = std::fabs(verify_contraction(cone, exp, 0.0, N + 1.0).min_slack);
    CHECK(fine <= std::max(0.5 * coarse, 1e-6));
}

TEST_CASE("contraction rejects unrelated targets and single cells reduce to positivity") {
    const double N = 2.0;
    const auto warper = catalog("L2").warper.truncated(0.0, 6.0);
    const auto h = model_density("sinh", N, 0.5, 1.5);
    ConeSpec cone(warper, Fiber::interval(0.5, 1.5, h), N);
    ContractionExperiment exp;
    exp.t_lo = 1.0;
    exp.t_hi = 1.5;
    exp.r_lo = 0.7;
    exp.r_hi = 1.3;
    exp.target = {1.2, 1.0}; // inside A: not chronological to every cell
    CHECK_THROWS_AS(verify_contraction(cone, exp, 0.0, N + 1.0), DomainError);

    exp.target = {3.0, 1.0};
    exp.cells_t = exp.cells_r = 1;
    const auto rep = verify_contraction(cone, exp, 0.0, N + 1.0);
    CHECK(rep.passed);
}

TEST_CASE("metric contraction on the Euclidean cone over sin^{N-1}") {
    const double N = 2.0;
    const auto warper = catalog("R2").warper.truncated(0.0, 6.0);
    const auto h = model_density("sin", N, 0.0, kPi);
    ConeSpec cone(warper, Fiber::interval(0.0, kPi, h), N);
    ContractionExperiment exp;
    exp.t_lo = 1.0;
    exp.t_hi = 1.5;
    exp.r_lo = 1.2;
    exp.r_hi = 1.9;
    exp.cells_t = exp.cells_r = 16;
    exp.target = {2.0, 1.55};
    const auto report = verify_contraction(cone, exp, 0.0, N + 1.0);
    INFO(report.min_slack);
    CHECK(report.passed);
}

TEST_CASE("pointwise TCD: flat product, uniform blocks") {
    const auto warper = catalog("L3").warper.truncated(-6.0, 6.0);
    ConeSpec cone(warper, Fiber::interval(-6.0, 6.0), 2.0);
    const double cw = 0.05, ch = 0.05;
    DiscreteMeasure mu0, mu1;
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) {
            mu0.support.push_back({i * cw, -1.0 + j * ch});
            mu1.support.push_back({4.0 + i * cw, 1.0 + j * ch});
        }
    mu0.weights.assign(16, 1.0 / 16);
    mu1.weights.assign(16, 1.0 / 16);
    const auto report = verify_pointwise_tcd(cone, 0.0, 3.0, 0.5, mu0, mu1, cw, ch);
    INFO(report.min_slack);
    CHECK(report.passed);

    // Dualizability error when supports cannot couple causally.
    DiscreteMeasure bad = DiscreteMeasure::dirac({5.0, 5.9});
    DiscreteMeasure bad2 = DiscreteMeasure::dirac({5.1, -5.9});
    CHECK_THROWS_AS(verify_pointwise_tcd(cone, 0.0, 3.0, 0.5, bad, bad2, cw, ch),
                    DualizabilityError);
}

TEST_CASE("pointwise TCD single-cell target is consistent with contraction") {
    const double N = 2.0;
    const auto warper = catalog("L2").warper.truncated(0.0, 6.0);
    const auto h = model_density("sinh", N, 0.5, 1.5);
    ConeSpec cone(warper, Fiber::interval(0.5, 1.5, h), N);
    const double cw = 0.05, ch = 0.05;
    DiscreteMeasure mu0;
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) {
            mu0.support.push_back({1.0 + i * cw, 0.9 + j * ch});
        }
    mu0.weights.assign(16, 1.0 / 16);
    DiscreteMeasure mu1 = DiscreteMeasure::dirac({3.0, 1.0});
    mu1.support[0] = {3.0, 1.0};
    const auto report = verify_pointwise_tcd(cone, 0.0, N + 1.0, 0.5, mu0, mu1, cw, ch);
    INFO(report.min_slack);
    CHECK(report.passed);
}

TEST_CASE("converse sweep: perturbed sin family produces zero alarms") {
    const double N = 2.0;
    std::vector<FamilyMember> family;
    const auto h1 = model_density("const", N, 0.2, 1.2);
    for (int k = 0; k < 8; ++k) {
        const double eps = -0.06 + 0.12 * k / 7.0;
        const int nodes = 4001;
        std::vector<double> vals(nodes);
        for (int i = 0; i < nodes; ++i) {
            const double t = kPi * i / (nodes - 1.0);
            const double bump = std::exp(-std::pow((t - kPi / 2) / 0.35, 2.0));
            vals[i] = std::sin(t) * (1.0 + eps * bump);
        }
        auto w = WarpingFunction::sampled(Signature::Lorentzian, 0.0, kPi, vals)
                     .truncated(0.15, kPi - 0.15);
        family.push_back({"eps=" + std::to_string(eps), w, h1, -1.0,
                          compute_eta(w, -1.0).eta});
    }
    NeedleOptions opts = quick_needle(300);
    const auto report = detect_converse_violation(family, N, opts);
    INFO(report.note);
    CHECK(report.passed);
    CHECK(report.min_slack == 0.0);
}

TEST_CASE("converse sweep: kinked density fails both density and needle checks") {
    const double N = 2.0;
    const auto warper = catalog("L1").warper.truncated(0.15, kPi - 0.15);
    // Convex kink in u = h^{1/(N-1)}: V shape.
    const int nodes = 8001;
    std::vector<double> vals(nodes);
    for (int i = 0; i < nodes; ++i) {
        const double r = 2.0 * i / (nodes - 1.0);
        vals[i] = 0.4 + std::fabs(r - 1.0);
    }
    const auto h = DensityProfile::sampled(0.0, 2.0, vals);
    const auto density_res = check_cd_density(h, -1.0, N, 1e-6);
    CHECK_FALSE(density_res.passed);
    const auto needle = verify_needle_concavity(warper, h, -1.0, N, quick_needle(400));
    CHECK_FALSE(needle.passed);
}

TEST_CASE("hawking bound on L1 with vertical saturation") {
    const auto warper = catalog("L1").warper;
    ConeSpec cone(warper, Fiber::interval(0.0, 1.0), 2.0);
    // H = N (log sin)'(pi/2) = 0; applicable case needs K > 0.
    HawkingOptions opts;
    opts.samples = 60;
    const auto report = check_hawking(cone, kPi / 2, 0.0, 1.0, 2.0, opts);
    INFO(report.note);
    CHECK(report.passed);
    CHECK_FALSE(report.not_applicable);
    // Saturation: the vertical geodesic attains sup I - r0 = pi/2 exactly.
    CHECK(report.min_slack >= -1e-9);
    CHECK(report.min_slack <= 1e-9);

    // Minkowski product with K = 0, H = 0: hypothesis case (2) needs H < 0.
    ConeSpec flat(catalog("L3").warper.truncated(-5.0, 5.0), Fiber::interval(-1.0, 1.0), 2.0);
    const auto na = check_hawking(flat, 0.0, 0.0, 0.0, 2.0, opts);
    CHECK(na.not_applicable);

    // Mean curvature hypothesis failure.
    CHECK_THROWS_AS(check_hawking(cone, kPi / 2, 5.0, 1.0, 2.0, opts), MeanCurvatureError);
}

TEST_CASE("mean curvature matches (log f)' for catalog warpers") {
    for (const char* tag : {"L1", "L4", "L5", "L6"}) {
        const auto entry = catalog(tag);
        const auto w = entry.warper;
        const double lo = std::max(w.tlo(), 0.3), hi = std::min(w.thi(), 2.5);
        for (int k = 0; k < 5; ++k) {
            const double t = lo + (hi - lo) * k / 4.0;
            const double expected = w.d1(t) / w.f(t);
            // The hawking hypothesis threshold is N*(log f)' at r0 = t.
            ConeSpec cone(w, Fiber::interval(0.0, 1.0), 2.0);
            // H slightly below the true mean curvature passes, above throws.
            HawkingOptions opts;
            opts.samples = 1;
            CHECK_NOTHROW(check_hawking(cone, t, 2.0 * expected - 1e-6, 1.0, 2.0, opts));
            CHECK_THROWS_AS(check_hawking(cone, t, 2.0 * expected + 1e-3, 1.0, 2.0, opts),
                            MeanCurvatureError);
        }
    }
}

TEST_CASE("volume singularity quadrature") {
    // L1, f = sin, N = 2, r0 = 0, unit fiber mass: pi/2.
    ConeSpec cone(catalog("L1").warper, Fiber::interval(0.0, 1.0), 2.0);
    const auto [value, report] = check_volume_singularity(cone, 0.0);
    CHECK(value == doctest::Approx(kPi / 2).epsilon(1e-8));
    CHECK(report.passed);

    // L3 product on R: divergent, volume complete.
    ConeSpec flat(catalog("L3").warper, Fiber::interval(0.0, 1.0), 2.0);
    const auto [v2, r2] = check_volume_singularity(flat, 0.0);
    CHECK(std::isinf(v2));
    CHECK(r2.note.find("complete") != std::string::npos);

    // L2 truncated at T: T^3/3.
    ConeSpec mink(catalog("L2").warper.truncated(0.0, 2.0), Fiber::interval(0.0, 1.0), 2.0);
    const auto [v3, r3] = check_volume_singularity(mink, 0.0);
    CHECK(v3 == doctest::Approx(8.0 / 3.0).epsilon(1e-8));
}

TEST_CASE("splitting dichotomy") {
    ConeSpec flat(catalog("L3").warper, Fiber::interval(0.0, 1.0), 2.0);
    const auto a = check_splitting_hypotheses(flat);
    CHECK(a.passed);
    CHECK(a.note.find("line survives") != std::string::npos);

    ConeSpec ads(catalog("L1").warper, Fiber::interval(0.0, 1.0), 2.0);
    const auto b = check_splitting_hypotheses(ads);
    CHECK(b.passed);
    CHECK(b.note.find("no line") != std::string::npos);

    ConeSpec par(catalog("L5").warper, Fiber::interval(0.0, 1.0), 2.0);
    const auto c = check_splitting_hypotheses(par);
    CHECK(c.not_applicable); // exp is convex: TCD(0,.) hypothesis impossible
}

TEST_CASE("cdcon classification") {
    const double N = 2.0;
    CdconOptions opts;
    opts.needle.sample_count = 150;
    opts.needle.seed = 11;
    opts.needle.threads = 2;
    opts.contraction_cells = 10;

    // K = 0: plain density check.
    const auto flat = classify_cdcon(model_density("const", N, 0.0, 1.0), 0.0, N, 0.5, opts);
    CHECK(flat.passed);

    // K = N-1 with the sin^{N-1} fiber: Euclidean-cone verifiers pass.
    const auto eu = classify_cdcon(model_density("sin", N, 0.0, kPi), N - 1.0, N, 0.5, opts);
    INFO(eu.note, " slack=", eu.min_slack);
    CHECK(eu.passed);

    // K = -(N-1) with the sinh^{N-1} fiber: Minkowski-cone verifiers pass.
    const auto mk = classify_cdcon(model_density("sinh", N, 0.3, 1.5), -(N - 1.0), N, 0.5, opts);
    INFO(mk.note, " slack=", mk.min_slack);
    CHECK(mk.passed);

    // Rescaling recursion: verdict agrees with the directly rescaled call.
    const auto direct = classify_cdcon(model_density("sinh", N, 0.3, 1.5), -2.0 * (N - 1.0), N,
                                       0.5, opts);
    const double lam = std::sqrt((N - 1.0) / (2.0 * (N - 1.0)));
    const auto rescaled =
        classify_cdcon(model_density("sinh", N, 0.3, 1.5).rescaled(lam), -(N - 1.0), N, 0.5,
                       opts);
    CHECK(direct.passed == rescaled.passed);
}

TEST_CASE("soundness sweep over the catalog equality pairs") {
    // Forward verifiers accept every catalog row with its equality density;
    // a perturbed warper is rejected by at least one verifier.
    const double N = 2.0;
    struct Pair {
        const char* row;
        const char* density;
        double a, b;
    };
    const Pair pairs[] = {{"L1", "sinh", 0.2, 1.8}, {"L2", "sinh", 0.2, 1.8},
                          {"L3", "id", 0.3, 1.8},   {"L4", "sinh", 0.2, 1.8},
                          {"L5", "const", 0.0, 1.0}, {"L6", "sin", 0.3, kPi - 0.3}};
    for (const auto& pr : pairs) {
        const auto entry = catalog(pr.row);
        auto w = entry.warper;
        const double lo = std::isinf(w.lo()) ? -2.5 : std::max(w.lo() + 0.1, 0.1);
        const double hi = std::isinf(w.hi()) ? 2.5 : w.hi() - 0.1;
        w = w.truncated(lo, hi);
        const auto h = model_density(pr.density, N, pr.a, pr.b);
        CHECK(check_warper(w, entry.budget.kappa, 1e-9).passed);
        CHECK(check_cd_density(h, entry.budget.eta, N, 1e-6).passed);
        const auto needle = verify_needle_concavity(w, h, entry.budget.kappa, N,
                                                    quick_needle(150));
        INFO(pr.row, " slack=", needle.min_slack);
        CHECK(needle.passed);
    }
}

TEST_CASE("report json and merge determinism") {
    VerificationReport a;
    a.condition = "warper";
    a.tolerance = 1e-6;
    a.min_slack = infinity();
    a.record({0, 0, 1, 1, 0.25, -0.5});
    a.record({0, 0, 1, 1, 0.5, 0.25});
    a.finalize();
    CHECK_FALSE(a.passed);
    const auto j = a.to_json(false);
    CHECK(j.at("min_slack") == -0.5);
    CHECK_FALSE(j.contains("runtime_ms"));
    CHECK(j.at("schema_version") == 1);

    VerificationReport b = a;
    const auto merged = merge_reports("suite", {a, b});
    CHECK(merged.min_slack == -0.5);
    CHECK(merged.samples == a.samples + b.samples);
}
