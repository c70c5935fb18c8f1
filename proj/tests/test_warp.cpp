#include <doctest.h>

#include <cmath>

#include "conewarp/coeffs.hpp"
#include "conewarp/errors.hpp"
#include "conewarp/warp.hpp"

using namespace conewarp;

TEST_CASE("catalog rows reproduce the table exactly") {
    struct Row {
        const char* tag;
        const char* f;
        double lo, hi;
        double eta, kappa;
        Signature sig;
    };
    const double inf = infinity();
    const Row rows[] = {
        {"L1", "sin", 0.0, kPi, -1.0, -1.0, Signature::Lorentzian},
        {"L2", "id", 0.0, inf, -1.0, 0.0, Signature::Lorentzian},
        {"L3", "const", -inf, inf, 0.0, 0.0, Signature::Lorentzian},
        {"L4", "sinh", 0.0, inf, -1.0, 1.0, Signature::Lorentzian},
        {"L5", "exp", -inf, inf, 0.0, 1.0, Signature::Lorentzian},
        {"L6", "cosh", -inf, inf, 1.0, 1.0, Signature::Lorentzian},
        {"R1", "sin", 0.0, kPi, 1.0, 1.0, Signature::Riemannian},
        {"R2", "id", 0.0, inf, 1.0, 0.0, Signature::Riemannian},
        {"R3", "const", -inf, inf, 0.0, 0.0, Signature::Riemannian},
        {"R4", "sinh", 0.0, inf, 1.0, -1.0, Signature::Riemannian},
        {"R5", "exp", -inf, inf, 0.0, -1.0, Signature::Riemannian},
        {"R6", "cosh", -inf, inf, -1.0, -1.0, Signature::Riemannian},
    };
    for (const auto& row : rows) {
        const auto entry = catalog(row.tag);
        CHECK(entry.warper.tag() == row.f);
        CHECK(entry.warper.lo() == row.lo);
        CHECK(entry.warper.hi() == row.hi);
        CHECK(entry.budget.eta == row.eta);
        CHECK(entry.budget.kappa == row.kappa);
        CHECK(entry.warper.signature() == row.sig);
        // Table closure: the warper inequality is tight and eta is exact.
        const auto chk = check_warper(entry.warper, entry.budget.kappa, 1e-9);
        CHECK(chk.passed);
        CHECK(std::fabs(chk.min_slack) < 1e-9);
        const auto budget = compute_eta(entry.warper, entry.budget.kappa);
        CHECK(budget.eta == row.eta);
        CHECK_FALSE(budget.eta_is_sup);
    }
    CHECK_THROWS_AS(catalog("L7"), UnknownModelError);
}

TEST_CASE("compute_eta specific values") {
    CHECK(compute_eta(catalog("L4").warper, 1.0).eta == -1.0); // sinh, Lorentzian
    CHECK(compute_eta(catalog("R1").warper, 1.0).eta == 1.0);  // sin, Riemannian
    CHECK(compute_eta(catalog("L3").warper, 0.0).eta == 0.0);
    CHECK(compute_eta(catalog("R3").warper, 0.0).eta == 0.0);
}

TEST_CASE("compute_eta numeric sup path and restriction invariance") {
    // Off-table kappa forces the numeric sup.
    const auto w = catalog("L4").warper.truncated(0.0, 5.0);
    const auto full = compute_eta(w, 0.5);
    CHECK(full.eta_is_sup);
    // -(cosh^2) + 0.5 sinh^2 is maximal at t = 0 (value -1).
    CHECK(full.eta == doctest::Approx(-1.0).epsilon(1e-6));
    const auto sub = compute_eta(w.truncated(0.0, 1.0), 0.5);
    CHECK(sub.eta == doctest::Approx(full.eta).epsilon(1e-6));
}

TEST_CASE("check_warper pass and fail cases") {
    const auto sinw = WarpingFunction::closed_form("sin", Signature::Riemannian, 0.0, kPi);
    CHECK(check_warper(sinw, 1.0, 1e-9).passed); // sin'' + sin = 0

    const auto sinhw =
        WarpingFunction::closed_form("sinh", Signature::Lorentzian, 0.0, infinity())
            .truncated(0.0, 10.0);
    CHECK(check_warper(sinhw, 1.0, 1e-9).passed); // sinh'' - sinh = 0

    const auto sinl = WarpingFunction::closed_form("sin", Signature::Lorentzian, 0.0, kPi);
    CHECK(check_warper(sinl, 1.0, 1e-9).passed); // sin'' - sin = -2 sin <= 0

    const auto coshr = WarpingFunction::closed_form("cosh", Signature::Riemannian, -2.0, 2.0);
    const auto res = check_warper(coshr, 1.0, 1e-9);
    CHECK_FALSE(res.passed); // cosh'' + cosh = 2 cosh > 0
    CHECK(res.witness[1] == doctest::Approx(2.0 * std::cosh(res.witness[0])).epsilon(1e-12));
    CHECK(res.min_slack == doctest::Approx(-2.0 * std::cosh(2.0)).epsilon(1e-9));
}

TEST_CASE("signature duality: Lorentz(kappa) equals Riemann(-kappa)") {
    for (const char* tag : {"sin", "sinh", "exp", "cosh", "id", "const"}) {
        const auto lw = WarpingFunction::closed_form(tag, Signature::Lorentzian, 0.1, 2.0);
        const auto rw = WarpingFunction::closed_form(tag, Signature::Riemannian, 0.1, 2.0);
        for (double kappa : {-1.0, 0.3, 1.0}) {
            const auto a = check_warper(lw, kappa, 1e-9);
            const auto b = check_warper(rw, -kappa, 1e-9);
            CHECK(a.min_slack == doctest::Approx(b.min_slack).epsilon(1e-14));
            CHECK(a.passed == b.passed);
        }
    }
}

TEST_CASE("apex divergence probe") {
    CHECK(catalog("L1").warper.apex_integral_diverges());
    CHECK(catalog("L2").warper.apex_integral_diverges());
    // f ~ sqrt(t) vanishes but 1/f is integrable: the probe must reject it.
    const int n = 4001;
    std::vector<double> vals(n);
    for (int i = 0; i < n; ++i) vals[i] = std::sqrt(static_cast<double>(i) / (n - 1));
    const auto w = WarpingFunction::sampled(Signature::Lorentzian, 0.0, 1.0, vals);
    CHECK_FALSE(w.apex_integral_diverges());
}

TEST_CASE("sheet Ricci values") {
    const auto h1 = model_density("const", 2.0, 0.0, 1.0);
    const auto sinhw = catalog("L4").warper;
    // (f = sinh, h = 1, N = 2, direction d/dt): -N f''/f = -2.
    const auto r1 = sheet_ricci_N(sinhw, h1, 2.0, {1.0, 0.5}, {1.0, 0.0});
    CHECK(r1.value_ricci == doctest::Approx(-2.0).epsilon(1e-8));
    CHECK(r1.value_metric == doctest::Approx(-1.0).epsilon(1e-12));

    // Flat product: Ricci vanishes in every direction.
    const auto flat = catalog("L3").warper;
    for (auto dir : {std::array<double, 2>{1.0, 0.0}, {0.3, 0.7}, {1.0, 1.0}}) {
        const auto r = sheet_ricci_N(flat, h1, 2.0, {0.2, 0.5}, dir);
        CHECK(r.value_ricci == doctest::Approx(0.0).epsilon(1e-7));
    }

    // Mixed direction carries no off-diagonal contribution: the form is the
    // sum of the two pure-direction values.
    const auto rt = sheet_ricci_N(sinhw, h1, 2.0, {1.0, 0.5}, {1.0, 0.0});
    const auto rr = sheet_ricci_N(sinhw, h1, 2.0, {1.0, 0.5}, {0.0, 1.0});
    const auto rm = sheet_ricci_N(sinhw, h1, 2.0, {1.0, 0.5}, {1.0, 1.0});
    CHECK(rm.value_ricci == doctest::Approx(rt.value_ricci + rr.value_ricci).epsilon(1e-8));

    CHECK_THROWS_AS(sheet_ricci_N(catalog("L1").warper, h1, 2.0, {0.0, 0.5}, {1.0, 0.0}),
                    SingularPointError);
}

TEST_CASE("weighted Ricci comparison on timelike directions") {
    // L4 with its equality density: Ric >= kappa N g on timelike directions.
    const double N = 2.0;
    const auto sinhw = catalog("L4").warper;
    const auto h = model_density("sinh", N, 0.2, 1.5);
    for (int i = 1; i <= 5; ++i) {
        const double t = 0.4 + 0.3 * i;
        const double fv = sinhw.f(t);
        for (int k = 0; k < 16; ++k) {
            // Directions inside the light cone, margin away from the boundary.
            const double bmax = (1.0 - 1e-3) / fv;
            const double b = bmax * (static_cast<double>(k) / 16.0);
            const auto r = sheet_ricci_N(sinhw, h, N, {t, 0.8}, {1.0, b});
            CHECK(r.value_metric < 0.0);
            CHECK(r.value_ricci >= 1.0 * N * r.value_metric - 1e-6);
        }
    }
}

TEST_CASE("G-concavity: flat case, equality case, violation cases") {
    const auto h1 = model_density("const", 2.0, 0.0, 1.0);
    // Flat product: w = const, every Hessian entry vanishes.
    const auto constr = WarpingFunction::closed_form("const", Signature::Riemannian, -2.0, 2.0);
    const auto flat = check_G_concavity(constr, h1, 0.0, 2.0);
    CHECK(flat.passed);
    CHECK(std::fabs(flat.min_slack) < 1e-6);

    // Equality: (sin, sin^{N-1}) at kappa = 1 sits exactly on the boundary.
    const auto sinr = catalog("R1").warper.truncated(0.05, kPi - 0.05);
    const auto hsin = model_density("sin", 2.0, 0.0, kPi);
    const auto eq = check_G_concavity(sinr, hsin, 1.0, 2.0);
    CHECK(eq.passed);
    CHECK(std::fabs(eq.min_slack) < 1e-6);

    // The Euclidean cone needs the matching fiber density: with h = 1 the
    // covariant Hessian of w = t is positive in the fiber direction (the
    // bare second derivatives vanish, the Christoffel term does not).
    const auto idr = WarpingFunction::closed_form("id", Signature::Riemannian, 0.0, infinity())
                         .truncated(0.1, 3.0);
    CHECK_FALSE(check_G_concavity(idr, h1, 0.0, 2.0).passed);
    // With the eta = 1 equality density sin^{N-1} it passes.
    const auto eu = check_G_concavity(idr, model_density("sin", 2.0, 0.0, kPi), 0.0, 2.0);
    CHECK(eu.passed);

    const auto coshr = WarpingFunction::closed_form("cosh", Signature::Riemannian, -2.0, 2.0);
    CHECK_FALSE(check_G_concavity(coshr, h1, 1.0, 2.0).passed);
}

TEST_CASE("warper json round trip") {
    const auto w = catalog("L4").warper.truncated(0.0, 7.5);
    const auto back = WarpingFunction::from_json(w.to_json());
    CHECK(back.tag() == "sinh");
    CHECK(back.signature() == Signature::Lorentzian);
    CHECK(back.thi() == 7.5);
    CHECK(back.f(1.3) == doctest::Approx(w.f(1.3)).epsilon(1e-15));
}
