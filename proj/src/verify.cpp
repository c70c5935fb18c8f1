#include "conewarp/verify.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <functional>
#include <random>
#include <thread>

#include "conewarp/coeffs.hpp"
#include "conewarp/errors.hpp"

namespace conewarp {

namespace {

double json_safe(double x) {
    if (std::isnan(x)) return 0.0;
    if (std::isinf(x)) return x > 0 ? 1e308 : -1e308;
    return x;
}

} // namespace

void VerificationReport::record(const Witness& w) {
    min_slack = std::min(min_slack, w.slack);
    witnesses.push_back(w);
    std::sort(witnesses.begin(), witnesses.end(),
              [](const Witness& a, const Witness& b) { return a.slack < b.slack; });
    if (witnesses.size() > 10) witnesses.resize(10);
}

void VerificationReport::finalize() { passed = min_slack >= -tolerance; }

nlohmann::json VerificationReport::to_json(bool include_runtime) const {
    nlohmann::json j;
    j["schema_version"] = 1;
    j["condition"] = condition;
    j["parameters"] = {{"K", json_safe(K)},
                       {"N", json_safe(N)},
                       {"p", json_safe(p)},
                       {"signature", to_string(signature)}};
    j["samples"] = samples;
    j["min_slack"] = json_safe(min_slack);
    j["tolerance"] = json_safe(tolerance);
    j["passed"] = passed;
    if (not_applicable) j["not_applicable"] = true;
    if (!note.empty()) j["note"] = note;
    if (!anchor.empty()) j["anchor"] = anchor;
    nlohmann::json ws = nlohmann::json::array();
    for (const auto& w : witnesses)
        ws.push_back({{"t0", json_safe(w.t0)},
                      {"r0", json_safe(w.r0)},
                      {"t1", json_safe(w.t1)},
                      {"r1", json_safe(w.r1)},
                      {"s", json_safe(w.s)},
                      {"slack", json_safe(w.slack)}});
    j["witnesses"] = ws;
    if (include_runtime) j["runtime_ms"] = runtime_ms;
    return j;
}

VerificationReport merge_reports(const std::string& condition,
                                 const std::vector<VerificationReport>& parts) {
    VerificationReport out;
    out.condition = condition;
    out.min_slack = infinity();
    out.passed = true;
    for (const auto& r : parts) {
        out.samples += r.samples;
        out.min_slack = std::min(out.min_slack, r.min_slack);
        out.tolerance = std::max(out.tolerance, r.tolerance);
        out.passed = out.passed && r.passed;
        for (const auto& w : r.witnesses) out.record(w);
        if (!r.note.empty()) out.note += (out.note.empty() ? "" : "; ") + r.condition + ": " + r.note;
    }
    return out;
}

int verify_worker_count(int requested) {
    if (requested > 0) return requested;
    if (const char* env = std::getenv("CONEWARP_THREADS")) {
        const int v = std::atoi(env);
        if (v > 0) return v;
    }
    const unsigned hc = std::thread::hardware_concurrency();
    return static_cast<int>(std::clamp(hc, 1u, 8u));
}

// ---------------------------------------------------------------------------
// Needle concavity
// ---------------------------------------------------------------------------

namespace {

struct NeedleSample {
    double t0, t1, frac, r0u;
};

// Exact geodesic nodes for the flat charts: id (polar / Milne wedge) and
// const (plain product); everything else goes through the solvers.
std::optional<GeodesicPath> chart_geodesic(const WarpingFunction& f, double t0, double r0,
                                           double t1, double r1, int nodes) {
    GeodesicPath path;
    const bool lorentz = f.signature() == Signature::Lorentzian;
    if (f.tag() == "const") {
        const double dt = t1 - t0, dr = r1 - r0;
        const double q = lorentz ? dt * dt - dr * dr : dt * dt + dr * dr;
        if (lorentz && q < 0.0) return std::nullopt;
        path.length = std::sqrt(std::max(q, 0.0));
        path.kind = lorentz ? GeodesicPath::Kind::TimelikeMaximizer
                            : GeodesicPath::Kind::MetricMinimizer;
        path.nodes.resize(nodes);
        for (int k = 0; k < nodes; ++k) {
            const double s = static_cast<double>(k) / (nodes - 1);
            path.nodes[k] = {s, t0 + s * dt, r0 + s * dr,
                             path.length > 0 ? std::fabs(dr) / 1.0 : 0.0, path.length};
        }
        path.shooting_constant = std::fabs(dr);
        return path;
    }
    if (f.tag() != "id") return std::nullopt;
    if (std::fabs(r1 - r0) >= 0.95 * kPi) return std::nullopt;
    double ax, ay, bx, by;
    if (lorentz) {
        ax = t0 * std::cosh(r0);
        ay = t0 * std::sinh(r0);
        bx = t1 * std::cosh(r1);
        by = t1 * std::sinh(r1);
        const double dT = bx - ax, dX = by - ay;
        if (dT * dT - dX * dX <= 0.0 || dT <= 0.0) return std::nullopt;
    } else {
        ax = t0 * std::cos(r0);
        ay = t0 * std::sin(r0);
        bx = t1 * std::cos(r1);
        by = t1 * std::sin(r1);
    }
    path.kind = lorentz ? GeodesicPath::Kind::TimelikeMaximizer
                        : GeodesicPath::Kind::MetricMinimizer;
    const double dx = bx - ax, dy = by - ay;
    path.length = std::sqrt(std::fabs(lorentz ? dx * dx - dy * dy : dx * dx + dy * dy));
    path.nodes.resize(nodes);
    double prev_r = r0;
    for (int k = 0; k < nodes; ++k) {
        const double s = static_cast<double>(k) / (nodes - 1);
        const double qx = ax + s * dx, qy = ay + s * dy;
        double t, r;
        if (lorentz) {
            t = std::sqrt(std::max(qx * qx - qy * qy, 0.0));
            r = 0.5 * std::log((qx + qy) / std::max(qx - qy, 1e-300));
        } else {
            t = std::hypot(qx, qy);
            r = std::atan2(qy, qx);
            while (r - prev_r > kPi) r -= 2.0 * kPi;
            while (r - prev_r < -kPi) r += 2.0 * kPi;
        }
        prev_r = r;
        path.nodes[k] = {s, t, r, 0.0, path.length};
    }
    path.nodes.front().t = t0;
    path.nodes.front().r = r0;
    path.nodes.back().t = t1;
    path.nodes.back().r = r1;
    return path;
}

GeodesicPath needle_geodesic(const WarpingFunction& f, double t0, double r0, double t1, double r1,
                             const GeodesicOptions& geo) {
    if (auto p = chart_geodesic(f, t0, r0, t1, r1, 257)) return *p;
    return geodesic_2d(f, {t0, r0}, {t1, r1}, geo);
}

} // namespace

VerificationReport verify_needle_concavity(const WarpingFunction& f, const DensityProfile& h,
                                           double kappa, double N, const NeedleOptions& opts) {
    VerificationReport report;
    report.condition = "needle-concavity";
    report.K = kappa;
    report.N = N;
    report.signature = f.signature();
    report.tolerance = opts.tol;
    report.min_slack = infinity();
    report.anchor = "sigma-concavity of (f^{N-1} h)^{1/(N-1)} along geodesics";

    const bool lorentz = f.signature() == Signature::Lorentzian;
    const double kappa_eff = lorentz ? -kappa : kappa;

    const double tlo = f.tlo(), thi = f.thi();
    const double a = h.lo(), b = h.hi();
    const double rcollar = 0.02 * (b - a);
    const double tcollar = 0.02 * (thi - tlo);

    // Sample parameters are drawn up front so the result is independent of
    // the worker count.
    std::mt19937_64 rng(opts.seed);
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    std::vector<NeedleSample> samples(opts.sample_count);
    for (int k = 0; k < opts.sample_count; ++k) {
        const double u1 = uni(rng), u2 = uni(rng), u3 = uni(rng), u4 = uni(rng);
        const double span = (thi - tlo) - 2.0 * tcollar;
        const double t0 = tlo + tcollar + u1 * span * 0.75;
        const double t1 = t0 + std::max(0.05 * span, u2 * (thi - tcollar - t0));
        const int stratum = k % 16;
        const double frac = 0.05 + 0.90 * (static_cast<double>(stratum) + u3) / 16.0;
        samples[k] = {t0, std::min(t1, thi - tcollar), frac, u4};
    }

    struct Outcome {
        bool valid = false;
        Witness worst{};
    };
    std::vector<Outcome> outcomes(samples.size());

    const auto run_sample = [&](std::size_t k) {
        const auto& smp = samples[k];
        double dmax;
        if (lorentz) {
            const int qn = 512;
            double acc = 0.0;
            const double hstep = (smp.t1 - smp.t0) / qn;
            for (int i = 0; i < qn; ++i)
                acc += hstep / f.f(smp.t0 + hstep * (i + 0.5));
            dmax = acc;
        } else {
            dmax = 0.9 * kPi; // chart swing guard for metric cones
        }
        double d = smp.frac * dmax;
        d = std::min(d, (b - a) - 2.0 * rcollar);
        if (!(d > 0.0)) return Outcome{};
        const double r0 = a + rcollar + smp.r0u * ((b - a) - 2.0 * rcollar - d);
        GeodesicPath path;
        try {
            path = needle_geodesic(f, smp.t0, r0, smp.t1, r0 + d, opts.geo);
        } catch (const Error&) {
            return Outcome{};
        }
        if (path.kind == GeodesicPath::Kind::Null || path.length <= 0.0) return Outcome{};
        if (!lorentz) {
            // A metric path clamped against a non-vanishing truncation wall is
            // not a sheet geodesic; drop the sample.
            double tmin = infinity(), tmax = -infinity();
            for (const auto& node : path.nodes) {
                tmin = std::min(tmin, node.t);
                tmax = std::max(tmax, node.t);
            }
            const double span = f.thi() - f.tlo();
            if ((f.f(f.tlo()) > 1e-9 && tmin <= f.tlo() + 1e-6 * span) ||
                (f.f(f.thi()) > 1e-9 && tmax >= f.thi() - 1e-6 * span))
                return Outcome{};
        }

        const double L = path.length;
        const int m = std::min<std::size_t>(opts.triple_nodes, path.nodes.size());
        std::vector<double> sv(m), uv(m);
        for (int i = 0; i < m; ++i) {
            const auto& node = path.nodes[i * (path.nodes.size() - 1) / (m - 1)];
            sv[i] = node.s;
            uv[i] = f.f(node.t) * std::pow(h.value(node.r), 1.0 / (N - 1.0));
        }
        Outcome out;
        out.valid = true;
        out.worst.slack = infinity();
        for (int i = 0; i < m; ++i) {
            for (int j = i + 2; j < m; ++j) {
                const double ds = sv[j] - sv[i];
                if (ds <= 0.0) continue;
                const double theta = L * ds;
                const bool infinite = kappa_eff * theta * theta >= kPi * kPi;
                for (int q = i + 1; q < j; ++q) {
                    const double lam = (sv[q] - sv[i]) / ds;
                    double slack;
                    if (infinite)
                        slack = (uv[i] == 0.0 && uv[j] == 0.0) ? uv[q] : -infinity();
                    else
                        slack = uv[q] - sigma_coeff(kappa_eff, 1.0 - lam, theta) * uv[i] -
                                sigma_coeff(kappa_eff, lam, theta) * uv[j];
                    if (slack < out.worst.slack) {
                        out.worst = {smp.t0, r0, smp.t1, r0 + d, sv[q], slack};
                    }
                }
            }
        }
        return out;
    };

    const int workers = verify_worker_count(opts.threads);
    if (workers <= 1) {
        for (std::size_t k = 0; k < samples.size(); ++k) outcomes[k] = run_sample(k);
    } else {
        std::vector<std::thread> pool;
        std::atomic<std::size_t> next{0};
        for (int w = 0; w < workers; ++w)
            pool.emplace_back([&] {
                for (std::size_t k = next.fetch_add(1); k < samples.size();
                     k = next.fetch_add(1))
                    outcomes[k] = run_sample(k);
            });
        for (auto& th : pool) th.join();
    }

    long valid = 0;
    for (const auto& o : outcomes) {
        if (!o.valid) continue;
        ++valid;
        report.record(o.worst);
    }
    report.samples = valid;
    if (valid == 0) throw NoTimelikeSampleError("needle stratification produced no geodesics");
    report.finalize();
    return report;
}

// ---------------------------------------------------------------------------
// Contraction
// ---------------------------------------------------------------------------

namespace {

// Point at fraction s from the target o toward x along the connecting
// geodesic (s = 1 returns x).
struct ContractionFlow {
    const ConeSpec& cone;
    ConePoint o;
    bool a_in_past; // Lorentzian: A lies in I^-(o)
    GeodesicOptions geo;

    ConePoint flow(ConePoint x, double s) const {
        const auto& f = cone.warper();
        // Flat charts make the contraction affine; everything else shoots.
        if (f.tag() == "id" || f.tag() == "const") return chart_interp(x, s);
        GeodesicPath path;
        if (cone.signature() == Signature::Lorentzian) {
            if (a_in_past)
                path = geodesic_2d(f, {x.t, x.x}, {o.t, o.x}, geo);
            else
                path = geodesic_2d(f, {o.t, o.x}, {x.t, x.x}, geo);
        } else {
            path = geodesic_2d(f, {o.t, o.x}, {x.t, x.x}, geo);
        }
        const double param = (cone.signature() == Signature::Lorentzian && a_in_past) ? 1.0 - s
                                                                                      : s;
        const ConePoint q = path.at(param);
        return {q.t, q.x};
    }

    ConePoint chart_interp(ConePoint x, double s) const {
        const auto& f = cone.warper();
        const bool lorentz = cone.signature() == Signature::Lorentzian;
        auto fwd = [&](ConePoint p) -> std::pair<double, double> {
            if (f.tag() == "const") return {p.t, p.x};
            if (lorentz) return {p.t * std::cosh(p.x), p.t * std::sinh(p.x)};
            return {p.t * std::cos(p.x), p.t * std::sin(p.x)};
        };
        auto bwd = [&](std::pair<double, double> q) -> ConePoint {
            if (f.tag() == "const") return {q.first, q.second};
            if (lorentz)
                return {std::sqrt(std::max(q.first * q.first - q.second * q.second, 0.0)),
                        0.5 * std::log((q.first + q.second) /
                                       std::max(q.first - q.second, 1e-300))};
            return {std::hypot(q.first, q.second), std::atan2(q.second, q.first)};
        };
        const auto co = fwd(o), cx = fwd(x);
        return bwd({co.first + s * (cx.first - co.first), co.second + s * (cx.second - co.second)});
    }

    double separation(ConePoint x) const {
        const auto& f = cone.warper();
        if (f.tag() == "id" || f.tag() == "const") {
            auto fwd = [&](ConePoint pt) -> std::pair<double, double> {
                if (f.tag() == "const") return {pt.t, pt.x};
                if (cone.signature() == Signature::Lorentzian)
                    return {pt.t * std::cosh(pt.x), pt.t * std::sinh(pt.x)};
                return {pt.t * std::cos(pt.x), pt.t * std::sin(pt.x)};
            };
            const auto co = fwd(o), cx = fwd(x);
            const double dT = cx.first - co.first, dX = cx.second - co.second;
            if (cone.signature() == Signature::Lorentzian)
                return std::sqrt(std::max(dT * dT - dX * dX, 0.0));
            return std::hypot(dT, dX);
        }
        if (cone.signature() == Signature::Lorentzian)
            return a_in_past ? time_separation(cone, x, o, geo) : time_separation(cone, o, x, geo);
        return metric_distance(cone, o, x, geo);
    }
};

double quad_area(const std::array<std::pair<double, double>, 4>& c) {
    double s = 0.0;
    for (int i = 0; i < 4; ++i) {
        const auto& p = c[i];
        const auto& q = c[(i + 1) % 4];
        s += p.first * q.second - q.first * p.second;
    }
    return 0.5 * std::fabs(s);
}

} // namespace

VerificationReport verify_contraction(const ConeSpec& cone, const ContractionExperiment& exp,
                                      double K, double N, const ContractionOptions& opts) {
    VerificationReport report;
    report.condition = cone.signature() == Signature::Lorentzian ? "TMCP" : "MCP";
    report.K = K;
    report.N = N;
    report.signature = cone.signature();
    report.tolerance = opts.tol_rel;
    report.min_slack = infinity();
    report.anchor = "m(A_s)^{1/N} >= sigma^{(s)} m(A)^{1/N} and the tau-form";

    const int ct = exp.cells_t, cr = exp.cells_r;
    const double wt = (exp.t_hi - exp.t_lo) / ct;
    const double wr = (exp.r_hi - exp.r_lo) / cr;

    ContractionFlow flow{cone, exp.target, true, opts.geo};
    if (cone.signature() == Signature::Lorentzian) {
        const ConePoint corner{exp.t_lo, exp.r_lo};
        const auto v = causal_relation(cone, corner, exp.target, opts.geo);
        if (v.chronological()) {
            flow.a_in_past = true;
        } else {
            const auto w = causal_relation(cone, exp.target, corner, opts.geo);
            if (!w.chronological())
                throw DomainError("contraction target must be chronologically related to A");
            flow.a_in_past = false;
        }
        // Every cell center must be related to the target.
        for (int i = 0; i < ct; ++i)
            for (int j = 0; j < cr; ++j) {
                const ConePoint c{exp.t_lo + (i + 0.5) * wt, exp.r_lo + (j + 0.5) * wr};
                const auto rel = flow.a_in_past ? causal_relation(cone, c, exp.target, opts.geo)
                                                : causal_relation(cone, exp.target, c, opts.geo);
                if (!rel.chronological())
                    throw DomainError("contraction experiment cell not chronological to target");
            }
    }

    // Corner flows are shared between adjacent cells; cache them.
    std::vector<std::vector<ConePoint>> corner(ct + 1, std::vector<ConePoint>(cr + 1));
    for (int i = 0; i <= ct; ++i)
        for (int j = 0; j <= cr; ++j)
            corner[i][j] = {exp.t_lo + i * wt, exp.r_lo + j * wr};

    double massA = 0.0;
    std::vector<std::vector<double>> cell_mass(ct, std::vector<double>(cr, 0.0));
    std::vector<std::vector<double>> cell_sep(ct, std::vector<double>(cr, 0.0));
    for (int i = 0; i < ct; ++i)
        for (int j = 0; j < cr; ++j) {
            const ConePoint c{exp.t_lo + (i + 0.5) * wt, exp.r_lo + (j + 0.5) * wr};
            cell_mass[i][j] = cone.measure_density(c.t, c.x) * wt * wr;
            cell_sep[i][j] = flow.separation(c);
            massA += cell_mass[i][j];
        }
    double sep_l2 = 0.0;
    for (int i = 0; i < ct; ++i)
        for (int j = 0; j < cr; ++j) sep_l2 += cell_mass[i][j] * cell_sep[i][j] * cell_sep[i][j];
    sep_l2 = std::sqrt(sep_l2 / massA);

    for (double s : exp.times) {
        std::vector<std::vector<ConePoint>> moved(ct + 1, std::vector<ConePoint>(cr + 1));
        for (int i = 0; i <= ct; ++i)
            for (int j = 0; j <= cr; ++j) moved[i][j] = flow.flow(corner[i][j], s);
        double massAs = 0.0;
        double tau_rhs = 0.0;
        for (int i = 0; i < ct; ++i)
            for (int j = 0; j < cr; ++j) {
                const std::array<std::pair<double, double>, 4> quad{
                    std::pair{moved[i][j].t, moved[i][j].x},
                    std::pair{moved[i + 1][j].t, moved[i + 1][j].x},
                    std::pair{moved[i + 1][j + 1].t, moved[i + 1][j + 1].x},
                    std::pair{moved[i][j + 1].t, moved[i][j + 1].x}};
                const double area = quad_area(quad);
                const double tc = 0.25 * (quad[0].first + quad[1].first + quad[2].first +
                                          quad[3].first);
                const double rc = 0.25 * (quad[0].second + quad[1].second + quad[2].second +
                                          quad[3].second);
                massAs += cone.measure_density(tc, rc) * area;
                const double coeff = tau_coeff(K, N, s, cell_sep[i][j]);
                tau_rhs += std::pow(coeff, N) * cell_mass[i][j];
            }
        // sigma-form
        const double sig = sigma_KN(K, N, s, sep_l2);
        double slack_sigma;
        if (std::isinf(sig))
            slack_sigma = -infinity();
        else
            slack_sigma = (std::pow(massAs, 1.0 / N) - sig * std::pow(massA, 1.0 / N)) /
                          (sig * std::pow(massA, 1.0 / N));
        // tau-form
        const double slack_tau = (massAs - tau_rhs) / tau_rhs;
        Witness w1{exp.t_lo, exp.r_lo, exp.target.t, exp.target.x, s, slack_sigma};
        Witness w2{exp.t_lo, exp.r_lo, exp.target.t, exp.target.x, s, slack_tau};
        report.record(w1);
        report.record(w2);
        report.samples += ct * cr;
    }
    report.finalize();
    return report;
}

// ---------------------------------------------------------------------------
// Pointwise TCD
// ---------------------------------------------------------------------------

VerificationReport verify_pointwise_tcd(const ConeSpec& cone, double K, double Nprime, double p,
                                        const DiscreteMeasure& mu0, const DiscreteMeasure& mu1,
                                        double cell_w, double cell_h,
                                        const PointwiseTcdOptions& opts) {
    if (cone.signature() != Signature::Lorentzian)
        throw DomainError("verify_pointwise_tcd requires a Lorentzian cone");
    VerificationReport report;
    report.condition = "TCD-pointwise";
    report.K = K;
    report.N = Nprime;
    report.p = p;
    report.signature = cone.signature();
    report.tolerance = opts.tol_rel;
    report.min_slack = infinity();
    report.anchor = "pointwise displacement inequality for rho_t^{-1/N}";

    auto [value, plan] = lorentz_wasserstein_p(cone, mu0, mu1, p, opts.geo);
    if (!plan.causal_feasible) throw DualizabilityError("no causal coupling exists");
    for (const auto& [i, j, mass] : plan.triplets()) {
        const auto rel = causal_relation(cone, mu0.support[i], mu1.support[j], opts.geo);
        if (!rel.chronological())
            throw DualizabilityError("optimal plan charges a non-chronological pair");
    }

    const auto cell_measure = [&](const ConePoint& c) {
        return cone.measure_density(c.t, c.x) * cell_w * cell_h;
    };

    for (const auto& [i, j, mass] : plan.triplets()) {
        const ConePoint x0 = mu0.support[i], x1 = mu1.support[j];
        const double rho0 = mu0.weights[i] / cell_measure(x0);
        const double rho1 = mu1.weights[j] / cell_measure(x1);
        const double tau01 = time_separation(cone, x0, x1, opts.geo);
        const std::array<std::pair<double, double>, 4> offs{
            std::pair{-0.5 * cell_w, -0.5 * cell_h}, std::pair{0.5 * cell_w, -0.5 * cell_h},
            std::pair{0.5 * cell_w, 0.5 * cell_h}, std::pair{-0.5 * cell_w, 0.5 * cell_h}};
        for (double t : opts.times) {
            std::array<std::pair<double, double>, 4> quad;
            for (int c = 0; c < 4; ++c) {
                const ConePoint a{x0.t + offs[c].first, x0.x + offs[c].second};
                const ConePoint b{x1.t + offs[c].first, x1.x + offs[c].second};
                GeodesicPath gp;
                if (auto fast =
                        chart_geodesic(cone.warper(), a.t, a.x, b.t, b.x, 65))
                    gp = *fast;
                else
                    gp = geodesic_2d(cone.warper(), {a.t, a.x}, {b.t, b.x}, opts.geo);
                const ConePoint q = gp.at(t);
                quad[c] = {q.t, q.x};
            }
            const double area = quad_area(quad);
            if (area <= 0.0) throw ResolutionError("degenerate interpolant cell image");
            const double tc =
                0.25 * (quad[0].first + quad[1].first + quad[2].first + quad[3].first);
            const double rc =
                0.25 * (quad[0].second + quad[1].second + quad[2].second + quad[3].second);
            const double rho_t = mu0.weights[i] / (cone.measure_density(tc, rc) * area);
            const double lhs = std::pow(rho_t, -1.0 / Nprime);
            const double rhs = tau_coeff(K, Nprime, 1.0 - t, tau01) * std::pow(rho0, -1.0 / Nprime) +
                               tau_coeff(K, Nprime, t, tau01) * std::pow(rho1, -1.0 / Nprime);
            const double slack = (lhs - rhs) / rhs;
            report.record({x0.t, x0.x, x1.t, x1.x, t, slack});
            ++report.samples;
        }
    }
    report.note = "discretization budget ~ O(cell diameter)";
    report.finalize();
    return report;
}

// ---------------------------------------------------------------------------
// Converse violation sweep
// ---------------------------------------------------------------------------

VerificationReport detect_converse_violation(const std::vector<FamilyMember>& family, double N,
                                             const NeedleOptions& opts) {
    VerificationReport report;
    report.condition = "converse-soundness";
    report.N = N;
    report.tolerance = 0.0;
    report.min_slack = 0.0;
    report.anchor = "needle pass must imply warper and density conclusions";
    int alarms = 0;
    std::string note;
    for (const auto& member : family) {
        const auto warper_res = check_warper(member.warper, member.kappa, 1e-9);
        const auto density_res = check_cd_density(member.density, member.eta, N, 1e-6);
        NeedleOptions nopts = opts;
        const auto needle =
            verify_needle_concavity(member.warper, member.density, member.kappa, N, nopts);
        const bool conclusion = warper_res.passed && density_res.passed;
        const bool alarm = needle.passed && !conclusion;
        if (alarm) {
            ++alarms;
            report.record({member.warper.tlo(), member.density.lo(), member.warper.thi(),
                           member.density.hi(), 0.0, -1.0});
        }
        note += member.label + (needle.passed ? ":needle-pass" : ":needle-fail") +
                (warper_res.passed ? "/warper-pass" : "/warper-fail") +
                (density_res.passed ? "/density-pass " : "/density-fail ");
        ++report.samples;
    }
    report.min_slack = alarms == 0 ? 0.0 : -static_cast<double>(alarms);
    report.note = note;
    report.finalize();
    return report;
}

// ---------------------------------------------------------------------------
// Applications: Hawking, volume, splitting, conic classification
// ---------------------------------------------------------------------------

VerificationReport check_hawking(const ConeSpec& cone, double r0, double H, double K, double N,
                                 const HawkingOptions& opts) {
    if (cone.signature() != Signature::Lorentzian)
        throw DomainError("check_hawking requires a Lorentzian cone");
    VerificationReport report;
    report.condition = "hawking";
    report.K = K;
    report.N = N;
    report.signature = cone.signature();
    report.tolerance = 1e-9;
    report.min_slack = infinity();
    report.anchor = "tau_Sigma bound on future timelike geodesics from a slice";

    const auto& f = cone.warper();
    const double mean_curv = N * f.d1(r0) / f.f(r0);
    if (mean_curv < H - 1e-12)
        throw MeanCurvatureError("slice mean curvature below the requested bound");

    const bool applicable = (K > 0.0) || (K == 0.0 && H < 0.0) ||
                            (K < 0.0 && H < -N * std::sqrt(-K));
    if (!applicable) {
        report.not_applicable = true;
        report.note = "hypothesis case (K, H) not applicable";
        report.passed = true;
        report.min_slack = 0.0;
        return report;
    }

    const double sup_base = f.thi();
    const double bound = sup_base - r0;
    std::mt19937_64 rng(opts.seed);
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    const double fiber_diam = cone.fiber().diameter();
    double max_tau = 0.0;
    for (int k = 0; k < opts.samples; ++k) {
        const double t1 = r0 + (sup_base - r0) * (0.05 + 0.94 * uni(rng));
        const double d = std::min(fiber_diam, uni(rng) * fiber_diam);
        const double x0 = cone.fiber().lo();
        const ConePoint p{r0, x0}, q{t1, cone.fiber().interp(x0, cone.fiber().hi(), d)};
        const double tau = time_separation(cone, p, q, opts.geo);
        max_tau = std::max(max_tau, tau);
        double slack = bound - tau;
        if (opts.comparison_bound) slack = std::min(slack, *opts.comparison_bound - tau);
        report.record({r0, p.x, t1, q.x, 0.0, slack});
        ++report.samples;
    }
    // Saturation by the vertical geodesic, recorded as a sample of its own.
    const double vertical_tau =
        time_separation(cone, {r0, cone.fiber().lo()}, {sup_base, cone.fiber().lo()}, opts.geo);
    report.record({r0, cone.fiber().lo(), sup_base, cone.fiber().lo(), 1.0,
                   bound - vertical_tau});
    ++report.samples;
    report.note = "max sampled tau " + std::to_string(max_tau) + ", vertical tau " +
                  std::to_string(vertical_tau) + ", bound " + std::to_string(bound);
    report.finalize();
    return report;
}

namespace {

double adaptive_simpson(const std::function<double(double)>& g, double a, double b, double fa,
                        double fm, double fb, double whole, double tol, int depth) {
    const double m = 0.5 * (a + b);
    const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
    const double flm = g(lm), frm = g(rm);
    const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    if (depth <= 0 || std::fabs(left + right - whole) <= 15.0 * tol)
        return left + right + (left + right - whole) / 15.0;
    return adaptive_simpson(g, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
           adaptive_simpson(g, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

double integrate_adaptive(const std::function<double(double)>& g, double a, double b, double tol) {
    const double fa = g(a), fb = g(b), fm = g(0.5 * (a + b));
    const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    return adaptive_simpson(g, a, b, fa, fm, fb, whole, tol, 30);
}

} // namespace

std::pair<double, VerificationReport> check_volume_singularity(const ConeSpec& cone, double r0) {
    if (cone.signature() != Signature::Lorentzian)
        throw DomainError("check_volume_singularity requires a Lorentzian cone");
    VerificationReport report;
    report.condition = "singularity";
    report.signature = cone.signature();
    report.tolerance = 0.0;
    report.min_slack = 0.0;
    report.anchor = "finiteness of the future slab volume";

    const auto& f = cone.warper();
    const double N = cone.N();
    const double fiber_mass = cone.fiber().total_mass();
    const auto g = [&](double t) { return std::pow(f.f(t), N); };
    const double hi = f.thi();

    bool divergent = false;
    if (std::isinf(f.hi()) && !f.user_truncated()) {
        // Dyadic tail probe on the truncation box.
        const double span = hi - r0;
        const double i1 = integrate_adaptive(g, r0 + 0.5 * span, hi, 1e-10);
        const double i0 = integrate_adaptive(g, r0 + 0.25 * span, r0 + 0.5 * span, 1e-10);
        if (i1 >= 0.9 * i0) divergent = true;
    }
    double value;
    if (divergent) {
        value = infinity();
        report.note = "volume complete (divergent future integral)";
        report.passed = true;
    } else {
        value = fiber_mass * integrate_adaptive(g, r0, hi, 1e-12);
        report.note = "future volume incomplete";
        report.passed = true;
    }
    report.samples = 1;
    return {value, report};
}

VerificationReport check_splitting_hypotheses(const ConeSpec& cone, const SplittingProbe& probe) {
    if (cone.signature() != Signature::Lorentzian)
        throw DomainError("check_splitting_hypotheses requires a Lorentzian cone");
    VerificationReport report;
    report.condition = "splitting";
    report.signature = cone.signature();
    report.tolerance = 0.0;
    report.anchor = "line existence vs constant warper dichotomy";

    const auto& f = cone.warper();
    double fmin = infinity(), fmax = -infinity();
    for (int i = 0; i <= 2000; ++i) {
        const double t = f.tlo() + (f.thi() - f.tlo()) * i / 2000.0;
        fmin = std::min(fmin, f.f(t));
        fmax = std::max(fmax, f.f(t));
    }
    const bool constant = (fmax - fmin) <= probe.const_tol * std::max(1.0, fmax);
    const bool unbounded = std::isinf(f.lo()) && std::isinf(f.hi());

    const auto concavity = check_warper(f, 0.0, 1e-9);
    if (!concavity.passed) {
        report.not_applicable = true;
        report.note = "warper not concave: the flat timelike curvature hypothesis cannot hold";
        report.passed = true;
        report.min_slack = 0.0;
        return report;
    }

    const double span = f.thi() - f.tlo();
    double longest = 0.0;
    for (double L : probe.base_lengths)
        if (L <= span) longest = std::max(longest, L);
    const bool line_survives = longest >= probe.base_lengths.back() && unbounded;

    bool consistent;
    std::string note;
    if (line_survives) {
        consistent = constant && unbounded;
        note = "line survives all probes; f constant: " + std::string(constant ? "yes" : "no");
    } else {
        consistent = !(constant && unbounded);
        note = "no line survives (max probe " + std::to_string(longest) + " of span " +
               std::to_string(span) + ")";
    }
    report.passed = consistent;
    report.min_slack = consistent ? 0.0 : -1.0;
    report.note = note;
    report.samples = static_cast<long>(probe.base_lengths.size());
    return report;
}

VerificationReport classify_cdcon(const DensityProfile& fiber, double K, double N, double p,
                                  const CdconOptions& opts) {
    std::vector<VerificationReport> parts;
    const double a = fiber.lo(), b = fiber.hi();
    if (K == 0.0) {
        auto res = check_cd_density(fiber, 0.0, N, 1e-6);
        VerificationReport r;
        r.condition = "cd-density";
        r.K = 0.0;
        r.N = N;
        r.tolerance = 1e-6;
        r.min_slack = res.min_slack;
        r.samples = 1;
        r.passed = res.passed;
        parts.push_back(r);
    } else if (std::fabs(std::fabs(K) - (N - 1.0)) < 1e-9) {
        const bool lorentz = K < 0.0;
        auto warper = WarpingFunction::closed_form(
            "id", lorentz ? Signature::Lorentzian : Signature::Riemannian, 0.0, infinity());
        warper = warper.truncated(0.0, 8.0 + b);
        NeedleOptions nopts = opts.needle;
        auto needle = verify_needle_concavity(warper, fiber, 0.0, N, nopts);
        parts.push_back(needle);

        ConeSpec cone(warper, Fiber::interval(a, b, fiber), N);
        ContractionExperiment exp;
        const double width = b - a;
        exp.r_lo = a + 0.3 * width;
        exp.r_hi = a + 0.7 * width;
        exp.cells_t = opts.contraction_cells;
        exp.cells_r = opts.contraction_cells;
        if (lorentz) {
            exp.t_lo = 1.0;
            exp.t_hi = 1.5;
            exp.target = {4.0 + b, 0.5 * (a + b)};
        } else {
            exp.t_lo = 1.0;
            exp.t_hi = 1.5;
            exp.target = {2.0, 0.5 * (a + b)};
        }
        parts.push_back(verify_contraction(cone, exp, 0.0, N + 1.0, opts.contraction));
    } else {
        const double lam = std::sqrt((N - 1.0) / std::fabs(K));
        return classify_cdcon(fiber.rescaled(lam), K > 0 ? N - 1.0 : -(N - 1.0), N, p, opts);
    }
    auto merged = merge_reports("cdcon", parts);
    merged.K = K;
    merged.N = N;
    merged.p = p;
    return merged;
}

} // namespace conewarp
