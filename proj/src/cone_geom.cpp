#include "conewarp/cone_geom.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <cmath>
#include <queue>

#include "conewarp/coeffs.hpp"
#include "conewarp/errors.hpp"

namespace conewarp {

// ---------------------------------------------------------------------------
// Fiber
// ---------------------------------------------------------------------------

Fiber Fiber::interval(double a, double b) {
    if (!(a < b)) throw DomainError("fiber interval requires a < b");
    Fiber f;
    f.kind_ = FiberKind::Interval;
    f.a_ = a;
    f.b_ = b;
    return f;
}

Fiber Fiber::interval(double a, double b, DensityProfile measure) {
    Fiber f = interval(a, b);
    f.measure_ = std::move(measure);
    return f;
}

Fiber Fiber::circle(double circumference) {
    if (!(circumference > 0.0)) throw DomainError("circle circumference must be positive");
    Fiber f;
    f.kind_ = FiberKind::Circle;
    f.circ_ = circumference;
    f.a_ = 0.0;
    f.b_ = circumference;
    return f;
}

Fiber Fiber::circle(double circumference, DensityProfile measure) {
    Fiber f = circle(circumference);
    f.measure_ = std::move(measure);
    return f;
}

Fiber Fiber::finite(std::vector<std::vector<double>> distance_matrix,
                    std::vector<double> weights) {
    const std::size_t n = distance_matrix.size();
    if (n == 0 || weights.size() != n) throw DomainError("finite fiber size mismatch");
    for (std::size_t i = 0; i < n; ++i) {
        if (distance_matrix[i].size() != n) throw DomainError("distance matrix must be square");
        if (std::fabs(distance_matrix[i][i]) > 1e-12)
            throw DomainError("distance matrix diagonal must vanish");
        for (std::size_t j = 0; j < n; ++j) {
            if (std::fabs(distance_matrix[i][j] - distance_matrix[j][i]) > 1e-12)
                throw DomainError("distance matrix must be symmetric");
            for (std::size_t k = 0; k < n; ++k)
                if (distance_matrix[i][j] > distance_matrix[i][k] + distance_matrix[k][j] + 1e-12)
                    throw DomainError("distance matrix violates the triangle inequality");
        }
        if (!(weights[i] >= 0.0)) throw DomainError("fiber weights must be nonnegative");
    }
    Fiber f;
    f.kind_ = FiberKind::FiniteSpace;
    f.matrix_ = std::move(distance_matrix);
    f.weights_ = std::move(weights);
    return f;
}

double Fiber::distance(double x, double y) const {
    switch (kind_) {
    case FiberKind::Interval:
        return std::fabs(x - y);
    case FiberKind::Circle: {
        double d = std::fmod(std::fabs(x - y), circ_);
        return std::min(d, circ_ - d);
    }
    case FiberKind::FiniteSpace:
        return matrix_[static_cast<std::size_t>(x)][static_cast<std::size_t>(y)];
    }
    return 0.0;
}

double Fiber::interp(double x, double y, double rho) const {
    const double d = distance(x, y);
    switch (kind_) {
    case FiberKind::Interval:
        return x + (y >= x ? rho : -rho);
    case FiberKind::Circle: {
        double fwd = std::fmod(y - x + circ_, circ_);
        const double dir = (fwd <= circ_ - fwd) ? 1.0 : -1.0;
        double p = std::fmod(x + dir * rho, circ_);
        if (p < 0.0) p += circ_;
        return p;
    }
    case FiberKind::FiniteSpace:
        if (rho <= 1e-12) return x;
        if (std::fabs(rho - d) <= 1e-12) return y;
        throw NoGeodesicError("finite fibers carry no intermediate geodesic points");
    }
    return x;
}

double Fiber::total_mass() const {
    switch (kind_) {
    case FiberKind::Interval:
    case FiberKind::Circle:
        return measure_ ? measure_->mass() : (b_ - a_);
    case FiberKind::FiniteSpace: {
        double s = 0.0;
        for (double w : weights_) s += w;
        return s;
    }
    }
    return 0.0;
}

double Fiber::diameter() const {
    switch (kind_) {
    case FiberKind::Interval:
        return b_ - a_;
    case FiberKind::Circle:
        return 0.5 * circ_;
    case FiberKind::FiniteSpace: {
        double m = 0.0;
        for (const auto& row : matrix_)
            for (double d : row) m = std::max(m, d);
        return m;
    }
    }
    return 0.0;
}

nlohmann::json Fiber::to_json() const {
    nlohmann::json j;
    switch (kind_) {
    case FiberKind::Interval:
        j["kind"] = "interval";
        j["range"] = {a_, b_};
        break;
    case FiberKind::Circle:
        j["kind"] = "circle";
        j["circumference"] = circ_;
        break;
    case FiberKind::FiniteSpace:
        j["kind"] = "finite";
        j["matrix"] = matrix_;
        j["weights"] = weights_;
        break;
    }
    if (measure_) j["measure"] = measure_->to_json();
    return j;
}

Fiber Fiber::from_json(const nlohmann::json& j) {
    const std::string kind = j.at("kind").get<std::string>();
    Fiber f;
    if (kind == "interval") {
        const auto r = j.at("range");
        f = j.contains("measure")
                ? interval(r.at(0), r.at(1), DensityProfile::from_json(j.at("measure")))
                : interval(r.at(0), r.at(1));
    } else if (kind == "circle") {
        f = j.contains("measure")
                ? circle(j.at("circumference"), DensityProfile::from_json(j.at("measure")))
                : circle(j.at("circumference"));
    } else if (kind == "finite") {
        f = finite(j.at("matrix").get<std::vector<std::vector<double>>>(),
                   j.at("weights").get<std::vector<double>>());
    } else {
        throw ConfigError("unknown fiber kind: " + kind);
    }
    return f;
}

// ---------------------------------------------------------------------------
// ConeSpec
// ---------------------------------------------------------------------------

ConeSpec::ConeSpec(WarpingFunction warper, Fiber fiber, double N)
    : warper_(std::move(warper)), fiber_(std::move(fiber)), N_(N) {
    if (!(N_ > 1.0)) throw DomainError("cone dimension parameter N must exceed 1");
}

double ConeSpec::measure_density(double t, double x) const {
    double hx = 1.0;
    if (fiber_.measure()) hx = fiber_.measure()->value(x);
    return std::pow(warper_.f(t), N_) * hx;
}

nlohmann::json ConeSpec::to_json() const {
    nlohmann::json j;
    j["warper"] = warper_.to_json();
    j["fiber"] = fiber_.to_json();
    j["N"] = N_;
    return j;
}

ConeSpec ConeSpec::from_json(const nlohmann::json& j) {
    return ConeSpec(WarpingFunction::from_json(j.at("warper")), Fiber::from_json(j.at("fiber")),
                    j.at("N").get<double>());
}

ConeSpec ConeSpec::from_catalog(const std::string& tag, Fiber fiber, double N) {
    return ConeSpec(catalog(tag).warper, std::move(fiber), N);
}

// ---------------------------------------------------------------------------
// Quadrature helpers on a base segment
// ---------------------------------------------------------------------------

namespace {

// f sampled at nodes and midpoints of a uniform subdivision of [t0, t1]:
// 2n+1 values, composite Simpson uses all of them.
struct BaseGrid {
    double t0, t1, h;
    int n;
    std::vector<double> fv; // f at t0 + k h/2, k = 0..2n

    BaseGrid(const WarpingFunction& f, double a, double b, int intervals)
        : t0(a), t1(b), h((b - a) / intervals), n(intervals), fv(2 * intervals + 1) {
        for (int k = 0; k <= 2 * n; ++k) fv[k] = f.f(t0 + 0.5 * h * k);
    }

    template <class G> double integrate(G&& g) const {
        double acc = 0.0;
        for (int i = 0; i < n; ++i)
            acc += h / 6.0 * (g(fv[2 * i]) + 4.0 * g(fv[2 * i + 1]) + g(fv[2 * i + 2]));
        return acc;
    }

    // Cumulative integral at the n+1 interval endpoints.
    template <class G> std::vector<double> cumulative(G&& g) const {
        std::vector<double> cum(n + 1, 0.0);
        for (int i = 0; i < n; ++i)
            cum[i + 1] =
                cum[i] + h / 6.0 * (g(fv[2 * i]) + 4.0 * g(fv[2 * i + 1]) + g(fv[2 * i + 2]));
        return cum;
    }
};

double clamped_inv(double f) { return 1.0 / std::max(f, 1e-300); }

} // namespace

// ---------------------------------------------------------------------------
// Causal relation
// ---------------------------------------------------------------------------

CausalVerdict causal_relation(const ConeSpec& cone, ConePoint p, ConePoint q,
                              const GeodesicOptions& opts) {
    if (cone.signature() != Signature::Lorentzian)
        throw DomainError("causal_relation requires a Lorentzian cone");
    CausalVerdict v;
    const double d = cone.fiber().distance(p.x, q.x);
    if (q.t < p.t) {
        v.relation = CausalRelation::Unrelated;
        v.margin = -infinity();
        return v;
    }
    const auto& w = cone.warper();
    const bool p_apex = std::fabs(w.f(p.t)) < 1e-12;
    const bool q_apex = std::fabs(w.f(q.t)) < 1e-12;
    if (p_apex || q_apex) {
        // int 1/f diverges toward a vanishing endpoint, so the apex slice is
        // causally related to everything on the appropriate side.
        v.apex_flag = true;
        if (p.t == q.t && d > 0.0 && !(p_apex && q_apex)) {
            v.relation = CausalRelation::Unrelated;
            v.margin = -d;
            return v;
        }
        v.margin = infinity();
        v.relation = (q.t > p.t) ? CausalRelation::Chronological : CausalRelation::Causal;
        return v;
    }
    if (p.t == q.t) {
        v.margin = -d;
        v.relation = (d == 0.0) ? CausalRelation::Causal : CausalRelation::Unrelated;
        return v;
    }
    BaseGrid grid(w, p.t, q.t, opts.quad_intervals);
    const double reach = grid.integrate(clamped_inv);
    v.margin = reach - d;
    if (v.margin < 0.0)
        v.relation = CausalRelation::Unrelated;
    else
        v.relation = v.margin > opts.causal_collar ? CausalRelation::Chronological
                                                   : CausalRelation::Causal;
    return v;
}

// ---------------------------------------------------------------------------
// Lorentzian geodesics: shooting on the conserved constant
// ---------------------------------------------------------------------------

namespace {

GeodesicPath vertical_path(const WarpingFunction& f, double t0, double r0, double t1,
                           bool lorentz) {
    GeodesicPath path;
    path.kind = lorentz ? GeodesicPath::Kind::TimelikeMaximizer
                        : GeodesicPath::Kind::MetricMinimizer;
    path.length = std::fabs(t1 - t0);
    path.shooting_constant = 0.0;
    const int n = 256;
    path.nodes.resize(n + 1);
    for (int i = 0; i <= n; ++i) {
        const double s = static_cast<double>(i) / n;
        path.nodes[i] = {s, t0 + s * (t1 - t0), r0, 0.0, path.length};
    }
    (void)f;
    return path;
}

// Timelike maximizer between (t0, r0) and (t1, r1), t0 < t1, via bisection on
// the proper-time shooting constant c with fiber displacement
//   delta(c) = int (c/f^2)/sqrt(1 + c^2/f^2) dt,
// strictly increasing in c with limit int 1/f.
GeodesicPath lorentz_timelike_2d(const WarpingFunction& f, double t0, double r0, double t1,
                                 double r1, const GeodesicOptions& opts) {
    const double d = std::fabs(r1 - r0);
    const double dir = (r1 >= r0) ? 1.0 : -1.0;
    if (d == 0.0) return vertical_path(f, t0, r0, t1, true);

    BaseGrid grid(f, t0, t1, opts.quad_intervals);
    const auto displacement = [&](double c) {
        return grid.integrate(
            [&](double fv) { return (c / (fv * fv)) / std::sqrt(1.0 + c * c / (fv * fv)); });
    };

    const double reach = grid.integrate(clamped_inv);
    if (d > reach + opts.causal_collar)
        throw NoCausalCurveError("endpoints are not causally related");

    GeodesicPath path;
    if (d >= reach - opts.causal_collar) {
        // Null boundary: r follows the light ray, tau-length 0.
        path.kind = GeodesicPath::Kind::Null;
        path.length = 0.0;
        auto cum = grid.cumulative(clamped_inv);
        path.nodes.resize(cum.size());
        for (std::size_t i = 0; i < cum.size(); ++i) {
            const double s = static_cast<double>(i) / (cum.size() - 1);
            path.nodes[i] = {s, t0 + grid.h * static_cast<double>(i), r0 + dir * cum[i], 0.0, 0.0};
        }
        path.shooting_constant = 0.0;
        return path;
    }

    // Geometric bracket growth, then bisection to the configured tolerance.
    double clo = 0.0, chi = 1.0;
    std::string bracket_history;
    int grow = 0;
    while (displacement(chi) < d) {
        bracket_history += " " + std::to_string(chi);
        chi *= 2.0;
        if (++grow > 200)
            throw ConvergenceError("shooting bracket exhausted while growing; history:" +
                                   bracket_history);
    }
    for (int it = 0; it < 400; ++it) {
        const double c = 0.5 * (clo + chi);
        (displacement(c) < d ? clo : chi) = c;
        if (chi - clo <= opts.bisect_tol * (1.0 + chi)) break;
    }
    const double c = 0.5 * (clo + chi);

    const auto tau_integrand = [&](double fv) { return 1.0 / std::sqrt(1.0 + c * c / (fv * fv)); };
    const auto disp_integrand = [&](double fv) {
        return (c / (fv * fv)) / std::sqrt(1.0 + c * c / (fv * fv));
    };
    const double tau = grid.integrate(tau_integrand);
    auto sig = grid.cumulative(tau_integrand);
    auto rho = grid.cumulative(disp_integrand);

    path.kind = GeodesicPath::Kind::TimelikeMaximizer;
    path.length = tau;
    path.shooting_constant = c * tau; // f^2 v_beta w.r.t. the [0,1] parameter
    path.nodes.resize(sig.size());
    for (std::size_t i = 0; i < sig.size(); ++i) {
        const double t = t0 + grid.h * static_cast<double>(i);
        const double fv = grid.fv[2 * i];
        path.nodes[i] = {sig[i] / tau, t, r0 + dir * rho[i], tau * c / (fv * fv), tau};
    }
    return path;
}

} // namespace

// ---------------------------------------------------------------------------
// Riemannian geodesics: grid graph + straightening (+ monotone shooting)
// ---------------------------------------------------------------------------

namespace {

struct SheetPoint {
    double t, r;
};

// Value and d/d(moving endpoint) of the segment length under dt^2 + f^2 dr^2,
// 5-point composite Simpson; `moving_right` selects which endpoint varies.
struct SegVG {
    double v, gt, gr;
};

constexpr std::array<double, 5> kQU{0.0, 0.25, 0.5, 0.75, 1.0};
constexpr std::array<double, 5> kQW{1.0 / 12, 4.0 / 12, 2.0 / 12, 4.0 / 12, 1.0 / 12};

double seg_len(const WarpingFunction& f, SheetPoint a, SheetPoint b) {
    const double dt = b.t - a.t, dr = b.r - a.r;
    double acc = 0.0;
    for (int k = 0; k < 5; ++k) {
        const double fv = f.f(a.t + kQU[k] * dt);
        acc += kQW[k] * std::sqrt(dt * dt + fv * fv * dr * dr);
    }
    return acc;
}

SegVG seg_vg(const WarpingFunction& f, SheetPoint fixed, SheetPoint moving, bool moving_right) {
    // Parametrize from the fixed endpoint toward the moving one.
    const double dt = moving.t - fixed.t, dr = moving.r - fixed.r;
    SegVG out{0.0, 0.0, 0.0};
    for (int k = 0; k < 5; ++k) {
        const double u = kQU[k];
        const double t = fixed.t + u * dt;
        const double fv = f.f(t), fp = f.d1(t);
        const double phi = std::sqrt(dt * dt + fv * fv * dr * dr);
        out.v += kQW[k] * phi;
        if (phi > 1e-300) {
            out.gt += kQW[k] * (dt + fv * fp * u * dr * dr) / phi;
            out.gr += kQW[k] * (fv * fv * dr) / phi;
        }
    }
    (void)moving_right;
    return out;
}

// One local resolve: minimize len(a,p) + len(p,b) over p by damped Newton on
// the analytic gradient, t clamped to the base interval, r to the fiber box.
void resolve_node(const WarpingFunction& f, SheetPoint a, SheetPoint& p, SheetPoint b, double rlo,
                  double rhi, double scale) {
    const auto grad = [&](SheetPoint q) {
        const SegVG g1 = seg_vg(f, a, q, true);
        const SegVG g2 = seg_vg(f, b, q, true);
        return std::array<double, 3>{g1.v + g2.v, g1.gt + g2.gt, g1.gr + g2.gr};
    };
    for (int iter = 0; iter < 8; ++iter) {
        const auto g0 = grad(p);
        const double gnorm = std::hypot(g0[1], g0[2]);
        if (gnorm < 1e-14 * std::max(1.0, scale)) break;
        const double fd = 1e-7 * std::max(1.0, scale);
        const auto gt = grad({std::clamp(p.t + fd, f.tlo(), f.thi()), p.r});
        const auto gr = grad({p.t, std::clamp(p.r + fd, rlo, rhi)});
        double htt = (gt[1] - g0[1]) / fd, htr = (gt[2] - g0[2]) / fd;
        double hrt = (gr[1] - g0[1]) / fd, hrr = (gr[2] - g0[2]) / fd;
        const double hsym = 0.5 * (htr + hrt);
        double det = htt * hrr - hsym * hsym;
        double st, sr;
        if (det > 1e-18 && htt > 0.0) {
            st = -(hrr * g0[1] - hsym * g0[2]) / det;
            sr = -(htt * g0[2] - hsym * g0[1]) / det;
        } else {
            st = -g0[1] * scale * 0.05 / gnorm;
            sr = -g0[2] * scale * 0.05 / gnorm;
        }
        const double cap = 0.25 * scale;
        const double slen = std::hypot(st, sr);
        if (slen > cap) {
            st *= cap / slen;
            sr *= cap / slen;
        }
        double step = 1.0;
        bool moved = false;
        for (int bt = 0; bt < 25; ++bt) {
            SheetPoint trial{std::clamp(p.t + step * st, f.tlo(), f.thi()),
                             std::clamp(p.r + step * sr, rlo, rhi)};
            if (grad(trial)[0] < g0[0] - 1e-18) {
                p = trial;
                moved = true;
                break;
            }
            step *= 0.5;
        }
        if (!moved) break;
    }
}

std::vector<SheetPoint> resample(const WarpingFunction& f, const std::vector<SheetPoint>& poly,
                                 int target) {
    std::vector<double> cum(poly.size(), 0.0);
    for (std::size_t i = 1; i < poly.size(); ++i)
        cum[i] = cum[i - 1] + seg_len(f, poly[i - 1], poly[i]);
    const double total = cum.back();
    std::vector<SheetPoint> out(target);
    out.front() = poly.front();
    out.back() = poly.back();
    std::size_t j = 1;
    for (int k = 1; k + 1 < target; ++k) {
        const double want = total * k / (target - 1);
        while (j + 1 < cum.size() && cum[j] < want) ++j;
        const double seg = cum[j] - cum[j - 1];
        const double w = seg > 0.0 ? (want - cum[j - 1]) / seg : 0.0;
        out[k] = {poly[j - 1].t + w * (poly[j].t - poly[j - 1].t),
                  poly[j - 1].r + w * (poly[j].r - poly[j - 1].r)};
    }
    return out;
}

double polyline_length(const WarpingFunction& f, const std::vector<SheetPoint>& poly) {
    double acc = 0.0;
    for (std::size_t i = 1; i < poly.size(); ++i) {
        // 9-point composite Simpson per segment for the final value.
        const SheetPoint a = poly[i - 1], b = poly[i];
        const double dt = b.t - a.t, dr = b.r - a.r;
        double seg = 0.0;
        const int m = 4;
        for (int q = 0; q < m; ++q) {
            const double u0 = static_cast<double>(q) / m, u1 = static_cast<double>(q + 1) / m;
            const auto phi = [&](double u) {
                const double fv = f.f(a.t + u * dt);
                return std::sqrt(dt * dt + fv * fv * dr * dr);
            };
            seg += (u1 - u0) / 6.0 * (phi(u0) + 4.0 * phi(0.5 * (u0 + u1)) + phi(u1));
        }
        acc += seg;
    }
    return acc;
}

// Dijkstra on an 8-connected lattice with warped edge weights.
std::vector<SheetPoint> lattice_shortest_path(const WarpingFunction& f, SheetPoint a, SheetPoint b,
                                              double tlo, double thi, double rlo, double rhi,
                                              int resolution) {
    const int nt = resolution + 1, nr = resolution + 1;
    const double ht = (thi - tlo) / resolution;
    const double hr = rhi > rlo ? (rhi - rlo) / resolution : 0.0;
    std::vector<double> frow(2 * nt - 1);
    for (int k = 0; k < 2 * nt - 1; ++k) frow[k] = f.f(tlo + 0.5 * ht * k);

    const auto idx = [&](int i, int j) { return i * nr + j; };
    const auto snap = [&](SheetPoint p) {
        const int i = static_cast<int>(std::lround((p.t - tlo) / ht));
        const int j = hr > 0.0 ? static_cast<int>(std::lround((p.r - rlo) / hr)) : 0;
        return std::pair<int, int>{std::clamp(i, 0, nt - 1), std::clamp(j, 0, nr - 1)};
    };
    const auto [ia, ja] = snap(a);
    const auto [ib, jb] = snap(b);

    const auto edge = [&](int i0, int j0, int i1, int j1) {
        const double dt = (i1 - i0) * ht, dr = (j1 - j0) * hr;
        const double f0 = frow[2 * i0], f1 = frow[2 * i1], fm = frow[i0 + i1];
        const auto phi = [&](double fv) { return std::sqrt(dt * dt + fv * fv * dr * dr); };
        return (phi(f0) + 4.0 * phi(fm) + phi(f1)) / 6.0;
    };

    std::vector<double> dist(static_cast<std::size_t>(nt) * nr, infinity());
    std::vector<int> prev(static_cast<std::size_t>(nt) * nr, -1);
    using QE = std::pair<double, int>;
    std::priority_queue<QE, std::vector<QE>, std::greater<>> pq;
    dist[idx(ia, ja)] = 0.0;
    pq.push({0.0, idx(ia, ja)});
    const int goal = idx(ib, jb);
    constexpr int di[8] = {1, -1, 0, 0, 1, 1, -1, -1};
    constexpr int dj[8] = {0, 0, 1, -1, 1, -1, 1, -1};
    while (!pq.empty()) {
        const auto [dcur, u] = pq.top();
        pq.pop();
        if (dcur > dist[u]) continue;
        if (u == goal) break;
        const int i = u / nr, j = u % nr;
        for (int k = 0; k < 8; ++k) {
            const int i2 = i + di[k], j2 = j + dj[k];
            if (i2 < 0 || i2 >= nt || j2 < 0 || j2 >= nr) continue;
            const double nd = dcur + edge(i, j, i2, j2);
            const int v = idx(i2, j2);
            if (nd < dist[v]) {
                dist[v] = nd;
                prev[v] = u;
                pq.push({nd, v});
            }
        }
    }
    std::vector<SheetPoint> path;
    for (int u = goal; u != -1; u = prev[u])
        path.push_back({tlo + (u / nr) * ht, rlo + (u % nr) * hr});
    std::reverse(path.begin(), path.end());
    path.front() = a;
    path.back() = b;
    return path;
}

// Clairaut shooting for metric sheet geodesics.  A minimizer of
// dt^2 + f^2 dr^2 conserves c = f^2 dr/ds; its base component is monotone
// away from a single turning point f(t*) = c, and dips always point toward
// smaller f.  The kernel below integrates one increasing piece; reflection
// and composition cover decreasing pieces and warpers with one interior
// extremum (cones, suspensions, waists).  Anything wilder falls back to the
// lattice solver.
//
// Swing and length of a piece [x, y] with f increasing and f >= c:
//   swing  = int c / (f sqrt(f^2 - c^2)) dt
//   length = int f / sqrt(f^2 - c^2) dt.
// Below the level f = 2c the Clairaut angle phi, sin phi = c/f(t), is the
// good variable (d swing = dphi/f', d length = c dphi/(sin^2 phi f')),
// smooth up to a turning point and down to a vanishing apex; above it
// xi = log f keeps the power-like decay resolved on every scale.

using Rows = std::vector<std::array<double, 3>>; // (t, cum swing, cum arc)

Rows reverse_rows(const Rows& in) {
    Rows out;
    out.reserve(in.size());
    const double S = in.back()[1], A = in.back()[2];
    for (auto it = in.rbegin(); it != in.rend(); ++it)
        out.push_back({(*it)[0], S - (*it)[1], A - (*it)[2]});
    return out;
}

Rows reflect_rows(Rows rows, double axis) {
    for (auto& row : rows) row[0] = 2.0 * axis - row[0];
    return rows;
}

void append_rows(Rows& acc, const Rows& add) {
    if (acc.empty()) {
        acc = add;
        return;
    }
    const double S = acc.back()[1], A = acc.back()[2];
    for (std::size_t i = 1; i < add.size(); ++i)
        acc.push_back({add[i][0], S + add[i][1], A + add[i][2]});
}

class ClairautKernel {
  public:
    ClairautKernel(std::function<double(double)> F, std::function<double(double)> Fp, int quad,
                   double waist_t = std::numeric_limits<double>::quiet_NaN())
        : F_(std::move(F)), Fp_(std::move(Fp)), n_(quad), waist_t_(waist_t) {}

    struct Leg {
        double swing = 0.0, length = 0.0;
    };

    double F(double t) const { return F_(t); }

    // F^{-1}(target) on [lo, hi], F increasing; Newton with bisection guard.
    double invert(double target, double lo, double hi) const {
        double t = 0.5 * (lo + hi);
        for (int it = 0; it < 100; ++it) {
            const double fv = F_(t);
            (fv < target ? lo : hi) = t;
            const double fp = Fp_(t);
            double next = fp > 0.0 ? t - (fv - target) / fp : 0.5 * (lo + hi);
            if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
            if (std::fabs(next - t) <= 1e-16 * (1.0 + std::fabs(t))) return next;
            t = next;
        }
        return t;
    }

    Leg leg(double c, double lo_t, double hi_t) const {
        Leg acc;
        walk(c, lo_t, hi_t,
             [&](double t, double dsw, double dlen) {
                 acc.swing += dsw;
                 acc.length += dlen;
                 (void)t;
             },
             nullptr);
        return acc;
    }

    // Node table ordered from lo_t to hi_t, cumulative from lo_t.
    Rows leg_nodes(double c, double lo_t, double hi_t) const {
        Rows out{{lo_t, 0.0, 0.0}};
        double swing = 0.0, arc = 0.0;
        walk(c, lo_t, hi_t,
             [&](double t, double dsw, double dlen) {
                 swing += dsw;
                 arc += dlen;
                 (void)t;
             },
             [&](double t) { out.push_back({t, swing, arc}); });
        if (out.size() == 1) out.push_back({hi_t, 0.0, std::max(hi_t - lo_t, 0.0)});
        out.back()[0] = hi_t;
        return out;
    }

  private:
    // Shared integration plan: per-interval Simpson increments are reported
    // through `accum`, and `node` (when set) is called at interval ends.
    template <class Accum>
    void walk(double c, double lo_t, double hi_t, Accum&& accum,
              const std::function<void(double)>& node) const {
        // Slivers at the turning level carry O(sqrt(width)) true mass; the
        // clamped integrand would inflate them instead.
        if (hi_t - lo_t <= 1e-12 * (1.0 + std::fabs(hi_t))) return;
        const int n = node ? 96 : n_;
        const auto simpson = [&](auto&& grid_to_t, double a, double b) {
            // integrand reported as (t, swing-density, length-density) per
            // unit of the grid variable
            if (b <= a) return;
            const double h = (b - a) / n;
            for (int i = 0; i < n; ++i) {
                const double x0 = a + i * h, x1 = x0 + h;
                const auto g0 = grid_to_t(x0), gm = grid_to_t(0.5 * (x0 + x1)),
                           g1 = grid_to_t(x1);
                accum(g1[0], h / 6.0 * (g0[1] + 4.0 * gm[1] + g1[1]),
                      h / 6.0 * (g0[2] + 4.0 * gm[2] + g1[2]));
                if (node) node(g1[0]);
            }
        };
        const auto qval = [&](double fv) {
            return std::sqrt(std::max(fv * fv - c * c, 1e-26 * fv * fv));
        };
        const auto plain = [&](double a, double b) {
            simpson(
                [&](double t) {
                    const double fv = F_(t);
                    const double q = qval(fv);
                    return std::array<double, 3>{t, c / (fv * q), fv / q};
                },
                a, b);
        };

        if (c <= 0.0) {
            simpson([&](double t) { return std::array<double, 3>{t, 0.0, 1.0}; }, lo_t, hi_t);
            return;
        }

        const double f_lo = F_(lo_t), f_hi = F_(hi_t);
        const bool turning = f_lo <= c * (1.0 + 1e-9);
        const auto [t1, t2] = splits(c, lo_t, hi_t);

        if (!std::isnan(waist_t_)) {
            // Waist region: anchor the lower part at the waist so the node
            // distribution resolves arbitrarily sharp near-waist features.
            if (t1 > lo_t) {
                if (turning) {
                    // t = waist + dstar cosh(w), turning at w = 0
                    const double dstar = std::max(lo_t - waist_t_, 1e-300);
                    const double w_hi = std::acosh(std::max((t1 - waist_t_) / dstar, 1.0));
                    simpson(
                        [&](double w) {
                            const double t = waist_t_ + dstar * std::cosh(w);
                            const double fv = F_(t);
                            const double q = qval(fv);
                            const double jac = dstar * std::sinh(w);
                            return std::array<double, 3>{t, jac * c / (fv * q), jac * fv / q};
                        },
                        0.0, w_hi);
                } else {
                    // t = waist + A sinh(w), closest-approach scale A
                    const double fm = F_(waist_t_);
                    const double fd = 1e-4 * (hi_t - waist_t_ + 1.0);
                    const double fpp =
                        std::max((Fp_(waist_t_ + fd) - Fp_(std::max(waist_t_ - fd, waist_t_))) /
                                     fd,
                                 1e-10);
                    const double A =
                        std::sqrt(std::max(fm * fm - c * c, 1e-300) / (fm * fpp));
                    const double w_lo = std::asinh(std::max(lo_t - waist_t_, 0.0) / A);
                    const double w_hi = std::asinh((t1 - waist_t_) / A);
                    simpson(
                        [&](double w) {
                            const double t = waist_t_ + A * std::sinh(w);
                            const double fv = F_(t);
                            const double q = qval(fv);
                            const double jac = A * std::cosh(w);
                            return std::array<double, 3>{t, jac * c / (fv * q), jac * fv / q};
                        },
                        w_lo, w_hi);
                }
            }
            plain(std::max(t2, t1), hi_t);
            return;
        }

        if (t1 > lo_t) { // angle region, f in [c, ~2c], f' healthy
            const double phi_hi = std::asin(std::clamp(c / f_lo, -1.0, 1.0));
            const double phi_lo = std::asin(std::clamp(c / F_(t1), -1.0, 1.0));
            simpson(
                [&](double phi) {
                    const double t = invert(c / std::sin(phi), lo_t, t1);
                    const double fp = std::max(Fp_(t), 1e-300);
                    return std::array<double, 3>{t, 1.0 / fp,
                                                 c / (std::sin(phi) * std::sin(phi) * fp)};
                },
                phi_lo, phi_hi);
        }
        if (t2 > t1) { // log region for the decades between 2c and 0.75 f_hi
            const double xi_lo = std::log(std::max(F_(t1), 1e-300));
            const double xi_hi = std::log(F_(t2));
            if (xi_hi - xi_lo > 1e-15) {
                simpson(
                    [&](double xi) {
                        const double fv = std::exp(xi);
                        const double t = invert(fv, t1, t2);
                        const double fp = std::max(Fp_(t), 1e-300);
                        const double q = qval(fv);
                        return std::array<double, 3>{t, c / (q * fp), fv * fv / (q * fp)};
                    },
                    xi_lo, xi_hi);
            }
        }
        plain(t2, hi_t); // no f' in the integrands: tolerates flat tops
    }

    // Region boundaries.  The angle region tops out at
    // min(2c, sqrt((c^2+f_hi^2)/2)): above that level the plain integrand has
    // q^2 = f^2 - c^2 >= max(3c^2, (f_hi^2-c^2)/2), so it needs no f' and
    // tolerates flat tops.  The log region (for the decades between 2c and
    // 0.75 f_hi) only exists when c is small enough for f' to stay healthy
    // on it.
    std::pair<double, double> splits(double c, double lo_t, double hi_t) const {
        const double f_lo = F_(lo_t), f_hi = F_(hi_t);
        const double sqmid = std::sqrt(0.5 * (c * c + f_hi * f_hi));
        const double lvl1 = std::min(2.0 * c, sqmid);
        double t1 = lo_t;
        if (lvl1 > f_lo && lvl1 < f_hi)
            t1 = std::clamp(invert(lvl1, lo_t, hi_t), lo_t, hi_t);
        const double lvl2 = (2.0 * c <= 0.75 * f_hi) ? 0.75 * f_hi : lvl1;
        double t2 = t1;
        if (lvl2 > F_(t1) && lvl2 < f_hi)
            t2 = std::clamp(invert(lvl2, t1, hi_t), t1, hi_t);
        return {t1, t2};
    }

    std::function<double(double)> F_, Fp_;
    int n_;
    double waist_t_;
};

// One increasing region [floor_t, ...] with its floor character.
struct IncRegion {
    ClairautKernel kernel;
    double floor_t;
    double floor_value;
    bool floor_vanishes;
    bool floor_is_waist; // interior minimum of the warper: unlimited swing
};

struct ShotRows {
    Rows rows;   // traversal ta -> tb
    double length = 0.0;
    double c = 0.0;
    bool through_apex = false;
};

// Monotone or single-hairpin solve on one increasing region.
std::optional<ShotRows> solve_on_increasing(const IncRegion& R, double ta, double tb, double d) {
    const double f_ta = R.kernel.F(ta);
    if (!(f_ta > 0.0)) return std::nullopt;
    const auto mono_swing = [&](double c) { return R.kernel.leg(c, ta, tb).swing; };
    const double t_star_at = [&](double c) {
        return c <= R.floor_value ? R.floor_t : R.kernel.invert(c, R.floor_t, ta);
    }(f_ta);
    const auto hair = [&](double c) {
        const double ts = c <= R.floor_value ? R.floor_t : R.kernel.invert(c, R.floor_t, ta);
        const auto a = R.kernel.leg(c, ts, ta);
        const auto b = R.kernel.leg(c, ts, tb);
        return ClairautKernel::Leg{a.swing + b.swing, a.length + b.length};
    };
    ShotRows out;
    const double Dstar = hair(f_ta).swing;
    (void)t_star_at;
    if (d <= Dstar && ta < tb) {
        double clo = 0.0, chi = f_ta;
        for (int it = 0; it < 200; ++it) {
            const double c = 0.5 * (clo + chi);
            (mono_swing(c) < d ? clo : chi) = c;
            if (chi - clo <= 1e-15 * (1.0 + chi)) break;
        }
        out.c = 0.5 * (clo + chi);
        out.rows = R.kernel.leg_nodes(out.c, ta, tb);
        out.length = R.kernel.leg(out.c, ta, tb).length;
        return out;
    }
    // Hairpin branch: swing decreases in c toward the floor.
    double cfloor;
    if (R.floor_is_waist) {
        cfloor = R.floor_value * (1.0 + 1e-6);
        for (int k = 0; k < 6 && hair(cfloor).swing < d; ++k)
            cfloor = R.floor_value * (1.0 + (cfloor / R.floor_value - 1.0) * 1e-2);
        if (hair(cfloor).swing < d) return std::nullopt; // winding beyond resolution
    } else {
        cfloor = std::max(R.floor_value * (1.0 + 1e-9), 1e-9 * f_ta);
        if (hair(cfloor).swing < d) {
            if (R.floor_vanishes) {
                out.through_apex = true;
                out.length = (ta - R.floor_t) + (tb - R.floor_t);
                return out;
            }
            return std::nullopt; // swing limited by a truncation wall
        }
    }
    double clo = cfloor, chi = f_ta;
    for (int it = 0; it < 200; ++it) {
        const double c = 0.5 * (clo + chi);
        (hair(c).swing < d ? chi : clo) = c;
        if (chi - clo <= 1e-15 * (1.0 + chi)) break;
    }
    out.c = 0.5 * (clo + chi);
    const double ts = out.c <= R.floor_value ? R.floor_t
                                             : R.kernel.invert(out.c, R.floor_t, ta);
    out.rows = reverse_rows(R.kernel.leg_nodes(out.c, ts, ta));
    append_rows(out.rows, R.kernel.leg_nodes(out.c, ts, tb));
    out.length = hair(out.c).length;
    return out;
}

class MetricShooter {
  public:
    MetricShooter(const WarpingFunction& f, const GeodesicOptions& opts)
        : f_(f), quad_(std::max(128, opts.grid_resolution / 2)) {
        classify();
    }

    std::optional<GeodesicPath> solve(double t0, double r0, double t1, double r1) const;

  private:
    enum class Shape { Const, Increasing, Decreasing, Vmin, Lmax, Other };

    void classify() {
        const double lo = f_.tlo(), hi = f_.thi();
        const int n = 1024;
        double fmax = 0.0;
        std::vector<double> vals(n + 1);
        for (int i = 0; i <= n; ++i) {
            vals[i] = f_.f(lo + (hi - lo) * i / n);
            fmax = std::max(fmax, vals[i]);
        }
        const double tol = 1e-11 * std::max(1.0, fmax);
        int changes = 0, last_dir = 0, change_idx = -1;
        for (int i = 1; i <= n; ++i) {
            const double diff = vals[i] - vals[i - 1];
            const int dir = diff > tol ? 1 : diff < -tol ? -1 : 0;
            if (dir == 0) continue;
            if (last_dir != 0 && dir != last_dir) {
                ++changes;
                change_idx = i - 1;
            }
            last_dir = dir;
        }
        double span_var = 0.0;
        for (int i = 1; i <= n; ++i) span_var = std::max(span_var, std::fabs(vals[i] - vals[0]));
        if (span_var <= 1e-13 * std::max(1.0, fmax)) {
            shape_ = Shape::Const;
            return;
        }
        if (changes == 0) {
            shape_ = last_dir >= 0 ? Shape::Increasing : Shape::Decreasing;
            return;
        }
        if (changes > 1) {
            shape_ = Shape::Other;
            return;
        }
        // One interior extremum: locate it by bisection on the derivative.
        double a = lo + (hi - lo) * std::max(change_idx - 2, 0) / n;
        double b = lo + (hi - lo) * std::min(change_idx + 2, n) / n;
        const bool is_min = vals[change_idx] <= vals[0] || vals[change_idx] <= vals[n]
                                ? (vals[std::max(change_idx - 1, 0)] > vals[change_idx] ||
                                   vals[std::min(change_idx + 1, n)] > vals[change_idx])
                                : false;
        for (int it = 0; it < 200; ++it) {
            const double mid = 0.5 * (a + b);
            const double dm = f_.d1(mid);
            if (is_min ? dm < 0.0 : dm > 0.0)
                a = mid;
            else
                b = mid;
            if (b - a <= 1e-14 * (1.0 + std::fabs(b))) break;
        }
        ext_ = 0.5 * (a + b);
        shape_ = is_min ? Shape::Vmin : Shape::Lmax;
        if (shape_ == Shape::Vmin && !(f_.f(ext_) > 0.0)) shape_ = Shape::Other;
    }

    ClairautKernel direct_kernel(
        double waist_t = std::numeric_limits<double>::quiet_NaN()) const {
        return ClairautKernel([this](double t) { return f_.f(t); },
                              [this](double t) { return f_.d1(t); }, quad_, waist_t);
    }
    ClairautKernel reflected_kernel(
        double axis, double waist_real_t = std::numeric_limits<double>::quiet_NaN()) const {
        return ClairautKernel([this, axis](double t) { return f_.f(2.0 * axis - t); },
                              [this, axis](double t) { return -f_.d1(2.0 * axis - t); }, quad_,
                              std::isnan(waist_real_t) ? waist_real_t
                                                       : 2.0 * axis - waist_real_t);
    }

    const WarpingFunction& f_;
    int quad_;
    Shape shape_ = Shape::Other;
    double ext_ = 0.0;
};

std::optional<GeodesicPath> MetricShooter::solve(double t0, double r0, double t1,
                                                 double r1) const {
    const double d = std::fabs(r1 - r0);
    const double dir = (r1 >= r0) ? 1.0 : -1.0;
    const double tlo = f_.tlo(), thi = f_.thi();

    GeodesicPath path;
    path.kind = GeodesicPath::Kind::MetricMinimizer;

    if (shape_ == Shape::Other) return std::nullopt;
    if (shape_ == Shape::Const) {
        const double fv = f_.f(0.5 * (tlo + thi));
        const double L = std::hypot(t1 - t0, fv * d);
        path.length = L;
        path.shooting_constant = fv * fv * d;
        const int m = 257;
        path.nodes.resize(m);
        for (int i = 0; i < m; ++i) {
            const double s = static_cast<double>(i) / (m - 1);
            path.nodes[i] = {s, t0 + s * (t1 - t0), r0 + dir * s * d, d, L};
        }
        return path;
    }

    const double ta = std::min(t0, t1), tb = std::max(t0, t1);
    std::optional<ShotRows> shot;
    double apex_t = tlo; // base level of a through-apex route

    const auto inc_region_direct = [&](double floor_t, bool waist) {
        const double fv = f_.f(floor_t);
        return IncRegion{direct_kernel(waist ? floor_t
                                             : std::numeric_limits<double>::quiet_NaN()),
                         floor_t, fv, std::fabs(fv) < 1e-12, waist};
    };
    const auto inc_region_reflect = [&](double axis, double floor_real_t, bool waist) {
        const double fv = f_.f(floor_real_t);
        return IncRegion{reflected_kernel(axis, waist
                                                    ? floor_real_t
                                                    : std::numeric_limits<double>::quiet_NaN()),
                         2.0 * axis - floor_real_t, fv, std::fabs(fv) < 1e-12, waist};
    };

    switch (shape_) {
    case Shape::Increasing: {
        shot = solve_on_increasing(inc_region_direct(tlo, false), ta, tb, d);
        break;
    }
    case Shape::Decreasing: {
        // Reflect about the interval midpoint.
        const double axis = 0.5 * (tlo + thi);
        apex_t = thi;
        auto s = solve_on_increasing(inc_region_reflect(axis, thi, false), 2.0 * axis - tb,
                                     2.0 * axis - ta, d);
        if (s) {
            if (!s->through_apex) s->rows = reflect_rows(reverse_rows(s->rows), axis);
            shot = s;
        }
        break;
    }
    case Shape::Vmin: {
        const double m = ext_;
        if (ta >= m) {
            shot = solve_on_increasing(inc_region_direct(m, true), ta, tb, d);
        } else if (tb <= m) {
            auto s = solve_on_increasing(inc_region_reflect(m, m, true), 2.0 * m - tb,
                                         2.0 * m - ta, d);
            if (s) {
                s->rows = reflect_rows(reverse_rows(s->rows), m);
                shot = s;
            }
        } else {
            // Cross-waist: always base-monotone, the waist is unboundedly
            // sticky.
            const auto KL = reflected_kernel(m, m);
            const auto KR = direct_kernel(m);
            const double fm = f_.f(m);
            const auto swing = [&](double c) {
                return KL.leg(c, m, 2.0 * m - ta).swing + KR.leg(c, m, tb).swing;
            };
            double chi = fm * (1.0 - 1e-9), clo = 0.0;
            for (int k = 0; k < 6 && swing(chi) < d; ++k)
                chi = fm * (1.0 - (1.0 - chi / fm) * 1e-2);
            if (swing(chi) < d) return std::nullopt;
            for (int it = 0; it < 200; ++it) {
                const double c = 0.5 * (clo + chi);
                (swing(c) < d ? clo : chi) = c;
                if (chi - clo <= 1e-15 * (1.0 + chi)) break;
            }
            ShotRows s;
            s.c = 0.5 * (clo + chi);
            s.rows = reflect_rows(reverse_rows(KL.leg_nodes(s.c, m, 2.0 * m - ta)), m);
            append_rows(s.rows, KR.leg_nodes(s.c, m, tb));
            s.length = KL.leg(s.c, m, 2.0 * m - ta).length + KR.leg(s.c, m, tb).length;
            shot = s;
        }
        break;
    }
    case Shape::Lmax: {
        const double M = ext_;
        if (tb <= M) {
            shot = solve_on_increasing(inc_region_direct(tlo, false), ta, tb, d);
            apex_t = tlo;
        } else if (ta >= M) {
            auto s = solve_on_increasing(inc_region_reflect(M, thi, false), 2.0 * M - tb,
                                         2.0 * M - ta, d);
            apex_t = thi;
            if (s) {
                if (!s->through_apex) s->rows = reflect_rows(reverse_rows(s->rows), M);
                shot = s;
            }
        } else {
            // Cross-hump: base-monotone up to the boundary family, then a
            // hairpin on the side with the smaller endpoint value.
            const bool dip_left = f_.f(ta) <= f_.f(tb);
            const auto KI = direct_kernel();
            const auto KR = reflected_kernel(M);
            // Transformed picture: always dip on the left.
            const auto legL = [&](double c, double x, double y) { // real [x,y], x<y<=M
                return KI.leg(c, x, y);
            };
            const auto legR = [&](double c, double y) { // real [M, y], y>=M
                return KR.leg(c, 2.0 * M - y, M);
            };
            const double f_near = dip_left ? f_.f(ta) : f_.f(tb);
            const auto swingA = [&](double c) {
                return KI.leg(c, ta, M).swing + KR.leg(c, 2.0 * M - tb, M).swing;
            };
            const double cA = std::min(f_.f(ta), f_.f(tb));
            const double DstarA = swingA(cA);
            if (d <= DstarA) {
                double clo = 0.0, chi = cA;
                for (int it = 0; it < 200; ++it) {
                    const double c = 0.5 * (clo + chi);
                    (swingA(c) < d ? clo : chi) = c;
                    if (chi - clo <= 1e-15 * (1.0 + chi)) break;
                }
                ShotRows s;
                s.c = 0.5 * (clo + chi);
                s.rows = KI.leg_nodes(s.c, ta, M);
                append_rows(s.rows, reflect_rows(reverse_rows(KR.leg_nodes(s.c, 2.0 * M - tb, M)), M));
                s.length = KI.leg(s.c, ta, M).length + KR.leg(s.c, 2.0 * M - tb, M).length;
                shot = s;
            } else {
                // Hairpin below the nearer endpoint, then across the hump.
                const double floor_t = dip_left ? tlo : thi;
                const double floor_v = f_.f(floor_t);
                const bool floor_vanishes = std::fabs(floor_v) < 1e-12;
                apex_t = floor_t;
                const auto swingB = [&](double c) {
                    if (dip_left) {
                        const double ts = c <= floor_v ? tlo : KI.invert(c, tlo, ta);
                        return KI.leg(c, ts, ta).swing + KI.leg(c, ts, M).swing +
                               KR.leg(c, 2.0 * M - tb, M).swing;
                    }
                    const double u_floor = 2.0 * M - thi;
                    const double us = c <= floor_v ? u_floor
                                                   : KR.invert(c, u_floor, 2.0 * M - tb);
                    return KR.leg(c, us, 2.0 * M - tb).swing + KR.leg(c, us, M).swing +
                           KI.leg(c, ta, M).swing;
                };
                double cfloor = std::max(floor_v * (1.0 + 1e-9), 1e-9 * f_near);
                if (swingB(cfloor) < d) {
                    if (floor_vanishes) {
                        ShotRows s;
                        s.through_apex = true;
                        s.length = (ta - tlo) + (tb - tlo);
                        if (!dip_left) s.length = (thi - ta) + (thi - tb);
                        shot = s;
                        break;
                    }
                    return std::nullopt;
                }
                double clo = cfloor, chi = f_near;
                for (int it = 0; it < 200; ++it) {
                    const double c = 0.5 * (clo + chi);
                    (swingB(c) < d ? chi : clo) = c;
                    if (chi - clo <= 1e-15 * (1.0 + chi)) break;
                }
                ShotRows s;
                s.c = 0.5 * (clo + chi);
                if (dip_left) {
                    const double ts = s.c <= floor_v ? tlo : KI.invert(s.c, tlo, ta);
                    s.rows = reverse_rows(KI.leg_nodes(s.c, ts, ta));
                    append_rows(s.rows, KI.leg_nodes(s.c, ts, M));
                    append_rows(s.rows,
                                reflect_rows(reverse_rows(KR.leg_nodes(s.c, 2.0 * M - tb, M)), M));
                    s.length = KI.leg(s.c, ts, ta).length + KI.leg(s.c, ts, M).length +
                               KR.leg(s.c, 2.0 * M - tb, M).length;
                } else {
                    const double u_floor = 2.0 * M - thi;
                    const double us = s.c <= floor_v ? u_floor
                                                     : KR.invert(s.c, u_floor, 2.0 * M - tb);
                    // Traversal ta -> M -> tb -> turning point and back is the
                    // reverse picture: build tb-side first, then reverse.
                    Rows right = reverse_rows(KR.leg_nodes(s.c, us, 2.0 * M - tb));
                    append_rows(right, KR.leg_nodes(s.c, us, M));
                    right = reflect_rows(right, M); // real t: tb down to turn, back to M
                    Rows whole = KI.leg_nodes(s.c, ta, M);
                    append_rows(whole, reverse_rows(right));
                    s.rows = std::move(whole);
                    s.length = KR.leg(s.c, us, 2.0 * M - tb).length +
                               KR.leg(s.c, us, M).length + KI.leg(s.c, ta, M).length;
                }
                (void)legL;
                (void)legR;
                shot = s;
            }
        }
        break;
    }
    default:
        return std::nullopt;
    }

    if (!shot) return std::nullopt;

    if (shot->through_apex) {
        const double L = shot->length;
        path.length = L;
        path.shooting_constant = 0.0;
        const int half = 128;
        const double leg0 = std::fabs(t0 - apex_t), leg1 = std::fabs(t1 - apex_t);
        for (int i = 0; i <= half; ++i) {
            const double t = t0 + (apex_t - t0) * i / half;
            path.nodes.push_back({leg0 * i / half / L, t, r0, 0.0, L});
        }
        for (int i = 1; i <= half; ++i) {
            const double t = apex_t + (t1 - apex_t) * i / half;
            path.nodes.push_back({(leg0 + leg1 * i / half) / L, t, r1, 0.0, L});
        }
        return path;
    }

    Rows rows = std::move(shot->rows);
    if (t0 > t1) rows = reverse_rows(rows);
    const double total_swing = rows.back()[1];
    const double arcL = rows.back()[2];
    const double L = shot->length;
    path.nodes.reserve(rows.size());
    for (const auto& row : rows) {
        const double s = arcL > 0.0 ? row[2] / arcL : 0.0;
        const double fv = f_.f(row[0]);
        path.nodes.push_back(
            {s, row[0], r0 + dir * row[1], L * shot->c / (fv * fv), L});
    }
    // Snap the endpoints (bisection closes the displacement to ~1e-15).
    path.nodes.front().r = r0;
    path.nodes.back().r = r0 + dir * total_swing;
    path.length = L;
    path.shooting_constant = shot->c * L;
    return path;
}

std::optional<GeodesicPath> metric_clairaut_path(const WarpingFunction& f, double t0, double r0,
                                                 double t1, double r1,
                                                 const GeodesicOptions& opts) {
    MetricShooter shooter(f, opts);
    return shooter.solve(t0, r0, t1, r1);
}

GeodesicPath metric_geodesic_2d(const WarpingFunction& f, double t0, double r0, double t1,
                                double r1, const GeodesicOptions& opts) {
    GeodesicPath path;
    path.kind = GeodesicPath::Kind::MetricMinimizer;
    const double d = std::fabs(r1 - r0);
    if (d == 0.0) return vertical_path(f, t0, r0, t1, false);

    // Shooting covers warpers that are monotone from the lower end (cones);
    // the lattice below is the robust path for the rest.
    if (auto shot = metric_clairaut_path(f, t0, r0, t1, r1, opts)) return *shot;

    // A provable box: the geodesic cannot wander in t farther than the best
    // vertical-horizontal-vertical candidate length.
    double bound = infinity();
    for (int k = 0; k <= 100; ++k) {
        const double u = f.tlo() + (f.thi() - f.tlo()) * k / 100.0;
        bound = std::min(bound, std::fabs(t0 - u) + std::fabs(t1 - u) + f.f(u) * d);
    }
    const double tlo = std::max(f.tlo(), std::min(t0, t1) - bound);
    const double thi = std::min(f.thi(), std::max(t0, t1) + bound);
    const double rlo = std::min(r0, r1), rhi = std::max(r0, r1);

    // Multilevel straightening: solve coarse, subdivide, smooth.  The lattice
    // path and the straight chart segment seed two descent basins (a vanishing
    // warper admits a through-apex route next to the direct one); the shorter
    // straightened result wins.
    int target = 3;
    while (target < opts.grid_resolution + 1) target = 2 * target - 1;
    const double scale = std::max({thi - tlo, rhi - rlo, 1e-12});
    const auto straighten = [&](std::vector<SheetPoint> seed) {
        std::vector<SheetPoint> cur = resample(f, seed, 3);
        while (true) {
            int sweeps = static_cast<int>(cur.size()) <= 65 ? 40 : 14;
            if (opts.straighten_sweeps > 0) sweeps = opts.straighten_sweeps;
            for (int sweep = 0; sweep < sweeps; ++sweep) {
                double moved = 0.0;
                for (std::size_t i = 1; i + 1 < cur.size(); ++i) {
                    SheetPoint before = cur[i];
                    resolve_node(f, cur[i - 1], cur[i], cur[i + 1], rlo, rhi,
                                 scale / cur.size());
                    moved = std::max(moved, std::hypot(cur[i].t - before.t, cur[i].r - before.r));
                }
                if (moved < 1e-12 * scale) break;
            }
            if (static_cast<int>(cur.size()) >= target) break;
            std::vector<SheetPoint> next;
            next.reserve(cur.size() * 2 - 1);
            for (std::size_t i = 0; i + 1 < cur.size(); ++i) {
                next.push_back(cur[i]);
                next.push_back(
                    {0.5 * (cur[i].t + cur[i + 1].t), 0.5 * (cur[i].r + cur[i + 1].r)});
            }
            next.push_back(cur.back());
            cur = std::move(next);
        }
        return cur;
    };

    auto cur = straighten(
        lattice_shortest_path(f, {t0, r0}, {t1, r1}, tlo, thi, rlo, rhi, opts.grid_resolution));
    double length = polyline_length(f, cur);
    {
        auto direct = straighten({{t0, r0}, {0.5 * (t0 + t1), 0.5 * (r0 + r1)}, {t1, r1}});
        const double dlen = polyline_length(f, direct);
        if (dlen < length) {
            length = dlen;
            cur = std::move(direct);
        }
    }
    // Through-apex closed form: vertical legs joined by a free slide where
    // the warper vanishes.
    if (f.f(f.tlo()) <= 1e-12) {
        const double apex_len = (t0 - f.tlo()) + (t1 - f.tlo());
        if (apex_len < length) {
            length = apex_len;
            cur.clear();
            const int half = std::max(target / 2, 8);
            for (int i = 0; i <= half; ++i)
                cur.push_back({t0 - (t0 - f.tlo()) * i / half, r0});
            for (int i = 1; i <= half; ++i)
                cur.push_back({f.tlo() + (t1 - f.tlo()) * i / half, r1});
        }
    }

    path.length = length;
    std::vector<double> cum(cur.size(), 0.0);
    for (std::size_t i = 1; i < cur.size(); ++i)
        cum[i] = cum[i - 1] + seg_len(f, cur[i - 1], cur[i]);
    path.nodes.resize(cur.size());
    double cbar = 0.0;
    int cn = 0;
    for (std::size_t i = 0; i < cur.size(); ++i) {
        const double s = cum[i] / cum.back();
        double vb = 0.0;
        if (i > 0 && i + 1 < cur.size()) {
            const double ds = (cum[i + 1] - cum[i - 1]) / cum.back();
            vb = ds > 0.0 ? std::fabs(cur[i + 1].r - cur[i - 1].r) / ds : 0.0;
        }
        path.nodes[i] = {s, cur[i].t, cur[i].r, vb, length};
        const double fv = f.f(cur[i].t);
        if (vb > 0.0 && fv > 1e-6) {
            cbar += fv * fv * vb;
            ++cn;
        }
    }
    path.shooting_constant = cn > 0 ? cbar / cn : 0.0;
    return path;
}

} // namespace

// ---------------------------------------------------------------------------
// Public geodesic / distance / separation operations
// ---------------------------------------------------------------------------

GeodesicPath geodesic_2d(const WarpingFunction& f, ConePoint a, ConePoint b,
                         const GeodesicOptions& opts) {
    if (f.signature() == Signature::Riemannian)
        return metric_geodesic_2d(f, a.t, a.x, b.t, b.x, opts);
    if (b.t < a.t) throw NoCausalCurveError("Lorentzian geodesic endpoints must be time-ordered");
    if (a.t == b.t && a.x == b.x) return vertical_path(f, a.t, a.x, a.t, true);
    const bool a_apex = std::fabs(f.f(a.t)) < 1e-12;
    const bool b_apex = std::fabs(f.f(b.t)) < 1e-12;
    if (a_apex || b_apex) {
        // Apex points are quotient points: the fiber coordinate is immaterial
        // and the vertical segment is maximizing.
        return vertical_path(f, a.t, a_apex ? b.x : a.x, b.t, true);
    }
    return lorentz_timelike_2d(f, a.t, a.x, b.t, b.x, opts);
}

double GeodesicPath::conserved_drift(const WarpingFunction& f) const {
    if (shooting_constant == 0.0) return 0.0;
    double worst = 0.0;
    for (std::size_t i = 1; i + 1 < nodes.size(); ++i) {
        const double ds = nodes[i + 1].s - nodes[i - 1].s;
        if (ds <= 0.0) continue;
        const double vb = std::fabs(nodes[i + 1].r - nodes[i - 1].r) / ds;
        const double fv = f.f(nodes[i].t);
        if (fv < 1e-6) continue; // conserved quantity degenerates at the apex
        worst = std::max(worst, std::fabs(fv * fv * vb - shooting_constant));
    }
    return worst / std::fabs(shooting_constant);
}

nlohmann::json GeodesicPath::to_json() const {
    nlohmann::json j;
    const char* names[] = {"metric-minimizer", "timelike-maximizer", "null", "causal"};
    j["kind"] = names[static_cast<int>(kind)];
    j["length"] = length;
    j["shooting_constant"] = shooting_constant;
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& n : nodes) rows.push_back({n.s, n.t, n.r, n.v_beta, n.integrand});
    j["nodes"] = rows;
    return j;
}

ConePoint GeodesicPath::at(double s) const {
    if (nodes.empty()) return {};
    if (s <= nodes.front().s) return {nodes.front().t, nodes.front().r};
    if (s >= nodes.back().s) return {nodes.back().t, nodes.back().r};
    std::size_t lo = 0, hi = nodes.size() - 1;
    while (hi - lo > 1) {
        const std::size_t mid = (lo + hi) / 2;
        (nodes[mid].s <= s ? lo : hi) = mid;
    }
    const double span = nodes[hi].s - nodes[lo].s;
    const double w = span > 0.0 ? (s - nodes[lo].s) / span : 0.0;
    return {nodes[lo].t + w * (nodes[hi].t - nodes[lo].t),
            nodes[lo].r + w * (nodes[hi].r - nodes[lo].r)};
}

double time_separation(const ConeSpec& cone, ConePoint p, ConePoint q,
                       const GeodesicOptions& opts) {
    const auto v = causal_relation(cone, p, q, opts);
    if (!v.causal()) return 0.0;
    if (v.apex_flag) return q.t - p.t;
    if (v.margin <= opts.causal_collar) return 0.0;
    const double d = cone.fiber().distance(p.x, q.x);
    auto path = lorentz_timelike_2d(cone.warper(), p.t, 0.0, q.t, d, opts);
    return path.length;
}

double metric_distance(const ConeSpec& cone, ConePoint p, ConePoint q,
                       const GeodesicOptions& opts) {
    if (cone.signature() != Signature::Riemannian)
        throw DomainError("metric_distance requires a Riemannian cone");
    const auto& w = cone.warper();
    const bool p_apex = std::fabs(w.f(p.t)) < 1e-12;
    const bool q_apex = std::fabs(w.f(q.t)) < 1e-12;
    if (p_apex || q_apex) return std::fabs(q.t - p.t);
    const double d = cone.fiber().distance(p.x, q.x);
    if (d == 0.0) return std::fabs(q.t - p.t);
    auto path = metric_geodesic_2d(w, p.t, 0.0, q.t, d, opts);
    return path.length;
}

ConePoint geodesic_point(const ConeSpec& cone, ConePoint p, ConePoint q, double s,
                         const GeodesicOptions& opts) {
    const double d = cone.fiber().distance(p.x, q.x);
    GeodesicPath path;
    if (cone.signature() == Signature::Lorentzian) {
        const auto v = causal_relation(cone, p, q, opts);
        if (!v.causal()) throw NoGeodesicError("no causal geodesic between the endpoints");
        path = geodesic_2d(cone.warper(), {p.t, 0.0}, {q.t, d}, opts);
    } else {
        path = geodesic_2d(cone.warper(), {p.t, 0.0}, {q.t, d}, opts);
    }
    const ConePoint sheet = path.at(s);
    const double rho = std::clamp(sheet.x, 0.0, d);
    return {sheet.t, cone.fiber().interp(p.x, q.x, rho)};
}

double path_length(const ConeSpec& cone, const std::vector<ConePoint>& path) {
    if (path.size() < 2) return 0.0;
    const auto& w = cone.warper();
    double acc = 0.0;
    for (std::size_t i = 1; i < path.size(); ++i) {
        const double dt = path[i].t - path[i - 1].t;
        const double d = cone.fiber().distance(path[i - 1].x, path[i].x);
        const double fm = w.f(0.5 * (path[i - 1].t + path[i].t));
        if (cone.signature() == Signature::Riemannian) {
            acc += std::sqrt(dt * dt + fm * fm * d * d);
        } else {
            const double q = dt * dt - fm * fm * d * d;
            const double tolq = 1e-9 * (dt * dt + fm * fm * d * d + 1e-300);
            if (q < -tolq)
                throw NonCausalPathError("segment leaves the light cone");
            acc += std::sqrt(std::max(q, 0.0));
        }
    }
    return acc;
}

double path_length_variational(const ConeSpec& cone, const std::vector<ConePoint>& path) {
    if (cone.signature() != Signature::Riemannian)
        throw DomainError("variational length form applies to metric cones");
    double acc = 0.0;
    for (std::size_t i = 1; i < path.size(); ++i) {
        const double dt = path[i].t - path[i - 1].t;
        const double d = cone.fiber().distance(path[i - 1].x, path[i].x);
        const double fr = cone.warper().f(path[i].t);
        acc += std::sqrt(dt * dt + fr * fr * d * d);
    }
    return acc;
}

double energy(const ConeSpec& cone, const GeodesicPath& path) {
    if (cone.signature() != Signature::Lorentzian)
        throw DomainError("energy is defined for causal curves");
    double acc = 0.0;
    for (std::size_t i = 1; i < path.nodes.size(); ++i) {
        const auto& a = path.nodes[i - 1];
        const auto& b = path.nodes[i];
        const double ds = b.s - a.s;
        if (ds <= 0.0) continue;
        const double dt = b.t - a.t, dr = b.r - a.r;
        const double fm = cone.warper().f(0.5 * (a.t + b.t));
        acc += 0.5 * (dt * dt - fm * fm * dr * dr) / ds;
    }
    return acc;
}

double fiber_independence_probe(const ConeSpec& a, const ConeSpec& b,
                                const std::vector<ProbePair>& pairs,
                                const GeodesicOptions& opts) {
    if (a.warper().tag() != b.warper().tag() || a.signature() != b.signature() ||
        a.N() != b.N() || a.warper().tlo() != b.warper().tlo() ||
        a.warper().thi() != b.warper().thi())
        throw DomainError("fiber independence probe requires matching warper and N");
    const auto realize = [](const ConeSpec& cone, double d) -> std::pair<double, double> {
        const auto& fib = cone.fiber();
        if (d > fib.diameter() + 1e-12)
            throw DomainError("requested fiber distance exceeds the fiber diameter");
        switch (fib.kind()) {
        case FiberKind::Interval:
            return {fib.lo(), fib.lo() + d};
        case FiberKind::Circle:
            return {0.0, d};
        case FiberKind::FiniteSpace:
            for (std::size_t i = 0; i < fib.size(); ++i)
                for (std::size_t j = 0; j < fib.size(); ++j)
                    if (std::fabs(fib.distance(static_cast<double>(i), static_cast<double>(j)) -
                                  d) < 1e-12)
                        return {static_cast<double>(i), static_cast<double>(j)};
            throw DomainError("finite fiber does not realize the requested distance");
        }
        return {0.0, 0.0};
    };
    double worst = 0.0;
    for (const auto& pr : pairs) {
        const auto [xa0, xa1] = realize(a, pr.d);
        const auto [xb0, xb1] = realize(b, pr.d);
        double va, vb;
        if (a.signature() == Signature::Lorentzian) {
            va = time_separation(a, {pr.t0, xa0}, {pr.t1, xa1}, opts);
            vb = time_separation(b, {pr.t0, xb0}, {pr.t1, xb1}, opts);
        } else {
            va = metric_distance(a, {pr.t0, xa0}, {pr.t1, xa1}, opts);
            vb = metric_distance(b, {pr.t0, xb0}, {pr.t1, xb1}, opts);
        }
        worst = std::max(worst, std::fabs(va - vb));
    }
    return worst;
}

} // namespace conewarp
