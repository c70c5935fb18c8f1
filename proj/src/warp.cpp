#include "conewarp/warp.hpp"

#include <algorithm>
#include <cmath>

#include "conewarp/coeffs.hpp"
#include "conewarp/errors.hpp"

namespace conewarp {

namespace {

constexpr double kBoxHi = 20.0;
constexpr double kBoxLoPositive = 1e-6;

double closed_f(const std::string& tag, double t) {
    if (tag == "sin") return std::sin(t);
    if (tag == "id") return t;
    if (tag == "const") return 1.0;
    if (tag == "sinh") return std::sinh(t);
    if (tag == "exp") return std::exp(t);
    if (tag == "cosh") return std::cosh(t);
    throw UnknownModelError("unknown warper tag: " + tag);
}

double closed_d1(const std::string& tag, double t) {
    if (tag == "sin") return std::cos(t);
    if (tag == "id") return 1.0;
    if (tag == "const") return 0.0;
    if (tag == "sinh") return std::cosh(t);
    if (tag == "exp") return std::exp(t);
    if (tag == "cosh") return std::sinh(t);
    throw UnknownModelError("unknown warper tag: " + tag);
}

double closed_d2(const std::string& tag, double t) {
    if (tag == "sin") return -std::sin(t);
    if (tag == "id" || tag == "const") return 0.0;
    if (tag == "sinh") return std::sinh(t);
    if (tag == "exp") return std::exp(t);
    if (tag == "cosh") return std::cosh(t);
    throw UnknownModelError("unknown warper tag: " + tag);
}

} // namespace

std::string to_string(Signature s) {
    return s == Signature::Riemannian ? "riemannian" : "lorentzian";
}

Signature signature_from_string(const std::string& s) {
    if (s == "riemannian" || s == "riemann" || s == "+") return Signature::Riemannian;
    if (s == "lorentzian" || s == "lorentz" || s == "-") return Signature::Lorentzian;
    throw ConfigError("unknown signature: " + s);
}

WarpingFunction WarpingFunction::closed_form(const std::string& tag, Signature sig, double lo,
                                             double hi) {
    closed_f(tag, 0.5); // validates the tag
    WarpingFunction w;
    w.sig_ = sig;
    w.tag_ = tag;
    w.lo_ = lo;
    w.hi_ = hi;
    w.tlo_ = std::isinf(lo) ? -kBoxHi : lo;
    w.thi_ = std::isinf(hi) ? kBoxHi : hi;
    if (w.tlo_ >= w.thi_) throw TruncationError("truncation box excludes the interval");
    return w;
}

WarpingFunction WarpingFunction::sampled(Signature sig, double lo, double hi,
                                         std::vector<double> values) {
    if (std::isinf(lo) || std::isinf(hi)) throw DomainError("sampled warper needs finite interval");
    if (values.size() < 5) throw GridError("sampled warper needs at least 5 nodes");
    WarpingFunction w;
    w.sig_ = sig;
    w.lo_ = w.tlo_ = lo;
    w.hi_ = w.thi_ = hi;
    w.values_ = std::move(values);
    return w;
}

WarpingFunction WarpingFunction::truncated(double lo, double hi) const {
    WarpingFunction w = *this;
    w.tlo_ = std::max(lo, std::isinf(lo_) ? lo : lo_);
    w.thi_ = std::min(hi, std::isinf(hi_) ? hi : hi_);
    w.user_truncated_ = true;
    if (w.tlo_ >= w.thi_) throw TruncationError("truncation box excludes the interval");
    return w;
}

bool WarpingFunction::vanishes_at_lo() const {
    return !std::isinf(lo_) && std::fabs(f(lo_)) < 1e-12;
}

bool WarpingFunction::vanishes_at_hi() const {
    return !std::isinf(hi_) && std::fabs(f(hi_)) < 1e-12;
}

double WarpingFunction::f(double t) const {
    if (!tag_.empty()) return closed_f(tag_, t);
    const double step = (hi_ - lo_) / static_cast<double>(values_.size() - 1);
    double x = (t - lo_) / step;
    const auto n = static_cast<long>(values_.size());
    if (x <= 0.0) return values_.front();
    if (x >= static_cast<double>(n - 1)) return values_.back();
    const long i = static_cast<long>(x);
    const double w = x - static_cast<double>(i);
    return values_[i] * (1.0 - w) + values_[i + 1] * w;
}

double WarpingFunction::d1(double t) const {
    if (!tag_.empty()) return closed_d1(tag_, t);
    const double step = (hi_ - lo_) / static_cast<double>(values_.size() - 1);
    return (f(t + step) - f(t - step)) / (2.0 * step);
}

double WarpingFunction::d2(double t) const {
    if (!tag_.empty()) return closed_d2(tag_, t);
    const double step = (hi_ - lo_) / static_cast<double>(values_.size() - 1);
    return (f(t + step) - 2.0 * f(t) + f(t - step)) / (step * step);
}

bool WarpingFunction::apex_integral_diverges() const {
    // Dyadic probe: with f ~ c t^alpha at the endpoint, the contribution of
    // [d/2, d] scales by 2^{alpha-1} per halving, so the integral diverges
    // (alpha >= 1) iff the ratio of consecutive contributions stays >= 1.
    // Sampled warpers look linear below their grid step; stop there.
    const double min_d = values_.empty() ? 1e-7 * (thi_ - tlo_)
                                         : 4.0 * (hi_ - lo_) / static_cast<double>(values_.size() - 1);
    const auto diverges_at = [&](double endpoint, double inward) {
        double d = 0.125 * (thi_ - tlo_);
        double prev = -1.0, ratio = 1.0;
        while (d / 2.0 >= min_d) {
            double acc = 0.0;
            const int n = 64;
            for (int i = 0; i < n; ++i) {
                const double t = endpoint + inward * (d / 2.0 + (d / 2.0) * (i + 0.5) / n);
                acc += (d / 2.0) / n / std::max(f(t), 1e-300);
            }
            if (prev > 0.0) ratio = acc / prev;
            prev = acc;
            d /= 2.0;
        }
        return ratio >= 0.98;
    };
    bool ok = true;
    if (vanishes_at_lo()) ok = ok && diverges_at(lo_, +1.0);
    if (vanishes_at_hi()) ok = ok && diverges_at(hi_, -1.0);
    return ok;
}

nlohmann::json WarpingFunction::to_json() const {
    nlohmann::json j;
    j["interval"] = {lo_, hi_};
    j["signature"] = to_string(sig_);
    if (!tag_.empty())
        j["tag"] = tag_;
    else
        j["samples"] = values_;
    if (tlo_ != lo_ || thi_ != hi_) j["truncation"] = {tlo_, thi_};
    return j;
}

WarpingFunction WarpingFunction::from_json(const nlohmann::json& j) {
    const auto iv = j.at("interval");
    double lo = iv.at(0).is_null() ? -infinity() : iv.at(0).get<double>();
    double hi = iv.at(1).is_null() ? infinity() : iv.at(1).get<double>();
    const Signature sig = signature_from_string(j.at("signature").get<std::string>());
    WarpingFunction w =
        j.contains("tag")
            ? closed_form(j.at("tag").get<std::string>(), sig, lo, hi)
            : sampled(sig, lo, hi, j.at("samples").get<std::vector<double>>());
    if (j.contains("truncation")) {
        const auto tr = j.at("truncation");
        w = w.truncated(tr.at(0).get<double>(), tr.at(1).get<double>());
    }
    return w;
}

CatalogEntry catalog(const std::string& tag) {
    const double inf = infinity();
    // (interval, f, eta, kappa) rows; unbounded intervals get the default
    // truncation box, [0, inf) starts just above 0 where f may vanish.
    if (tag == "L1")
        return {tag, "anti-de-Sitter suspension",
                WarpingFunction::closed_form("sin", Signature::Lorentzian, 0.0, kPi),
                {-1.0, -1.0, false}};
    if (tag == "L2")
        return {tag, "Minkowski cone",
                WarpingFunction::closed_form("id", Signature::Lorentzian, 0.0, inf),
                {0.0, -1.0, false}};
    if (tag == "L3")
        return {tag, "Minkowski product",
                WarpingFunction::closed_form("const", Signature::Lorentzian, -inf, inf),
                {0.0, 0.0, false}};
    if (tag == "L4")
        return {tag, "Lorentzian elliptic cone",
                WarpingFunction::closed_form("sinh", Signature::Lorentzian, 0.0, inf),
                {1.0, -1.0, false}};
    if (tag == "L5")
        return {tag, "Lorentzian parabolic cone",
                WarpingFunction::closed_form("exp", Signature::Lorentzian, -inf, inf),
                {1.0, 0.0, false}};
    if (tag == "L6")
        return {tag, "de-Sitter cone",
                WarpingFunction::closed_form("cosh", Signature::Lorentzian, -inf, inf),
                {1.0, 1.0, false}};
    if (tag == "R1")
        return {tag, "spherical suspension",
                WarpingFunction::closed_form("sin", Signature::Riemannian, 0.0, kPi),
                {1.0, 1.0, false}};
    if (tag == "R2")
        return {tag, "Euclidean cone",
                WarpingFunction::closed_form("id", Signature::Riemannian, 0.0, inf),
                {0.0, 1.0, false}};
    if (tag == "R3")
        return {tag, "Cartesian product",
                WarpingFunction::closed_form("const", Signature::Riemannian, -inf, inf),
                {0.0, 0.0, false}};
    if (tag == "R4")
        return {tag, "elliptic cone",
                WarpingFunction::closed_form("sinh", Signature::Riemannian, 0.0, inf),
                {-1.0, 1.0, false}};
    if (tag == "R5")
        return {tag, "parabolic cone",
                WarpingFunction::closed_form("exp", Signature::Riemannian, -inf, inf),
                {-1.0, 0.0, false}};
    if (tag == "R6")
        return {tag, "hyperbolic cone",
                WarpingFunction::closed_form("cosh", Signature::Riemannian, -inf, inf),
                {-1.0, -1.0, false}};
    throw UnknownModelError("unknown catalog tag: " + tag);
}

std::vector<CatalogEntry> full_catalog() {
    std::vector<CatalogEntry> rows;
    for (const char* t : {"L1", "L2", "L3", "L4", "L5", "L6", "R1", "R2", "R3", "R4", "R5", "R6"})
        rows.push_back(catalog(t));
    return rows;
}

DensityCheckResult check_warper(const WarpingFunction& f, double kappa, double tol) {
    const double lo = f.tlo(), hi = f.thi();
    const double sgn = f.signature() == Signature::Riemannian ? 1.0 : -1.0;
    const int n = 2001;
    DensityCheckResult res;
    res.min_slack = infinity();
    for (int i = 0; i < n; ++i) {
        const double t = lo + (hi - lo) * i / (n - 1);
        const double residual = f.d2(t) + sgn * kappa * f.f(t);
        const double slack = -residual;
        if (slack < res.min_slack) {
            res.min_slack = slack;
            res.witness = {t, residual, 0.0};
        }
    }
    res.passed = res.min_slack >= -tol;
    return res;
}

CurvatureBudget compute_eta(const WarpingFunction& f, double kappa) {
    // Closed-form rows with their table budgets: the sup is constant there.
    const double sgn = f.signature() == Signature::Riemannian ? 1.0 : -1.0;
    if (!f.tag().empty()) {
        const std::string& tag = f.tag();
        // +-(f')^2 + kappa f^2 is exactly constant for these pairs.
        if (tag == "const") return {kappa, kappa, false};
        if (tag == "id" && kappa == 0.0) return {kappa, sgn, false};
        if (tag == "sin" && kappa == sgn) return {kappa, sgn, false};
        if (tag == "sinh" && kappa == -sgn) return {kappa, sgn, false};
        if (tag == "exp" && kappa == -sgn) return {kappa, 0.0, false};
        if (tag == "cosh" && kappa == -sgn) return {kappa, -sgn, false};
    }
    const int n = 2001;
    double sup = -infinity();
    for (int i = 0; i < n; ++i) {
        const double t = f.tlo() + (f.thi() - f.tlo()) * i / (n - 1);
        const double fp = f.d1(t), fv = f.f(t);
        sup = std::max(sup, sgn * fp * fp + kappa * fv * fv);
    }
    return {kappa, sup, true};
}

SheetRicci sheet_ricci_N(const WarpingFunction& f, const DensityProfile& h, double N,
                         std::array<double, 2> point, std::array<double, 2> direction) {
    const double t = point[0], r = point[1];
    const double fv = f.f(t);
    if (fv <= 0.0) throw SingularPointError("sheet Ricci undefined where f vanishes");
    const double eps = f.signature() == Signature::Riemannian ? 1.0 : -1.0;

    const double m = 1.0 / (N - 1.0);
    const auto u = [&](double x) { return std::pow(h.value(x), m); };
    const double ur = u(r);
    if (ur <= 0.0) throw SingularPointError("sheet Ricci undefined where h vanishes");
    double u2;
    if (h.kind() == DensityKind::ClosedForm) {
        const double step = 1e-4 * (h.hi() - h.lo());
        u2 = (u(r + step) - 2.0 * ur + u(r - step)) / (step * step);
    } else {
        const double step = 2.0 * h.grid_step();
        u2 = (u(r + step) - 2.0 * ur + u(r - step)) / (step * step);
    }

    // Components of Ric - (N-1) Hess(w)/w for w = f u, in the (t, r) frame:
    //   (t,t): -N f''/f
    //   (t,r): 0
    //   (r,r): -eps f'' f - (N-1)(u''/u + eps (f')^2)
    const double fpp = f.d2(t), fp = f.d1(t);
    const double R_tt = -N * fpp / fv;
    const double R_rr = -eps * fpp * fv - (N - 1.0) * (u2 / ur + eps * fp * fp);

    const double a = direction[0], b = direction[1];
    SheetRicci out;
    out.point = point;
    out.direction = direction;
    out.value_ricci = a * a * R_tt + b * b * R_rr;
    out.value_metric = eps * a * a + fv * fv * b * b;
    return out;
}

DensityCheckResult check_G_concavity(const WarpingFunction& f, const DensityProfile& h,
                                     double kappa, double N) {
    const double eps = f.signature() == Signature::Riemannian ? 1.0 : -1.0;
    const double m = 1.0 / (N - 1.0);
    const auto u = [&](double x) { return std::pow(h.value(x), m); };

    // Boundary collar keeps finite differences away from f = 0 and h = 0.
    const double ct = 1e-3 * (f.thi() - f.tlo());
    const double cr = 1e-3 * (h.hi() - h.lo());
    const double t0 = f.tlo() + ct, t1 = f.thi() - ct;
    const double r0 = h.lo() + cr, r1 = h.hi() - cr;
    const double dr = h.kind() == DensityKind::Sampled ? 2.0 * h.grid_step() : 1e-4 * (r1 - r0);

    DensityCheckResult res;
    res.min_slack = infinity();
    const int nt = 41, nr = 41, ndir = 16;
    for (int i = 0; i < nt; ++i) {
        const double t = t0 + (t1 - t0) * i / (nt - 1);
        const double fv = f.f(t), fp = f.d1(t), fpp = f.d2(t);
        if (fv <= 0.0) continue;
        for (int j = 0; j < nr; ++j) {
            const double r = r0 + (r1 - r0) * j / (nr - 1);
            // w = f(t) u(r) is separable: second t-derivatives come from the
            // warper evaluators, u-derivatives from 1D central differences,
            // the cross term is f' u'.  The covariant correction kills the
            // cross term exactly and moves (f')^2 into the rr entry.
            const double uv = u(r);
            const double up = (u(r + dr) - u(r - dr)) / (2.0 * dr);
            const double upp = (u(r + dr) - 2.0 * uv + u(r - dr)) / (dr * dr);
            const double wv = fv * uv;
            const double H_tt = fpp * uv;
            const double H_tr = fp * up - (fp / fv) * (fv * up);
            const double H_rr = fv * upp + eps * fv * fp * fp * uv;
            const double M_tt = H_tt + kappa * wv * eps;
            const double M_tr = H_tr;
            const double M_rr = H_rr + kappa * wv * fv * fv;
            // Directions on the coordinate circle; negativity of the form is
            // parametrization-independent.
            for (int k = 0; k < ndir; ++k) {
                const double phi = kPi * k / ndir;
                const double ca = std::cos(phi), cb = std::sin(phi);
                const double q = ca * ca * M_tt + 2.0 * ca * cb * M_tr + cb * cb * M_rr;
                const double slack = -q;
                if (slack < res.min_slack) {
                    res.min_slack = slack;
                    res.witness = {t, r, phi};
                }
            }
        }
    }
    res.passed = res.min_slack >= -1e-6;
    return res;
}

} // namespace conewarp
