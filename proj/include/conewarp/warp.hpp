#pragma once

#include <array>
#include <string>
#include <vector>

#include <json.hpp>

#include "conewarp/densities.hpp"

namespace conewarp {

enum class Signature { Riemannian, Lorentzian };

std::string to_string(Signature s);
Signature signature_from_string(const std::string& s);

/// Warping function f >= 0 on a base interval I with f vanishing only at
/// endpoints of I.  Unbounded intervals carry a truncation box for numerics.
class WarpingFunction {
  public:
    static WarpingFunction closed_form(const std::string& tag, Signature sig, double lo,
                                       double hi);
    static WarpingFunction sampled(Signature sig, double lo, double hi,
                                   std::vector<double> values);
    /// Closed-form warper with a custom truncation of an unbounded interval.
    WarpingFunction truncated(double lo, double hi) const;

    Signature signature() const { return sig_; }
    const std::string& tag() const { return tag_; }
    /// Declared interval, possibly infinite endpoints.
    double lo() const { return lo_; }
    double hi() const { return hi_; }
    /// Working (truncated) interval.
    double tlo() const { return tlo_; }
    double thi() const { return thi_; }
    /// True when the working interval was set by the caller (a hard domain)
    /// rather than the default numerical box on an unbounded interval.
    bool user_truncated() const { return user_truncated_; }
    bool vanishes_at_lo() const;
    bool vanishes_at_hi() const;

    double f(double t) const;
    double d1(double t) const;
    double d2(double t) const;

    /// Numerical probe of the divergence condition int 1/f = inf toward a
    /// vanishing endpoint.
    bool apex_integral_diverges() const;

    nlohmann::json to_json() const;
    static WarpingFunction from_json(const nlohmann::json& j);

  private:
    WarpingFunction() = default;
    Signature sig_ = Signature::Riemannian;
    std::string tag_;
    double lo_ = 0.0, hi_ = 1.0;   // declared
    double tlo_ = 0.0, thi_ = 1.0; // truncated
    bool user_truncated_ = false;
    std::vector<double> values_;   // sampled kind
};

struct CurvatureBudget {
    double kappa = 0.0;
    double eta = 0.0;
    bool eta_is_sup = false; // computed as a supremum vs declared table value
};

struct CatalogEntry {
    std::string tag; // L1..L6, R1..R6
    std::string name;
    WarpingFunction warper;
    CurvatureBudget budget;
};

/// The twelve model rows: (I, f, eta, kappa) for L1..L6 and R1..R6.
CatalogEntry catalog(const std::string& tag);
std::vector<CatalogEntry> full_catalog();

/// Verifies f'' + kappa f <= tol (Riemannian) or f'' - kappa f <= tol
/// (Lorentzian) on a dense grid; witness is the worst point.
DensityCheckResult check_warper(const WarpingFunction& f, double kappa, double tol);

/// eta = sup over I of -(f')^2 + kappa f^2 (Lorentzian) or
/// (f')^2 + kappa f^2 (Riemannian).  Catalog warpers return the table value.
CurvatureBudget compute_eta(const WarpingFunction& f, double kappa);

struct SheetRicci {
    std::array<double, 2> point{};     // (t, r)
    std::array<double, 2> direction{}; // (a, b)
    double value_ricci = 0.0;          // Bakry-Emery (N+1)-Ricci form on the direction
    double value_metric = 0.0;         // +-a^2 + f^2 b^2
};

/// Weighted (N+1)-Ricci form of the 2D sheet +-I x_f [a,b] with weight
/// f^{N-1} h relative to the sheet volume, evaluated on a tangent direction.
SheetRicci sheet_ricci_N(const WarpingFunction& f, const DensityProfile& h, double N,
                         std::array<double, 2> point, std::array<double, 2> direction);

/// Hessian-form inequality for G = f^{N-1} h:
/// Hess G^{1/(N-1)} + kappa G^{1/(N-1)} g <= 0 as a quadratic form, checked on
/// a grid of points and directions.
DensityCheckResult check_G_concavity(const WarpingFunction& f, const DensityProfile& h,
                                     double kappa, double N);

} // namespace conewarp
