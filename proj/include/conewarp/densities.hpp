#pragma once

#include <array>
#include <functional>
#include <string>
#include <vector>

#include <json.hpp>

namespace conewarp {

enum class DensityKind { ClosedForm, Sampled };

/// One-dimensional density h on a closed interval [a,b], either one of the
/// closed-form catalog entries (with analytic derivatives) or uniform-grid
/// samples with a piecewise-linear continuous representative.
class DensityProfile {
  public:
    static DensityProfile closed_form(const std::string& tag, double N, double a, double b);
    static DensityProfile sampled(double a, double b, std::vector<double> values);

    double lo() const { return a_; }
    double hi() const { return b_; }
    DensityKind kind() const { return kind_; }
    const std::string& tag() const { return tag_; }
    double exponent() const { return N_; }
    std::size_t sample_count() const { return values_.size(); }
    double grid_step() const;

    double value(double r) const;
    /// Analytic derivatives; Sampled profiles use central differences.
    double d1(double r) const;
    double d2(double r) const;

    double max_value() const;
    /// Total mass of h dr, composite Simpson.
    double mass() const;

    /// Rescaled profile: domain lam*[a,b], pushforward density h(r/lam)/lam.
    DensityProfile rescaled(double lam) const;

    nlohmann::json to_json() const;
    static DensityProfile from_json(const nlohmann::json& j);

    /// Natural eta making the catalog density an equality case of the
    /// CD-density ODE (h^{1/(N-1)})'' + eta h^{1/(N-1)} = 0.
    static double natural_eta(const std::string& tag);
    static const std::vector<std::string>& catalog_tags();

  private:
    DensityProfile() = default;
    double a_ = 0.0, b_ = 1.0;
    DensityKind kind_ = DensityKind::ClosedForm;
    std::string tag_;   // closed-form only
    double N_ = 2.0;    // closed-form exponent parameter
    double scale_ = 1.0; // domain rescale factor applied to closed forms
    std::vector<double> values_; // sampled only
};

struct DensityCheckResult {
    bool passed = false;
    double min_slack = 0.0;
    std::array<double, 3> witness{0.0, 0.0, 0.0}; // (r0, r1, s) or (t, residual, 0)
    bool vanishing = false;
};

/// Checks that h is a CD(eta(N-1),N)-density on its interval: the integrated
/// sigma-concavity of h^{1/(N-1)} over a deterministic (r0, r1, s) grid plus
/// the distributional ODE (h^{1/(N-1)})'' + eta h^{1/(N-1)} <= 0 via central
/// second differences at interior nodes.
DensityCheckResult check_cd_density(const DensityProfile& h, double eta, double N, double tol);

/// Power-like convolution h^eps(r) = [h^{1/p} * phi_eps(r)]^p on
/// [a+eps, b-eps], with a fixed C^inf bump mollifier supported in (0,1) and
/// composite Simpson on 64 subintervals.  p = exponent_base is supplied by
/// the caller (N+1 or N-1 depending on the regularization in use).
DensityProfile power_convolution(const DensityProfile& h, double epsilon, double exponent_base);

/// Catalog densities: sin^{N-1}, sinh^{N-1}, cosh^{N-1}, r^{N-1} ("id"),
/// constant 1, exp((N-1)r).
DensityProfile model_density(const std::string& tag, double N, double a, double b);
DensityProfile model_density(const std::string& tag, double N);

} // namespace conewarp
