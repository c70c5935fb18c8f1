#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "conewarp/cone_geom.hpp"
#include "conewarp/transport.hpp"

namespace conewarp {

struct Witness {
    double t0 = 0.0, r0 = 0.0; // geodesic start (or cell anchor)
    double t1 = 0.0, r1 = 0.0; // geodesic end (or target point)
    double s = 0.0;            // parameter attaining the slack
    double slack = 0.0;
};

struct VerificationReport {
    std::string condition; // CD, TCD, MCP, TMCP, density-concavity, warper, ...
    double K = 0.0;
    double N = 0.0;
    double p = 0.0;
    Signature signature = Signature::Lorentzian;
    long samples = 0;
    double min_slack = 0.0;
    double tolerance = 0.0;
    bool passed = false;
    bool not_applicable = false;
    std::string note;
    std::string anchor; // label of the inequality being checked
    std::vector<Witness> witnesses;
    std::int64_t runtime_ms = 0;

    void record(const Witness& w); // keeps the 10 worst, updates min_slack
    void finalize();               // passed <=> min_slack >= -tolerance
    nlohmann::json to_json(bool include_runtime = true) const;
};

struct NeedleOptions {
    int sample_count = 1000;
    std::uint64_t seed = 12345;
    double tol = 1e-6;
    int triple_nodes = 33;  // parameter subgrid per geodesic
    int threads = 0;        // 0: env/default
    GeodesicOptions geo{};
};

/// Needle-level concavity along geodesics of a 2D sheet with weight
/// f^{N-1} h: checks the sigma-concavity of phi^{1/(N-1)}, phi = (f^{N-1}h)
/// along the curve, over stratified geodesic samples and parameter triples.
VerificationReport verify_needle_concavity(const WarpingFunction& f, const DensityProfile& h,
                                           double kappa, double N, const NeedleOptions& opts);

struct ContractionExperiment {
    double t_lo = 0.0, t_hi = 0.0; // cell block A in sheet coordinates
    double r_lo = 0.0, r_hi = 0.0;
    int cells_t = 16, cells_r = 16;
    ConePoint target;                             // o, chronologically related to A
    std::vector<double> times{1.0 / 8, 2.0 / 8, 3.0 / 8,
                              4.0 / 8, 5.0 / 8, 6.0 / 8, 7.0 / 8}; // s values
};

struct ContractionOptions {
    double tol_rel = 0.02; // relative slack tolerance at the default lattice
    GeodesicOptions geo{};
};

/// Measure contraction along geodesics toward a point: transports lattice
/// cells of A to time s (s=1 is A itself, s->0 collapses onto the target),
/// measures m(A_s) by Jacobian-weighted cell images, and checks both the
/// sigma-form m(A_s)^{1/N} >= sigma^{(s)} m(A)^{1/N} and the tau-form
/// m(A_s) >= int_A tau^{(s)}(tau(x,o))^N dm.
VerificationReport verify_contraction(const ConeSpec& cone, const ContractionExperiment& exp,
                                      double K, double N, const ContractionOptions& opts = {});

struct PointwiseTcdOptions {
    double tol_rel = 0.02;
    std::vector<double> times{0.25, 0.5, 0.75};
    GeodesicOptions geo{};
};

/// Pointwise displacement inequality
///   rho_t(g_t)^{-1/N} >= tau^{(1-t)}(tau(g_0,g_1)) rho_0^{-1/N}
///                       + tau^{(t)}(tau(g_0,g_1)) rho_1^{-1/N}
/// for grid-cell measures on a 2D sheet, with interpolant densities from
/// cell-corner pushforward determinants.
VerificationReport verify_pointwise_tcd(const ConeSpec& cone, double K, double Nprime, double p,
                                        const DiscreteMeasure& mu0, const DiscreteMeasure& mu1,
                                        double cell_w, double cell_h,
                                        const PointwiseTcdOptions& opts = {});

struct FamilyMember {
    std::string label;
    WarpingFunction warper;
    DensityProfile density;
    double kappa = 0.0;
    double eta = 0.0;
};

/// Converse soundness sweep: any member passing the needle check while
/// violating the warper inequality or the density conclusion is an alarm.
VerificationReport detect_converse_violation(const std::vector<FamilyMember>& family, double N,
                                             const NeedleOptions& opts);

struct HawkingOptions {
    std::optional<double> comparison_bound; // externally supplied D, if any
    int samples = 200;
    std::uint64_t seed = 777;
    GeodesicOptions geo{};
};

/// Base bound tau_Sigma <= sup I - r0 on future timelike geodesics from the
/// slice {r0} x X, after checking the mean-curvature hypothesis
/// (log f)'(r0) >= H/N and the case conditions on (K, H, N).
VerificationReport check_hawking(const ConeSpec& cone, double r0, double H, double K, double N,
                                 const HawkingOptions& opts = {});

/// Future volume of the slab above r0: m(X) * int_{r0}^{sup I} f^N dt by
/// adaptive quadrature; finite => future volume incomplete.
std::pair<double, VerificationReport> check_volume_singularity(const ConeSpec& cone, double r0);

struct SplittingProbe {
    std::vector<double> base_lengths{1.0, 2.0, 5.0, 10.0, 20.0, 39.0};
    double const_tol = 1e-9;
};

/// Splitting dichotomy: constant f on R iff arbitrarily long timelike
/// geodesics survive the probe; convex f is flagged not applicable.
VerificationReport check_splitting_hypotheses(const ConeSpec& cone,
                                              const SplittingProbe& probe = {});

struct CdconOptions {
    NeedleOptions needle{};
    ContractionOptions contraction{};
    int contraction_cells = 12;
};

/// Conic curvature-dimension classification of an interval fiber:
/// K = 0 delegates to the density check; K = +-(N-1) builds the Euclidean or
/// Minkowski cone and runs needle + contraction; other K rescales the fiber
/// by sqrt((N-1)/|K|) and recurses.
VerificationReport classify_cdcon(const DensityProfile& fiber, double K, double N, double p,
                                  const CdconOptions& opts = {});

/// Deterministic merge (min slack, concatenated sorted witnesses).
VerificationReport merge_reports(const std::string& condition,
                                 const std::vector<VerificationReport>& parts);

int verify_worker_count(int requested);

} // namespace conewarp
