#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "conewarp/densities.hpp"
#include "conewarp/warp.hpp"

namespace conewarp {

enum class FiberKind { Interval, Circle, FiniteSpace };

/// Fiber of a generalized cone: an interval with |x-y|, a circle of given
/// circumference, or a finite metric space with an explicit distance matrix.
class Fiber {
  public:
    static Fiber interval(double a, double b);
    static Fiber interval(double a, double b, DensityProfile measure);
    static Fiber circle(double circumference);
    static Fiber circle(double circumference, DensityProfile measure);
    static Fiber finite(std::vector<std::vector<double>> distance_matrix,
                        std::vector<double> weights);

    FiberKind kind() const { return kind_; }
    double lo() const { return a_; }
    double hi() const { return b_; }
    double circumference() const { return circ_; }
    std::size_t size() const { return matrix_.size(); }

    double distance(double x, double y) const;
    /// Point at metric distance rho from x toward y (rho <= distance(x,y)).
    double interp(double x, double y, double rho) const;
    double total_mass() const;
    /// Diameter bound used when sampling fiber displacements.
    double diameter() const;
    const std::optional<DensityProfile>& measure() const { return measure_; }

    nlohmann::json to_json() const;
    static Fiber from_json(const nlohmann::json& j);

  private:
    Fiber() = default;
    FiberKind kind_ = FiberKind::Interval;
    double a_ = 0.0, b_ = 1.0;
    double circ_ = 0.0;
    std::optional<DensityProfile> measure_;
    std::vector<std::vector<double>> matrix_;
    std::vector<double> weights_;
};

struct ConePoint {
    double t = 0.0; // base coordinate
    double x = 0.0; // fiber coordinate (index for finite fibers)
};

/// Generalized cone +-I x_f X with reference measure f(t)^N dt (x) fiber
/// measure.  Immutable after construction; all queries are pure.
class ConeSpec {
  public:
    ConeSpec(WarpingFunction warper, Fiber fiber, double N);

    const WarpingFunction& warper() const { return warper_; }
    const Fiber& fiber() const { return fiber_; }
    double N() const { return N_; }
    Signature signature() const { return warper_.signature(); }

    /// Reference-measure density f(t)^N * (fiber density) at a sheet point.
    double measure_density(double t, double x) const;

    nlohmann::json to_json() const;
    static ConeSpec from_json(const nlohmann::json& j);
    static ConeSpec from_catalog(const std::string& tag, Fiber fiber, double N);

  private:
    WarpingFunction warper_;
    Fiber fiber_;
    double N_;
};

struct GeodesicOptions {
    int quad_intervals = 2048;   // base quadrature for shooting / causal margins
    int grid_resolution = 400;   // metric lattice per sheet
    double causal_collar = 1e-6; // null-boundary classification collar
    double bisect_tol = 1e-10;   // shooting-constant bisection
    int straighten_sweeps = 0;   // 0: auto per level
};

struct PathNode {
    double s;         // curve parameter in [0,1] (tau- or arclength-proportional)
    double t;         // base coordinate
    double r;         // fiber arc coordinate along the reduced sheet
    double v_beta;    // fiber metric speed w.r.t. s
    double integrand; // local speed sqrt(|alpha'^2 +- f^2 v_beta^2|)
};

struct GeodesicPath {
    enum class Kind { MetricMinimizer, TimelikeMaximizer, Null, Causal };
    Kind kind = Kind::MetricMinimizer;
    std::vector<PathNode> nodes;
    double length = 0.0;            // d-length or tau-length
    double shooting_constant = 0.0; // conserved c = f^2 v_beta (w.r.t. s)

    /// Max relative drift of f(t_k)^2 v_beta(k) against the shooting
    /// constant, with v_beta recomputed from the nodes.
    double conserved_drift(const WarpingFunction& f) const;
    ConePoint at(double s) const; // interpolated (t, r)
    nlohmann::json to_json() const;
};

enum class CausalRelation { Chronological, Causal, Unrelated };

struct CausalVerdict {
    CausalRelation relation = CausalRelation::Unrelated;
    double margin = 0.0; // int_s^t du/f - d_X(x,y), signed
    bool apex_flag = false;
    bool chronological() const { return relation == CausalRelation::Chronological; }
    bool causal() const { return relation != CausalRelation::Unrelated; }
};

/// Length of a discretized path given by cone points (parametrized by node
/// order).  Lorentzian paths must be causal nodewise within tolerance.
double path_length(const ConeSpec& cone, const std::vector<ConePoint>& path);
/// Variational cross-check form of the metric length (right-endpoint f).
double path_length_variational(const ConeSpec& cone, const std::vector<ConePoint>& path);

CausalVerdict causal_relation(const ConeSpec& cone, ConePoint p, ConePoint q,
                              const GeodesicOptions& opts = {});

double time_separation(const ConeSpec& cone, ConePoint p, ConePoint q,
                       const GeodesicOptions& opts = {});

double metric_distance(const ConeSpec& cone, ConePoint p, ConePoint q,
                       const GeodesicOptions& opts = {});

/// Geodesic on the reduced 2D sheet between (t0,r0) and (t1,r1):
/// Lorentzian timelike = bisection on the shooting constant; Riemannian =
/// grid-graph shortest path plus straightening, with a monotone-base
/// shooting fast path.
GeodesicPath geodesic_2d(const WarpingFunction& f, ConePoint a, ConePoint b,
                         const GeodesicOptions& opts = {});

/// Point at parameter s of the cone geodesic from p to q (fiber independence:
/// the base solve is 2D, the fiber moves along its own geodesic).
ConePoint geodesic_point(const ConeSpec& cone, ConePoint p, ConePoint q, double s,
                         const GeodesicOptions& opts = {});

/// Energy of a causal curve parametrized by its node parameters.
double energy(const ConeSpec& cone, const GeodesicPath& path);

struct ProbePair {
    double t0, t1, d;
};

/// Max discrepancy of tau (Lorentzian) or distance (Riemannian) between two
/// cones sharing warper and N, over pairs with equal reduced data.
double fiber_independence_probe(const ConeSpec& a, const ConeSpec& b,
                                const std::vector<ProbePair>& pairs,
                                const GeodesicOptions& opts = {});

} // namespace conewarp
