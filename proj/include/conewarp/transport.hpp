#pragma once

#include <functional>
#include <optional>
#include <utility>
#include <vector>

#include "conewarp/cone_geom.hpp"

namespace conewarp {

struct DiscreteMeasure {
    std::vector<ConePoint> support;
    std::vector<double> weights; // nonnegative, sum 1 within 1e-12

    static DiscreteMeasure dirac(ConePoint p);
    void validate() const;
    std::size_t size() const { return support.size(); }
};

struct TransportPlan {
    std::vector<std::vector<double>> matrix; // mu-support x nu-support masses
    double value = 0.0;                      // attained transport functional
    bool optimal = false;
    bool causal_feasible = true; // Lorentzian: a causal coupling exists
    std::vector<std::tuple<int, int, double>> triplets(double cutoff = 1e-15) const;
};

using CostOracle = std::function<double(const ConePoint&, const ConePoint&)>;

/// Exact p-Wasserstein distance between finite measures: LP optimum of
/// int d^p dpi over couplings, returned as (optimum^{1/p}, plan).
std::pair<double, TransportPlan> wasserstein_p(const DiscreteMeasure& mu,
                                               const DiscreteMeasure& nu, double p,
                                               const CostOracle& distance);

/// p-Lorentz-Wasserstein value: maximize int tau^p over causal couplings;
/// -inf when no causal coupling exists.  `tau` must return the time
/// separation (0 for non-causal pairs) and `causal` the pair relation.
std::pair<double, TransportPlan>
lorentz_wasserstein_p(const DiscreteMeasure& mu, const DiscreteMeasure& nu, double p,
                      const CostOracle& tau,
                      const std::function<bool(const ConePoint&, const ConePoint&)>& causal);

/// Convenience forms running on a cone.
std::pair<double, TransportPlan> wasserstein_p(const ConeSpec& cone, const DiscreteMeasure& mu,
                                               const DiscreteMeasure& nu, double p,
                                               const GeodesicOptions& opts = {});
std::pair<double, TransportPlan> lorentz_wasserstein_p(const ConeSpec& cone,
                                                       const DiscreteMeasure& mu,
                                                       const DiscreteMeasure& nu, double p,
                                                       const GeodesicOptions& opts = {});

enum class MonotonicityMode { MinCost, MaxCoupling };

struct CycleWitness {
    std::vector<int> cycle; // indices into the pair list
    double violation = 0.0; // positive when the certificate fails
};

/// c-cyclical monotonicity over all cycles of all subsets (cap defaults
/// to 8 pairs).  MinCost checks sum c(x_i,y_i) <= sum c(x_i,y_{i+1});
/// MaxCoupling checks sum l(x_i,y_i) >= sum l(x_{i+1},y_i) with -inf on
/// non-causal pairs.
std::pair<bool, CycleWitness>
check_cyclical_monotonicity(const std::vector<std::pair<ConePoint, ConePoint>>& pairs,
                            const CostOracle& cost, MonotonicityMode mode, int cap = 8);

/// Pushforward of an optimal plan's mass to the s-points of the connecting
/// geodesics.
DiscreteMeasure displacement_interpolate(
    const TransportPlan& plan, const DiscreteMeasure& mu, const DiscreteMeasure& nu, double s,
    const std::function<ConePoint(const ConePoint&, const ConePoint&, double)>& geodesy);

DiscreteMeasure displacement_interpolate(const ConeSpec& cone, const TransportPlan& plan,
                                         const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                                         double s, const GeodesicOptions& opts = {});

} // namespace conewarp
