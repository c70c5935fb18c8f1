#include "conewarp/transport.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <queue>

#include "conewarp/coeffs.hpp"
#include "conewarp/errors.hpp"

namespace conewarp {

DiscreteMeasure DiscreteMeasure::dirac(ConePoint p) { return {{p}, {1.0}}; }

void DiscreteMeasure::validate() const {
    if (support.size() != weights.size() || support.empty())
        throw DomainError("measure support/weight size mismatch");
    double s = 0.0;
    for (double w : weights) {
        if (!(w >= 0.0)) throw DomainError("measure weights must be nonnegative");
        s += w;
    }
    if (std::fabs(s - 1.0) > 1e-12) throw DomainError("measure weights must sum to 1");
}

std::vector<std::tuple<int, int, double>> TransportPlan::triplets(double cutoff) const {
    std::vector<std::tuple<int, int, double>> out;
    for (std::size_t i = 0; i < matrix.size(); ++i)
        for (std::size_t j = 0; j < matrix[i].size(); ++j)
            if (matrix[i][j] > cutoff) out.emplace_back(static_cast<int>(i), static_cast<int>(j),
                                                        matrix[i][j]);
    return out;
}

namespace {

// Balanced transportation problem, minimization, masked arcs excluded.
// Successive shortest augmenting paths with node potentials; exact vertex
// optima for the sizes used here, deterministic order throughout.
struct FlowResult {
    std::vector<std::vector<double>> flow;
    double cost = 0.0;
    bool feasible = true;
};

FlowResult min_cost_transport(const std::vector<double>& supply, const std::vector<double>& demand,
                              const std::vector<std::vector<double>>& cost,
                              const std::vector<std::vector<char>>& allowed) {
    const int m = static_cast<int>(supply.size());
    const int n = static_cast<int>(demand.size());
    const int V = m + n;
    FlowResult res;
    res.flow.assign(m, std::vector<double>(n, 0.0));

    std::vector<double> remS = supply, remD = demand;
    std::vector<double> pot(V, 0.0);

    // Initial potentials via one Bellman-Ford pass over source->sink arcs
    // (costs may be negative for maximization problems).
    {
        std::vector<double> distS(m, 0.0), distD(n, infinity());
        for (int it = 0; it < 2; ++it)
            for (int i = 0; i < m; ++i)
                for (int j = 0; j < n; ++j)
                    if (allowed[i][j]) distD[j] = std::min(distD[j], distS[i] + cost[i][j]);
        for (int i = 0; i < m; ++i) pot[i] = 0.0;
        for (int j = 0; j < n; ++j) pot[m + j] = std::isinf(distD[j]) ? 0.0 : distD[j];
    }

    const double kEps = 1e-15;
    long iterations = 0;
    while (true) {
        if (++iterations > 200000)
            throw ConvergenceError("transport solver exceeded its augmentation budget");
        int src = -1;
        for (int i = 0; i < m; ++i)
            if (remS[i] > kEps) {
                src = i;
                break;
            }
        if (src < 0) break;

        // Dijkstra on reduced costs from every unsaturated source.
        std::vector<double> dist(V, infinity());
        std::vector<int> prev(V, -1);
        using QE = std::pair<double, int>;
        std::priority_queue<QE, std::vector<QE>, std::greater<>> pq;
        for (int i = 0; i < m; ++i)
            if (remS[i] > kEps) {
                dist[i] = 0.0;
                pq.push({0.0, i});
            }
        while (!pq.empty()) {
            const auto [dc, u] = pq.top();
            pq.pop();
            if (dc > dist[u] + 1e-18) continue;
            if (u < m) {
                const int i = u;
                for (int j = 0; j < n; ++j) {
                    if (!allowed[i][j]) continue;
                    const double rc = cost[i][j] + pot[i] - pot[m + j];
                    const double nd = dist[u] + std::max(rc, 0.0);
                    if (nd < dist[m + j] - 1e-18) {
                        dist[m + j] = nd;
                        prev[m + j] = i;
                        pq.push({nd, m + j});
                    }
                }
            } else {
                const int j = u - m;
                for (int i = 0; i < m; ++i) {
                    if (!allowed[i][j] || res.flow[i][j] <= kEps) continue;
                    const double rc = -(cost[i][j] + pot[i] - pot[m + j]);
                    const double nd = dist[u] + std::max(rc, 0.0);
                    if (nd < dist[i] - 1e-18) {
                        dist[i] = nd;
                        prev[i] = m + j;
                        pq.push({nd, i});
                    }
                }
            }
        }

        // Pick the reachable unsaturated sink with the smallest distance,
        // ties broken by index for determinism.
        int snk = -1;
        for (int j = 0; j < n; ++j)
            if (remD[j] > kEps && !std::isinf(dist[m + j]) && (snk < 0 || dist[m + j] < dist[m + snk]))
                snk = j;
        if (snk < 0) {
            res.feasible = false;
            return res;
        }

        for (int v = 0; v < V; ++v)
            if (!std::isinf(dist[v])) pot[v] += dist[v];

        // Bottleneck along the augmenting path (the root is an unsaturated
        // source), then apply the push.
        int root = m + snk;
        double push = remD[snk];
        for (int v = m + snk; prev[v] != -1; v = prev[v]) {
            const int u = prev[v];
            if (u < m && v >= m) {
                // forward arc u -> v, unbounded capacity
            } else {
                push = std::min(push, res.flow[v][u - m]); // backward arc
            }
            root = u;
        }
        push = std::min(push, remS[root]);
        for (int v = m + snk; prev[v] != -1; v = prev[v]) {
            const int u = prev[v];
            if (u < m && v >= m)
                res.flow[u][v - m] += push;
            else
                res.flow[v][u - m] -= push;
        }
        remS[root] -= push;
        remD[snk] -= push;
    }

    res.cost = 0.0;
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j) res.cost += res.flow[i][j] * cost[i][j];
    return res;
}

} // namespace

std::pair<double, TransportPlan> wasserstein_p(const DiscreteMeasure& mu,
                                               const DiscreteMeasure& nu, double p,
                                               const CostOracle& distance) {
    mu.validate();
    nu.validate();
    if (!(p >= 1.0)) throw DomainError("wasserstein_p requires p >= 1");
    const int m = static_cast<int>(mu.size()), n = static_cast<int>(nu.size());
    std::vector<std::vector<double>> cost(m, std::vector<double>(n));
    std::vector<std::vector<char>> allowed(m, std::vector<char>(n, 1));
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j)
            cost[i][j] = std::pow(distance(mu.support[i], nu.support[j]), p);
    auto fr = min_cost_transport(mu.weights, nu.weights, cost, allowed);
    TransportPlan plan;
    plan.matrix = std::move(fr.flow);
    plan.value = std::max(fr.cost, 0.0);
    plan.optimal = true;
    return {std::pow(plan.value, 1.0 / p), plan};
}

std::pair<double, TransportPlan>
lorentz_wasserstein_p(const DiscreteMeasure& mu, const DiscreteMeasure& nu, double p,
                      const CostOracle& tau,
                      const std::function<bool(const ConePoint&, const ConePoint&)>& causal) {
    mu.validate();
    nu.validate();
    if (!(p > 0.0 && p < 1.0)) throw DomainError("lorentz_wasserstein_p requires p in (0,1)");
    const int m = static_cast<int>(mu.size()), n = static_cast<int>(nu.size());
    std::vector<std::vector<double>> cost(m, std::vector<double>(n, 0.0));
    std::vector<std::vector<char>> allowed(m, std::vector<char>(n, 0));
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j) {
            if (!causal(mu.support[i], nu.support[j])) continue;
            allowed[i][j] = 1;
            cost[i][j] = -std::pow(tau(mu.support[i], nu.support[j]), p); // maximize
        }
    auto fr = min_cost_transport(mu.weights, nu.weights, cost, allowed);
    TransportPlan plan;
    if (!fr.feasible) {
        plan.matrix.assign(m, std::vector<double>(n, 0.0));
        plan.value = -infinity();
        plan.optimal = false;
        plan.causal_feasible = false;
        return {-infinity(), plan};
    }
    plan.matrix = std::move(fr.flow);
    plan.value = std::max(-fr.cost, 0.0);
    plan.optimal = true;
    plan.causal_feasible = true;
    return {std::pow(plan.value, 1.0 / p), plan};
}

std::pair<double, TransportPlan> wasserstein_p(const ConeSpec& cone, const DiscreteMeasure& mu,
                                               const DiscreteMeasure& nu, double p,
                                               const GeodesicOptions& opts) {
    return wasserstein_p(mu, nu, p, [&](const ConePoint& a, const ConePoint& b) {
        return metric_distance(cone, a, b, opts);
    });
}

std::pair<double, TransportPlan> lorentz_wasserstein_p(const ConeSpec& cone,
                                                       const DiscreteMeasure& mu,
                                                       const DiscreteMeasure& nu, double p,
                                                       const GeodesicOptions& opts) {
    return lorentz_wasserstein_p(
        mu, nu, p,
        [&](const ConePoint& a, const ConePoint& b) { return time_separation(cone, a, b, opts); },
        [&](const ConePoint& a, const ConePoint& b) {
            return causal_relation(cone, a, b, opts).causal();
        });
}

std::pair<bool, CycleWitness>
check_cyclical_monotonicity(const std::vector<std::pair<ConePoint, ConePoint>>& pairs,
                            const CostOracle& cost, MonotonicityMode mode, int cap) {
    const int n = static_cast<int>(pairs.size());
    if (n > cap) throw CapExceededError("too many pairs for exhaustive cycle enumeration");
    CycleWitness witness;
    if (n <= 1) return {true, witness};

    std::vector<std::vector<double>> c(n, std::vector<double>(n));
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) c[i][j] = cost(pairs[i].first, pairs[j].second);

    bool ok = true;
    // All cycles = all ordered subsets up to rotation: fix the smallest
    // element first and permute the rest.
    std::vector<int> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    std::vector<int> subset;
    const std::function<void(int)> visit = [&](int start) {
        if (subset.size() >= 2) {
            std::vector<int> perm(subset.begin() + 1, subset.end());
            std::sort(perm.begin(), perm.end());
            do {
                std::vector<int> cyc;
                cyc.push_back(subset[0]);
                cyc.insert(cyc.end(), perm.begin(), perm.end());
                const int k = static_cast<int>(cyc.size());
                double kept = 0.0, swapped = 0.0;
                bool swapped_neg_inf = false;
                for (int a = 0; a < k; ++a) {
                    kept += c[cyc[a]][cyc[a]];
                    double sw;
                    if (mode == MonotonicityMode::MinCost) {
                        sw = c[cyc[a]][cyc[(a + 1) % k]]; // cost(x_i, y_{i+1})
                    } else {
                        sw = c[cyc[(a + 1) % k]][cyc[a]]; // l^p(x_{i+1}, y_i)
                    }
                    if (std::isinf(sw) && sw < 0.0) swapped_neg_inf = true;
                    swapped += sw;
                }
                double violation;
                if (mode == MonotonicityMode::MinCost)
                    violation = kept - swapped; // require kept <= swapped
                else
                    violation = swapped_neg_inf ? -infinity() : swapped - kept;
                if (violation > witness.violation + 1e-12) {
                    witness.violation = violation;
                    witness.cycle = cyc;
                    ok = violation <= 1e-9;
                }
            } while (std::next_permutation(perm.begin(), perm.end()));
        }
        for (int v = start; v < n; ++v) {
            subset.push_back(v);
            visit(v + 1);
            subset.pop_back();
        }
    };
    visit(0);
    ok = witness.violation <= 1e-9;
    return {ok, witness};
}

DiscreteMeasure displacement_interpolate(
    const TransportPlan& plan, const DiscreteMeasure& mu, const DiscreteMeasure& nu, double s,
    const std::function<ConePoint(const ConePoint&, const ConePoint&, double)>& geodesy) {
    if (!plan.optimal) throw DomainError("displacement interpolation needs an optimal plan");
    if (!(s >= 0.0 && s <= 1.0)) throw DomainError("interpolation parameter must lie in [0,1]");
    DiscreteMeasure out;
    for (std::size_t i = 0; i < plan.matrix.size(); ++i) {
        for (std::size_t j = 0; j < plan.matrix[i].size(); ++j) {
            const double mass = plan.matrix[i][j];
            if (mass <= 1e-15) continue;
            out.support.push_back(geodesy(mu.support[i], nu.support[j], s));
            out.weights.push_back(mass);
        }
    }
    double total = std::accumulate(out.weights.begin(), out.weights.end(), 0.0);
    if (total > 0.0)
        for (double& w : out.weights) w /= total;
    return out;
}

DiscreteMeasure displacement_interpolate(const ConeSpec& cone, const TransportPlan& plan,
                                         const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                                         double s, const GeodesicOptions& opts) {
    return displacement_interpolate(
        plan, mu, nu, s, [&](const ConePoint& a, const ConePoint& b, double w) {
            if (cone.signature() == Signature::Lorentzian) {
                const auto v = causal_relation(cone, a, b, opts);
                if (!v.chronological())
                    throw NoGeodesicError("charged pair is not timelike related");
            }
            return geodesic_point(cone, a, b, w, opts);
        });
}

} // namespace conewarp
