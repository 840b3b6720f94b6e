#ifndef SPEARMIX_PARTITION_HPP
#define SPEARMIX_PARTITION_HPP

#include <cmath>
#include <memory>
#include <utility>

#include "spearmix/common.hpp"
#include "spearmix/distance_counts.hpp"
#include "spearmix/log_bessel.hpp"
#include "spearmix/ranking.hpp"

namespace spearmix {

enum class ThetaBoundary { none, theta_zero, theta_max };

inline const char* to_string(ThetaBoundary b) {
    switch (b) {
        case ThetaBoundary::theta_zero: return "thetaZero";
        case ThetaBoundary::theta_max: return "thetaMax";
        default: return "none";
    }
}

struct ThetaSolve {
    double theta = 0.0;
    ThetaBoundary boundary = ThetaBoundary::none;
    double expected_distance = 0.0;
    int iterations = 0;
};

namespace detail {

// Bracketed bisection refined by safeguarded Newton steps on a strictly
// decreasing map theta -> E(theta). `deriv` returns dE/dtheta (negative);
// passing a null-ish derivative falls back to pure bisection.
template <class F, class DF>
ThetaSolve solve_decreasing(F&& expected, DF&& deriv, bool has_deriv, double dbar, double tol_abs,
                            double theta_max) {
    if (dbar < 0.0) throw error("solve_theta: mean distance must be nonnegative");
    ThetaSolve out;
    const double e0 = expected(0.0);
    if (dbar >= e0 - tol_abs) {
        out.theta = 0.0;
        out.boundary = ThetaBoundary::theta_zero;
        out.expected_distance = e0;
        return out;
    }
    const double etop = expected(theta_max);
    if (dbar <= etop + tol_abs) {
        out.theta = theta_max;
        out.boundary = ThetaBoundary::theta_max;
        out.expected_distance = etop;
        return out;
    }

    double lo = 0.0, hi = theta_max;
    double theta = theta_max / 2.0;
    double e = expected(theta);
    for (int it = 0; it < 200; ++it) {
        ++out.iterations;
        if (std::fabs(e - dbar) <= tol_abs) break;
        if (e > dbar)
            lo = theta; // need larger theta
        else
            hi = theta;
        double next = 0.0;
        bool newton_ok = false;
        if (has_deriv && it >= 4) {
            const double de = deriv(theta);
            if (de < 0.0) {
                next = theta - (e - dbar) / de;
                newton_ok = next > lo && next < hi;
            }
        }
        if (!newton_ok) next = 0.5 * (lo + hi);
        if (hi - lo < 1e-15 * (1.0 + hi)) {
            theta = next;
            e = expected(theta);
            break;
        }
        theta = next;
        e = expected(theta);
    }
    out.theta = theta;
    out.expected_distance = e;
    return out;
}

} // namespace detail

/// Log-domain evaluation of the partition function Z(theta) and the distance
/// moments over a count table: Z(theta) = sum_d N_d exp(-theta d).
class PartitionEvaluator {
public:
    explicit PartitionEvaluator(DistanceDistribution dist)
        : dist_(std::make_shared<const DistanceDistribution>(std::move(dist))) {}
    explicit PartitionEvaluator(std::shared_ptr<const DistanceDistribution> dist) : dist_(std::move(dist)) {
        if (!dist_) throw error("PartitionEvaluator: null distribution");
    }

    int n() const { return dist_->n; }
    long long d_max() const { return dist_->d_max(); }
    Provenance provenance() const { return dist_->provenance; }
    const DistanceDistribution& distribution() const { return *dist_; }
    std::shared_ptr<const DistanceDistribution> distribution_ptr() const { return dist_; }

    /// log Z(theta); strictly decreasing in theta, log n! at theta = 0.
    double log_partition(double theta) const {
        check_theta(theta);
        const auto& lc = dist_->log_counts;
        double m = neg_inf;
        for (std::size_t h = 0; h < lc.size(); ++h)
            m = std::max(m, lc[h] - theta * 2.0 * static_cast<double>(h));
        double s = 0.0;
        for (std::size_t h = 0; h < lc.size(); ++h) {
            const double t = lc[h] - theta * 2.0 * static_cast<double>(h);
            if (t != neg_inf) s += std::exp(t - m);
        }
        return m + std::log(s);
    }

    /// E_theta[D] = sum_d d N_d e^{-theta d} / Z(theta); equals d_max/2 at
    /// theta = 0 by the symmetry of the counts.
    double expected_distance(double theta) const { return moments(theta).first; }

    double distance_variance(double theta) const { return moments(theta).second; }

    /// Concentration solving E_theta[D] = dbar. Clips to the boundary and
    /// flags it when dbar falls outside the attainable range
    /// (E_thetaMax[D], E_0[D]); tol is relative to d_max.
    ThetaSolve solve_theta(double dbar, double tol = 1e-10, double theta_max = 10.0) const {
        const double tol_abs = tol * static_cast<double>(d_max());
        return detail::solve_decreasing([this](double t) { return expected_distance(t); },
                                        [this](double t) { return -distance_variance(t); }, true, dbar,
                                        tol_abs, theta_max);
    }

private:
    static void check_theta(double theta) {
        if (!(theta >= 0.0)) throw error("PartitionEvaluator: theta must be nonnegative");
    }

    // (E[D], Var[D]) in one pass over the table, max-shifted.
    std::pair<double, double> moments(double theta) const {
        check_theta(theta);
        const auto& lc = dist_->log_counts;
        double m = neg_inf;
        for (std::size_t h = 0; h < lc.size(); ++h)
            m = std::max(m, lc[h] - theta * 2.0 * static_cast<double>(h));
        double s0 = 0.0, s1 = 0.0, s2 = 0.0;
        for (std::size_t h = 0; h < lc.size(); ++h) {
            const double t = lc[h] - theta * 2.0 * static_cast<double>(h);
            if (t == neg_inf) continue;
            const double w = std::exp(t - m);
            const double d = 2.0 * static_cast<double>(h);
            s0 += w;
            s1 += w * d;
            s2 += w * d * d;
        }
        const double mean = s1 / s0;
        const double var = s2 / s0 - mean * mean;
        return {mean, std::max(var, 0.0)};
    }

    std::shared_ptr<const DistanceDistribution> dist_;
};

/// kappa = theta n (n^2 - 1) / 6 = 2 theta b_n, the concentration of the
/// matched von Mises-Fisher density on the sphere through the rank vectors.
inline double vmf_kappa(int n, double theta) {
    const double m = n;
    return theta * m * (m * m - 1.0) / 6.0;
}

/// Analytical partition-function approximation via the von Mises-Fisher
/// integral:
///   Z(theta) ~ 2^((n-3)/2) n! I_((n-3)/2)(kappa) Gamma((n-1)/2) / (kappa^((n-3)/2) e^kappa).
/// Exact in the theta -> 0 limit (returns log n! there); biased low for
/// concentrated models.
inline double vmf_log_partition(int n, double theta) {
    if (n < 4) throw error("vmf_log_partition: n must be at least 4");
    if (theta < 0.0) throw error("vmf_log_partition: theta must be nonnegative");
    if (theta == 0.0) return log_factorial(n);
    const double nu = (n - 3.0) / 2.0;
    const double kappa = vmf_kappa(n, theta);
    return nu * std::log(2.0) + log_factorial(n) + log_bessel_i(nu, kappa) +
           std::lgamma((n - 1.0) / 2.0) - nu * std::log(kappa) - kappa;
}

/// Expected distance implied by the vMF approximation:
///   E_theta[D] = 2 b_n (1 - I_(nu+1)(kappa) / I_nu(kappa)),  nu = (n-3)/2.
inline double vmf_expected_distance(int n, double theta) {
    if (n < 4) throw error("vmf_expected_distance: n must be at least 4");
    if (theta < 0.0) throw error("vmf_expected_distance: theta must be nonnegative");
    const double two_bn = static_cast<double>(max_spearman_distance(n)) / 2.0;
    if (theta == 0.0) return two_bn;
    const double nu = (n - 3.0) / 2.0;
    const double kappa = vmf_kappa(n, theta);
    const double ratio = std::exp(log_bessel_i(nu + 1.0, kappa) - log_bessel_i(nu, kappa));
    return two_bn * (1.0 - ratio);
}

/// Solve E_theta[D] = dbar under the vMF approximation. The derivative uses
/// the Bessel recurrences: with u = I_(nu+1)/I_nu,
/// dE/dtheta = -(2 b_n)^2 (1 - u^2 - (2 nu + 1) u / kappa).
inline ThetaSolve vmf_solve_theta(int n, double dbar, double tol = 1e-10, double theta_max = 10.0) {
    const double two_bn = static_cast<double>(max_spearman_distance(n)) / 2.0;
    const double nu = (n - 3.0) / 2.0;
    const double tol_abs = tol * 2.0 * two_bn;
    auto expected = [&](double t) { return vmf_expected_distance(n, t); };
    auto deriv = [&](double t) {
        const double kappa = vmf_kappa(n, t);
        const double u = std::exp(log_bessel_i(nu + 1.0, kappa) - log_bessel_i(nu, kappa));
        return -two_bn * two_bn * (1.0 - u * u - (2.0 * nu + 1.0) * u / kappa);
    };
    return detail::solve_decreasing(expected, deriv, true, dbar, tol_abs, theta_max);
}

} // namespace spearmix

#endif // SPEARMIX_PARTITION_HPP
