#ifndef SPEARMIX_RATE_FUNCTION_HPP
#define SPEARMIX_RATE_FUNCTION_HPP

#include <array>
#include <cmath>
#include <span>
#include <vector>

#include "spearmix/common.hpp"
#include "spearmix/distance_counts.hpp"

namespace spearmix {

/// Coefficients of the large-deviation rate function
///   xi(x) = a0 + a1 * log[x(1-x)] + a2 * x(1-x),   x = d / d_max,
/// which approximates (1/n) log(N_d / n!) away from the extreme distances.
struct RateCoefficients {
    double a0 = 0.0;
    double a1 = 0.0;
    double a2 = 0.0;
};

/// The limiting slope of the logarithmic tail divergence; fixed by the exact
/// count N_2 = n - 1.
inline constexpr double rate_alpha1 = 1.0 / 3.0;

/// Fixed by xi(1/2) -> 0 in the n -> infinity limit: alpha2 = 8 log(2) alpha1.
inline double rate_alpha2() { return (8.0 / 3.0) * std::log(2.0); }

/// Size-n corrections to the limiting rate function, parameterized as
/// g_i / sqrt(n). The reference values are frozen from running
/// fit_rate_coefficients on the exact count tables for n = 4..14; at n = 14
/// they reproduce the exact table with an interior RMSE of 0.0030.
struct RateFit {
    double g0 = 0.0;
    double g1 = 0.0;
    double g2 = 0.0;

    RateCoefficients at(int n) const {
        const double s = 1.0 / std::sqrt(static_cast<double>(n));
        return {g0 * s, rate_alpha1 + g1 * s, rate_alpha2() + g2 * s};
    }

    static RateFit reference() { return {-0.437826194067, -0.259929844047, -5.155181563274}; }
};

inline RateCoefficients default_rate_coefficients(int n) { return RateFit::reference().at(n); }

/// xi(x) for x in the open unit interval. Symmetric about 1/2, diverges to
/// -inf at both ends.
inline double rate_function(double x, const RateCoefficients& c) {
    if (!(x > 0.0 && x < 1.0)) throw error("rate_function: x must lie in (0, 1)");
    const double q = x * (1.0 - x);
    return c.a0 + c.a1 * std::log(q) + c.a2 * q;
}

namespace detail {

/// The interior region where the rate-function approximation applies:
/// distances 8 <= d <= d_max - 8. Everything outside is covered by the
/// boundary count formulas.
inline bool is_interior_distance(long long d, long long dmax) { return d >= 8 && d <= dmax - 8; }

} // namespace detail

/// Approximate count table: interior log counts are log n! + n xi(d/d_max),
/// the eight entries at d <= 6 and d >= d_max - 6 are the exact boundary
/// counts. With renormalize the interior is rescaled so the table sums to n!.
inline DistanceDistribution approx_counts(int n, const RateCoefficients& coeffs,
                                          bool renormalize = false) {
    if (n < 8) throw error("approx_counts: needs n >= 8 for a non-empty interior");
    const long long dmax = max_spearman_distance(n);
    const auto b = boundary_counts(n);
    const double logn_fact = log_factorial(n);

    DistanceDistribution dist;
    dist.n = n;
    dist.provenance = Provenance::approximate;
    dist.log_counts.resize(static_cast<std::size_t>(dmax / 2) + 1);

    auto boundary_log = [&](long long d) {
        const long long c = d == 0 ? b.n0 : d == 2 ? b.n2 : d == 4 ? b.n4 : b.n6;
        return c == 0 ? neg_inf : std::log(static_cast<double>(c));
    };

    for (std::size_t h = 0; h < dist.log_counts.size(); ++h) {
        const long long d = 2 * static_cast<long long>(h);
        if (d <= 6) {
            dist.log_counts[h] = boundary_log(d);
        } else if (d >= dmax - 6) {
            dist.log_counts[h] = boundary_log(dmax - d);
        } else {
            const double x = static_cast<double>(d) / static_cast<double>(dmax);
            dist.log_counts[h] = logn_fact + n * rate_function(x, coeffs);
        }
    }

    if (renormalize) {
        double log_interior = neg_inf, log_boundary = neg_inf;
        for (std::size_t h = 0; h < dist.log_counts.size(); ++h) {
            const long long d = 2 * static_cast<long long>(h);
            if (detail::is_interior_distance(d, dmax))
                log_interior = log_add(log_interior, dist.log_counts[h]);
            else
                log_boundary = log_add(log_boundary, dist.log_counts[h]);
        }
        const double target = log_sub(logn_fact, log_boundary);
        const double shift = target - log_interior;
        for (std::size_t h = 0; h < dist.log_counts.size(); ++h) {
            const long long d = 2 * static_cast<long long>(h);
            if (detail::is_interior_distance(d, dmax)) dist.log_counts[h] += shift;
        }
    }
    return dist;
}

/// Root-mean-square gap between xi(d/d_max) and (1/n) log(N_d/n!) over the
/// interior distances of an exact table.
inline double rate_function_rmse(const DistanceDistribution& exact, const RateCoefficients& coeffs) {
    if (exact.provenance != Provenance::exact) throw error("rate_function_rmse: exact table required");
    const long long dmax = exact.d_max();
    const double logn_fact = log_factorial(exact.n);
    double ss = 0.0;
    std::size_t count = 0;
    for (std::size_t h = 0; h < exact.size(); ++h) {
        const long long d = exact.distance_at(h);
        if (!detail::is_interior_distance(d, dmax)) continue;
        if (exact.log_counts[h] == neg_inf) continue;
        const double x = static_cast<double>(d) / static_cast<double>(dmax);
        const double y = (exact.log_counts[h] - logn_fact) / exact.n;
        const double r = rate_function(x, coeffs) - y;
        ss += r * r;
        ++count;
    }
    if (count == 0) throw error("rate_function_rmse: no interior distances");
    return std::sqrt(ss / static_cast<double>(count));
}

/// Calibrate the 1/sqrt(n) corrections (g0, g1, g2) against exact tables by
/// weighted least squares with weight n^2, the log slope pinned at 1/3 and
/// the constraint 8 log(2) alpha1 - alpha2 = 0 on the limiting part. Tables
/// must be exact with n >= 4 (n = 3 has a zero count in the bulk).
inline RateFit fit_rate_coefficients(std::span<const DistanceDistribution> exact_tables) {
    if (exact_tables.size() < 2) throw error("fit_rate_coefficients: need at least two exact tables");
    const double a2lim = rate_alpha2();

    // 3x3 normal equations for the weighted linear model
    //   y - r(x) = [g0 + g1 log(x(1-x)) + g2 x(1-x)] / sqrt(n).
    std::array<std::array<double, 3>, 3> A{};
    std::array<double, 3> rhs{};
    for (const auto& table : exact_tables) {
        if (table.provenance != Provenance::exact)
            throw error("fit_rate_coefficients: table for n = " + std::to_string(table.n) + " is not exact");
        if (table.n < 4)
            throw error("fit_rate_coefficients: tables must have n >= 4, got " + std::to_string(table.n));
        const long long dmax = table.d_max();
        const double logn_fact = log_factorial(table.n);
        const double w = static_cast<double>(table.n) * static_cast<double>(table.n);
        const double s = 1.0 / std::sqrt(static_cast<double>(table.n));
        for (std::size_t h = 0; h < table.size(); ++h) {
            const long long d = table.distance_at(h);
            if (!detail::is_interior_distance(d, dmax)) continue;
            if (table.log_counts[h] == neg_inf)
                throw error("fit_rate_coefficients: zero interior count at n = " + std::to_string(table.n));
            const double x = static_cast<double>(d) / static_cast<double>(dmax);
            const double q = x * (1.0 - x);
            const double lq = std::log(q);
            const double y = (table.log_counts[h] - logn_fact) / table.n;
            const double resid = y - (rate_alpha1 * lq + a2lim * q);
            const std::array<double, 3> u = {s, s * lq, s * q};
            for (int a = 0; a < 3; ++a) {
                rhs[static_cast<std::size_t>(a)] += w * u[static_cast<std::size_t>(a)] * resid;
                for (int bcol = 0; bcol < 3; ++bcol)
                    A[static_cast<std::size_t>(a)][static_cast<std::size_t>(bcol)] +=
                        w * u[static_cast<std::size_t>(a)] * u[static_cast<std::size_t>(bcol)];
            }
        }
    }

    // Gaussian elimination with partial pivoting.
    std::array<std::array<double, 4>, 3> m{};
    for (int r = 0; r < 3; ++r) {
        for (int c = 0; c < 3; ++c) m[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)] = A[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)];
        m[static_cast<std::size_t>(r)][3] = rhs[static_cast<std::size_t>(r)];
    }
    for (int col = 0; col < 3; ++col) {
        int pivot = col;
        for (int r = col + 1; r < 3; ++r)
            if (std::fabs(m[static_cast<std::size_t>(r)][static_cast<std::size_t>(col)]) >
                std::fabs(m[static_cast<std::size_t>(pivot)][static_cast<std::size_t>(col)]))
                pivot = r;
        std::swap(m[static_cast<std::size_t>(col)], m[static_cast<std::size_t>(pivot)]);
        const double p = m[static_cast<std::size_t>(col)][static_cast<std::size_t>(col)];
        if (std::fabs(p) < 1e-14) throw error("fit_rate_coefficients: singular normal equations");
        for (int r = 0; r < 3; ++r) {
            if (r == col) continue;
            const double f = m[static_cast<std::size_t>(r)][static_cast<std::size_t>(col)] / p;
            for (int c = col; c < 4; ++c)
                m[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)] -=
                    f * m[static_cast<std::size_t>(col)][static_cast<std::size_t>(c)];
        }
    }
    RateFit fit;
    fit.g0 = m[0][3] / m[0][0];
    fit.g1 = m[1][3] / m[1][1];
    fit.g2 = m[2][3] / m[2][2];
    return fit;
}

} // namespace spearmix

#endif // SPEARMIX_RATE_FUNCTION_HPP
