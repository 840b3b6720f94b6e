#ifndef SPEARMIX_DISTANCE_COUNTS_HPP
#define SPEARMIX_DISTANCE_COUNTS_HPP

#include <algorithm>
#include <bit>
#include <cstdint>
#include <vector>

#include "spearmix/common.hpp"
#include "spearmix/ranking.hpp"

namespace spearmix {

enum class Provenance { exact, approximate };

/// Frequency distribution of the Spearman distance under the uniform model:
/// log N_d for every even distance d = 0, 2, ..., d_max. This table is the
/// backbone of the partition function and of E_theta[D].
struct DistanceDistribution {
    int n = 0;
    Provenance provenance = Provenance::exact;
    /// log N_d at index d/2; -inf marks a zero count. Size binomial(n+1,3)+1.
    std::vector<double> log_counts;
    /// Exact integer counts, present only for exact provenance.
    std::vector<int128> counts;

    long long d_max() const { return max_spearman_distance(n); }
    std::size_t size() const { return log_counts.size(); }
    long long distance_at(std::size_t idx) const { return 2 * static_cast<long long>(idx); }

    std::vector<long long> distances() const {
        std::vector<long long> d(size());
        for (std::size_t i = 0; i < d.size(); ++i) d[i] = distance_at(i);
        return d;
    }

    double log_count_at(long long distance) const {
        if (distance < 0 || distance > d_max() || distance % 2 != 0)
            throw error("DistanceDistribution: invalid distance " + std::to_string(distance));
        return log_counts[static_cast<std::size_t>(distance / 2)];
    }
};

/// Exact counts N_0, N_2, N_4, N_6 of permutations at the four smallest
/// distances (and, by symmetry, the four largest). Closed forms in n; the
/// quartic/cubic ones are clamped to zero where they would go negative.
struct BoundaryCounts {
    long long n0 = 1, n2 = 0, n4 = 0, n6 = 0;
};

inline BoundaryCounts boundary_counts(int n) {
    if (n < 2) throw error("boundary_counts: n must be at least 2");
    const long long m = n - 2;
    BoundaryCounts b;
    b.n0 = 1;
    b.n2 = n - 1;
    b.n4 = m >= 2 ? m * (m - 1) / 2 : 0;
    // (n-2)^3/6 - (n-2)^2 + 23(n-2)/6 - 1, rearranged to stay in integers.
    const long long n6 = m * (m - 1) * (m + 1) / 6 + 4 * m - m * m - 1;
    b.n6 = std::max<long long>(n6, 0);
    return b;
}

namespace detail {

// Counts of permutations per Spearman distance from the identity, as the
// coefficient vector of the permanent of M_ij = x^((i-j)^2) over univariate
// polynomials. Ryser inclusion-exclusion over column subsets S:
//
//   perm(M) = (-1)^n sum_{S != empty} (-1)^|S| prod_i sum_{j in S} x^((i-j)^2)
//
// Row sums are maintained incrementally under a Gray-code walk of the 2^n - 1
// subsets; products are truncated at d_max since higher powers cancel in the
// alternating sum. Per-subset polynomial coefficients fit in uint64
// (bounded by n^n <= 14^14 ~ 1.1e16); the signed accumulator needs 128 bits.
inline std::vector<int128> ryser_spearman_counts(int n) {
    const long long dmax = max_spearman_distance(n);
    const std::size_t len = static_cast<std::size_t>(dmax) + 1;
    const int emax = (n - 1) * (n - 1);

    std::vector<int128> acc(len, 0);
    std::vector<std::vector<std::uint32_t>> cnt(static_cast<std::size_t>(n),
                                                std::vector<std::uint32_t>(static_cast<std::size_t>(emax) + 1, 0));
    std::vector<std::vector<int>> active(static_cast<std::size_t>(n));
    std::vector<std::uint64_t> prod(len), next(len);

    std::uint32_t mask = 0;
    const std::uint64_t subsets = (1ULL << n);
    for (std::uint64_t k = 1; k < subsets; ++k) {
        // Gray step: column j enters or leaves the subset.
        const int j = std::countr_zero(k);
        const bool add = ((mask >> j) & 1u) == 0;
        mask ^= (1u << j);
        for (int i = 0; i < n; ++i) {
            const int diff = i - j;
            const std::size_t e = static_cast<std::size_t>(diff * diff);
            auto& c = cnt[static_cast<std::size_t>(i)][e];
            auto& act = active[static_cast<std::size_t>(i)];
            if (add) {
                if (c++ == 0) act.push_back(static_cast<int>(e));
            } else {
                if (--c == 0) act.erase(std::find(act.begin(), act.end(), static_cast<int>(e)));
            }
        }

        // prod = product over rows of the current row-sum polynomials.
        long long deg = 0;
        prod[0] = 1;
        for (int i = 0; i < n; ++i) {
            const auto& act = active[static_cast<std::size_t>(i)];
            int row_max = 0;
            for (int e : act) row_max = std::max(row_max, e);
            const long long new_deg = std::min<long long>(deg + row_max, dmax);
            std::fill(next.begin(), next.begin() + new_deg + 1, 0);
            const auto& row_cnt = cnt[static_cast<std::size_t>(i)];
            for (int e : act) {
                const std::uint64_t c = row_cnt[static_cast<std::size_t>(e)];
                const long long kmax = std::min<long long>(deg, dmax - e);
                for (long long d = 0; d <= kmax; ++d) next[static_cast<std::size_t>(d + e)] += prod[static_cast<std::size_t>(d)] * c;
            }
            prod.swap(next);
            deg = new_deg;
        }

        const bool negate = ((n - std::popcount(mask)) & 1) != 0;
        if (negate) {
            for (long long d = 0; d <= deg; ++d) acc[static_cast<std::size_t>(d)] -= static_cast<int128>(prod[static_cast<std::size_t>(d)]);
        } else {
            for (long long d = 0; d <= deg; ++d) acc[static_cast<std::size_t>(d)] += static_cast<int128>(prod[static_cast<std::size_t>(d)]);
        }
    }
    return acc;
}

} // namespace detail

/// Exact distance-count table via the Ryser permanent expansion. The default
/// guard follows the crossover rule of exact tables up to n = 14; the ceiling
/// can be raised to the hard cap of 16, where the 2^n subset walk is still
/// cheap and the uint64 product coefficients provably cannot overflow
/// (bounded by n^n, and the table validation would reject a wrap anyway).
inline DistanceDistribution exact_counts(int n, int n_exact_max = 14) {
    if (n < 2) throw error("exact_counts: n must be at least 2");
    if (n > n_exact_max)
        throw error("exact_counts: n = " + std::to_string(n) + " above exact ceiling " +
                    std::to_string(n_exact_max));
    if (n > 16) throw error("exact_counts: exact tables are supported only up to n = 16");

    const auto raw = detail::ryser_spearman_counts(n);

    DistanceDistribution dist;
    dist.n = n;
    dist.provenance = Provenance::exact;
    const std::size_t half = static_cast<std::size_t>(max_spearman_distance(n) / 2);
    dist.counts.resize(half + 1);
    dist.log_counts.resize(half + 1);
    int128 total = 0;
    for (std::size_t idx = 0; idx < raw.size(); ++idx) {
        if (idx % 2 == 1) {
            if (raw[idx] != 0) throw error("exact_counts: nonzero count at odd distance");
            continue;
        }
        const int128 c = raw[idx];
        if (c < 0) throw error("exact_counts: negative count");
        dist.counts[idx / 2] = c;
        dist.log_counts[idx / 2] = c == 0 ? neg_inf : std::log(static_cast<double>(c));
        total += c;
    }
    int128 nfact = 1;
    for (int i = 2; i <= n; ++i) nfact *= i;
    if (total != nfact) throw error("exact_counts: counts do not sum to n!");
    return dist;
}

} // namespace spearmix

#endif // SPEARMIX_DISTANCE_COUNTS_HPP
