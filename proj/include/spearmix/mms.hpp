#ifndef SPEARMIX_MMS_HPP
#define SPEARMIX_MMS_HPP

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <vector>

#include "spearmix/common.hpp"
#include "spearmix/partition.hpp"
#include "spearmix/ranking.hpp"

namespace spearmix {

/// Parameters of a homogeneous Mallows model with Spearman distance:
/// P(r) = exp(-2 theta (c_n - rho^T r)) / Z(theta).
struct MmsParams {
    Ranking consensus;
    double theta = 0.0;

    int n() const { return consensus.size(); }
};

struct MmsFit {
    MmsParams params;
    double log_lik = 0.0;
    MeanRankVector mean_rank;
    double dbar = 0.0;
    ThetaBoundary boundary = ThetaBoundary::none;
};

inline double mms_log_pmf(const MmsParams& params, const Ranking& r, const PartitionEvaluator& ev) {
    if (params.n() != r.size() || ev.n() != r.size()) throw error("mms_log_pmf: size mismatch");
    const long long d = 2 * (rank_square_sum(r.size()) - scalar_product(params.consensus, r));
    return -params.theta * static_cast<double>(d) - ev.log_partition(params.theta);
}

/// Maximum-likelihood fit of the homogeneous model on full rankings: the
/// consensus is the Borda aggregate of the mean rank vector, the
/// concentration solves E_theta[D] = dbar with dbar = 2(c_n - rho^T rbar).
inline MmsFit fit_mms(const RankingDataset& data, const PartitionEvaluator& ev, double solver_tol = 1e-10,
                      double theta_max = 10.0) {
    if (data.n() != ev.n()) throw error("fit_mms: dataset and evaluator disagree on n");
    MeanRankVector rbar = mean_rank(data);
    Ranking consensus = borda_rank(rbar);
    const double dbar = 2.0 * (static_cast<double>(rank_square_sum(data.n())) - scalar_product(rbar, consensus));
    const ThetaSolve sol = ev.solve_theta(dbar, solver_tol, theta_max);
    const double n_total = static_cast<double>(data.total());
    MmsFit fit{MmsParams{std::move(consensus), sol.theta},
               -n_total * (ev.log_partition(sol.theta) + sol.theta * dbar), std::move(rbar), dbar, sol.boundary};
    return fit;
}

enum class SampleMethod { exhaustive, mcmc };

namespace detail {

template <class Rng>
std::vector<Ranking> sample_mms_exhaustive(const MmsParams& params, long long count, Rng& rng) {
    const int n = params.n();
    if (n > 8) throw error("sample_mms: exhaustive sampling limited to n <= 8");
    std::vector<int> perm(static_cast<std::size_t>(n));
    std::iota(perm.begin(), perm.end(), 1);

    std::vector<std::vector<int>> states;
    std::vector<double> cumulative;
    double total = 0.0;
    do {
        long long d = 0;
        for (int i = 0; i < n; ++i) {
            const long long diff = perm[static_cast<std::size_t>(i)] - params.consensus[i];
            d += diff * diff;
        }
        total += std::exp(-params.theta * static_cast<double>(d));
        states.push_back(perm);
        cumulative.push_back(total);
    } while (std::next_permutation(perm.begin(), perm.end()));

    std::vector<Ranking> out;
    out.reserve(static_cast<std::size_t>(count));
    for (long long k = 0; k < count; ++k) {
        const double u = uniform01(rng) * total;
        const auto it = std::lower_bound(cumulative.begin(), cumulative.end(), u);
        const std::size_t idx = std::min(static_cast<std::size_t>(it - cumulative.begin()), states.size() - 1);
        out.push_back(Ranking::unchecked(states[idx]));
    }
    return out;
}

// Metropolis chain with random pairwise-swap proposals. The pair is drawn
// with replacement, so the identity proposal keeps the chain aperiodic (a
// forced swap flips permutation parity every step and locks the chain into
// one parity coset at theta = 0). Distance deltas are O(1) since a swap
// touches two entries only. Burn-in 100 n steps, thinning n^2/2 steps.
template <class Rng>
std::vector<Ranking> sample_mms_mcmc(const MmsParams& params, long long count, Rng& rng) {
    const int n = params.n();
    std::vector<int> state = params.consensus.ranks();
    const long long burn_in = 100LL * n;
    const long long thin = std::max<long long>(1, static_cast<long long>(n) * n / 2);

    auto step = [&]() {
        const int a = static_cast<int>(uniform_index(rng, static_cast<std::size_t>(n)));
        const int b = static_cast<int>(uniform_index(rng, static_cast<std::size_t>(n)));
        if (a == b) return;
        const long long ra = state[static_cast<std::size_t>(a)], rb = state[static_cast<std::size_t>(b)];
        const long long ca = params.consensus[a], cb = params.consensus[b];
        const long long delta = (rb - ca) * (rb - ca) + (ra - cb) * (ra - cb) -
                                (ra - ca) * (ra - ca) - (rb - cb) * (rb - cb);
        if (delta <= 0 || uniform01(rng) < std::exp(-params.theta * static_cast<double>(delta)))
            std::swap(state[static_cast<std::size_t>(a)], state[static_cast<std::size_t>(b)]);
    };

    for (long long k = 0; k < burn_in; ++k) step();
    std::vector<Ranking> out;
    out.reserve(static_cast<std::size_t>(count));
    for (long long k = 0; k < count; ++k) {
        for (long long t = 0; t < thin; ++t) step();
        out.push_back(Ranking::unchecked(state));
    }
    return out;
}

} // namespace detail

/// Draw rankings from the model; deterministic for a given seed. Exhaustive
/// inverse-CDF sampling enumerates all n! states (n <= 8), the MCMC sampler
/// handles any n.
inline std::vector<Ranking> sample_mms_rankings(const MmsParams& params, long long count, std::uint64_t seed,
                                                SampleMethod method) {
    if (count < 0) throw error("sample_mms: negative sample size");
    if (params.theta < 0.0) throw error("sample_mms: theta must be nonnegative");
    std::mt19937_64 rng(seed);
    if (method == SampleMethod::exhaustive) return detail::sample_mms_exhaustive(params, count, rng);
    return detail::sample_mms_mcmc(params, count, rng);
}

inline RankingDataset sample_mms(const MmsParams& params, long long count, std::uint64_t seed,
                                 SampleMethod method) {
    const auto draws = sample_mms_rankings(params, count, seed, method);
    RankingDataset::Builder builder;
    for (const auto& r : draws) builder.add(r);
    return builder.build();
}

} // namespace spearmix

#endif // SPEARMIX_MMS_HPP
