#ifndef SPEARMIX_MIXTURE_HPP
#define SPEARMIX_MIXTURE_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <random>
#include <span>
#include <unordered_map>
#include <utility>
#include <vector>

#include "spearmix/common.hpp"
#include "spearmix/mms.hpp"
#include "spearmix/partition.hpp"
#include "spearmix/ranking.hpp"

namespace spearmix {

/// G-component mixture of Mallows models with Spearman distance.
struct MixtureParams {
    std::vector<double> weights;
    std::vector<MmsParams> components;

    int groups() const { return static_cast<int>(components.size()); }
    int n() const { return components.empty() ? 0 : components.front().n(); }

    void validate() const {
        if (components.empty() || weights.size() != components.size())
            throw error("MixtureParams: weights/components mismatch");
        double sum = 0.0;
        for (double w : weights) {
            if (!(w > 0.0)) throw error("MixtureParams: weights must be positive");
            sum += w;
        }
        if (std::fabs(sum - 1.0) > 1e-12) throw error("MixtureParams: weights must sum to 1");
        for (const auto& c : components) {
            if (c.theta < 0.0) throw error("MixtureParams: negative theta");
            if (c.n() != n()) throw error("MixtureParams: inconsistent n across components");
        }
    }
};

/// Posterior membership probabilities, one row per (distinct) ranking.
struct Responsibilities {
    std::size_t rows = 0;
    int groups = 0;
    std::vector<double> values; // row-major

    double at(std::size_t l, int g) const { return values[l * static_cast<std::size_t>(groups) + static_cast<std::size_t>(g)]; }
    double& at(std::size_t l, int g) { return values[l * static_cast<std::size_t>(groups) + static_cast<std::size_t>(g)]; }
};

/// Union of the full rankings compatible with the observed partial rows,
/// with their augmented frequencies; freqs sum to the sample size N.
struct CompletionTable {
    std::vector<Ranking> rankings;
    std::vector<double> freqs;
    double total = 0.0;
};

enum class BicConvention { full, continuous };

/// Free-parameter count: 2G-1 continuous parameters (weights + thetas), plus
/// n-1 per discrete consensus under the full convention.
inline int bic_parameter_count(int groups, int n, BicConvention convention) {
    const int continuous = 2 * groups - 1;
    if (convention == BicConvention::continuous) return continuous;
    return continuous + groups * (n - 1);
}

inline double bic_value(double log_lik, long long total, int groups, int n, BicConvention convention) {
    return -2.0 * log_lik +
           bic_parameter_count(groups, n, convention) * std::log(static_cast<double>(total));
}

struct EmOptions {
    double tol = 1e-6;
    int max_iter = 500;
    int n_starts = 10;
    std::uint64_t seed = 1;
    double theta_max = 10.0;
    double solver_tol = 1e-10;
    long long completion_cap = 40320;
    double empty_cluster_eps = 1e-6;
    int max_reseeds = 2;
    BicConvention bic_convention = BicConvention::full;
    /// Starting concentration solves E_theta[D] = fraction * d_max / 2.
    double theta_init_fraction = 0.75;
};

struct EmDiagnostics {
    double min_loglik_increment = std::numeric_limits<double>::infinity();
    double max_resp_row_error = 0.0;
    int reseeds = 0;
    int dropped_components = 0;
};

struct MixtureFit {
    MixtureParams params;
    Responsibilities responsibilities; // over the rows the fit ran on (completions for partial data)
    double log_lik = 0.0;
    double bic = 0.0;
    int iterations = 0;
    bool converged = false;
    std::vector<double> cluster_sizes;
    std::vector<ThetaBoundary> boundaries;
    EmDiagnostics diagnostics;
    long long data_total = 0;
};

/// Posterior membership probabilities for full rankings, in the log domain
/// with per-row max subtraction. Also returns the observed-data
/// log-likelihood sum_l freq_l log sum_g w_g P(r_l | g).
inline std::pair<Responsibilities, double> e_step_with_loglik(std::span<const Ranking> rankings,
                                                              std::span<const double> freqs,
                                                              const MixtureParams& params,
                                                              const PartitionEvaluator& ev) {
    params.validate();
    const int groups = params.groups();
    const std::size_t rows = rankings.size();
    if (freqs.size() != rows) throw error("e_step: freqs size mismatch");

    std::vector<double> log_weight(static_cast<std::size_t>(groups));
    std::vector<double> log_z(static_cast<std::size_t>(groups));
    for (int g = 0; g < groups; ++g) {
        log_weight[static_cast<std::size_t>(g)] = std::log(params.weights[static_cast<std::size_t>(g)]);
        log_z[static_cast<std::size_t>(g)] = ev.log_partition(params.components[static_cast<std::size_t>(g)].theta);
    }

    Responsibilities resp{rows, groups, std::vector<double>(rows * static_cast<std::size_t>(groups))};
    double log_lik = 0.0;
    std::vector<double> row(static_cast<std::size_t>(groups));
    for (std::size_t l = 0; l < rows; ++l) {
        double m = neg_inf;
        for (int g = 0; g < groups; ++g) {
            const auto& comp = params.components[static_cast<std::size_t>(g)];
            const double d = static_cast<double>(spearman_distance(rankings[l], comp.consensus));
            const double v = log_weight[static_cast<std::size_t>(g)] - comp.theta * d - log_z[static_cast<std::size_t>(g)];
            row[static_cast<std::size_t>(g)] = v;
            m = std::max(m, v);
        }
        double s = 0.0;
        for (int g = 0; g < groups; ++g) s += std::exp(row[static_cast<std::size_t>(g)] - m);
        log_lik += freqs[l] * (m + std::log(s));
        for (int g = 0; g < groups; ++g) resp.at(l, g) = std::exp(row[static_cast<std::size_t>(g)] - m) / s;
    }
    return {std::move(resp), log_lik};
}

inline Responsibilities e_step(std::span<const Ranking> rankings, const MixtureParams& params,
                               const PartitionEvaluator& ev) {
    std::vector<double> unit(rankings.size(), 1.0);
    return e_step_with_loglik(rankings, unit, params, ev).first;
}

namespace detail {

struct MStepResult {
    MixtureParams params;
    std::vector<double> cluster_sizes;
    std::vector<ThetaBoundary> boundaries;
};

inline MStepResult m_step_impl(std::span<const Ranking> rankings, std::span<const double> freqs,
                               const Responsibilities& resp, const PartitionEvaluator& ev,
                               const EmOptions& opts) {
    const int groups = resp.groups;
    const std::size_t rows = rankings.size();
    if (resp.rows != rows || freqs.size() != rows) throw error("m_step: size mismatch");
    const int n = ev.n();
    const double cn = static_cast<double>(rank_square_sum(n));

    double total = 0.0;
    for (std::size_t l = 0; l < rows; ++l) total += freqs[l];

    MStepResult out;
    out.cluster_sizes.resize(static_cast<std::size_t>(groups));
    out.boundaries.resize(static_cast<std::size_t>(groups));
    out.params.weights.resize(static_cast<std::size_t>(groups));
    out.params.components.reserve(static_cast<std::size_t>(groups));
    std::vector<double> w(rows);
    for (int g = 0; g < groups; ++g) {
        double ng = 0.0;
        for (std::size_t l = 0; l < rows; ++l) {
            w[l] = freqs[l] * resp.at(l, g);
            ng += w[l];
        }
        out.cluster_sizes[static_cast<std::size_t>(g)] = ng;
        if (!(ng > 0.0)) throw error("m_step: empty cluster " + std::to_string(g + 1));
        out.params.weights[static_cast<std::size_t>(g)] = ng / total;
        MeanRankVector rbar = weighted_mean_rank(rankings, w);
        Ranking consensus = borda_rank(rbar);
        const double dbar = 2.0 * (cn - scalar_product(rbar, consensus));
        const ThetaSolve sol = ev.solve_theta(dbar, opts.solver_tol, opts.theta_max);
        out.boundaries[static_cast<std::size_t>(g)] = sol.boundary;
        out.params.components.push_back(MmsParams{std::move(consensus), sol.theta});
    }
    return out;
}

} // namespace detail

/// One M-step: mixing weights, Borda consensus of the responsibility-weighted
/// mean ranks, and concentrations solving E_theta[D] = 2(c_n - rho^T rbar_g).
inline MixtureParams m_step(std::span<const Ranking> rankings, std::span<const double> freqs,
                            const Responsibilities& resp, const PartitionEvaluator& ev,
                            const EmOptions& opts = {}) {
    return detail::m_step_impl(rankings, freqs, resp, ev, opts).params;
}

/// Number of full rankings compatible with a partial one: (n - n_ranked)!.
/// Clamped to avoid overflow; anything above the cap is reported as cap + 1.
inline long long completion_count_capped(const PartialRanking& p, long long cap) {
    long long count = 1;
    const int missing = p.size() - p.ranked_count();
    for (int k = 2; k <= missing; ++k) {
        if (count > cap / k + 1) return cap + 1;
        count *= k;
    }
    return count;
}

/// Enumerate the compatible completions of a partial ranking in a fixed
/// lexicographic order: the unassigned ranks are distributed over the
/// unranked items in all possible ways.
template <class Fn>
void for_each_completion(const PartialRanking& p, Fn&& fn) {
    const int n = p.size();
    std::vector<int> base = p.ranks();
    std::vector<int> missing_items;
    std::vector<char> used(static_cast<std::size_t>(n) + 1, 0);
    for (int i = 0; i < n; ++i) {
        if (p.is_ranked(i))
            used[static_cast<std::size_t>(p.rank_of(i))] = 1;
        else
            missing_items.push_back(i);
    }
    std::vector<int> missing_ranks;
    for (int r = 1; r <= n; ++r)
        if (!used[static_cast<std::size_t>(r)]) missing_ranks.push_back(r);

    if (missing_items.empty()) {
        fn(Ranking::unchecked(base));
        return;
    }
    do {
        for (std::size_t k = 0; k < missing_items.size(); ++k)
            base[static_cast<std::size_t>(missing_items[k])] = missing_ranks[k];
        fn(Ranking::unchecked(base));
    } while (std::next_permutation(missing_ranks.begin(), missing_ranks.end()));
}

inline std::vector<Ranking> completions(const PartialRanking& p, long long cap = 40320) {
    const long long count = completion_count_capped(p, cap);
    if (count > cap)
        throw error("completions: " + std::to_string(p.size() - p.ranked_count()) +
                    " unranked items exceed the completion cap " + std::to_string(cap));
    std::vector<Ranking> out;
    out.reserve(static_cast<std::size_t>(count));
    for_each_completion(p, [&](const Ranking& r) { out.push_back(r); });
    return out;
}

struct PartialEStep {
    CompletionTable table;
    Responsibilities responsibilities; // over table.rankings
    double log_lik = 0.0;              // observed-data log-likelihood of the partial rows
};

namespace detail {

struct RankVectorHash {
    std::size_t operator()(const std::vector<int>& v) const {
        std::size_t h = 1469598103934665603ULL;
        for (int x : v) {
            h ^= static_cast<std::size_t>(x);
            h *= 1099511628211ULL;
        }
        return h;
    }
};

} // namespace detail

/// Augmentation E-step for partial rankings: each observed frequency N_l is
/// redistributed over the compatible completions proportionally to their
/// mixture density, and contributions to the same full ranking are pooled
/// across rows. Rows are processed in order and sums are fixed-order, so the
/// result is deterministic.
inline PartialEStep partial_e_step(const RankingDataset& data, const MixtureParams& params,
                                   const PartitionEvaluator& ev, long long completion_cap = 40320) {
    params.validate();
    const int groups = params.groups();
    const int n = data.n();
    if (params.n() != n || ev.n() != n) throw error("partial_e_step: size mismatch");

    std::vector<double> log_weight(static_cast<std::size_t>(groups));
    std::vector<double> log_z(static_cast<std::size_t>(groups));
    for (int g = 0; g < groups; ++g) {
        log_weight[static_cast<std::size_t>(g)] = std::log(params.weights[static_cast<std::size_t>(g)]);
        log_z[static_cast<std::size_t>(g)] = ev.log_partition(params.components[static_cast<std::size_t>(g)].theta);
    }

    auto mixture_log_density = [&](const Ranking& r) {
        double m = neg_inf;
        double vals[64];
        for (int g = 0; g < groups; ++g) {
            const auto& comp = params.components[static_cast<std::size_t>(g)];
            const double d = static_cast<double>(spearman_distance(r, comp.consensus));
            const double v = log_weight[static_cast<std::size_t>(g)] - comp.theta * d - log_z[static_cast<std::size_t>(g)];
            vals[g] = v;
            m = std::max(m, v);
        }
        double s = 0.0;
        for (int g = 0; g < groups; ++g) s += std::exp(vals[g] - m);
        return m + std::log(s);
    };
    if (groups > 64) throw error("partial_e_step: more than 64 components unsupported");

    PartialEStep out;
    std::unordered_map<std::vector<int>, std::size_t, detail::RankVectorHash> index;
    std::vector<Ranking> row_completions;
    std::vector<double> row_logdens;
    for (std::size_t l = 0; l < data.row_count(); ++l) {
        const auto& row = data.row(l);
        const long long count = completion_count_capped(row, completion_cap);
        if (count > completion_cap)
            throw error("partial_e_step: row " + std::to_string(l + 1) + " has more than " +
                        std::to_string(completion_cap) + " compatible completions");
        row_completions.clear();
        row_logdens.clear();
        double m = neg_inf;
        for_each_completion(row, [&](const Ranking& r) {
            const double v = mixture_log_density(r);
            row_completions.push_back(r);
            row_logdens.push_back(v);
            m = std::max(m, v);
        });
        double s = 0.0;
        for (double v : row_logdens) s += std::exp(v - m);
        const double row_lse = m + std::log(s);
        out.log_lik += static_cast<double>(data.multiplicity(l)) * row_lse;

        const double freq = static_cast<double>(data.multiplicity(l));
        for (std::size_t k = 0; k < row_completions.size(); ++k) {
            const double share = freq * std::exp(row_logdens[k] - row_lse);
            auto [it, inserted] = index.try_emplace(row_completions[k].ranks(), out.table.rankings.size());
            if (inserted) {
                out.table.rankings.push_back(std::move(row_completions[k]));
                out.table.freqs.push_back(share);
            } else {
                out.table.freqs[it->second] += share;
            }
        }
    }
    for (double f : out.table.freqs) out.table.total += f;
    out.responsibilities = e_step_with_loglik(out.table.rankings, out.table.freqs, params, ev).first;
    return out;
}

namespace detail {

template <class Rng>
Ranking random_permutation(int n, Rng& rng) {
    std::vector<int> r(static_cast<std::size_t>(n));
    std::iota(r.begin(), r.end(), 1);
    for (std::size_t k = r.size() - 1; k > 0; --k) std::swap(r[k], r[uniform_index(rng, k + 1)]);
    return Ranking::unchecked(std::move(r));
}

template <class Rng>
Ranking random_completion(const PartialRanking& p, Rng& rng) {
    if (p.is_full()) return p.to_full();
    const int n = p.size();
    std::vector<int> base = p.ranks();
    std::vector<int> missing_items, missing_ranks;
    std::vector<char> used(static_cast<std::size_t>(n) + 1, 0);
    for (int i = 0; i < n; ++i) {
        if (p.is_ranked(i))
            used[static_cast<std::size_t>(p.rank_of(i))] = 1;
        else
            missing_items.push_back(i);
    }
    for (int r = 1; r <= n; ++r)
        if (!used[static_cast<std::size_t>(r)]) missing_ranks.push_back(r);
    for (std::size_t k = missing_ranks.size() - 1; k > 0; --k)
        std::swap(missing_ranks[k], missing_ranks[uniform_index(rng, k + 1)]);
    for (std::size_t k = 0; k < missing_items.size(); ++k)
        base[static_cast<std::size_t>(missing_items[k])] = missing_ranks[k];
    return Ranking::unchecked(std::move(base));
}

// Random start: component consensus seeded at distinct observed rows (random
// completions for partial rows, uniform permutations once rows run out),
// uniform weights, and a common mildly-concentrated starting theta.
template <class Rng>
MixtureParams initial_params(const RankingDataset& data, int groups, double theta_init, Rng& rng) {
    std::vector<std::size_t> order(data.row_count());
    std::iota(order.begin(), order.end(), std::size_t{0});
    for (std::size_t k = order.size() - 1; k > 0; --k) std::swap(order[k], order[uniform_index(rng, k + 1)]);

    MixtureParams params;
    params.weights.assign(static_cast<std::size_t>(groups), 1.0 / groups);
    params.components.reserve(static_cast<std::size_t>(groups));
    for (int g = 0; g < groups; ++g) {
        Ranking consensus = static_cast<std::size_t>(g) < order.size()
                                ? random_completion(data.row(order[static_cast<std::size_t>(g)]), rng)
                                : random_permutation(data.n(), rng);
        params.components.push_back(MmsParams{std::move(consensus), theta_init});
    }
    return params;
}

struct EmRun {
    MixtureParams params;
    Responsibilities resp;
    double log_lik = neg_inf;
    int iterations = 0;
    bool converged = false;
    std::vector<double> cluster_sizes;
    std::vector<ThetaBoundary> boundaries;
    EmDiagnostics diagnostics;
};

// One EM run from a given start. Alternates the (augmentation +) E-step with
// the M-step until the observed-data log-likelihood stabilizes. A component
// whose size drops below eps*N is re-seeded at the lowest-density observation;
// after max_reseeds re-seeds it is dropped and the run continues with G-1.
inline EmRun em_run(const RankingDataset& data, MixtureParams params, const PartitionEvaluator& ev,
                    const EmOptions& opts, double theta_init) {
    const bool full_data = data.all_full();
    const std::vector<Ranking> full_rows = full_data ? data.full_rows() : std::vector<Ranking>{};
    std::vector<double> full_freqs;
    if (full_data) {
        full_freqs.reserve(data.row_count());
        for (std::size_t l = 0; l < data.row_count(); ++l)
            full_freqs.push_back(static_cast<double>(data.multiplicity(l)));
    }
    const double total = static_cast<double>(data.total());

    EmRun run;
    std::vector<int> reseed_count(params.components.size(), 0);
    double prev_ll = neg_inf;

    CompletionTable table;
    Responsibilities resp;
    double ll = neg_inf;

    auto refresh = [&]() {
        if (full_data) {
            auto [r, l] = e_step_with_loglik(full_rows, full_freqs, params, ev);
            resp = std::move(r);
            ll = l;
        } else {
            PartialEStep pes = partial_e_step(data, params, ev, opts.completion_cap);
            table = std::move(pes.table);
            resp = std::move(pes.responsibilities);
            ll = pes.log_lik;
        }
    };

    for (int iter = 1; iter <= opts.max_iter; ++iter) {
        run.iterations = iter;
        refresh();

        // empty-cluster guard
        bool patched = false;
        for (int attempt = 0; attempt < params.groups(); ++attempt) {
            std::span<const Ranking> rows = full_data ? std::span<const Ranking>(full_rows)
                                                      : std::span<const Ranking>(table.rankings);
            std::span<const double> freqs = full_data ? std::span<const double>(full_freqs)
                                                      : std::span<const double>(table.freqs);
            std::vector<double> sizes(static_cast<std::size_t>(params.groups()), 0.0);
            for (std::size_t l = 0; l < rows.size(); ++l)
                for (int g = 0; g < params.groups(); ++g) sizes[static_cast<std::size_t>(g)] += freqs[l] * resp.at(l, g);
            int worst = -1;
            for (int g = 0; g < params.groups(); ++g)
                if (sizes[static_cast<std::size_t>(g)] < opts.empty_cluster_eps * total &&
                    (worst < 0 || sizes[static_cast<std::size_t>(g)] < sizes[static_cast<std::size_t>(worst)]))
                    worst = g;
            if (worst < 0) break;

            if (params.groups() == 1) throw error("em_run: single component collapsed");
            if (reseed_count[static_cast<std::size_t>(worst)] >= opts.max_reseeds) {
                // drop the component
                params.weights.erase(params.weights.begin() + worst);
                params.components.erase(params.components.begin() + worst);
                reseed_count.erase(reseed_count.begin() + worst);
                double s = 0.0;
                for (double w : params.weights) s += w;
                for (double& w : params.weights) w /= s;
                ++run.diagnostics.dropped_components;
                prev_ll = neg_inf; // likelihood is not comparable across G
            } else {
                // re-seed at the observation the current mixture likes least
                std::vector<double> log_z(static_cast<std::size_t>(params.groups()));
                for (int g = 0; g < params.groups(); ++g)
                    log_z[static_cast<std::size_t>(g)] = ev.log_partition(params.components[static_cast<std::size_t>(g)].theta);
                std::size_t low = 0;
                double low_dens = std::numeric_limits<double>::infinity();
                for (std::size_t l = 0; l < rows.size(); ++l) {
                    double dens = 0.0;
                    for (int g = 0; g < params.groups(); ++g)
                        dens += params.weights[static_cast<std::size_t>(g)] *
                                std::exp(-params.components[static_cast<std::size_t>(g)].theta *
                                             static_cast<double>(spearman_distance(
                                                 rows[l], params.components[static_cast<std::size_t>(g)].consensus)) -
                                         log_z[static_cast<std::size_t>(g)]);
                    if (dens < low_dens) {
                        low_dens = dens;
                        low = l;
                    }
                }
                params.components[static_cast<std::size_t>(worst)] = MmsParams{rows[low], theta_init};
                const double floor_w = std::max(opts.empty_cluster_eps, 1.0 / total);
                params.weights[static_cast<std::size_t>(worst)] = floor_w;
                double s = 0.0;
                for (double w : params.weights) s += w;
                for (double& w : params.weights) w /= s;
                ++reseed_count[static_cast<std::size_t>(worst)];
                ++run.diagnostics.reseeds;
                prev_ll = neg_inf;
            }
            patched = true;
            refresh();
        }
        (void)patched;

        for (std::size_t l = 0; l < resp.rows; ++l) {
            double s = 0.0;
            for (int g = 0; g < resp.groups; ++g) s += resp.at(l, g);
            run.diagnostics.max_resp_row_error = std::max(run.diagnostics.max_resp_row_error, std::fabs(s - 1.0));
        }

        if (prev_ll != neg_inf)
            run.diagnostics.min_loglik_increment = std::min(run.diagnostics.min_loglik_increment, ll - prev_ll);
        const bool done = prev_ll != neg_inf && std::fabs(ll - prev_ll) < opts.tol;
        prev_ll = ll;
        if (done) {
            run.converged = true;
            break;
        }

        std::span<const Ranking> rows = full_data ? std::span<const Ranking>(full_rows)
                                                  : std::span<const Ranking>(table.rankings);
        std::span<const double> freqs = full_data ? std::span<const double>(full_freqs)
                                                  : std::span<const double>(table.freqs);
        auto ms = m_step_impl(rows, freqs, resp, ev, opts);
        params = std::move(ms.params);
        run.cluster_sizes = std::move(ms.cluster_sizes);
        run.boundaries = std::move(ms.boundaries);
    }

    // sync responsibilities and log-likelihood with the final parameters
    refresh();
    if (prev_ll != neg_inf)
        run.diagnostics.min_loglik_increment = std::min(run.diagnostics.min_loglik_increment, ll - prev_ll);
    run.params = std::move(params);
    run.resp = std::move(resp);
    run.log_lik = ll;
    run.cluster_sizes.assign(static_cast<std::size_t>(run.params.groups()), 0.0);
    {
        std::span<const double> freqs = full_data ? std::span<const double>(full_freqs)
                                                  : std::span<const double>(table.freqs);
        for (std::size_t l = 0; l < run.resp.rows; ++l)
            for (int g = 0; g < run.params.groups(); ++g)
                run.cluster_sizes[static_cast<std::size_t>(g)] += freqs[l] * run.resp.at(l, g);
    }
    if (run.boundaries.size() != static_cast<std::size_t>(run.params.groups()))
        run.boundaries.assign(static_cast<std::size_t>(run.params.groups()), ThetaBoundary::none);
    return run;
}

} // namespace detail

/// EM fit of a G-component mixture. Runs n_starts random initializations and
/// keeps the best final observed-data log-likelihood. Handles full rankings
/// directly and partial rankings through compatible-completion augmentation;
/// with G = 1 on full data this reduces exactly to fit_mms.
inline MixtureFit em_fit_partial(const RankingDataset& data, int groups, const PartitionEvaluator& ev,
                                 const EmOptions& opts = {}) {
    if (groups < 1) throw error("em_fit: need at least one component");
    if (groups > 64) throw error("em_fit: more than 64 components unsupported");
    if (data.n() != ev.n()) throw error("em_fit: dataset and evaluator disagree on n");

    const double theta_init =
        ev.solve_theta(opts.theta_init_fraction * static_cast<double>(ev.d_max()) / 2.0, opts.solver_tol,
                       opts.theta_max)
            .theta;

    detail::EmRun best;
    bool have_best = false;
    const int starts = std::max(1, opts.n_starts);
    for (int start = 0; start < starts; ++start) {
        std::mt19937_64 rng(derive_seed(opts.seed, static_cast<std::uint64_t>(start)));
        MixtureParams init = detail::initial_params(data, groups, theta_init, rng);
        detail::EmRun run = detail::em_run(data, std::move(init), ev, opts, theta_init);
        if (!have_best || run.log_lik > best.log_lik) {
            best = std::move(run);
            have_best = true;
        }
    }

    MixtureFit fit;
    fit.params = std::move(best.params);
    fit.responsibilities = std::move(best.resp);
    fit.log_lik = best.log_lik;
    fit.bic = bic_value(best.log_lik, data.total(), fit.params.groups(), data.n(), opts.bic_convention);
    fit.iterations = best.iterations;
    fit.converged = best.converged;
    fit.cluster_sizes = std::move(best.cluster_sizes);
    fit.boundaries = std::move(best.boundaries);
    fit.diagnostics = best.diagnostics;
    fit.data_total = data.total();
    return fit;
}

/// EM fit on full rankings only.
inline MixtureFit em_fit(const RankingDataset& data, int groups, const PartitionEvaluator& ev,
                         const EmOptions& opts = {}) {
    if (!data.all_full()) throw error("em_fit: dataset has partial rows, use em_fit_partial");
    return em_fit_partial(data, groups, ev, opts);
}

/// Elbow selection on a BIC curve: the interior point of maximum discrete
/// curvature BIC[g-1] - 2 BIC[g] + BIC[g+1]; short ranges fall back to the
/// minimum BIC.
inline int elbow_select(std::span<const int> g_range, std::span<const double> bic) {
    if (g_range.empty() || g_range.size() != bic.size()) throw error("elbow_select: bad inputs");
    if (g_range.size() < 3) {
        std::size_t best = 0;
        for (std::size_t i = 1; i < bic.size(); ++i)
            if (bic[i] < bic[best]) best = i;
        return g_range[best];
    }
    std::size_t best = 1;
    double best_curv = neg_inf;
    for (std::size_t i = 1; i + 1 < bic.size(); ++i) {
        const double curv = bic[i - 1] - 2.0 * bic[i] + bic[i + 1];
        if (curv > best_curv) {
            best_curv = curv;
            best = i;
        }
    }
    return g_range[best];
}

struct GSearchResult {
    int selected_g = 1;
    std::vector<int> g_range;
    std::vector<double> bic;
    std::vector<MixtureFit> fits;

    const MixtureFit& selected_fit() const {
        for (std::size_t i = 0; i < g_range.size(); ++i)
            if (g_range[i] == selected_g) return fits[i];
        throw error("GSearchResult: selected fit missing");
    }
};

/// Fit every G in the range and pick the number of components by the BIC
/// elbow rule.
inline GSearchResult select_g(const RankingDataset& data, std::span<const int> g_range,
                              const PartitionEvaluator& ev, const EmOptions& opts = {}) {
    if (g_range.empty()) throw error("select_g: empty range");
    for (std::size_t i = 1; i < g_range.size(); ++i)
        if (g_range[i] <= g_range[i - 1]) throw error("select_g: range must be strictly increasing");

    GSearchResult res;
    res.g_range.assign(g_range.begin(), g_range.end());
    for (int g : g_range) {
        res.fits.push_back(em_fit_partial(data, g, ev, opts));
        res.bic.push_back(res.fits.back().bic);
    }
    res.selected_g = elbow_select(res.g_range, res.bic);
    return res;
}

} // namespace spearmix

#endif // SPEARMIX_MIXTURE_HPP
