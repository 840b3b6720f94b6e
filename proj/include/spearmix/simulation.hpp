#ifndef SPEARMIX_SIMULATION_HPP
#define SPEARMIX_SIMULATION_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <numeric>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "spearmix/common.hpp"
#include "spearmix/count_cache.hpp"
#include "spearmix/mixture.hpp"
#include "spearmix/mms.hpp"
#include "spearmix/partition.hpp"
#include "spearmix/ranking.hpp"

namespace spearmix {

// ---------------------------------------------------------------------------
// Evaluation metrics
// ---------------------------------------------------------------------------

/// Relative concentration error |theta_hat - theta| / theta.
inline double metric_m_theta(double theta_hat, double theta) {
    if (!(theta > 0.0)) throw error("metric_m_theta: true theta must be positive");
    return std::fabs(theta_hat - theta) / theta;
}

/// Relative consensus distance d(rho_hat, rho) / d_max in [0, 1].
inline double metric_m_rho(const Ranking& rho_hat, const Ranking& rho) {
    return static_cast<double>(spearman_distance(rho_hat, rho)) /
           static_cast<double>(max_spearman_distance(rho.size()));
}

/// Exact consensus recovery indicator.
inline bool metric_phi_rho(const Ranking& rho_hat, const Ranking& rho) { return rho_hat == rho; }

/// Minimum-cost alignment of fitted components to true components by total
/// consensus distance; brute force over the G! label permutations (G <= 8).
inline std::vector<int> match_labels(std::span<const MmsParams> fitted, std::span<const MmsParams> truth) {
    const int groups = static_cast<int>(fitted.size());
    if (truth.size() != fitted.size()) throw error("match_labels: component count mismatch");
    if (groups > 8) throw error("match_labels: more than 8 components unsupported");
    std::vector<std::vector<long long>> cost(static_cast<std::size_t>(groups),
                                             std::vector<long long>(static_cast<std::size_t>(groups)));
    for (int f = 0; f < groups; ++f)
        for (int t = 0; t < groups; ++t)
            cost[static_cast<std::size_t>(f)][static_cast<std::size_t>(t)] =
                spearman_distance(fitted[static_cast<std::size_t>(f)].consensus, truth[static_cast<std::size_t>(t)].consensus);

    std::vector<int> perm(static_cast<std::size_t>(groups));
    std::iota(perm.begin(), perm.end(), 0);
    std::vector<int> best = perm;
    long long best_cost = std::numeric_limits<long long>::max();
    do {
        long long c = 0;
        for (int f = 0; f < groups; ++f) c += cost[static_cast<std::size_t>(f)][static_cast<std::size_t>(perm[static_cast<std::size_t>(f)])];
        if (c < best_cost) {
            best_cost = c;
            best = perm;
        }
    } while (std::next_permutation(perm.begin(), perm.end()));
    return best;
}

/// Misclassification fraction of MAP assignments against true labels, after
/// relabeling fitted components through `fitted_to_true`.
inline double metric_phi_z(std::span<const int> map_assignment, std::span<const int> true_labels,
                           std::span<const int> fitted_to_true) {
    if (map_assignment.size() != true_labels.size()) throw error("metric_phi_z: size mismatch");
    if (map_assignment.empty()) throw error("metric_phi_z: empty assignment");
    std::size_t wrong = 0;
    for (std::size_t j = 0; j < map_assignment.size(); ++j) {
        const int mapped = fitted_to_true[static_cast<std::size_t>(map_assignment[j])];
        if (mapped != true_labels[j]) ++wrong;
    }
    return static_cast<double>(wrong) / static_cast<double>(map_assignment.size());
}

// ---------------------------------------------------------------------------
// Scenario generation
// ---------------------------------------------------------------------------

enum class CensoringPattern { none, A, B, top_q };

inline const char* to_string(CensoringPattern p) {
    switch (p) {
        case CensoringPattern::A: return "A";
        case CensoringPattern::B: return "B";
        case CensoringPattern::top_q: return "topQ";
        default: return "none";
    }
}

struct ScenarioSpec {
    int n = 10;
    long long sample_size = 1000;
    int true_g = 1;
    double theta_min = 0.05;
    double theta_max = 0.10;
    /// Minimum pairwise consensus distance; <= 0 means the default (n^2 - 1) / 3.
    double min_separation = 0.0;
    CensoringPattern censoring = CensoringPattern::none;
    int top_q = 0;
    int replicates = 20;
    std::uint64_t seed = 1;
    std::vector<int> g_range; // empty: fit true_g only, no selection
    EmOptions em;
    int exact_ceiling = 14;
    bool renormalize_counts = false;
    std::optional<std::filesystem::path> cache_dir;

    double separation_threshold() const {
        if (min_separation > 0.0) return min_separation;
        return (static_cast<double>(n) * n - 1.0) / 3.0;
    }
};

/// Concentration sampling bounds used in the homogeneous recovery studies,
/// chosen so that samples with different n are comparably concentrated.
inline std::pair<double, double> homogeneous_theta_bounds(int n) {
    switch (n) {
        case 5: return {0.15, 0.30};
        case 10: return {0.05, 0.10};
        case 14:
        case 15: return {0.025, 0.050};
        case 25: return {0.010, 0.020};
        case 50: return {0.002, 0.010};
        case 100: return {0.0002, 0.0020};
        default: throw error("homogeneous_theta_bounds: no tabulated bounds for n = " + std::to_string(n));
    }
}

struct SimulatedMixture {
    MixtureParams truth;
    std::vector<Ranking> unit_rankings; // one per sampled unit, grouped bookkeeping below
    std::vector<int> unit_labels;       // generating component per unit
};

/// Draw mixture parameters and a sample: weights from a symmetric
/// Dirichlet(2G*, ..., 2G*), consensus rankings rejection-sampled to satisfy
/// the pairwise separation constraint, concentrations uniform in the scenario
/// interval, and units allocated multinomially.
inline SimulatedMixture draw_mixture_scenario(const ScenarioSpec& spec, std::uint64_t seed) {
    if (spec.true_g < 1) throw error("draw_mixture_scenario: true_g must be >= 1");
    if (spec.theta_min > spec.theta_max || spec.theta_min < 0.0)
        throw error("draw_mixture_scenario: need 0 <= theta_min <= theta_max");
    std::mt19937_64 rng(seed);

    SimulatedMixture sim;
    // weights
    if (spec.true_g == 1) {
        sim.truth.weights = {1.0};
    } else {
        std::gamma_distribution<double> gamma(2.0 * spec.true_g, 1.0);
        double total = 0.0;
        for (int g = 0; g < spec.true_g; ++g) {
            sim.truth.weights.push_back(gamma(rng));
            total += sim.truth.weights.back();
        }
        for (double& w : sim.truth.weights) w /= total;
    }

    // consensus rankings under the separation constraint
    const double threshold = spec.separation_threshold();
    long long budget = 100000;
    std::vector<Ranking> consensus;
    while (static_cast<int>(consensus.size()) < spec.true_g) {
        if (budget-- <= 0)
            throw error("draw_mixture_scenario: separation constraint infeasible within the rejection budget");
        Ranking candidate = detail::random_permutation(spec.n, rng);
        bool ok = true;
        for (const auto& other : consensus)
            if (static_cast<double>(spearman_distance(candidate, other)) < threshold) {
                ok = false;
                break;
            }
        if (ok) consensus.push_back(std::move(candidate));
    }

    for (int g = 0; g < spec.true_g; ++g) {
        const double theta = spec.theta_min + (spec.theta_max - spec.theta_min) * uniform01(rng);
        sim.truth.components.push_back(MmsParams{consensus[static_cast<std::size_t>(g)], theta});
    }

    // multinomial unit allocation, then per-component sampling
    sim.unit_labels.reserve(static_cast<std::size_t>(spec.sample_size));
    std::vector<long long> group_count(static_cast<std::size_t>(spec.true_g), 0);
    for (long long j = 0; j < spec.sample_size; ++j) {
        double u = uniform01(rng);
        int g = 0;
        while (g + 1 < spec.true_g && u >= sim.truth.weights[static_cast<std::size_t>(g)]) {
            u -= sim.truth.weights[static_cast<std::size_t>(g)];
            ++g;
        }
        sim.unit_labels.push_back(g);
        ++group_count[static_cast<std::size_t>(g)];
    }
    const SampleMethod method = spec.n <= 8 ? SampleMethod::exhaustive : SampleMethod::mcmc;
    std::vector<std::vector<Ranking>> draws(static_cast<std::size_t>(spec.true_g));
    for (int g = 0; g < spec.true_g; ++g)
        draws[static_cast<std::size_t>(g)] = sample_mms_rankings(
            sim.truth.components[static_cast<std::size_t>(g)], group_count[static_cast<std::size_t>(g)],
            derive_seed(seed, 7000 + static_cast<std::uint64_t>(g)), method);
    std::vector<std::size_t> cursor(static_cast<std::size_t>(spec.true_g), 0);
    sim.unit_rankings.reserve(static_cast<std::size_t>(spec.sample_size));
    for (long long j = 0; j < spec.sample_size; ++j) {
        const int g = sim.unit_labels[static_cast<std::size_t>(j)];
        sim.unit_rankings.push_back(draws[static_cast<std::size_t>(g)][cursor[static_cast<std::size_t>(g)]++]);
    }
    return sim;
}

namespace detail {

inline std::span<const double> censoring_masses(CensoringPattern pattern) {
    // censored bottom-position counts 2..6
    static const double masses_a[5] = {0.1, 0.1, 0.1, 0.1, 0.6};
    static const double masses_b[5] = {0.1, 0.2, 0.4, 0.2, 0.1};
    if (pattern == CensoringPattern::A) return {masses_a, 5};
    if (pattern == CensoringPattern::B) return {masses_b, 5};
    throw error("censoring_masses: pattern has no depth distribution");
}

template <class Rng>
int draw_censoring_depth(CensoringPattern pattern, Rng& rng) {
    const auto masses = censoring_masses(pattern);
    double u = uniform01(rng);
    for (int k = 0; k < 5; ++k) {
        if (u < masses[static_cast<std::size_t>(k)]) return k + 2;
        u -= masses[static_cast<std::size_t>(k)];
    }
    return 6;
}

} // namespace detail

/// Blank the bottom `depth` positions of a full ranking (items holding ranks
/// above n - depth keep nothing, the rest keep their rank unchanged).
inline PartialRanking censor_bottom(const Ranking& r, int depth) {
    const int n = r.size();
    if (depth < 1 || depth >= n) throw error("censor_bottom: depth must be in 1..n-1");
    std::vector<int> ranks = r.ranks();
    for (int i = 0; i < n; ++i)
        if (ranks[static_cast<std::size_t>(i)] > n - depth) ranks[static_cast<std::size_t>(i)] = PartialRanking::missing;
    return PartialRanking(std::move(ranks));
}

/// Censor one unit according to the pattern: A and B draw the number of
/// censored bottom positions from {2..6} with their respective masses; topQ
/// keeps ranks 1..q only.
template <class Rng>
PartialRanking censor_unit(const Ranking& r, CensoringPattern pattern, int top_q, Rng& rng) {
    switch (pattern) {
        case CensoringPattern::none: return PartialRanking(r);
        case CensoringPattern::top_q: return censor_bottom(r, r.size() - top_q);
        default: return censor_bottom(r, detail::draw_censoring_depth(pattern, rng));
    }
}

/// Apply a censoring pattern to every unit of a full-ranking dataset
/// (multiplicities are expanded: each unit draws its own censoring depth).
inline RankingDataset censor(const RankingDataset& data, CensoringPattern pattern, std::uint64_t seed,
                             int top_q = 0) {
    if (!data.all_full()) throw error("censor: dataset must contain full rankings");
    if (pattern == CensoringPattern::A || pattern == CensoringPattern::B) {
        if (data.n() < 7) throw error("censor: patterns A/B need n >= 7");
    } else if (pattern == CensoringPattern::top_q) {
        if (top_q < 1 || top_q >= data.n()) throw error("censor: top_q must be in 1..n-1");
    }
    std::mt19937_64 rng(seed);
    RankingDataset::Builder builder;
    for (std::size_t l = 0; l < data.row_count(); ++l) {
        const Ranking full = data.row(l).to_full();
        for (long long copy = 0; copy < data.multiplicity(l); ++copy)
            builder.add(censor_unit(full, pattern, top_q, rng));
    }
    return builder.build(data.items());
}

// ---------------------------------------------------------------------------
// Replicated studies
// ---------------------------------------------------------------------------

struct MetricsReport {
    ScenarioSpec spec;
    std::vector<double> m_theta, m_rho, phi_rho, phi_z, phi_g;
    double mean_m_theta = 0.0, mean_m_rho = 0.0, mean_phi_rho = 0.0, mean_phi_z = 0.0, mean_phi_g = 0.0;
    bool has_g_search = false;
    bool has_phi_z = false;
    /// worst EM diagnostics across every fit of the study
    double min_loglik_increment = std::numeric_limits<double>::infinity();
    double max_resp_row_error = 0.0;
    Provenance count_provenance = Provenance::exact;
};

namespace detail {

inline double mean_of(const std::vector<double>& v) {
    if (v.empty()) return 0.0;
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

} // namespace detail

/// End-to-end replicate loop: draw a scenario, optionally censor, fit with
/// the true number of components (metrics) and across g_range (selection),
/// and average the evaluation metrics. Fully deterministic given spec.seed.
inline MetricsReport run_study(const ScenarioSpec& spec) {
    if (spec.replicates < 1) throw error("run_study: need at least one replicate");
    MetricsReport report;
    report.spec = spec;

    PartitionEvaluator ev(counts_for(spec.n, spec.cache_dir, spec.exact_ceiling, RateFit::reference(),
                                     spec.renormalize_counts));
    report.count_provenance = ev.provenance();
    report.has_g_search = spec.g_range.size() >= 2;
    report.has_phi_z = spec.true_g >= 2;

    for (int rep = 0; rep < spec.replicates; ++rep) {
        const std::uint64_t rep_seed = derive_seed(spec.seed, 100000 + static_cast<std::uint64_t>(rep));
        SimulatedMixture sim = draw_mixture_scenario(spec, rep_seed);

        // build the (possibly censored) dataset, remembering each unit's row
        std::mt19937_64 censor_rng(derive_seed(rep_seed, 31));
        RankingDataset::Builder builder;
        std::vector<std::size_t> unit_row;
        unit_row.reserve(sim.unit_rankings.size());
        for (const auto& r : sim.unit_rankings)
            unit_row.push_back(builder.add(censor_unit(r, spec.censoring, spec.top_q, censor_rng)));
        RankingDataset data = builder.build();

        EmOptions em = spec.em;
        em.seed = derive_seed(rep_seed, 57);
        MixtureFit fit = em_fit_partial(data, spec.true_g, ev, em);
        report.min_loglik_increment = std::min(report.min_loglik_increment, fit.diagnostics.min_loglik_increment);
        report.max_resp_row_error = std::max(report.max_resp_row_error, fit.diagnostics.max_resp_row_error);

        if (spec.true_g == 1) {
            const auto& truth = sim.truth.components.front();
            const auto& est = fit.params.components.front();
            report.m_theta.push_back(metric_m_theta(est.theta, truth.theta));
            report.m_rho.push_back(metric_m_rho(est.consensus, truth.consensus));
            report.phi_rho.push_back(metric_phi_rho(est.consensus, truth.consensus) ? 1.0 : 0.0);
        } else {
            const auto matching = match_labels(fit.params.components, sim.truth.components);
            double mt = 0.0, mr = 0.0;
            bool all_exact = true;
            for (int g = 0; g < spec.true_g; ++g) {
                const auto& est = fit.params.components[static_cast<std::size_t>(g)];
                const auto& truth = sim.truth.components[static_cast<std::size_t>(matching[static_cast<std::size_t>(g)])];
                mt += metric_m_theta(est.theta, truth.theta);
                mr += metric_m_rho(est.consensus, truth.consensus);
                all_exact = all_exact && metric_phi_rho(est.consensus, truth.consensus);
            }
            report.m_theta.push_back(mt / spec.true_g);
            report.m_rho.push_back(mr / spec.true_g);
            report.phi_rho.push_back(all_exact ? 1.0 : 0.0);

            // MAP allocation per distinct row, expanded to units
            std::vector<int> row_map(data.row_count(), 0);
            for (std::size_t l = 0; l < data.row_count(); ++l) {
                int best = 0;
                for (int g = 1; g < fit.responsibilities.groups; ++g)
                    if (fit.responsibilities.at(l, g) > fit.responsibilities.at(l, best)) best = g;
                row_map[l] = best;
            }
            // partial fits carry responsibilities over completions, not rows;
            // recompute MAP over observed rows in that case
            if (fit.responsibilities.rows != data.row_count()) {
                row_map.assign(data.row_count(), 0);
                for (std::size_t l = 0; l < data.row_count(); ++l) {
                    double best_val = neg_inf;
                    int best = 0;
                    for (int g = 0; g < fit.params.groups(); ++g) {
                        double acc = neg_inf;
                        const auto& comp = fit.params.components[static_cast<std::size_t>(g)];
                        const double log_z = ev.log_partition(comp.theta);
                        for_each_completion(data.row(l), [&](const Ranking& r) {
                            acc = log_add(acc, -comp.theta * static_cast<double>(spearman_distance(r, comp.consensus)) - log_z);
                        });
                        const double v = std::log(fit.params.weights[static_cast<std::size_t>(g)]) + acc;
                        if (v > best_val) {
                            best_val = v;
                            best = g;
                        }
                    }
                    row_map[l] = best;
                }
            }
            std::vector<int> unit_map(sim.unit_rankings.size());
            for (std::size_t j = 0; j < unit_map.size(); ++j) unit_map[j] = row_map[unit_row[j]];
            report.phi_z.push_back(metric_phi_z(unit_map, sim.unit_labels, matching));
        }

        if (report.has_g_search) {
            EmOptions search_em = spec.em;
            search_em.seed = derive_seed(rep_seed, 91);
            GSearchResult search = select_g(data, spec.g_range, ev, search_em);
            for (const auto& f : search.fits) {
                report.min_loglik_increment = std::min(report.min_loglik_increment, f.diagnostics.min_loglik_increment);
                report.max_resp_row_error = std::max(report.max_resp_row_error, f.diagnostics.max_resp_row_error);
            }
            report.phi_g.push_back(search.selected_g == spec.true_g ? 1.0 : 0.0);
        }
    }

    report.mean_m_theta = detail::mean_of(report.m_theta);
    report.mean_m_rho = detail::mean_of(report.m_rho);
    report.mean_phi_rho = detail::mean_of(report.phi_rho);
    report.mean_phi_z = detail::mean_of(report.phi_z);
    report.mean_phi_g = detail::mean_of(report.phi_g);
    return report;
}

// ---------------------------------------------------------------------------
// Concentration-estimation error study (exact vs approximate vs vMF)
// ---------------------------------------------------------------------------

struct ThetaErrorSpec {
    int n = 10;
    long long sample_size = 1000;
    std::vector<double> thetas = {0.001, 0.01, 0.1};
    int replicates = 20;
    std::uint64_t seed = 1;
    double theta_max = 10.0;
    double solver_tol = 1e-10;
    std::optional<std::filesystem::path> cache_dir;
};

struct ThetaErrorReport {
    ThetaErrorSpec spec;
    std::vector<double> theta;      // one entry per theta level
    std::vector<double> err_exact;  // mean |theta_hat - theta| with exact counts (n <= 14)
    std::vector<double> err_approx; // with the rate-function approximation (n >= 8)
    std::vector<double> err_vmf;    // with the vMF-implied expected distance
    bool has_exact = false;
    bool has_approx = false;
};

/// For each theta level, draw replicate samples, estimate the consensus by
/// Borda and solve for theta with each available evaluation of E_theta[D];
/// report the average absolute errors.
inline ThetaErrorReport run_theta_error_study(const ThetaErrorSpec& spec) {
    ThetaErrorReport report;
    report.spec = spec;
    report.has_exact = spec.n <= 14;
    report.has_approx = spec.n >= 8;

    std::optional<PartitionEvaluator> exact_ev, approx_ev;
    if (report.has_exact) exact_ev.emplace(load_or_build_exact(spec.n, spec.cache_dir));
    if (report.has_approx) approx_ev.emplace(approx_counts(spec.n, RateFit::reference().at(spec.n)));
    const double cn = static_cast<double>(rank_square_sum(spec.n));
    const SampleMethod method = spec.n <= 8 ? SampleMethod::exhaustive : SampleMethod::mcmc;

    for (std::size_t t = 0; t < spec.thetas.size(); ++t) {
        const double theta = spec.thetas[t];
        double sum_exact = 0.0, sum_approx = 0.0, sum_vmf = 0.0;
        for (int rep = 0; rep < spec.replicates; ++rep) {
            const std::uint64_t rep_seed = derive_seed(spec.seed, 5000 + t * 1000 + static_cast<std::uint64_t>(rep));
            std::mt19937_64 rng(rep_seed);
            const Ranking rho = detail::random_permutation(spec.n, rng);
            const auto draws = sample_mms_rankings(MmsParams{rho, theta}, spec.sample_size,
                                                   derive_seed(rep_seed, 3), method);
            std::vector<double> unit(draws.size(), 1.0);
            const MeanRankVector rbar = weighted_mean_rank(draws, unit);
            const Ranking rho_hat = borda_rank(rbar);
            const double dbar = 2.0 * (cn - scalar_product(rbar, rho_hat));
            if (report.has_exact)
                sum_exact += std::fabs(exact_ev->solve_theta(dbar, spec.solver_tol, spec.theta_max).theta - theta);
            if (report.has_approx)
                sum_approx += std::fabs(approx_ev->solve_theta(dbar, spec.solver_tol, spec.theta_max).theta - theta);
            sum_vmf += std::fabs(vmf_solve_theta(spec.n, dbar, spec.solver_tol, spec.theta_max).theta - theta);
        }
        const double nan = std::numeric_limits<double>::quiet_NaN();
        report.theta.push_back(theta);
        report.err_exact.push_back(report.has_exact ? sum_exact / spec.replicates : nan);
        report.err_approx.push_back(report.has_approx ? sum_approx / spec.replicates : nan);
        report.err_vmf.push_back(sum_vmf / spec.replicates);
    }
    return report;
}

} // namespace spearmix

#endif // SPEARMIX_SIMULATION_HPP
