#ifndef SPEARMIX_RANKING_HPP
#define SPEARMIX_RANKING_HPP

#include <algorithm>
#include <cstddef>
#include <map>
#include <numeric>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "spearmix/common.hpp"

namespace spearmix {

/// c_n = n(n+1)(2n+1)/6, the squared norm of any rank vector.
inline long long rank_square_sum(int n) {
    long long m = n;
    return m * (m + 1) * (2 * m + 1) / 6;
}

/// Largest possible Spearman distance, 2*binomial(n+1, 3) = n(n^2-1)/3,
/// attained by a ranking and its reverse.
inline long long max_spearman_distance(int n) {
    long long m = n;
    return m * (m * m - 1) / 3;
}

/// A full ranking of n items: entry i is the rank (1..n) assigned to item i.
/// Lower rank means more preferred. Always a valid permutation of 1..n.
class Ranking {
public:
    explicit Ranking(std::vector<int> ranks) : ranks_(std::move(ranks)) { validate(); }

    static Ranking identity(int n) {
        check_size(n);
        std::vector<int> r(static_cast<std::size_t>(n));
        std::iota(r.begin(), r.end(), 1);
        return unchecked(std::move(r));
    }

    static Ranking reversed(int n) {
        check_size(n);
        std::vector<int> r(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) r[static_cast<std::size_t>(i)] = n - i;
        return unchecked(std::move(r));
    }

    /// Construction bypassing validation, for internal hot paths that build
    /// permutations by construction (samplers, completion enumeration).
    static Ranking unchecked(std::vector<int> ranks) { return Ranking(std::move(ranks), 0); }

    int size() const { return static_cast<int>(ranks_.size()); }
    int rank_of(int item) const { return ranks_[static_cast<std::size_t>(item)]; }
    int operator[](int item) const { return ranks_[static_cast<std::size_t>(item)]; }
    const std::vector<int>& ranks() const { return ranks_; }

    bool operator==(const Ranking& other) const = default;

private:
    Ranking(std::vector<int> ranks, int) : ranks_(std::move(ranks)) {}

    static void check_size(int n) {
        if (n < 2) throw error("Ranking: need at least 2 items, got " + std::to_string(n));
    }

    void validate() const {
        const int n = size();
        check_size(n);
        std::vector<char> seen(static_cast<std::size_t>(n) + 1, 0);
        for (int r : ranks_) {
            if (r < 1 || r > n) throw error("Ranking: rank " + std::to_string(r) + " outside 1.." + std::to_string(n));
            if (seen[static_cast<std::size_t>(r)]++) throw error("Ranking: duplicate rank " + std::to_string(r));
        }
    }

    std::vector<int> ranks_;
};

/// A partially observed ranking: some items carry a rank in 1..n, the rest
/// are missing. Any censoring pattern is allowed; the observed ranks are
/// distinct but need not be the top ones.
class PartialRanking {
public:
    static constexpr int missing = 0;

    explicit PartialRanking(std::vector<int> ranks) : ranks_(std::move(ranks)) { validate(); }
    PartialRanking(const Ranking& full) : ranks_(full.ranks()), ranked_count_(full.size()) {}

    int size() const { return static_cast<int>(ranks_.size()); }
    int rank_of(int item) const { return ranks_[static_cast<std::size_t>(item)]; }
    bool is_ranked(int item) const { return ranks_[static_cast<std::size_t>(item)] != missing; }
    int ranked_count() const { return ranked_count_; }
    const std::vector<int>& ranks() const { return ranks_; }

    std::vector<int> ranked_items() const {
        std::vector<int> items;
        items.reserve(static_cast<std::size_t>(ranked_count_));
        for (int i = 0; i < size(); ++i)
            if (is_ranked(i)) items.push_back(i);
        return items;
    }

    bool is_full() const { return ranked_count_ == size(); }

    Ranking to_full() const {
        if (!is_full()) throw error("PartialRanking: not a full ranking");
        return Ranking::unchecked(ranks_);
    }

    bool operator==(const PartialRanking& other) const { return ranks_ == other.ranks_; }

private:
    void validate() {
        const int n = size();
        if (n < 2) throw error("PartialRanking: need at least 2 items");
        std::vector<char> seen(static_cast<std::size_t>(n) + 1, 0);
        ranked_count_ = 0;
        for (int r : ranks_) {
            if (r == missing) continue;
            if (r < 1 || r > n)
                throw error("PartialRanking: rank " + std::to_string(r) + " outside 1.." + std::to_string(n));
            if (seen[static_cast<std::size_t>(r)]++)
                throw error("PartialRanking: duplicate rank " + std::to_string(r));
            ++ranked_count_;
        }
        if (ranked_count_ == 0) throw error("PartialRanking: at least one item must be ranked");
    }

    std::vector<int> ranks_;
    int ranked_count_ = 0;
};

/// Distinct (partial) rankings with multiplicities. Duplicate rank vectors
/// are aggregated on construction, so the number of rows L never exceeds the
/// sample size N.
class RankingDataset {
public:
    class Builder {
    public:
        /// Returns the row index the observation was aggregated into.
        std::size_t add(PartialRanking row, long long multiplicity = 1) {
            if (multiplicity <= 0) throw error("RankingDataset: multiplicity must be positive");
            auto [it, inserted] = index_.try_emplace(row.ranks(), rows_.size());
            if (inserted) {
                rows_.push_back(std::move(row));
                multiplicities_.push_back(multiplicity);
            } else {
                multiplicities_[it->second] += multiplicity;
            }
            return it->second;
        }

        std::size_t add(const Ranking& row, long long multiplicity = 1) { return add(PartialRanking(row), multiplicity); }

        RankingDataset build(std::vector<std::string> items = {}) {
            return RankingDataset(std::move(items), std::move(rows_), std::move(multiplicities_));
        }

    private:
        std::map<std::vector<int>, std::size_t> index_;
        std::vector<PartialRanking> rows_;
        std::vector<long long> multiplicities_;
    };

    RankingDataset(std::vector<std::string> items, std::vector<PartialRanking> rows,
                   std::vector<long long> multiplicities)
        : items_(std::move(items)), rows_(std::move(rows)), multiplicities_(std::move(multiplicities)) {
        if (rows_.empty()) throw error("RankingDataset: no rows");
        if (rows_.size() != multiplicities_.size()) throw error("RankingDataset: rows/multiplicities size mismatch");
        n_ = rows_.front().size();
        if (items_.empty()) {
            items_.reserve(static_cast<std::size_t>(n_));
            for (int i = 1; i <= n_; ++i) items_.push_back("item" + std::to_string(i));
        }
        if (static_cast<int>(items_.size()) != n_) throw error("RankingDataset: item label count != n");
        total_ = 0;
        all_full_ = true;
        for (std::size_t l = 0; l < rows_.size(); ++l) {
            if (rows_[l].size() != n_) throw error("RankingDataset: inconsistent item count across rows");
            if (multiplicities_[l] <= 0) throw error("RankingDataset: multiplicity must be positive");
            total_ += multiplicities_[l];
            all_full_ = all_full_ && rows_[l].is_full();
        }
    }

    int n() const { return n_; }
    std::size_t row_count() const { return rows_.size(); }
    long long total() const { return total_; }
    bool all_full() const { return all_full_; }
    const std::vector<std::string>& items() const { return items_; }
    const PartialRanking& row(std::size_t l) const { return rows_[l]; }
    long long multiplicity(std::size_t l) const { return multiplicities_[l]; }
    const std::vector<PartialRanking>& rows() const { return rows_; }
    const std::vector<long long>& multiplicities() const { return multiplicities_; }

    /// All rows as full rankings; throws if any row is partial.
    std::vector<Ranking> full_rows() const {
        std::vector<Ranking> out;
        out.reserve(rows_.size());
        for (std::size_t l = 0; l < rows_.size(); ++l) {
            if (!rows_[l].is_full())
                throw error("RankingDataset: row " + std::to_string(l + 1) + " is partial, full ranking required");
            out.push_back(rows_[l].to_full());
        }
        return out;
    }

private:
    std::vector<std::string> items_;
    std::vector<PartialRanking> rows_;
    std::vector<long long> multiplicities_;
    int n_ = 0;
    long long total_ = 0;
    bool all_full_ = true;
};

/// Average assigned rank per item under some weighting of full rankings.
struct MeanRankVector {
    std::vector<double> values;
    double weight_total = 0.0;

    int size() const { return static_cast<int>(values.size()); }
};

/// Squared Euclidean distance between two rank vectors. Always even, at most
/// max_spearman_distance(n).
inline long long spearman_distance(const Ranking& a, const Ranking& b) {
    if (a.size() != b.size())
        throw error("spearman_distance: size mismatch (" + std::to_string(a.size()) + " vs " +
                    std::to_string(b.size()) + ")");
    long long d = 0;
    for (int i = 0; i < a.size(); ++i) {
        long long diff = a[i] - b[i];
        d += diff * diff;
    }
    return d;
}

inline long long scalar_product(const Ranking& a, const Ranking& b) {
    if (a.size() != b.size()) throw error("scalar_product: size mismatch");
    long long s = 0;
    for (int i = 0; i < a.size(); ++i) s += static_cast<long long>(a[i]) * b[i];
    return s;
}

inline double scalar_product(const MeanRankVector& m, const Ranking& r) {
    if (m.size() != r.size()) throw error("scalar_product: size mismatch");
    double s = 0.0;
    for (int i = 0; i < r.size(); ++i) s += m.values[static_cast<std::size_t>(i)] * r[i];
    return s;
}

/// Weighted mean rank vector over full rankings: value_i = sum_l w_l r_li / sum_l w_l.
/// Row multiplicities, EM responsibilities and augmentation frequencies all
/// enter through the weights.
inline MeanRankVector weighted_mean_rank(std::span<const Ranking> rankings, std::span<const double> weights) {
    if (rankings.empty()) throw error("weighted_mean_rank: no rankings");
    if (rankings.size() != weights.size()) throw error("weighted_mean_rank: weights size mismatch");
    const int n = rankings.front().size();
    MeanRankVector m;
    m.values.assign(static_cast<std::size_t>(n), 0.0);
    for (std::size_t l = 0; l < rankings.size(); ++l) {
        const double w = weights[l];
        if (w < 0.0) throw error("weighted_mean_rank: negative weight");
        if (rankings[l].size() != n) throw error("weighted_mean_rank: inconsistent sizes");
        for (int i = 0; i < n; ++i) m.values[static_cast<std::size_t>(i)] += w * rankings[l][i];
        m.weight_total += w;
    }
    if (!(m.weight_total > 0.0)) throw error("weighted_mean_rank: total weight is zero");
    for (double& v : m.values) v /= m.weight_total;
    return m;
}

/// Mean rank of a full-ranking dataset with per-row weights (multiplicities
/// are applied on top of the weights).
inline MeanRankVector weighted_mean_rank(const RankingDataset& data, std::span<const double> weights) {
    if (data.row_count() != weights.size()) throw error("weighted_mean_rank: weights size mismatch");
    std::vector<double> w(data.row_count());
    for (std::size_t l = 0; l < w.size(); ++l)
        w[l] = static_cast<double>(data.multiplicity(l)) * weights[l];
    const auto rows = data.full_rows();
    return weighted_mean_rank(rows, w);
}

inline MeanRankVector mean_rank(const RankingDataset& data) {
    std::vector<double> unit(data.row_count(), 1.0);
    return weighted_mean_rank(data, unit);
}

enum class TieBreak { smallest_index, randomized };

namespace detail {

// Sorted item order -> ranks 1..n.
inline Ranking order_to_ranking(const std::vector<int>& order) {
    std::vector<int> ranks(order.size());
    for (std::size_t pos = 0; pos < order.size(); ++pos)
        ranks[static_cast<std::size_t>(order[pos])] = static_cast<int>(pos) + 1;
    return Ranking::unchecked(std::move(ranks));
}

inline Ranking rank_by_value(std::span<const double> values, bool ascending, TieBreak ties,
                             std::mt19937_64* rng) {
    const int n = static_cast<int>(values.size());
    if (n < 2) throw error("ranking: need at least 2 values");
    for (double v : values)
        if (!std::isfinite(v)) throw error("ranking: non-finite value");
    std::vector<int> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    auto key = [&](int i) { return ascending ? values[static_cast<std::size_t>(i)] : -values[static_cast<std::size_t>(i)]; };
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return key(a) < key(b); });
    if (ties == TieBreak::randomized) {
        if (rng == nullptr) throw error("ranking: randomized tie-break needs an RNG");
        std::size_t start = 0;
        while (start < order.size()) {
            std::size_t end = start + 1;
            while (end < order.size() && key(order[end]) == key(order[start])) ++end;
            for (std::size_t k = end - 1; k > start; --k)
                std::swap(order[k], order[start + uniform_index(*rng, k - start + 1)]);
            start = end;
        }
    }
    return order_to_ranking(order);
}

} // namespace detail

/// Rank the entries of a mean rank vector in increasing order; this is the
/// Borda aggregate and the maximizer of rho^T rbar over all permutations.
/// Ties go to the smaller item index unless a randomized policy is requested.
inline Ranking borda_rank(const MeanRankVector& m, TieBreak ties = TieBreak::smallest_index,
                          std::mt19937_64* rng = nullptr) {
    return detail::rank_by_value(m.values, true, ties, rng);
}

enum class RankDirection { ascending, descending };

/// Convert a quantitative profile into a ranking: rank 1 goes to the smallest
/// value (ascending) or the largest (descending); ties to the smaller index.
inline Ranking rankify(std::span<const double> values, RankDirection direction) {
    return detail::rank_by_value(values, direction == RankDirection::ascending, TieBreak::smallest_index, nullptr);
}

} // namespace spearmix

#endif // SPEARMIX_RANKING_HPP
