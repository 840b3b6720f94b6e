#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "oracles.hpp"
#include "spearmix/ranking.hpp"

using namespace spearmix;
using Catch::Approx;

TEST_CASE("ranking validation") {
    CHECK_THROWS_AS(Ranking({1, 1, 2}), error);
    CHECK_THROWS_AS(Ranking({1, 2, 4}), error);
    CHECK_THROWS_AS(Ranking({1}), error);
    CHECK(Ranking::identity(4).ranks() == std::vector<int>{1, 2, 3, 4});
    CHECK(Ranking::reversed(4).ranks() == std::vector<int>{4, 3, 2, 1});
}

TEST_CASE("spearman distance basics") {
    const Ranking e3 = Ranking::identity(3);
    CHECK(spearman_distance(e3, e3) == 0);
    CHECK(spearman_distance(Ranking({3, 2, 1}), e3) == 8);
    CHECK(spearman_distance(Ranking({3, 2, 1}), e3) == max_spearman_distance(3));
    CHECK(spearman_distance(Ranking({2, 1, 3}), e3) == 2);
    CHECK_THROWS_AS(spearman_distance(e3, Ranking::identity(4)), error);
}

TEST_CASE("scalar products and the distance identity") {
    const Ranking e3 = Ranking::identity(3);
    CHECK(scalar_product(e3, e3) == 14);
    CHECK(rank_square_sum(3) == 14);
    CHECK(scalar_product(e3, Ranking({3, 2, 1})) == 10);
    CHECK(2 * (14 - 10) == spearman_distance(e3, Ranking({3, 2, 1})));
    CHECK(scalar_product(Ranking({2, 1, 3}), e3) == 13);
    CHECK(2 * (14 - 13) == 2);
}

TEST_CASE("spearman distance properties for small n") {
    // exhaustive over all (a, b, sigma) triples for n <= 4, sampled for n = 5
    for (int n = 3; n <= 5; ++n) {
        const auto perms = oracles::all_permutations(n);
        const long long dmax = max_spearman_distance(n);
        std::mt19937_64 rng(7);
        const bool exhaustive = n <= 4;
        const std::size_t trials = exhaustive ? perms.size() * perms.size() * perms.size() : 2000;
        for (std::size_t trial = 0; trial < trials; ++trial) {
            std::size_t ia, ib, is;
            if (exhaustive) {
                ia = trial % perms.size();
                ib = (trial / perms.size()) % perms.size();
                is = trial / (perms.size() * perms.size());
            } else {
                ia = rng() % perms.size();
                ib = rng() % perms.size();
                is = rng() % perms.size();
            }
            const auto& pa = perms[ia];
            const auto& pb = perms[ib];
            const auto& ps = perms[is];
            const Ranking a{std::vector<int>(pa)}, b{std::vector<int>(pb)};
            const long long d = spearman_distance(a, b);
            REQUIRE(d % 2 == 0);
            REQUIRE(d == spearman_distance(b, a));
            REQUIRE((d == 0) == (a == b));
            // right invariance: compose both with sigma
            std::vector<int> as(pa.size()), bs(pa.size());
            for (std::size_t i = 0; i < pa.size(); ++i) {
                as[i] = pa[static_cast<std::size_t>(ps[i] - 1)];
                bs[i] = pb[static_cast<std::size_t>(ps[i] - 1)];
            }
            REQUIRE(spearman_distance(Ranking(as), Ranking(bs)) == d);
            // reverse complement: d(a, b) + d(a, rev o b) = d_max
            std::vector<int> rb(pb.size());
            for (std::size_t i = 0; i < pb.size(); ++i) rb[i] = n + 1 - pb[i];
            REQUIRE(d + spearman_distance(a, Ranking(rb)) == dmax);
        }
    }
}

TEST_CASE("weighted mean rank") {
    const std::vector<Ranking> rows{Ranking({1, 2, 3}), Ranking({2, 1, 3})};
    const std::vector<double> w{2.0, 2.0};
    const auto m = weighted_mean_rank(rows, w);
    CHECK(m.values[0] == Approx(1.5));
    CHECK(m.values[1] == Approx(1.5));
    CHECK(m.values[2] == Approx(3.0));

    const std::vector<Ranking> single{Ranking({3, 1, 2})};
    const std::vector<double> one{1.0};
    const auto ms = weighted_mean_rank(single, one);
    CHECK(ms.values == std::vector<double>{3.0, 1.0, 2.0});

    const std::vector<Ranking> convex{Ranking({1, 2, 3}), Ranking({3, 2, 1})};
    const std::vector<double> wc{0.25, 0.75};
    const auto mc = weighted_mean_rank(convex, wc);
    CHECK(mc.values[0] == Approx(2.5));
    CHECK(mc.values[1] == Approx(2.0));
    CHECK(mc.values[2] == Approx(1.5));

    const std::vector<double> zero{0.0, 0.0};
    CHECK_THROWS_AS(weighted_mean_rank(convex, zero), error);
}

TEST_CASE("mean rank over all permutations is flat") {
    for (int n = 3; n <= 5; ++n) {
        std::vector<Ranking> rows;
        for (const auto& p : oracles::all_permutations(n)) rows.emplace_back(std::vector<int>(p));
        const std::vector<double> w(rows.size(), 1.0);
        const auto m = weighted_mean_rank(rows, w);
        for (double v : m.values) CHECK(v == Approx((n + 1) / 2.0));
    }
}

TEST_CASE("borda rank") {
    CHECK(borda_rank({{2.1, 1.5, 2.4}, 1.0}).ranks() == std::vector<int>{2, 1, 3});
    CHECK(borda_rank({{1.5, 1.5, 3.0}, 1.0}).ranks() == std::vector<int>{1, 2, 3});
    CHECK_THROWS_AS(borda_rank({{1.0, std::nan(""), 2.0}, 1.0}), error);
}

TEST_CASE("borda rank attains the brute-force scalar-product maximum") {
    std::mt19937_64 rng(42);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<double> values(6);
        for (auto& v : values) v = 1.0 + 5.0 * uniform01(rng);
        const MeanRankVector m{values, 1.0};
        const Ranking best = borda_rank(m);
        const double attained = scalar_product(m, best);
        CHECK(attained == Approx(oracles::best_scalar_product(values)).epsilon(1e-12));
    }
}

TEST_CASE("randomized tie-break produces valid permutations and needs an rng") {
    const MeanRankVector tied{{1.0, 1.0, 1.0, 2.0}, 1.0};
    CHECK_THROWS_AS(borda_rank(tied, TieBreak::randomized, nullptr), error);
    std::mt19937_64 rng(3);
    bool saw_non_identity = false;
    for (int i = 0; i < 20; ++i) {
        const Ranking r = borda_rank(tied, TieBreak::randomized, &rng);
        CHECK_NOTHROW(Ranking(r.ranks())); // always a valid permutation
        CHECK(r.rank_of(3) == 4);
        if (r.rank_of(0) != 1) saw_non_identity = true;
    }
    CHECK(saw_non_identity);
}

TEST_CASE("rankify") {
    const std::vector<double> v{0.1, 9.0, 3.0};
    CHECK(rankify(v, RankDirection::descending).ranks() == std::vector<int>{3, 1, 2});
    const std::vector<double> ties{5.0, 5.0, 1.0};
    CHECK(rankify(ties, RankDirection::ascending).ranks() == std::vector<int>{2, 3, 1});
    const std::vector<double> mono{-2.0, 0.0, 1.5, 7.0};
    CHECK(rankify(mono, RankDirection::ascending).ranks() == std::vector<int>{1, 2, 3, 4});
    const std::vector<double> inf{1.0, std::numeric_limits<double>::infinity()};
    CHECK_THROWS_AS(rankify(inf, RankDirection::ascending), error);
}

TEST_CASE("partial rankings") {
    const PartialRanking p({1, 2, PartialRanking::missing, PartialRanking::missing});
    CHECK(p.ranked_count() == 2);
    CHECK(p.ranked_items() == std::vector<int>{0, 1});
    CHECK_FALSE(p.is_full());
    CHECK_THROWS_AS(p.to_full(), error);
    CHECK_THROWS_AS(PartialRanking({0, 0, 0}), error);
    CHECK_THROWS_AS(PartialRanking({1, 1, 0}), error);
    CHECK_THROWS_AS(PartialRanking({5, 1, 0}), error);
    const PartialRanking full(Ranking({2, 1, 3}));
    CHECK(full.is_full());
    CHECK(full.to_full() == Ranking({2, 1, 3}));
}

TEST_CASE("dataset aggregates duplicate rows") {
    RankingDataset::Builder b;
    CHECK(b.add(Ranking({1, 2, 3})) == 0);
    CHECK(b.add(Ranking({2, 1, 3})) == 1);
    CHECK(b.add(Ranking({1, 2, 3}), 2) == 0);
    const auto data = b.build({"a", "b", "c"});
    CHECK(data.row_count() == 2);
    CHECK(data.total() == 4);
    CHECK(data.multiplicity(0) == 3);
    CHECK(data.all_full());
    CHECK(data.items()[2] == "c");
}
