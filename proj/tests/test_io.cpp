#include <catch2/catch_amalgamated.hpp>

#include <sstream>

#include "spearmix/csv_io.hpp"
#include "spearmix/result_json.hpp"

using namespace spearmix;
using Catch::Approx;

TEST_CASE("rankings csv parsing") {
    std::istringstream in("a,b,c\n1,2,3\n1,2,3\n2,1,3\n");
    const auto data = parse_rankings_csv(in);
    CHECK(data.n() == 3);
    CHECK(data.items() == std::vector<std::string>{"a", "b", "c"});
    CHECK(data.row_count() == 2); // duplicates aggregated
    CHECK(data.multiplicity(0) == 2);
    CHECK(data.total() == 3);
}

TEST_CASE("rankings csv with NA and freq column") {
    std::istringstream in("a,b,c,d,freq\n1,2,NA,NA,5\n1,NA,NA,2,1\n");
    const auto data = parse_rankings_csv(in);
    CHECK(data.total() == 6);
    CHECK(data.row(0).ranked_items() == std::vector<int>{0, 1});
    CHECK_FALSE(data.all_full());
}

TEST_CASE("rankings csv error reporting") {
    std::istringstream dup("a,b,c\n1,1,2\n");
    CHECK_THROWS_WITH(parse_rankings_csv(dup), Catch::Matchers::ContainsSubstring("row 1") &&
                                                   Catch::Matchers::ContainsSubstring("duplicate rank"));

    std::istringstream range("a,b,c\n1,2,3\n0,2,3\n");
    CHECK_THROWS_WITH(parse_rankings_csv(range), Catch::Matchers::ContainsSubstring("row 2") &&
                                                     Catch::Matchers::ContainsSubstring("outside"));

    std::istringstream ragged("a,b,c\n1,2\n");
    CHECK_THROWS_WITH(parse_rankings_csv(ragged), Catch::Matchers::ContainsSubstring("row 1") &&
                                                      Catch::Matchers::ContainsSubstring("expected 3 fields"));

    std::istringstream empty_row("a,b,c\nNA,NA,NA\n");
    CHECK_THROWS_WITH(parse_rankings_csv(empty_row), Catch::Matchers::ContainsSubstring("no ranked items"));

    std::istringstream bad_freq("a,b,freq\n1,2,0\n");
    CHECK_THROWS_AS(parse_rankings_csv(bad_freq), error);
}

TEST_CASE("rankings csv round-trip") {
    std::istringstream in("x,y,z,w,freq\n1,2,NA,NA,4\n4,3,2,1,2\n2,NA,1,NA,1\n");
    const auto data = parse_rankings_csv(in);
    std::ostringstream out;
    write_rankings_csv(data, out);
    std::istringstream back(out.str());
    const auto again = parse_rankings_csv(back);
    REQUIRE(again.row_count() == data.row_count());
    CHECK(again.items() == data.items());
    CHECK(again.total() == data.total());
    for (std::size_t l = 0; l < data.row_count(); ++l) {
        CHECK(again.row(l) == data.row(l));
        CHECK(again.multiplicity(l) == data.multiplicity(l));
    }
}

TEST_CASE("matrix csv parsing") {
    std::istringstream in("g1,g2,g3\n0.1,9.0,3.0\n5,5,1\n");
    const auto m = parse_matrix_csv(in);
    REQUIRE(m.rows.size() == 2);
    CHECK(m.labels == std::vector<std::string>{"g1", "g2", "g3"});
    CHECK(rankify(m.rows[0], RankDirection::descending).ranks() == std::vector<int>{3, 1, 2});

    std::istringstream bad("a,b\n1,zzz\n");
    CHECK_THROWS_AS(parse_matrix_csv(bad), error);
}

TEST_CASE("fit result document round-trips through json") {
    RankingDataset::Builder b;
    const MmsParams truth{Ranking({1, 2, 3, 4, 5}), 0.4};
    for (const auto& r : sample_mms_rankings(truth, 60, 3, SampleMethod::exhaustive)) b.add(r);
    const auto data = b.build();
    PartitionEvaluator ev(exact_counts(5));
    EmOptions opts;
    opts.n_starts = 2;
    const auto fit = em_fit(data, 1, ev, opts);

    auto doc = make_fit_document(fit, data, opts, ev.provenance(), 14, true);
    doc.g_range = std::vector<int>{1, 2};
    doc.bic_curve = std::vector<double>{fit.bic, fit.bic + 10.0};
    doc.selected_g = 1;

    const nlohmann::json j = doc;
    const std::string text = j.dump();
    const FitResultDocument parsed = nlohmann::json::parse(text).get<FitResultDocument>();

    CHECK(parsed.n == doc.n);
    CHECK(parsed.groups == doc.groups);
    CHECK(parsed.items == doc.items);
    CHECK(parsed.seed == doc.seed);
    CHECK(parsed.weights == doc.weights);
    CHECK(parsed.consensus == doc.consensus);
    CHECK(parsed.thetas == doc.thetas);
    CHECK(parsed.log_lik == doc.log_lik);
    CHECK(parsed.bic_full == doc.bic_full);
    CHECK(parsed.bic_continuous == doc.bic_continuous);
    CHECK(parsed.cluster_sizes == doc.cluster_sizes);
    CHECK(parsed.converged == doc.converged);
    REQUIRE(parsed.responsibilities.has_value());
    CHECK(*parsed.responsibilities == *doc.responsibilities);
    REQUIRE(parsed.g_range.has_value());
    CHECK(*parsed.g_range == *doc.g_range);
    CHECK(*parsed.selected_g == 1);
}

TEST_CASE("study report json carries the effective configuration") {
    ScenarioSpec spec;
    spec.n = 5;
    spec.sample_size = 100;
    spec.true_g = 1;
    spec.theta_min = 0.15;
    spec.theta_max = 0.30;
    spec.replicates = 2;
    spec.seed = 5;
    spec.em.n_starts = 2;
    const auto report = run_study(spec);
    const auto j = study_report_json(report);
    CHECK(j.at("spec").at("n").get<int>() == 5);
    CHECK(j.at("spec").at("seed").get<std::uint64_t>() == 5);
    CHECK(j.at("perReplicate").at("mTheta").size() == 2);
    CHECK(j.at("means").contains("phiRho"));
    CHECK_FALSE(j.at("perReplicate").contains("phiZ"));
}

TEST_CASE("error json shape") {
    const auto j = error_json("boom");
    CHECK(j.at("error").at("message").get<std::string>() == "boom");
}
