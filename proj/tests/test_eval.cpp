#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "finsent/common.hpp"
#include "finsent/eval.hpp"
#include "finsent/fixtures.hpp"
#include "finsent/rng.hpp"
#include "helpers.hpp"

using namespace finsent;
using eval::PredictionRecord;

TEST_CASE("cosine similarity: hand values") {
    CHECK(eval::cosine_similarity({0.5, -0.3, 0.8}, {0.5, -0.3, 0.8}) ==
          doctest::Approx(1.0));
    CHECK(eval::cosine_similarity({1.0, 0.0}, {0.0, 1.0}) == doctest::Approx(0.0));
    CHECK(eval::cosine_similarity({1.0, 1.0}, {1.0, 0.0}) ==
          doctest::Approx(1.0 / std::sqrt(2.0)));
}

TEST_CASE("cosine similarity: scale invariance and degenerate inputs") {
    RunRng rng(9);
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t n = 2 + rng.next_index(20);
        std::vector<double> p(n), g(n);
        for (std::size_t i = 0; i < n; ++i) {
            p[i] = rng.next_uniform(-1, 1);
            g[i] = rng.next_uniform(-1, 1);
        }
        const double c = 0.01 + rng.next_uniform() * 50.0;
        std::vector<double> scaled = p;
        for (auto& v : scaled) v *= c;
        CHECK(std::fabs(eval::cosine_similarity(scaled, g) -
                        eval::cosine_similarity(p, g)) < 1e-12);
    }

    CHECK_THROWS_AS(eval::cosine_similarity({}, {}), std::invalid_argument);
    CHECK_THROWS_AS(eval::cosine_similarity({1.0}, {1.0, 2.0}), std::invalid_argument);

    log::set_quiet(true);
    const auto warnings = log::warning_count();
    CHECK(eval::cosine_similarity({0.0, 0.0}, {1.0, 2.0}) == 0.0);
    CHECK(log::warning_count() == warnings + 1);
    log::set_quiet(false);
}

TEST_CASE("clamping") {
    CHECK(eval::clamp_score(1.7) == 1.0);
    CHECK(eval::clamp_score(-3.0) == -1.0);
    CHECK(eval::clamp_score(0.25) == 0.25);
}

TEST_CASE("records: byte-stable serialization and round trip") {
    testing::TempDir tmp("records");
    auto records = fixtures::error_analysis_records();
    records[0].attention = model::AttentionRecord{
        {0.25, 0.75}, {{}, {0.5, 0.5}}, {"pure", "garbage"}, {{}, {"junk", "trash"}}};

    const std::string path = tmp.path("records.jsonl");
    eval::write_records(path, records);
    const std::string first = io::read_file(path);
    eval::write_records(path, records);
    CHECK(io::read_file(path) == first);  // byte-identical rewrite

    const auto loaded = eval::read_records(path);
    REQUIRE(loaded.size() == 3);
    CHECK(loaded[0].id == "err-1");
    CHECK(loaded[0].gold == -0.946);
    CHECK(loaded[0].model_predictions.at("E1") == 0.042);
    REQUIRE(loaded[0].attention.has_value());
    CHECK(loaded[0].attention->tokens == std::vector<std::string>{"pure", "garbage"});
    CHECK_FALSE(loaded[1].attention.has_value());

    CHECK_THROWS_AS(eval::read_records(tmp.write("bad.jsonl", "{oops\n")), ValidationError);
}

TEST_CASE("error report flags exactly the opposite-polarity rows") {
    const auto records = fixtures::error_analysis_records();
    const auto flagged = eval::flag_polarity_errors(records, 0.5);
    REQUIRE(flagged.size() == 2);
    // sorted by |gold - predicted| descending: err-2 gap 1.031 > err-1 gap 0.988
    CHECK(flagged[0] == "err-2");
    CHECK(flagged[1] == "err-1");

    const std::string report = eval::emit_error_report(records, 0.5);
    CHECK(report.find("flagged 2 of 3") != std::string::npos);
    CHECK(report.find("err-1") != std::string::npos);
    CHECK(report.find("err-2") != std::string::npos);
    CHECK(report.find("ok-1") == std::string::npos);
}

TEST_CASE("error report threshold excludes small-magnitude golds") {
    PredictionRecord weak;
    weak.id = "weak";
    weak.gold = -0.3;
    weak.final_prediction = 0.6;  // opposite sign but |gold| < threshold
    CHECK(eval::flag_polarity_errors({weak}, 0.5).empty());
    CHECK(eval::flag_polarity_errors({weak}, 0.2).size() == 1);

    PredictionRecord same_sign;
    same_sign.id = "ss";
    same_sign.gold = 0.5;
    same_sign.final_prediction = 0.4;
    CHECK(eval::flag_polarity_errors({same_sign}, 0.2).empty());
}

TEST_CASE("attention report: weights printed per token and term") {
    PredictionRecord r;
    r.id = "one";
    r.gold = 0.2;
    r.final_prediction = 0.1;
    r.attention = model::AttentionRecord{{1.0}, {{0.75, 0.25}}, {"solo"}, {{"a", "b"}}};
    const std::string report = eval::emit_attention_report({r});
    CHECK(report.find("sentence id=one") != std::string::npos);
    CHECK(report.find("token solo weight=1") != std::string::npos);
    CHECK(report.find("term a weight=0.75") != std::string::npos);

    // every emitted weight group sums to ~1 (single-token sentence -> 1.0)
    double sum = 0.0;
    for (double w : r.attention->sentence_weights) sum += w;
    CHECK(std::fabs(sum - 1.0) < 1e-6);
}

TEST_CASE("attention report: records without attention yield a notice") {
    const std::string report =
        eval::emit_attention_report(fixtures::error_analysis_records());
    CHECK(report.find("no attention weights") != std::string::npos);
}
