#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <vector>

#include "finsent/common.hpp"
#include "finsent/corpus.hpp"
#include "finsent/rng.hpp"
#include "helpers.hpp"

using namespace finsent;
using corpus::TokenSequence;

TEST_CASE("tokenize: basic splitting, cashtags, urls") {
    CHECK(corpus::tokenize("Pure garbage stock").tokens ==
          std::vector<std::string>{"pure", "garbage", "stock"});
    CHECK(corpus::tokenize("$AAPL up 5%!").tokens ==
          std::vector<std::string>{"$aapl", "up", "5", "%", "!"});
    CHECK(corpus::tokenize("@Trader see https://x.co/q?a=1 now").tokens ==
          std::vector<std::string>{"@trader", "see", "<url>", "now"});
    CHECK(corpus::tokenize("Good opportunity to buy").tokens ==
          std::vector<std::string>{"good", "opportunity", "to", "buy"});
    CHECK_THROWS_AS(corpus::tokenize("   "), ValidationError);
    CHECK_THROWS_AS(corpus::tokenize(""), ValidationError);
}

TEST_CASE("tokenize is idempotent on its own output") {
    RunRng rng(31);
    const std::vector<std::string> pieces = {
        "UP!!",     "$TSLA",  "down-5%", "@user",  "www.example.com/a",
        "Mixed.Case", "1,234", "plain",  "don't",  "#tag"};
    for (int trial = 0; trial < 200; ++trial) {
        std::string text;
        const std::size_t len = 1 + rng.next_index(6);
        for (std::size_t i = 0; i < len; ++i) {
            if (i) text += " ";
            text += pieces[rng.next_index(pieces.size())];
        }
        const auto once = corpus::tokenize(text).tokens;
        std::string joined;
        for (const auto& tok : once) {
            if (!joined.empty()) joined += " ";
            joined += tok;
        }
        CHECK(corpus::tokenize(joined).tokens == once);
    }
}

TEST_CASE("load_dataset: canonical happy path, validation, warnings") {
    testing::TempDir tmp("corpus");
    const std::string good = tmp.write(
        "good.jsonl",
        R"({"id": "a", "text": "up up", "score": 0.5, "track": "microblog"})"
        "\n"
        R"({"id": "b", "text": "down", "score": -0.25})"
        "\n");
    auto data = corpus::load_dataset(good, corpus::Track::microblog);
    REQUIRE(data.size() == 2);
    CHECK(data[0].id == "a");
    CHECK(data[1].score == doctest::Approx(-0.25));
    CHECK(data[1].track == corpus::Track::microblog);

    const std::string bad_score =
        tmp.write("bad_score.jsonl", R"({"id": "a", "text": "x", "score": 1.5})" "\n");
    CHECK_THROWS_AS(corpus::load_dataset(bad_score, corpus::Track::microblog),
                    ValidationError);

    const std::string malformed =
        tmp.write("broken.jsonl", "{\"id\": \"a\", \"text\": \"x\", \"score\":\n");
    CHECK_THROWS_WITH_AS(corpus::load_dataset(malformed, corpus::Track::microblog),
                         doctest::Contains("broken.jsonl:1"), ValidationError);

    log::set_quiet(true);
    const std::string empty = tmp.write("empty.jsonl", "");
    const auto warnings_before = log::warning_count();
    CHECK(corpus::load_dataset(empty, corpus::Track::news).empty());
    CHECK(log::warning_count() == warnings_before + 1);
    log::set_quiet(false);
}

TEST_CASE("load_dataset: 1700-record file loads completely") {
    testing::TempDir tmp("corpus_big");
    std::string content;
    for (int i = 0; i < 1700; ++i) {
        content += R"({"id": ")" + std::to_string(i) + R"(", "text": "t )" +
                   std::to_string(i) + R"(", "score": 0.1})" + "\n";
    }
    const std::string path = tmp.write("big.jsonl", content);
    log::set_quiet(true);
    CHECK(corpus::load_dataset(path, corpus::Track::microblog).size() == 1700);
    log::set_quiet(false);
}

TEST_CASE("load_dataset: semeval array adapter") {
    testing::TempDir tmp("semeval");
    const std::string path = tmp.write("task.json", R"([
        {"id": 1, "spans": ["Good", "buy"], "sentiment score": "0.37", "cashtag": "$X"},
        {"id": 2, "title": "Shares slip", "sentiment": -0.2}
    ])");
    log::set_quiet(true);
    auto data =
        corpus::load_dataset(path, corpus::Track::microblog, corpus::DatasetFormat::semeval);
    log::set_quiet(false);
    REQUIRE(data.size() == 2);
    CHECK(data[0].text == "Good buy");
    CHECK(data[0].score == doctest::Approx(0.37));
    CHECK(data[1].text == "Shares slip");
}

TEST_CASE("dataset round-trip preserves instances") {
    testing::TempDir tmp("roundtrip");
    std::vector<corpus::SentimentInstance> data;
    RunRng rng(5);
    for (int i = 0; i < 40; ++i) {
        corpus::SentimentInstance inst;
        inst.id = "r" + std::to_string(i);
        inst.text = "tok" + std::to_string(rng.next_index(100)) + " x";
        inst.score = rng.next_uniform(-1.0, 1.0);
        inst.track = i % 2 ? corpus::Track::news : corpus::Track::microblog;
        data.push_back(inst);
    }
    const std::string path = tmp.path("round.jsonl");
    corpus::save_dataset(path, data);
    log::set_quiet(true);
    auto loaded = corpus::load_dataset(path, corpus::Track::microblog);
    log::set_quiet(false);
    CHECK(loaded == data);
    for (const auto& inst : loaded) CHECK(std::abs(inst.score) <= 1.0);
}

TEST_CASE("load_embeddings: dimensions, duplicates, errors") {
    testing::TempDir tmp("emb");
    log::set_quiet(true);
    const std::string good = tmp.write("vec.txt",
                                       "alpha 1 2 3 4\n"
                                       "beta 0.5 -1 2.5 0\n"
                                       "gamma 0 0 1 0\n");
    auto table = corpus::load_embeddings(good);
    CHECK(table.dimension == 4);
    CHECK(table.entries.size() == 3);
    REQUIRE(table.find("beta") != nullptr);
    CHECK((*table.find("beta"))[2] == doctest::Approx(2.5));

    const std::string ragged = tmp.write("ragged.txt",
                                         "alpha 1 2 3 4\n"
                                         "beta 1 2 3\n");
    CHECK_THROWS_WITH_AS(corpus::load_embeddings(ragged), doctest::Contains("ragged.txt:2"),
                         ValidationError);

    const std::string dup = tmp.write("dup.txt",
                                      "alpha 1 2\n"
                                      "alpha 3 4\n");
    const auto warnings_before = log::warning_count();
    auto dup_table = corpus::load_embeddings(dup);
    CHECK(dup_table.entries.size() == 1);
    CHECK(log::warning_count() == warnings_before + 1);
    CHECK((*dup_table.find("alpha"))[0] == doctest::Approx(1.0));  // first wins

    // word2vec-style "count dim" header is tolerated
    const std::string header = tmp.write("w2v.txt",
                                         "2 3\n"
                                         "a 1 2 3\n"
                                         "b 4 5 6\n");
    CHECK(corpus::load_embeddings(header).dimension == 3);
    log::set_quiet(false);
}

TEST_CASE("load_dt_table: ordering and self-expansion") {
    testing::TempDir tmp("dt");
    log::set_quiet(true);
    const std::string path = tmp.write("dt.tsv",
                                       "car\ttruck\t0.8\n"
                                       "car\tauto\t0.9\n"
                                       "car\tcar\t1.0\n"
                                       "car\tbus\t0.8\n");
    auto table = corpus::load_dt_table(path);
    log::set_quiet(false);
    const auto* row = table.find("car");
    REQUIRE(row != nullptr);
    REQUIRE(row->size() == 3);  // self-expansion dropped
    CHECK((*row)[0].target == "auto");
    // tie at 0.8 broken lexicographically
    CHECK((*row)[1].target == "bus");
    CHECK((*row)[2].target == "truck");
}

TEST_CASE("lexicons: polarity lists, valence files, dual membership") {
    testing::TempDir tmp("lex");
    log::set_quiet(true);
    const std::string pos = tmp.write("pos.txt", "good\ngreat\nup\n");
    const std::string neg = tmp.write("neg.txt", "bad\ndown\nup\n");  // 'up' in both
    const auto warnings_before = log::warning_count();
    auto lex = corpus::load_polarity_lexicon("toy", pos, neg);
    CHECK(log::warning_count() == warnings_before + 1);
    CHECK(lex.positive.count("up") == 1);
    CHECK(lex.negative.count("up") == 1);  // kept in both
    CHECK(lex.positive.size() == 3);
    CHECK(lex.negative.size() == 3);

    const std::string val = tmp.write("val.tsv", "good\t0.9\nbad\t-0.7\nmeh\t0\n");
    auto vlex = corpus::load_valence_lexicon("vtoy", val);
    CHECK(vlex.valence_backed);
    CHECK(vlex.positive.count("good") == 1);
    CHECK(vlex.negative.count("bad") == 1);
    CHECK(vlex.positive.count("meh") == 0);  // zero valence is neither
    CHECK(vlex.negative.count("meh") == 0);

    CHECK_THROWS_AS(corpus::load_valence_lexicon("empty", tmp.write("e.tsv", "")),
                    ValidationError);

    auto set = corpus::load_lexicons({{"toy", "polarity", "", pos, neg},
                                      {"vtoy", "valence", val, "", ""}});
    CHECK(set.lexicons.size() == 2);
    CHECK_THROWS_AS(corpus::load_lexicons({{"x", "mystery", val, "", ""}}), ValidationError);
    log::set_quiet(false);
}
