#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "finsent/common.hpp"
#include "finsent/fixtures.hpp"
#include "finsent/model.hpp"
#include "finsent/selftest.hpp"
#include "helpers.hpp"

using namespace finsent;
using ad::Tape;
using ad::Tensor;
using ad::Var;
using model::AttentionNetwork;
using model::BoundSentence;
using model::BoundToken;
using model::ModelConfig;

namespace {

ModelConfig tiny_config(std::size_t embed = 6, std::size_t hidden = 4) {
    ModelConfig cfg;
    cfg.embed_dim = embed;
    cfg.hidden_dim = hidden;
    cfg.context_dim = 5;
    cfg.knowledge_dim = 2 * hidden;
    cfg.dropout_rate = 0.0;
    return cfg;
}

BoundSentence plain_sentence(const ModelConfig& cfg, std::size_t t_count,
                             std::uint64_t seed) {
    RunRng rng(seed);
    BoundSentence s;
    s.id = "t";
    for (std::size_t t = 0; t < t_count; ++t) {
        BoundToken tok;
        tok.surface = "w" + std::to_string(t);
        tok.embedding = Tensor::zeros({cfg.embed_dim});
        for (std::size_t i = 0; i < cfg.embed_dim; ++i) {
            tok.embedding[i] = rng.next_uniform(-1.0, 1.0);
        }
        s.tokens.push_back(std::move(tok));
    }
    return s;
}

void mirror_cells(AttentionNetwork& net) {
    // copy forward-cell parameters into the backward cell
    for (const char* suffix : {"w_in", "w_rec", "bias"}) {
        auto* fw = net.params().find(std::string("encoder.fw.") + suffix);
        auto* bw = net.params().find(std::string("encoder.bw.") + suffix);
        REQUIRE(fw != nullptr);
        REQUIRE(bw != nullptr);
        bw->value = fw->value;
    }
}

}  // namespace

TEST_CASE("config validation: sum fusion pins knowledge width to 2H") {
    ModelConfig cfg = tiny_config();
    cfg.knowledge_dim = 7;
    CHECK_THROWS_AS(cfg.validate(), ValidationError);
    cfg.knowledge_dim = 8;
    CHECK_NOTHROW(cfg.validate());
    cfg.fuse = model::FuseMode::concat;
    cfg.knowledge_dim = 7;  // concat mode allows any width
    CHECK_NOTHROW(cfg.validate());
    cfg.dropout_rate = 1.0;
    CHECK_THROWS_AS(cfg.validate(), ValidationError);
}

TEST_CASE("encode: symmetric cells make both halves equal on one token") {
    ModelConfig cfg = tiny_config();
    AttentionNetwork net(cfg);
    RunRng rng(4);
    net.init_params(rng);
    mirror_cells(net);

    const auto states = net.encode(plain_sentence(cfg, 1, 9));
    REQUIRE(states.size() == 1);
    REQUIRE(states[0].size() == 2 * cfg.hidden_dim);
    for (std::size_t i = 0; i < cfg.hidden_dim; ++i) {
        CHECK(states[0][i] == states[0][cfg.hidden_dim + i]);
    }
}

TEST_CASE("encode: backward half equals forward half on the reversed input") {
    ModelConfig cfg = tiny_config();
    AttentionNetwork net(cfg);
    RunRng rng(12);
    net.init_params(rng);
    mirror_cells(net);

    const auto sentence = plain_sentence(cfg, 5, 21);
    BoundSentence reversed = sentence;
    std::reverse(reversed.tokens.begin(), reversed.tokens.end());

    const auto fwd_states = net.encode(sentence);
    const auto rev_states = net.encode(reversed);
    const std::size_t h = cfg.hidden_dim;
    const std::size_t t_count = sentence.tokens.size();
    for (std::size_t t = 0; t < t_count; ++t) {
        for (std::size_t i = 0; i < h; ++i) {
            // backward state at t over s == forward state at T-1-t over reversed s
            CHECK(fwd_states[t][h + i] ==
                  doctest::Approx(rev_states[t_count - 1 - t][i]).epsilon(1e-12));
        }
    }
}

TEST_CASE("encode: production hidden width yields 300-long vectors") {
    ModelConfig cfg;
    cfg.embed_dim = 300;
    cfg.hidden_dim = 150;
    cfg.context_dim = 300;
    cfg.knowledge_dim = 300;
    AttentionNetwork net(cfg);
    RunRng rng(1);
    net.init_params(rng);
    const auto states = net.encode(plain_sentence(cfg, 3, 2));
    REQUIRE(states.size() == 3);
    for (const auto& h : states) CHECK(h.size() == 300);
}

TEST_CASE("encode: causality of the two halves") {
    ModelConfig cfg = tiny_config();
    AttentionNetwork net(cfg);
    RunRng rng(77);
    net.init_params(rng);

    const auto sentence = plain_sentence(cfg, 5, 5);
    const auto base = net.encode(sentence);

    BoundSentence tail_zeroed = sentence;  // tokens after position 2 zeroed
    for (std::size_t t = 3; t < 5; ++t) tail_zeroed.tokens[t].embedding.fill(0.0);
    const auto tz = net.encode(tail_zeroed);
    for (std::size_t t = 0; t <= 2; ++t) {
        for (std::size_t i = 0; i < cfg.hidden_dim; ++i) {
            CHECK(tz[t][i] == base[t][i]);  // forward half bitwise unchanged
        }
    }

    BoundSentence head_zeroed = sentence;  // tokens before position 2 zeroed
    for (std::size_t t = 0; t < 2; ++t) head_zeroed.tokens[t].embedding.fill(0.0);
    const auto hz = net.encode(head_zeroed);
    for (std::size_t t = 2; t < 5; ++t) {
        for (std::size_t i = 0; i < cfg.hidden_dim; ++i) {
            CHECK(hz[t][cfg.hidden_dim + i] == base[t][cfg.hidden_dim + i]);
        }
    }
}

TEST_CASE("word attention: singleton term takes all the weight") {
    Tape tape;
    Tensor h = Tensor::vector({0.3, -0.7});
    Tensor terms({1, 2}, {0.5, 1.5});
    Tensor w({2, 2}, {1, 0, 0, 1});
    auto [m, alpha] = model::word_attention(tape, tape.constant(h), tape.constant(terms),
                                            tape.constant(w));
    CHECK(tape.value(alpha)[0] == doctest::Approx(1.0));
    CHECK(tape.value(m)[0] == doctest::Approx(0.5));
    CHECK(tape.value(m)[1] == doctest::Approx(1.5));
}

TEST_CASE("word attention: zero parameter matrix gives the term mean") {
    Tape tape;
    Tensor h = Tensor::vector({0.9, 0.1});
    Tensor terms({3, 2}, {1, 0, 0, 1, 2, 2});
    Tensor w = Tensor::zeros({2, 2});
    auto [m, alpha] = model::word_attention(tape, tape.constant(h), tape.constant(terms),
                                            tape.constant(w));
    for (std::size_t i = 0; i < 3; ++i) {
        CHECK(tape.value(alpha)[i] == doctest::Approx(1.0 / 3.0));
    }
    CHECK(tape.value(m)[0] == doctest::Approx(1.0));
    CHECK(tape.value(m)[1] == doctest::Approx(1.0));
}

TEST_CASE("word attention: hand-computed two-term softmax") {
    // h = [1,0], W = I, terms v1=[1,0], v2=[0,1] -> logits (1,0)
    Tape tape;
    Tensor h = Tensor::vector({1.0, 0.0});
    Tensor terms({2, 2}, {1, 0, 0, 1});
    Tensor w({2, 2}, {1, 0, 0, 1});
    auto [m, alpha] = model::word_attention(tape, tape.constant(h), tape.constant(terms),
                                            tape.constant(w));
    const double e = std::exp(1.0);
    const double a1 = e / (e + 1.0), a2 = 1.0 / (e + 1.0);
    CHECK(tape.value(alpha)[0] == doctest::Approx(a1).epsilon(1e-12));
    CHECK(tape.value(alpha)[1] == doctest::Approx(a2).epsilon(1e-12));
    CHECK(tape.value(m)[0] == doctest::Approx(a1).epsilon(1e-12));
    CHECK(tape.value(m)[1] == doctest::Approx(a2).epsilon(1e-12));
}

TEST_CASE("fusion by elementwise sum") {
    Tape tape;
    Var h = tape.constant(Tensor::vector({1.0, 2.0}));
    Var m = tape.constant(Tensor::vector({3.0, 4.0}));
    Var zero = tape.constant(Tensor::zeros({2}));

    const Tensor& fused = tape.value(tape.add(m, h));
    CHECK(fused[0] == 4.0);
    CHECK(fused[1] == 6.0);
    // zero knowledge reduces to the hidden state
    const Tensor& plain = tape.value(tape.add(zero, h));
    CHECK(plain[0] == 1.0);
    CHECK(plain[1] == 2.0);
    // commutativity
    const Tensor& ab = tape.value(tape.add(m, h));
    const Tensor& ba = tape.value(tape.add(h, m));
    CHECK(ab[0] == ba[0]);
    CHECK(ab[1] == ba[1]);
    // length mismatch is an error
    Var bad = tape.constant(Tensor::vector({1.0, 2.0, 3.0}));
    CHECK_THROWS_AS(tape.add(bad, h), std::invalid_argument);
}

TEST_CASE("sentence attention: single vector takes all the weight") {
    Tape tape;
    Var v = tape.constant(Tensor::vector({2.0, -1.0}));
    Var w = tape.constant(Tensor({2, 2}, {1, 0, 0, 1}));
    Var ctx = tape.constant(Tensor::vector({0.5, 0.5}));
    auto [pooled, alpha] = model::sentence_attention(tape, {v}, w, ctx);
    CHECK(tape.value(alpha)[0] == doctest::Approx(1.0));
    CHECK(tape.value(pooled)[0] == doctest::Approx(2.0));
    CHECK(tape.value(pooled)[1] == doctest::Approx(-1.0));
}

TEST_CASE("sentence attention: zero context gives the uniform mean") {
    Tape tape;
    std::vector<Var> vecs = {tape.constant(Tensor::vector({1.0, 0.0})),
                             tape.constant(Tensor::vector({0.0, 1.0})),
                             tape.constant(Tensor::vector({2.0, 2.0}))};
    Var w = tape.constant(Tensor({2, 2}, {1, 2, 3, 4}));
    Var ctx = tape.constant(Tensor::zeros({2}));
    auto [pooled, alpha] = model::sentence_attention(tape, vecs, w, ctx);
    for (std::size_t t = 0; t < 3; ++t) {
        CHECK(tape.value(alpha)[t] == doctest::Approx(1.0 / 3.0));
    }
    CHECK(tape.value(pooled)[0] == doctest::Approx(1.0));
    CHECK(tape.value(pooled)[1] == doctest::Approx(1.0));
}

TEST_CASE("sentence attention: handcrafted logits (2, 0)") {
    // W = I, context c = [1,0]; vectors [2,0] and [0,5] give logits 2 and 0
    Tape tape;
    std::vector<Var> vecs = {tape.constant(Tensor::vector({2.0, 0.0})),
                             tape.constant(Tensor::vector({0.0, 5.0}))};
    Var w = tape.constant(Tensor({2, 2}, {1, 0, 0, 1}));
    Var ctx = tape.constant(Tensor::vector({1.0, 0.0}));
    auto [pooled, alpha] = model::sentence_attention(tape, vecs, w, ctx);
    (void)pooled;
    const double e2 = std::exp(2.0);
    CHECK(tape.value(alpha)[0] == doctest::Approx(e2 / (e2 + 1.0)).epsilon(1e-12));
    CHECK(tape.value(alpha)[1] == doctest::Approx(1.0 / (e2 + 1.0)).epsilon(1e-12));
    CHECK_THROWS_AS(model::sentence_attention(tape, {}, w, ctx), std::invalid_argument);
}

TEST_CASE("predict: zero head scores zero, outputs stay inside (-1, 1)") {
    ModelConfig cfg = tiny_config();
    AttentionNetwork net(cfg);
    RunRng rng(3);
    net.init_params(rng);
    net.params().find("head.w")->value.fill(0.0);
    net.params().find("head.bias")->value.fill(0.0);
    CHECK(net.predict(plain_sentence(cfg, 4, 8)) == 0.0);

    net.init_params(rng);
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const double score = net.predict(plain_sentence(cfg, 1 + seed % 6, seed));
        CHECK(std::fabs(score) < 1.0);
    }
}

TEST_CASE("predict: fixture sentence routes through three fused vectors") {
    const auto emb = fixtures::synthetic_embeddings();
    const auto dt = fixtures::synthetic_dt();
    knowledge::DtKnowledge source(&dt, &emb, 4);

    ModelConfig cfg;
    cfg.embed_dim = emb.dimension;
    cfg.hidden_dim = emb.dimension / 2;
    cfg.context_dim = 8;
    cfg.knowledge_dim = emb.dimension;
    cfg.dropout_rate = 0.0;

    corpus::SentimentInstance inst;
    inst.id = "err-1";
    inst.text = "Pure garbage stock";
    inst.score = -0.946;
    const auto bound = model::bind_sentence(inst, emb, &source, cfg);
    REQUIRE(bound.tokens.size() == 3);

    AttentionNetwork net(cfg);
    RunRng rng(5);
    net.init_params(rng);
    model::AttentionRecord rec;
    const double score = net.predict(bound, &rec);
    CHECK(std::isfinite(score));
    CHECK(std::fabs(score) < 1.0);
    CHECK(rec.tokens == std::vector<std::string>{"pure", "garbage", "stock"});
    CHECK(rec.sentence_weights.size() == 3);
}

TEST_CASE("bind: OOV tokens map to zero vectors") {
    const auto emb = fixtures::synthetic_embeddings();
    ModelConfig cfg;
    cfg.embed_dim = emb.dimension;
    cfg.hidden_dim = emb.dimension / 2;
    cfg.context_dim = 8;
    cfg.knowledge_dim = emb.dimension;

    corpus::SentimentInstance inst;
    inst.id = "x";
    inst.text = "up neverseenword";
    inst.score = 0.0;
    const auto bound = model::bind_sentence(inst, emb, nullptr, cfg);
    REQUIRE(bound.tokens.size() == 2);
    CHECK(bound.tokens[0].embedding[0] != 0.0);
    for (std::size_t i = 0; i < cfg.embed_dim; ++i) {
        CHECK(bound.tokens[1].embedding[i] == 0.0);
    }
    CHECK(bound.tokens[1].term_count == 0);
}

TEST_CASE("bind: dimension mismatches are rejected") {
    const auto emb = fixtures::synthetic_embeddings();
    ModelConfig cfg = tiny_config();  // embed_dim 6 != table dimension 16
    corpus::SentimentInstance inst{"x", "up", 0.0, corpus::Track::microblog};
    CHECK_THROWS_AS(model::bind_sentence(inst, emb, nullptr, cfg), ValidationError);
}

TEST_CASE("empty sentences are rejected at build time") {
    ModelConfig cfg = tiny_config();
    AttentionNetwork net(cfg);
    RunRng rng(2);
    net.init_params(rng);
    BoundSentence empty;
    empty.id = "none";
    CHECK_THROWS_AS(net.predict(empty), ValidationError);
}

TEST_CASE("model invariants: permutation, empty knowledge, gradient agreement") {
    CHECK(selftest::term_permutation_check(50, 99) < 1e-12);
    CHECK(selftest::empty_knowledge_matches_disabled(20, 3));
    CHECK(selftest::attention_sum_check(200, 17) < 1e-9);
    CHECK(selftest::gradient_check_once(1234, 1e-5) < 1e-4);
}

TEST_CASE("checkpoint round trip preserves predictions") {
    testing::TempDir tmp("ckpt");
    ModelConfig cfg = tiny_config();
    AttentionNetwork net(cfg);
    RunRng rng(41);
    net.init_params(rng);
    const auto sentence = plain_sentence(cfg, 4, 6);
    const double before = net.predict(sentence);

    const std::string path = tmp.path("model.ckpt");
    net.save(path);
    auto loaded = AttentionNetwork::load(path);
    CHECK(loaded.config().hidden_dim == cfg.hidden_dim);
    CHECK(loaded.predict(sentence) == before);  // text format round-trips doubles

    CHECK_THROWS_AS(AttentionNetwork::load(tmp.write("junk.ckpt", "not a checkpoint\n")),
                    ValidationError);
}

TEST_CASE("concat fusion widens the downstream dimensions") {
    ModelConfig cfg = tiny_config();
    cfg.fuse = model::FuseMode::concat;
    cfg.knowledge_dim = 6;  // decoupled from 2H in concat mode
    AttentionNetwork net(cfg);
    RunRng rng(9);
    net.init_params(rng);

    BoundSentence s = plain_sentence(cfg, 3, 14);
    s.tokens[1].term_count = 2;
    s.tokens[1].term_matrix = Tensor::zeros({2, cfg.knowledge_dim});
    for (std::size_t i = 0; i < s.tokens[1].term_matrix.size(); ++i) {
        s.tokens[1].term_matrix[i] = 0.1 * static_cast<double>(i + 1);
    }
    s.tokens[1].term_labels = {"a", "b"};
    const double score = net.predict(s);
    CHECK(std::isfinite(score));
    CHECK(std::fabs(score) < 1.0);
}
