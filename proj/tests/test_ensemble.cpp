#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <set>

#include "finsent/common.hpp"
#include "finsent/ensemble.hpp"
#include "finsent/eval.hpp"
#include "finsent/rng.hpp"
#include "helpers.hpp"

using namespace finsent;

TEST_CASE("oof matrix: shape and perfect-component column") {
    std::vector<double> targets(100);
    RunRng rng(1);
    for (auto& t : targets) t = rng.next_uniform(-1, 1);

    // component 0 echoes the gold targets; component 1 is constant
    ensemble::ComponentTrainer oracle_comp =
        [&](const std::vector<std::size_t>&, const std::vector<std::size_t>& eval_idx) {
            std::vector<double> preds;
            for (std::size_t i : eval_idx) preds.push_back(targets[i]);
            return preds;
        };
    ensemble::ComponentTrainer constant_comp =
        [](const std::vector<std::size_t>&, const std::vector<std::size_t>& eval_idx) {
            return std::vector<double>(eval_idx.size(), 0.25);
        };

    const auto oof =
        ensemble::build_oof_matrix({oracle_comp, constant_comp}, targets, 5, 7);
    REQUIRE(oof.inputs.size() == 100);
    REQUIRE(oof.inputs[0].size() == 2);
    for (std::size_t i = 0; i < 100; ++i) {
        CHECK(oof.inputs[i][0] == targets[i]);
        CHECK(oof.inputs[i][1] == 0.25);
    }
}

TEST_CASE("oof matrix: no instance is predicted by a model that saw it") {
    std::vector<double> targets(10);
    for (std::size_t i = 0; i < 10; ++i) targets[i] = static_cast<double>(i) / 10.0;

    // record the exact train/eval pairs handed to the component
    std::vector<std::pair<std::vector<std::size_t>, std::vector<std::size_t>>> calls;
    ensemble::ComponentTrainer audit_comp =
        [&](const std::vector<std::size_t>& train_idx,
            const std::vector<std::size_t>& eval_idx) {
            calls.emplace_back(train_idx, eval_idx);
            return std::vector<double>(eval_idx.size(), 0.0);
        };

    const auto oof = ensemble::build_oof_matrix({audit_comp}, targets, 5, 3);
    REQUIRE(calls.size() == 5);
    std::set<std::size_t> all_eval;
    for (const auto& [train_idx, eval_idx] : calls) {
        const std::set<std::size_t> train_set(train_idx.begin(), train_idx.end());
        for (std::size_t i : eval_idx) {
            CHECK(train_set.count(i) == 0);  // never trained on its own fold
            all_eval.insert(i);
        }
        CHECK(train_idx.size() + eval_idx.size() == 10);
    }
    CHECK(all_eval.size() == 10);  // every instance predicted exactly once
    // fold bookkeeping matches the calls
    for (std::size_t fold = 0; fold < 5; ++fold) {
        for (std::size_t i : oof.fold_eval_sets[fold]) CHECK(oof.fold_of[i] == fold);
    }
}

TEST_CASE("oof matrix: fold count validation") {
    std::vector<double> targets(3, 0.0);
    ensemble::ComponentTrainer noop =
        [](const std::vector<std::size_t>&, const std::vector<std::size_t>& eval_idx) {
            return std::vector<double>(eval_idx.size(), 0.0);
        };
    CHECK_THROWS_AS(ensemble::build_oof_matrix({noop}, targets, 4, 1), ValidationError);
    CHECK_THROWS_AS(ensemble::build_oof_matrix({noop}, targets, 1, 1), ValidationError);
    CHECK_THROWS_AS(ensemble::build_oof_matrix({}, targets, 2, 1), ValidationError);
}

namespace {

// synthetic stacking task: one informative column, one noise column
struct SyntheticStack {
    std::vector<std::vector<double>> train_inputs, held_inputs;
    std::vector<double> train_targets, held_targets;

    explicit SyntheticStack(std::size_t n, double signal_noise, std::uint64_t seed) {
        RunRng rng(seed);
        for (std::size_t i = 0; i < n; ++i) {
            const double target = rng.next_uniform(-0.9, 0.9);
            const std::vector<double> row = {
                target + rng.next_uniform(-signal_noise, signal_noise),
                rng.next_uniform(-1.0, 1.0)};
            if (i % 5 == 0) {
                held_inputs.push_back(row);
                held_targets.push_back(target);
            } else {
                train_inputs.push_back(row);
                train_targets.push_back(target);
            }
        }
    }
};

}  // namespace

TEST_CASE("combiner learns to trust the informative column") {
    SyntheticStack data(625, 0.01, 99);
    ensemble::EnsembleConfig cfg;
    cfg.epochs = 200;
    const auto mlp = ensemble::EnsembleMlp::train(data.train_inputs, data.train_targets, cfg);

    std::vector<double> preds;
    for (const auto& row : data.held_inputs) preds.push_back(mlp.predict(row));
    CHECK(eval::cosine_similarity(preds, data.held_targets) >= 0.99);
}

TEST_CASE("combiner on pure noise stays near zero correlation") {
    RunRng rng(5);
    std::vector<std::vector<double>> inputs;
    std::vector<double> targets;
    for (int i = 0; i < 625; ++i) {
        inputs.push_back({rng.next_uniform(-1, 1), rng.next_uniform(-1, 1)});
        targets.push_back(rng.next_uniform(-1, 1));
    }
    std::vector<std::vector<double>> train_in(inputs.begin(), inputs.begin() + 125);
    std::vector<double> train_tg(targets.begin(), targets.begin() + 125);
    std::vector<std::vector<double>> held_in(inputs.begin() + 125, inputs.end());
    std::vector<double> held_tg(targets.begin() + 125, targets.end());

    ensemble::EnsembleConfig cfg;
    cfg.epochs = 100;
    const auto mlp = ensemble::EnsembleMlp::train(train_in, train_tg, cfg);
    std::vector<double> preds;
    for (const auto& row : held_in) preds.push_back(mlp.predict(row));
    log::set_quiet(true);  // near-constant predictions may trip the zero-norm warning
    const double cos = eval::cosine_similarity(preds, held_tg);
    log::set_quiet(false);
    CHECK(std::fabs(cos) < 0.3);  // 500 held-out points
}

TEST_CASE("combiner does not materially lose to its own best input") {
    SyntheticStack data(625, 0.0, 123);  // column 0 IS the target
    ensemble::EnsembleConfig cfg;
    cfg.epochs = 200;
    const auto mlp = ensemble::EnsembleMlp::train(data.train_inputs, data.train_targets, cfg);
    std::vector<double> mlp_preds, direct;
    for (const auto& row : data.held_inputs) {
        mlp_preds.push_back(mlp.predict(row));
        direct.push_back(row[0]);
    }
    const double mlp_cos = eval::cosine_similarity(mlp_preds, data.held_targets);
    const double direct_cos = eval::cosine_similarity(direct, data.held_targets);
    CHECK(direct_cos - mlp_cos <= 0.02);
}

TEST_CASE("combiner basics: zero init, bounds, determinism, width checks") {
    ensemble::EnsembleMlp fresh(2, 8);
    CHECK(fresh.predict({0.9, -0.9}) == 0.0);  // zero-initialized output layer

    SyntheticStack data(50, 0.1, 2);
    ensemble::EnsembleConfig cfg;
    cfg.epochs = 30;
    const auto mlp = ensemble::EnsembleMlp::train(data.train_inputs, data.train_targets, cfg);
    RunRng rng(3);
    for (int i = 0; i < 50; ++i) {
        const std::vector<double> row = {rng.next_uniform(-3, 3), rng.next_uniform(-3, 3)};
        const double out = mlp.predict(row);
        CHECK(std::fabs(out) < 1.0);
        CHECK(mlp.predict(row) == out);  // deterministic
    }
    CHECK_THROWS_AS(mlp.predict({1.0}), std::invalid_argument);

    const auto again =
        ensemble::EnsembleMlp::train(data.train_inputs, data.train_targets, cfg);
    CHECK(again.predict({0.4, 0.1}) == mlp.predict({0.4, 0.1}));  // seeded determinism
}

TEST_CASE("combiner warns on constant targets and rejects bad shapes") {
    log::set_quiet(true);
    const auto before = log::warning_count();
    ensemble::EnsembleConfig cfg;
    cfg.epochs = 5;
    ensemble::EnsembleMlp::train({{0.1, 0.2}, {0.3, 0.4}}, {0.5, 0.5}, cfg);
    CHECK(log::warning_count() == before + 1);
    log::set_quiet(false);

    CHECK_THROWS_AS(ensemble::EnsembleMlp::train({{0.1, 0.2}}, {0.5}, cfg),
                    ValidationError);
    CHECK_THROWS_AS(
        ensemble::EnsembleMlp::train({{0.1, 0.2}, {0.1}}, {0.5, 0.5}, cfg),
        ValidationError);
}

TEST_CASE("combiner file round trip") {
    testing::TempDir tmp("combiner");
    SyntheticStack data(50, 0.05, 8);
    ensemble::EnsembleConfig cfg;
    cfg.epochs = 20;
    const auto mlp = ensemble::EnsembleMlp::train(data.train_inputs, data.train_targets, cfg);
    const std::string path = tmp.path("combiner.txt");
    mlp.save(path);
    const auto loaded = ensemble::EnsembleMlp::load(path);
    CHECK(loaded.input_width() == 2);
    CHECK(loaded.predict({0.2, -0.4}) == mlp.predict({0.2, -0.4}));
}
