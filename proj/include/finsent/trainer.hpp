#pragma once

#include <functional>
#include <memory>

#include "finsent/model.hpp"
#include "finsent/optim.hpp"

namespace finsent::train {

struct TrainConfig {
    std::size_t batch_size = 64;
    double dropout_rate = 0.3;
    AdamConfig adam;
    std::size_t epochs = 30;
    std::vector<std::uint64_t> seeds = {1, 2, 3, 4, 5};
    std::size_t patience = 5;     // epochs without validation improvement
    double val_fraction = 0.1;    // 0 disables the split and early stopping
    double max_grad_norm = 5.0;   // 0 disables clipping

    void validate() const;  // throws ValidationError
};

struct RunResult {
    std::uint64_t seed = 0;
    std::vector<double> epoch_train_loss;
    double val_cosine = 0.0;
    bool has_validation = false;
    std::size_t epochs_run = 0;
};

struct TrainedRun {
    RunResult result;
    std::unique_ptr<model::AttentionNetwork> network;
};

// One seeded run. Draw order: parameter init, validation split shuffle
// (when enabled), then per epoch the instance shuffle and per-instance
// dropout masks. Mini-batches accumulate gradients over per-instance
// graphs of the squared error, scaled 1/batch so the step optimizes the
// batch-mean MSE. Aborts with a diagnostic if the loss turns non-finite.
TrainedRun train_single_run(const model::ModelConfig& model_cfg,
                            const std::vector<model::BoundSentence>& train_set,
                            const TrainConfig& cfg, std::uint64_t seed);

// One run per configured seed; identical seed and data give bit-identical
// results.
std::vector<TrainedRun> train_model(const model::ModelConfig& model_cfg,
                                    const std::vector<model::BoundSentence>& train_set,
                                    const TrainConfig& cfg);

// Eval-mode predictions for a batch of bound sentences.
std::vector<double> predict_all(model::AttentionNetwork& net,
                                const std::vector<model::BoundSentence>& sentences);

}  // namespace finsent::train
