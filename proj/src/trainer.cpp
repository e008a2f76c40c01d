#include "finsent/trainer.hpp"

#include <cmath>
#include <sstream>

#include "finsent/common.hpp"
#include "finsent/eval.hpp"

namespace finsent::train {

using ad::Tape;
using ad::Tensor;
using ad::Var;

void TrainConfig::validate() const {
    if (batch_size == 0) throw ValidationError("train config: batch_size must be >= 1");
    if (dropout_rate < 0.0 || dropout_rate >= 1.0) {
        throw ValidationError("train config: dropout must lie in [0, 1)");
    }
    if (seeds.empty()) throw ValidationError("train config: at least one seed required");
    if (val_fraction < 0.0 || val_fraction >= 1.0) {
        throw ValidationError("train config: val_fraction must lie in [0, 1)");
    }
    if (epochs == 0) throw ValidationError("train config: epochs must be >= 1");
}

std::vector<double> predict_all(model::AttentionNetwork& net,
                                const std::vector<model::BoundSentence>& sentences) {
    std::vector<double> out;
    out.reserve(sentences.size());
    for (const auto& s : sentences) out.push_back(net.predict(s));
    return out;
}

TrainedRun train_single_run(const model::ModelConfig& model_cfg,
                            const std::vector<model::BoundSentence>& train_set,
                            const TrainConfig& cfg, std::uint64_t seed) {
    cfg.validate();
    if (train_set.empty()) throw ValidationError("train: empty training set");

    model::ModelConfig effective_cfg = model_cfg;
    effective_cfg.dropout_rate = cfg.dropout_rate;

    TrainedRun run;
    run.result.seed = seed;
    run.network = std::make_unique<model::AttentionNetwork>(effective_cfg);

    RunRng rng(seed);
    run.network->init_params(rng);

    // seeded validation split
    std::vector<std::size_t> indices(train_set.size());
    for (std::size_t i = 0; i < indices.size(); ++i) indices[i] = i;
    std::vector<std::size_t> val_indices;
    if (cfg.val_fraction > 0.0) {
        rng.shuffle(indices);
        const auto n_val = static_cast<std::size_t>(
            std::floor(cfg.val_fraction * static_cast<double>(train_set.size())));
        val_indices.assign(indices.begin(), indices.begin() + n_val);
        indices.erase(indices.begin(), indices.begin() + n_val);
    }
    if (indices.empty()) throw ValidationError("train: validation split consumed all data");
    run.result.has_validation = !val_indices.empty();

    auto& net = *run.network;
    AdamState adam = AdamState::for_store(net.params());

    double best_val = -2.0;
    std::size_t epochs_since_best = 0;
    std::map<std::string, Tensor> best_snapshot;

    std::vector<double> val_golds;
    for (std::size_t idx : val_indices) val_golds.push_back(train_set[idx].gold);

    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        rng.shuffle(indices);
        double loss_sum = 0.0;
        try {
            for (std::size_t start = 0; start < indices.size(); start += cfg.batch_size) {
                const std::size_t end = std::min(start + cfg.batch_size, indices.size());
                const double inv_batch = 1.0 / static_cast<double>(end - start);
                net.params().zero_grads();
                for (std::size_t k = start; k < end; ++k) {
                    const auto& sentence = train_set[indices[k]];
                    Tape tape;
                    Var score = net.build_score(tape, sentence, true, &rng);
                    Var gold = tape.constant(Tensor::scalar(sentence.gold));
                    Var err = tape.sub(score, gold);
                    Var sq = tape.mul(err, err);
                    tape.backward(sq, Tensor::scalar(inv_batch));
                    loss_sum += tape.value(sq).item();
                }
                clip_grad_norm(net.params(), cfg.max_grad_norm);
                adam_step(net.params(), adam, cfg.adam);
            }
        } catch (const std::runtime_error& e) {
            throw std::runtime_error("train run seed=" + std::to_string(seed) +
                                     " epoch=" + std::to_string(epoch) +
                                     " aborted: " + e.what());
        }
        const double epoch_loss = loss_sum / static_cast<double>(indices.size());
        if (!std::isfinite(epoch_loss)) {
            throw std::runtime_error("train run seed=" + std::to_string(seed) + " epoch=" +
                                     std::to_string(epoch) + ": non-finite loss");
        }
        run.result.epoch_train_loss.push_back(epoch_loss);
        run.result.epochs_run = epoch + 1;

        double val_cos = 0.0;
        if (run.result.has_validation) {
            std::vector<double> val_preds;
            for (std::size_t idx : val_indices) {
                val_preds.push_back(net.predict(train_set[idx]));
            }
            val_cos = eval::cosine_similarity(val_preds, val_golds);
            run.result.val_cosine = val_cos;
        }

        std::ostringstream line;
        line << "train seed=" << seed << " epoch=" << epoch << " loss=" << fmt_double(epoch_loss);
        if (run.result.has_validation) {
            line << " val_cosine=" << fmt_double(val_cos);
        } else {
            line << " val_cosine=n/a";
        }
        log::info(line.str());

        if (run.result.has_validation && cfg.patience > 0) {
            if (val_cos > best_val) {
                best_val = val_cos;
                epochs_since_best = 0;
                best_snapshot = net.snapshot_params();
            } else if (++epochs_since_best >= cfg.patience) {
                log::info("train seed=" + std::to_string(seed) + ": early stop at epoch " +
                          std::to_string(epoch) + " (best val_cosine " +
                          fmt_double(best_val) + ")");
                break;
            }
        }
    }

    if (run.result.has_validation && cfg.patience > 0 && !best_snapshot.empty()) {
        net.restore_params(best_snapshot);
        run.result.val_cosine = best_val;
    }
    return run;
}

std::vector<TrainedRun> train_model(const model::ModelConfig& model_cfg,
                                    const std::vector<model::BoundSentence>& train_set,
                                    const TrainConfig& cfg) {
    cfg.validate();
    std::vector<TrainedRun> runs;
    for (std::uint64_t seed : cfg.seeds) {
        runs.push_back(train_single_run(model_cfg, train_set, cfg, seed));
    }
    return runs;
}

}  // namespace finsent::train
