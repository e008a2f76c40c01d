#pragma once

#include <functional>

#include "finsent/autodiff.hpp"
#include "finsent/optim.hpp"

namespace finsent::ensemble {

// Out-of-fold prediction matrix for combiner training. Each row holds
// component predictions produced by models that never saw that row's
// instance; fold bookkeeping is retained so the property can be audited.
struct OofMatrix {
    std::vector<std::vector<double>> inputs;  // n x components
    std::vector<double> targets;
    std::vector<std::size_t> fold_of;                      // instance -> fold id
    std::vector<std::vector<std::size_t>> fold_eval_sets;  // fold id -> instances
};

// Trains on train_idx, predicts eval_idx (in order), returns predictions.
using ComponentTrainer = std::function<std::vector<double>(
    const std::vector<std::size_t>& train_idx, const std::vector<std::size_t>& eval_idx)>;

OofMatrix build_oof_matrix(const std::vector<ComponentTrainer>& components,
                           const std::vector<double>& targets, std::size_t folds,
                           std::uint64_t seed);

struct EnsembleConfig {
    std::size_t hidden_width = 8;
    train::AdamConfig adam{0.01, 0.9, 0.999, 1e-8};
    std::size_t epochs = 300;
    std::size_t batch_size = 32;
    std::uint64_t seed = 1;
};

// Small combiner: input per component, one tanh hidden layer, tanh scalar
// output (so the ensemble score stays inside (-1, +1)).
class EnsembleMlp {
public:
    EnsembleMlp(std::size_t input_width, std::size_t hidden_width);

    static EnsembleMlp train(const std::vector<std::vector<double>>& inputs,
                             const std::vector<double>& targets,
                             const EnsembleConfig& cfg);

    double predict(const std::vector<double>& component_scores) const;

    std::size_t input_width() const { return input_width_; }

    void save(const std::string& path) const;
    static EnsembleMlp load(const std::string& path);

private:
    ad::Var build(ad::Tape& tape, const ad::Tensor& input) const;

    std::size_t input_width_;
    std::size_t hidden_width_;
    mutable ad::ParameterStore params_;
    ad::Parameter* w1_;
    ad::Parameter* b1_;
    ad::Parameter* w2_;
    ad::Parameter* b2_;
};

}  // namespace finsent::ensemble
