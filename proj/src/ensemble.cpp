#include "finsent/ensemble.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "finsent/common.hpp"
#include "finsent/rng.hpp"

namespace finsent::ensemble {

using ad::Tape;
using ad::Tensor;
using ad::Var;

OofMatrix build_oof_matrix(const std::vector<ComponentTrainer>& components,
                           const std::vector<double>& targets, std::size_t folds,
                           std::uint64_t seed) {
    const std::size_t n = targets.size();
    if (folds < 2) throw ValidationError("oof: need at least 2 folds");
    if (folds > n) {
        throw ValidationError("oof: fold count " + std::to_string(folds) +
                              " exceeds dataset size " + std::to_string(n));
    }
    if (components.empty()) throw ValidationError("oof: no component trainers");

    OofMatrix out;
    out.targets = targets;
    out.inputs.assign(n, std::vector<double>(components.size(), 0.0));
    out.fold_of.assign(n, 0);
    out.fold_eval_sets.assign(folds, {});

    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    RunRng rng(seed);
    rng.shuffle(order);
    for (std::size_t pos = 0; pos < n; ++pos) {
        const std::size_t fold = pos % folds;
        out.fold_of[order[pos]] = fold;
        out.fold_eval_sets[fold].push_back(order[pos]);
    }
    for (auto& f : out.fold_eval_sets) std::sort(f.begin(), f.end());

    for (std::size_t fold = 0; fold < folds; ++fold) {
        std::vector<std::size_t> train_idx;
        for (std::size_t i = 0; i < n; ++i) {
            if (out.fold_of[i] != fold) train_idx.push_back(i);
        }
        const auto& eval_idx = out.fold_eval_sets[fold];
        for (std::size_t comp = 0; comp < components.size(); ++comp) {
            const auto preds = components[comp](train_idx, eval_idx);
            if (preds.size() != eval_idx.size()) {
                throw std::runtime_error("oof: component " + std::to_string(comp) +
                                         " returned " + std::to_string(preds.size()) +
                                         " predictions for " +
                                         std::to_string(eval_idx.size()) + " instances");
            }
            for (std::size_t k = 0; k < eval_idx.size(); ++k) {
                out.inputs[eval_idx[k]][comp] = preds[k];
            }
        }
    }
    return out;
}

EnsembleMlp::EnsembleMlp(std::size_t input_width, std::size_t hidden_width)
    : input_width_(input_width), hidden_width_(hidden_width) {
    if (input_width_ == 0 || hidden_width_ == 0) {
        throw ValidationError("ensemble mlp: widths must be >= 1");
    }
    w1_ = &params_.add("combiner.w1", Tensor::zeros({hidden_width_, input_width_}));
    b1_ = &params_.add("combiner.b1", Tensor::zeros({hidden_width_}));
    w2_ = &params_.add("combiner.w2", Tensor::zeros({hidden_width_}));
    b2_ = &params_.add("combiner.b2", Tensor::zeros({1}));
}

Var EnsembleMlp::build(Tape& tape, const Tensor& input) const {
    Var x = tape.constant(input);
    Var hidden = tape.tanh(tape.add(tape.matvec(tape.param(*w1_), x), tape.param(*b1_)));
    Var out = tape.add(tape.dot(tape.param(*w2_), hidden), tape.param(*b2_));
    return tape.tanh(out);
}

EnsembleMlp EnsembleMlp::train(const std::vector<std::vector<double>>& inputs,
                               const std::vector<double>& targets,
                               const EnsembleConfig& cfg) {
    if (inputs.size() < 2) throw ValidationError("ensemble mlp: need at least 2 rows");
    if (inputs.size() != targets.size()) {
        throw ValidationError("ensemble mlp: row/target count mismatch");
    }
    const std::size_t width = inputs[0].size();
    for (const auto& row : inputs) {
        if (row.size() != width) {
            throw ValidationError("ensemble mlp: inconsistent input widths");
        }
    }
    const double first = targets[0];
    if (std::all_of(targets.begin(), targets.end(),
                    [&](double t) { return t == first; })) {
        log::warn("ensemble mlp: constant targets, combiner will learn a constant");
    }

    EnsembleMlp mlp(width, cfg.hidden_width);
    RunRng rng(cfg.seed);
    for (auto& p : mlp.params_) {
        if (p.name == "combiner.w1") {
            p.value = ad::glorot_uniform(cfg.hidden_width, width, rng);
        } else if (p.name == "combiner.w2") {
            Tensor row = ad::glorot_uniform(1, cfg.hidden_width, rng);
            for (std::size_t i = 0; i < row.size(); ++i) p.value[i] = row[i];
        }
        // biases stay zero
    }

    train::AdamState adam = train::AdamState::for_store(mlp.params_);
    std::vector<std::size_t> order(inputs.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        rng.shuffle(order);
        for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
            const std::size_t end = std::min(start + cfg.batch_size, order.size());
            const double inv_batch = 1.0 / static_cast<double>(end - start);
            mlp.params_.zero_grads();
            for (std::size_t k = start; k < end; ++k) {
                const std::size_t idx = order[k];
                Tape tape;
                Var pred = mlp.build(tape, Tensor::vector(inputs[idx]));
                Var err = tape.sub(pred, tape.constant(Tensor::scalar(targets[idx])));
                Var sq = tape.mul(err, err);
                tape.backward(sq, Tensor::scalar(inv_batch));
            }
            train::adam_step(mlp.params_, adam, cfg.adam);
        }
    }
    return mlp;
}

double EnsembleMlp::predict(const std::vector<double>& component_scores) const {
    if (component_scores.size() != input_width_) {
        throw std::invalid_argument("ensemble mlp: expected " +
                                    std::to_string(input_width_) + " inputs, got " +
                                    std::to_string(component_scores.size()));
    }
    Tape tape;
    Var out = build(tape, Tensor::vector(component_scores));
    return tape.value(out).item();
}

void EnsembleMlp::save(const std::string& path) const {
    std::ostringstream os;
    os << "finsent-combiner v1 " << input_width_ << " " << hidden_width_ << "\n";
    for (const auto& p : params_) {
        os << p.name;
        for (std::size_t i = 0; i < p.value.size(); ++i) os << " " << fmt_double(p.value[i]);
        os << "\n";
    }
    io::atomic_write(path, os.str());
}

EnsembleMlp EnsembleMlp::load(const std::string& path) {
    const auto lines = io::read_lines(path);
    if (lines.empty()) throw ValidationError(path + ": empty combiner file");
    const auto header = str::split_ws(lines[0]);
    if (header.size() != 4 || header[0] != "finsent-combiner" || header[1] != "v1") {
        throw ValidationError(path + ": not a combiner file");
    }
    EnsembleMlp mlp(std::stoul(header[2]), std::stoul(header[3]));
    for (std::size_t lineno = 1; lineno < lines.size(); ++lineno) {
        if (str::trim(lines[lineno]).empty()) continue;
        const auto parts = str::split_ws(lines[lineno]);
        ad::Parameter* p = mlp.params_.find(parts[0]);
        if (!p) throw ValidationError(path + ": unknown combiner parameter " + parts[0]);
        if (parts.size() != p->value.size() + 1) {
            throw ValidationError(path + ": wrong value count for " + parts[0]);
        }
        for (std::size_t i = 0; i < p->value.size(); ++i) {
            p->value[i] = std::stod(parts[i + 1]);
        }
    }
    return mlp;
}

}  // namespace finsent::ensemble
