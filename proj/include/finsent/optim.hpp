#pragma once

#include <cstdint>
#include <vector>

#include "finsent/autodiff.hpp"

namespace finsent::train {

struct AdamConfig {
    double step_size = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

// First/second moment estimates, one slot per parameter in store order;
// slot shapes always mirror the parameter shapes.
struct AdamState {
    struct Slot {
        ad::Tensor m;
        ad::Tensor v;
    };
    std::vector<Slot> slots;
    std::uint64_t step_count = 0;

    static AdamState for_store(const ad::ParameterStore& params);
};

// One Adam update with bias correction, reading each parameter's
// accumulated gradient. Does not zero the gradients.
void adam_step(ad::ParameterStore& params, AdamState& state, const AdamConfig& cfg);

// Global L2-norm gradient clipping; max_norm <= 0 disables.
void clip_grad_norm(ad::ParameterStore& params, double max_norm);

// Mean of squared differences; throws on empty or mismatched lengths.
double mse_loss(const std::vector<double>& predictions, const std::vector<double>& golds);

}  // namespace finsent::train
