#include "finsent/optim.hpp"

#include <cmath>
#include <stdexcept>

#include "finsent/kernels.hpp"

namespace finsent::train {

AdamState AdamState::for_store(const ad::ParameterStore& params) {
    AdamState state;
    for (const auto& p : params) {
        state.slots.push_back({ad::Tensor::zeros(p.value.shape()),
                               ad::Tensor::zeros(p.value.shape())});
    }
    return state;
}

void adam_step(ad::ParameterStore& params, AdamState& state, const AdamConfig& cfg) {
    if (state.slots.size() != params.count()) {
        throw std::invalid_argument("adam_step: state does not match parameter store");
    }
    state.step_count += 1;
    const double t = static_cast<double>(state.step_count);
    const double bc1 = 1.0 - std::pow(cfg.beta1, t);
    const double bc2 = 1.0 - std::pow(cfg.beta2, t);

    std::size_t slot = 0;
    for (auto& p : params) {
        AdamState::Slot& s = state.slots[slot++];
        if (!s.m.same_shape(p.value)) {
            throw std::invalid_argument("adam_step: moment shape mismatch for " + p.name);
        }
        const std::size_t n = p.value.size();
        for (std::size_t i = 0; i < n; ++i) {
            const double g = p.grad[i];
            s.m[i] = cfg.beta1 * s.m[i] + (1.0 - cfg.beta1) * g;
            s.v[i] = cfg.beta2 * s.v[i] + (1.0 - cfg.beta2) * g * g;
            const double m_hat = s.m[i] / bc1;
            const double v_hat = s.v[i] / bc2;
            p.value[i] -= cfg.step_size * m_hat / (std::sqrt(v_hat) + cfg.epsilon);
        }
    }
}

void clip_grad_norm(ad::ParameterStore& params, double max_norm) {
    if (max_norm <= 0.0) return;
    double sq = 0.0;
    for (const auto& p : params) sq += kern::dot(p.grad.data(), p.grad.data(), p.grad.size());
    const double norm = std::sqrt(sq);
    if (norm <= max_norm) return;
    const double factor = max_norm / norm;
    for (auto& p : params) kern::scal(factor, p.grad.data(), p.grad.size());
}

double mse_loss(const std::vector<double>& predictions, const std::vector<double>& golds) {
    if (predictions.empty()) throw std::invalid_argument("mse_loss: empty inputs");
    if (predictions.size() != golds.size()) {
        throw std::invalid_argument("mse_loss: length mismatch");
    }
    double acc = 0.0;
    for (std::size_t i = 0; i < predictions.size(); ++i) {
        const double d = predictions[i] - golds[i];
        acc += d * d;
    }
    return acc / static_cast<double>(predictions.size());
}

}  // namespace finsent::train
