#pragma once

// Central-difference gradient oracle. Re-runs the provided forward
// function; never touches the tape's backward machinery, so it is an
// independent check of it.

#include <functional>

#include "finsent/tensor.hpp"

namespace finsent::oracle {

// f recomputes the scalar objective from current tensor contents.
inline ad::Tensor finite_difference_grad(const std::function<double()>& f, ad::Tensor& x,
                                         double step) {
    ad::Tensor g = ad::Tensor::zeros(x.shape());
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double orig = x[i];
        x[i] = orig + step;
        const double fp = f();
        x[i] = orig - step;
        const double fm = f();
        x[i] = orig;
        g[i] = (fp - fm) / (2.0 * step);
    }
    return g;
}

// max over elements of |analytic - numeric| / max(1e-12, |analytic|, |numeric|)
inline double max_relative_error(const ad::Tensor& analytic, const ad::Tensor& numeric) {
    double worst = 0.0;
    for (std::size_t i = 0; i < analytic.size(); ++i) {
        const double denom =
            std::max({1e-12, std::fabs(analytic[i]), std::fabs(numeric[i])});
        worst = std::max(worst, std::fabs(analytic[i] - numeric[i]) / denom);
    }
    return worst;
}

}  // namespace finsent::oracle
