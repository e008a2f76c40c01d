#pragma once

#include <vector>

#include "finsent/svr.hpp"

namespace finsent::reference {

// Brute-force solver for the same epsilon-insensitive dual QP the
// sequential pairwise solver optimizes: projected gradient descent with an
// exact projection onto the box-plus-equality feasible set (bisection on
// the equality multiplier). Deliberately simple and slow; it shares no
// code with the production solver and exists only to check it (tests and
// the selftest verb). Suitable for small problems.
struct QpReferenceResult {
    std::vector<double> coefficients;  // alpha_i - alpha*_i per point
    double bias = 0.0;
    double objective = 0.0;  // final dual objective (minimized form)
};

QpReferenceResult svr_reference_solve(const std::vector<std::vector<double>>& x,
                                      const std::vector<double>& y,
                                      const svr::SvrConfig& cfg,
                                      std::size_t iterations = 200000);

double svr_reference_predict(const QpReferenceResult& solution,
                             const std::vector<std::vector<double>>& x,
                             const svr::SvrConfig& cfg, std::size_t feature_dim,
                             const std::vector<double>& query);

}  // namespace finsent::reference
