#include "finsent/reference.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace finsent::reference {

namespace {

double clip(double v, double lo, double hi) { return std::min(hi, std::max(lo, v)); }

// projection of v onto {0 <= b <= C} intersect {sum_s sign_s * b_s = 0}:
// b_s = clip(v_s - lambda * sign_s, 0, C) with lambda found by bisection
// (the constraint residual is monotone non-increasing in lambda)
std::vector<double> project(const std::vector<double>& v, const std::vector<double>& sgn,
                            double c) {
    auto residual = [&](double lambda) {
        double r = 0.0;
        for (std::size_t s = 0; s < v.size(); ++s) {
            r += sgn[s] * clip(v[s] - lambda * sgn[s], 0.0, c);
        }
        return r;
    };
    // bracket the root
    double vmax = 0.0;
    for (double x : v) vmax = std::max(vmax, std::fabs(x));
    double lo = -(vmax + c + 1.0);
    double hi = vmax + c + 1.0;
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (residual(mid) > 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    const double lambda = 0.5 * (lo + hi);
    std::vector<double> out(v.size());
    for (std::size_t s = 0; s < v.size(); ++s) {
        out[s] = clip(v[s] - lambda * sgn[s], 0.0, c);
    }
    return out;
}

}  // namespace

QpReferenceResult svr_reference_solve(const std::vector<std::vector<double>>& x,
                                      const std::vector<double>& y,
                                      const svr::SvrConfig& cfg, std::size_t iterations) {
    if (x.empty() || x.size() != y.size()) {
        throw std::invalid_argument("svr reference: bad inputs");
    }
    const std::size_t l = x.size();
    const std::size_t n = 2 * l;
    const double gamma = cfg.gamma > 0.0 || cfg.kernel == svr::KernelKind::linear
                             ? cfg.gamma
                             : 1.0 / static_cast<double>(x[0].size());

    std::vector<double> sgn(n), p(n);
    for (std::size_t i = 0; i < l; ++i) {
        sgn[i] = 1.0;
        sgn[i + l] = -1.0;
        p[i] = cfg.epsilon - y[i];
        p[i + l] = cfg.epsilon + y[i];
    }

    // explicit dense Q (small problems only)
    std::vector<double> q(n * n);
    for (std::size_t s = 0; s < n; ++s) {
        for (std::size_t t = 0; t < n; ++t) {
            q[s * n + t] =
                sgn[s] * sgn[t] * svr::kernel_eval(cfg.kernel, gamma, x[s % l], x[t % l]);
        }
    }

    // step size from a Gershgorin bound on the largest eigenvalue
    double lmax = 0.0;
    for (std::size_t s = 0; s < n; ++s) {
        double row = 0.0;
        for (std::size_t t = 0; t < n; ++t) row += std::fabs(q[s * n + t]);
        lmax = std::max(lmax, row);
    }
    const double step = 1.0 / (lmax + 1.0);

    std::vector<double> beta(n, 0.0), grad(n), trial(n);
    for (std::size_t it = 0; it < iterations; ++it) {
        for (std::size_t s = 0; s < n; ++s) {
            double g = p[s];
            for (std::size_t t = 0; t < n; ++t) g += q[s * n + t] * beta[t];
            grad[s] = g;
        }
        for (std::size_t s = 0; s < n; ++s) trial[s] = beta[s] - step * grad[s];
        trial = project(trial, sgn, cfg.c);
        double moved = 0.0;
        for (std::size_t s = 0; s < n; ++s) {
            moved += std::fabs(trial[s] - beta[s]);
        }
        beta.swap(trial);
        if (moved < 1e-14) break;
    }

    // collapse paired mass (see the production solver: pure improvement,
    // gradient unchanged) so the intercept sees the bound structure
    for (std::size_t s = 0; s < l; ++s) {
        const double shared = std::min(beta[s], beta[s + l]);
        if (shared > 0.0) {
            beta[s] -= shared;
            beta[s + l] -= shared;
        }
    }

    // final gradient for the intercept and objective
    double obj = 0.0;
    for (std::size_t s = 0; s < n; ++s) {
        double g = p[s];
        for (std::size_t t = 0; t < n; ++t) g += q[s * n + t] * beta[t];
        grad[s] = g;
        obj += beta[s] * (g + p[s]);
    }
    obj *= 0.5;

    double upper = std::numeric_limits<double>::infinity();
    double lower = -std::numeric_limits<double>::infinity();
    double free_sum = 0.0;
    std::size_t free_count = 0;
    for (std::size_t s = 0; s < n; ++s) {
        const double yg = sgn[s] * grad[s];
        if (beta[s] >= cfg.c - 1e-12) {
            if (sgn[s] < 0.0) {
                upper = std::min(upper, yg);
            } else {
                lower = std::max(lower, yg);
            }
        } else if (beta[s] <= 1e-12) {
            if (sgn[s] > 0.0) {
                upper = std::min(upper, yg);
            } else {
                lower = std::max(lower, yg);
            }
        } else {
            ++free_count;
            free_sum += yg;
        }
    }
    const double rho =
        free_count > 0 ? free_sum / static_cast<double>(free_count) : (upper + lower) / 2.0;

    QpReferenceResult out;
    out.coefficients.resize(l);
    for (std::size_t i = 0; i < l; ++i) out.coefficients[i] = beta[i] - beta[i + l];
    out.bias = -rho;
    out.objective = obj;
    return out;
}

double svr_reference_predict(const QpReferenceResult& solution,
                             const std::vector<std::vector<double>>& x,
                             const svr::SvrConfig& cfg, std::size_t feature_dim,
                             const std::vector<double>& query) {
    const double gamma = cfg.gamma > 0.0 || cfg.kernel == svr::KernelKind::linear
                             ? cfg.gamma
                             : 1.0 / static_cast<double>(feature_dim);
    double acc = solution.bias;
    for (std::size_t i = 0; i < x.size(); ++i) {
        acc += solution.coefficients[i] * svr::kernel_eval(cfg.kernel, gamma, x[i], query);
    }
    return acc;
}

}  // namespace finsent::reference
