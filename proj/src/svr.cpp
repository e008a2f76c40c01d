#include "finsent/svr.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "finsent/common.hpp"
#include "finsent/kernels.hpp"

namespace finsent::svr {

double kernel_eval(KernelKind kind, double gamma, const std::vector<double>& a,
                   const std::vector<double>& b) {
    if (a.size() != b.size()) {
        throw std::invalid_argument("svr kernel: feature length mismatch " +
                                    std::to_string(a.size()) + " vs " +
                                    std::to_string(b.size()));
    }
    if (kind == KernelKind::linear) {
        return kern::dot(a.data(), b.data(), a.size());
    }
    // rbf: exp(-gamma * ||a-b||^2)
    double sq = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        sq += d * d;
    }
    return std::exp(-gamma * sq);
}

namespace {

constexpr double kTau = 1e-12;

double effective_gamma(const SvrConfig& cfg, std::size_t feature_dim) {
    if (cfg.kernel == KernelKind::linear) return 0.0;
    return cfg.gamma > 0.0 ? cfg.gamma : 1.0 / static_cast<double>(feature_dim);
}

// dense training-set kernel matrix
std::vector<double> gram_matrix(const std::vector<std::vector<double>>& x,
                                KernelKind kind, double gamma) {
    const std::size_t l = x.size();
    std::vector<double> k(l * l);
    for (std::size_t i = 0; i < l; ++i) {
        for (std::size_t j = 0; j <= i; ++j) {
            const double v = kernel_eval(kind, gamma, x[i], x[j]);
            k[i * l + j] = v;
            k[j * l + i] = v;
        }
    }
    return k;
}

}  // namespace

SvrSolution solve_svr_dual(const std::vector<std::vector<double>>& x,
                           const std::vector<double>& y, const SvrConfig& cfg) {
    if (x.size() < 2) throw ValidationError("svr: need at least 2 training points");
    if (x.size() != y.size()) throw ValidationError("svr: feature/target count mismatch");
    if (cfg.c <= 0.0) throw ValidationError("svr: C must be positive");
    if (cfg.epsilon < 0.0) throw ValidationError("svr: epsilon must be nonnegative");
    for (const auto& row : x) {
        if (row.size() != x[0].size()) {
            throw ValidationError("svr: inconsistent feature dimensions");
        }
    }

    const std::size_t l = x.size();
    const std::size_t n = 2 * l;
    const double c = cfg.c;
    const double gamma = effective_gamma(cfg, x[0].size());
    const std::vector<double> k = gram_matrix(x, cfg.kernel, gamma);

    // dual over beta (length 2l): the first l slots carry sign +1, the
    // second l sign -1; Q[s,t] = sign_s * sign_t * K(s mod l, t mod l)
    std::vector<double> beta(n, 0.0);
    std::vector<double> grad(n);
    std::vector<double> sign(n);
    for (std::size_t i = 0; i < l; ++i) {
        grad[i] = cfg.epsilon - y[i];
        grad[i + l] = cfg.epsilon + y[i];
        sign[i] = 1.0;
        sign[i + l] = -1.0;
    }

    auto q_entry = [&](std::size_t s, std::size_t t) {
        return sign[s] * sign[t] * k[(s % l) * l + (t % l)];
    };

    SvrSolution sol;
    std::size_t iter = 0;
    double violation = std::numeric_limits<double>::infinity();
    while (iter < cfg.max_iter) {
        // maximal violating pair
        double gmax = -std::numeric_limits<double>::infinity();
        double gmin = std::numeric_limits<double>::infinity();
        std::size_t i = n, j = n;
        for (std::size_t s = 0; s < n; ++s) {
            const double yg = -sign[s] * grad[s];
            const bool in_up = sign[s] > 0.0 ? beta[s] < c : beta[s] > 0.0;
            const bool in_low = sign[s] > 0.0 ? beta[s] > 0.0 : beta[s] < c;
            if (in_up && yg > gmax) {
                gmax = yg;
                i = s;
            }
            if (in_low && yg < gmin) {
                gmin = yg;
                j = s;
            }
        }
        violation = gmax - gmin;
        if (i == n || j == n || violation < cfg.tol) break;
        ++iter;

        const double old_bi = beta[i], old_bj = beta[j];
        if (sign[i] != sign[j]) {
            double quad = q_entry(i, i) + q_entry(j, j) + 2.0 * q_entry(i, j);
            if (quad <= 0.0) quad = kTau;
            const double delta = (-grad[i] - grad[j]) / quad;
            const double diff = beta[i] - beta[j];
            beta[i] += delta;
            beta[j] += delta;
            if (diff > 0.0) {
                if (beta[j] < 0.0) {
                    beta[j] = 0.0;
                    beta[i] = diff;
                }
            } else {
                if (beta[i] < 0.0) {
                    beta[i] = 0.0;
                    beta[j] = -diff;
                }
            }
            if (diff > 0.0) {
                if (beta[i] > c) {
                    beta[i] = c;
                    beta[j] = c - diff;
                }
            } else {
                if (beta[j] > c) {
                    beta[j] = c;
                    beta[i] = c + diff;
                }
            }
        } else {
            double quad = q_entry(i, i) + q_entry(j, j) - 2.0 * q_entry(i, j);
            if (quad <= 0.0) quad = kTau;
            const double delta = (grad[i] - grad[j]) / quad;
            const double total = beta[i] + beta[j];
            beta[i] -= delta;
            beta[j] += delta;
            if (total > c) {
                if (beta[i] > c) {
                    beta[i] = c;
                    beta[j] = total - c;
                }
            } else {
                if (beta[j] < 0.0) {
                    beta[j] = 0.0;
                    beta[i] = total;
                }
            }
            if (total > c) {
                if (beta[j] > c) {
                    beta[j] = c;
                    beta[i] = total - c;
                }
            } else {
                if (beta[i] < 0.0) {
                    beta[i] = 0.0;
                    beta[j] = total;
                }
            }
        }

        const double di = sign[i] * (beta[i] - old_bi);
        const double dj = sign[j] * (beta[j] - old_bj);
        const double* ki = k.data() + (i % l) * l;
        const double* kj = k.data() + (j % l) * l;
        for (std::size_t s = 0; s < n; ++s) {
            grad[s] += sign[s] * (di * ki[s % l] + dj * kj[s % l]);
        }
    }

    if (violation >= cfg.tol && iter >= cfg.max_iter) {
        // report the remaining primal-dual gap alongside the KKT violation
        double dual_obj = 0.0;
        for (std::size_t s = 0; s < n; ++s) {
            // grad = Q beta + p, so beta' (grad + p) accumulates 2*quad + 2*lin
            const double p_s = s < l ? cfg.epsilon - y[s] : cfg.epsilon + y[s - l];
            dual_obj += beta[s] * (grad[s] + p_s);
        }
        dual_obj *= 0.5;
        throw std::runtime_error(
            "svr: no convergence after " + std::to_string(iter) +
            " iterations; KKT violation " + fmt_double(violation) +
            ", dual objective " + fmt_double(-dual_obj));
    }

    // Collapse paired mass: beta_s and beta_{s+l} can both end positive
    // with the same net coefficient. Removing min of the pair from both
    // sides lowers the objective by 2*epsilon*t, stays feasible, and
    // provably leaves the gradient unchanged (the pair's Q columns cancel),
    // so the intercept below sees the bound structure of the true optimum.
    for (std::size_t s = 0; s < l; ++s) {
        const double shared = std::min(beta[s], beta[s + l]);
        if (shared > 0.0) {
            beta[s] -= shared;
            beta[s + l] -= shared;
        }
    }

    // intercept from the KKT conditions at the solution
    double upper = std::numeric_limits<double>::infinity();
    double lower = -std::numeric_limits<double>::infinity();
    double free_sum = 0.0;
    std::size_t free_count = 0;
    for (std::size_t s = 0; s < n; ++s) {
        const double yg = sign[s] * grad[s];
        if (beta[s] >= c) {
            if (sign[s] < 0.0) {
                upper = std::min(upper, yg);
            } else {
                lower = std::max(lower, yg);
            }
        } else if (beta[s] <= 0.0) {
            if (sign[s] > 0.0) {
                upper = std::min(upper, yg);
            } else {
                lower = std::max(lower, yg);
            }
        } else {
            ++free_count;
            free_sum += yg;
        }
    }
    const double rho = free_count > 0 ? free_sum / static_cast<double>(free_count)
                                      : (upper + lower) / 2.0;

    sol.coefficients.resize(l);
    for (std::size_t s = 0; s < l; ++s) sol.coefficients[s] = beta[s] - beta[s + l];
    sol.bias = -rho;
    sol.iterations = iter;
    sol.kkt_violation = violation;
    return sol;
}

double SvrModel::predict(const std::vector<double>& features) const {
    if (features.size() != feature_dim) {
        throw std::invalid_argument("svr predict: feature length " +
                                    std::to_string(features.size()) + " != model dim " +
                                    std::to_string(feature_dim));
    }
    double acc = bias;
    for (std::size_t i = 0; i < support_vectors.size(); ++i) {
        acc += coefficients[i] * kernel_eval(kernel, gamma, support_vectors[i], features);
    }
    return acc;
}

SvrModel train_svr(const std::vector<std::vector<double>>& x, const std::vector<double>& y,
                   const SvrConfig& cfg) {
    const SvrSolution sol = solve_svr_dual(x, y, cfg);
    SvrModel m;
    m.kernel = cfg.kernel;
    m.gamma = effective_gamma(cfg, x[0].size());
    m.c = cfg.c;
    m.epsilon = cfg.epsilon;
    m.feature_dim = x[0].size();
    m.bias = sol.bias;
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (sol.coefficients[i] != 0.0) {
            m.support_vectors.push_back(x[i]);
            m.coefficients.push_back(sol.coefficients[i]);
        }
    }
    log::info("svr: trained on " + std::to_string(x.size()) + " points, " +
              std::to_string(m.support_vectors.size()) + " support vectors, " +
              std::to_string(sol.iterations) + " iterations");
    return m;
}

void SvrModel::save(const std::string& path) const {
    std::ostringstream os;
    os << "finsent-svr v1\n";
    os << "kernel " << (kernel == KernelKind::linear ? "linear" : "rbf") << "\n";
    os << "gamma " << fmt_double(gamma) << "\n";
    os << "c " << fmt_double(c) << "\n";
    os << "epsilon " << fmt_double(epsilon) << "\n";
    os << "bias " << fmt_double(bias) << "\n";
    os << "feature_dim " << feature_dim << "\n";
    os << "support_vectors " << support_vectors.size() << "\n";
    for (std::size_t i = 0; i < support_vectors.size(); ++i) {
        os << fmt_double(coefficients[i]);
        for (double v : support_vectors[i]) os << " " << fmt_double(v);
        os << "\n";
    }
    io::atomic_write(path, os.str());
}

SvrModel SvrModel::load(const std::string& path) {
    const auto lines = io::read_lines(path);
    if (lines.empty() || lines[0] != "finsent-svr v1") {
        throw ValidationError(path + ": not an svr model file");
    }
    SvrModel m;
    std::size_t sv_count = 0;
    std::size_t lineno = 1;
    for (; lineno < lines.size(); ++lineno) {
        const auto parts = str::split_ws(lines[lineno]);
        if (parts.empty()) continue;
        if (parts[0] == "kernel") {
            m.kernel = parts.at(1) == "linear" ? KernelKind::linear : KernelKind::rbf;
        } else if (parts[0] == "gamma") {
            m.gamma = std::stod(parts.at(1));
        } else if (parts[0] == "c") {
            m.c = std::stod(parts.at(1));
        } else if (parts[0] == "epsilon") {
            m.epsilon = std::stod(parts.at(1));
        } else if (parts[0] == "bias") {
            m.bias = std::stod(parts.at(1));
        } else if (parts[0] == "feature_dim") {
            m.feature_dim = std::stoul(parts.at(1));
        } else if (parts[0] == "support_vectors") {
            sv_count = std::stoul(parts.at(1));
            break;
        } else {
            throw ValidationError(path + ":" + std::to_string(lineno + 1) +
                                  ": unknown field '" + parts[0] + "'");
        }
    }
    for (std::size_t i = 0; i < sv_count; ++i) {
        ++lineno;
        if (lineno >= lines.size()) throw ValidationError(path + ": truncated model");
        const auto parts = str::split_ws(lines[lineno]);
        if (parts.size() != m.feature_dim + 1) {
            throw ValidationError(path + ":" + std::to_string(lineno + 1) +
                                  ": expected coefficient and " +
                                  std::to_string(m.feature_dim) + " values");
        }
        m.coefficients.push_back(std::stod(parts[0]));
        std::vector<double> sv(m.feature_dim);
        for (std::size_t d = 0; d < m.feature_dim; ++d) sv[d] = std::stod(parts[d + 1]);
        m.support_vectors.push_back(std::move(sv));
    }
    return m;
}

}  // namespace finsent::svr
