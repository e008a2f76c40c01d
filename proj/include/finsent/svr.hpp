#pragma once

#include <string>
#include <vector>

namespace finsent::svr {

enum class KernelKind { linear, rbf };

struct SvrConfig {
    KernelKind kernel = KernelKind::rbf;
    double gamma = 0.0;  // rbf width; 0 selects 1/feature_dim
    double c = 1.0;
    double epsilon = 0.1;
    double tol = 1e-3;
    std::size_t max_iter = 10'000'000;
};

double kernel_eval(KernelKind kind, double gamma, const std::vector<double>& a,
                   const std::vector<double>& b);

// Full dual solution over the training set (exposed so feasibility can be
// audited point by point).
struct SvrSolution {
    std::vector<double> coefficients;  // alpha_i - alpha*_i per training point
    double bias = 0.0;
    std::size_t iterations = 0;
    double kkt_violation = 0.0;  // max violating-pair gap at termination
};

// Sequential pairwise optimization of the epsilon-insensitive dual:
// maximal-violating-pair selection, analytic two-variable updates, box
// [0, C] kept exact. Throws ValidationError on bad inputs and
// std::runtime_error (with the remaining duality gap) if the iteration cap
// is hit before the violation drops under tol.
SvrSolution solve_svr_dual(const std::vector<std::vector<double>>& x,
                           const std::vector<double>& y, const SvrConfig& cfg);

struct SvrModel {
    KernelKind kernel = KernelKind::rbf;
    double gamma = 0.0;
    double c = 1.0;
    double epsilon = 0.1;
    std::size_t feature_dim = 0;
    std::vector<std::vector<double>> support_vectors;
    std::vector<double> coefficients;  // aligned with support_vectors
    double bias = 0.0;

    // kernel expansion; unclamped
    double predict(const std::vector<double>& features) const;

    void save(const std::string& path) const;
    static SvrModel load(const std::string& path);
};

SvrModel train_svr(const std::vector<std::vector<double>>& x, const std::vector<double>& y,
                   const SvrConfig& cfg);

}  // namespace finsent::svr
