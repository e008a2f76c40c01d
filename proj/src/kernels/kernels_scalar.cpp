#include "finsent/kernels.hpp"

#include <cmath>
#include <cstddef>

// Scalar reference kernels. These define the semantics the AVX2 variants
// are tested against. Keep them plain loops; the compiler may auto-vectorize
// but the accumulation order here is the reference order.
namespace finsent::kern {

namespace {

double dot_scalar(const double* a, const double* b, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i];
    return acc;
}

double sum_scalar(const double* x, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += x[i];
    return acc;
}

void axpy_scalar(double alpha, const double* x, double* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void scal_scalar(double alpha, double* x, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) x[i] *= alpha;
}

void add_scalar(const double* a, const double* b, double* out, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out[i] = a[i] + b[i];
}

void sub_scalar(const double* a, const double* b, double* out, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out[i] = a[i] - b[i];
}

void mul_scalar(const double* a, const double* b, double* out, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out[i] = a[i] * b[i];
}

void gemv_scalar(const double* a, std::size_t m, std::size_t n, const double* x,
                 double* y) {
    for (std::size_t i = 0; i < m; ++i) y[i] = dot_scalar(a + i * n, x, n);
}

void gemv_t_scalar(const double* a, std::size_t m, std::size_t n, const double* x,
                   double* y) {
    for (std::size_t j = 0; j < n; ++j) y[j] = 0.0;
    for (std::size_t i = 0; i < m; ++i) axpy_scalar(x[i], a + i * n, y, n);
}

void gemv_acc_scalar(const double* a, std::size_t m, std::size_t n, const double* x,
                     double* y) {
    for (std::size_t i = 0; i < m; ++i) y[i] += dot_scalar(a + i * n, x, n);
}

void gemv_t_acc_scalar(const double* a, std::size_t m, std::size_t n, const double* x,
                       double* y) {
    for (std::size_t i = 0; i < m; ++i) axpy_scalar(x[i], a + i * n, y, n);
}

void ger_scalar(double alpha, const double* x, std::size_t m, const double* y,
                std::size_t n, double* a) {
    for (std::size_t i = 0; i < m; ++i) axpy_scalar(alpha * x[i], y, a + i * n, n);
}

void vexp_scalar(const double* x, double* out, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) {
        double v = x[i];
        if (v < -708.0) v = -708.0;
        if (v > 709.0) v = 709.0;
        out[i] = std::exp(v);
    }
}

void vtanh_scalar(const double* x, double* out, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out[i] = std::tanh(x[i]);
}

void vsigmoid_scalar(const double* x, double* out, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) {
        // exp(-|x|) never overflows; pick the numerator by sign
        const double e = std::exp(-std::fabs(x[i]));
        out[i] = (x[i] >= 0.0 ? 1.0 : e) / (1.0 + e);
    }
}

}  // namespace

const KernelTable& scalar_table() {
    static const KernelTable t = {
        dot_scalar,      sum_scalar,        axpy_scalar,  scal_scalar,
        add_scalar,      sub_scalar,        mul_scalar,   gemv_scalar,
        gemv_t_scalar,   gemv_acc_scalar,   gemv_t_acc_scalar, ger_scalar,
        vexp_scalar,     vtanh_scalar,      vsigmoid_scalar,
    };
    return t;
}

}  // namespace finsent::kern
