#pragma once

#include <cstddef>

// Dense double-precision kernels used by the tensor/autodiff layer, the
// SVR Gram computation and the feature pipeline.
//
// Every kernel has a scalar reference implementation and, on x86-64, an
// AVX2+FMA variant. The active variant is chosen once at startup from
// CPUID (override with FINSENT_KERNELS=scalar|avx2 or set_isa()). The
// variants are equivalence-tested against the scalar reference in
// tests/test_kernels.cpp; FMA/reassociation means agreement is to
// tolerance, not bitwise, so nothing in the library may depend on which
// variant is active beyond that tolerance.
namespace finsent::kern {

enum class Isa { scalar, avx2 };

// Highest ISA the running CPU (and this build) supports.
Isa best_supported();

Isa active_isa();

// Force a dispatch level. Returns false (and leaves the level unchanged)
// if the requested ISA is not available on this machine/build.
bool set_isa(Isa isa);

const char* isa_name(Isa isa);

// sum_i a[i] * b[i]
double dot(const double* a, const double* b, std::size_t n);

// sum_i x[i]
double sum(const double* x, std::size_t n);

// y[i] += alpha * x[i]
void axpy(double alpha, const double* x, double* y, std::size_t n);

// x[i] *= alpha
void scal(double alpha, double* x, std::size_t n);

// out[i] = a[i] + b[i]; out may alias a or b
void add(const double* a, const double* b, double* out, std::size_t n);

// out[i] = a[i] - b[i]
void sub(const double* a, const double* b, double* out, std::size_t n);

// out[i] = a[i] * b[i]
void mul(const double* a, const double* b, double* out, std::size_t n);

// y = A x with A row-major (m x n), x of length n, y of length m
void gemv(const double* a, std::size_t m, std::size_t n, const double* x, double* y);

// y = A^T x with A row-major (m x n), x of length m, y of length n
void gemv_t(const double* a, std::size_t m, std::size_t n, const double* x, double* y);

// y += A x
void gemv_acc(const double* a, std::size_t m, std::size_t n, const double* x, double* y);

// y += A^T x
void gemv_t_acc(const double* a, std::size_t m, std::size_t n, const double* x,
                double* y);

// A[i][j] += alpha * x[i] * y[j] (rank-1 accumulate, A row-major m x n)
void ger(double alpha, const double* x, std::size_t m, const double* y, std::size_t n,
         double* a);

// out[i] = exp(x[i]); inputs outside [-708, 709] are clamped
void vexp(const double* x, double* out, std::size_t n);

// out[i] = tanh(x[i])
void vtanh(const double* x, double* out, std::size_t n);

// out[i] = 1 / (1 + exp(-x[i]))
void vsigmoid(const double* x, double* out, std::size_t n);

// Internal: per-ISA function tables. Exposed so tests can exercise a
// specific variant regardless of the active dispatch level.
struct KernelTable {
    double (*dot)(const double*, const double*, std::size_t);
    double (*sum)(const double*, std::size_t);
    void (*axpy)(double, const double*, double*, std::size_t);
    void (*scal)(double, double*, std::size_t);
    void (*add)(const double*, const double*, double*, std::size_t);
    void (*sub)(const double*, const double*, double*, std::size_t);
    void (*mul)(const double*, const double*, double*, std::size_t);
    void (*gemv)(const double*, std::size_t, std::size_t, const double*, double*);
    void (*gemv_t)(const double*, std::size_t, std::size_t, const double*, double*);
    void (*gemv_acc)(const double*, std::size_t, std::size_t, const double*, double*);
    void (*gemv_t_acc)(const double*, std::size_t, std::size_t, const double*, double*);
    void (*ger)(double, const double*, std::size_t, const double*, std::size_t, double*);
    void (*vexp)(const double*, double*, std::size_t);
    void (*vtanh)(const double*, double*, std::size_t);
    void (*vsigmoid)(const double*, double*, std::size_t);
};

const KernelTable& table_for(Isa isa);

}  // namespace finsent::kern
