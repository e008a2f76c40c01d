#include "finsent/kernels.hpp"

#include <atomic>
#include <cstdlib>
#include <cstring>
#include <stdexcept>

namespace finsent::kern {

const KernelTable& scalar_table();
#ifdef FINSENT_WITH_AVX2
const KernelTable& avx2_table();
#endif

namespace {

struct Active {
    std::atomic<const KernelTable*> table;
    std::atomic<Isa> isa;
};

Isa initial_isa() {
    Isa isa = best_supported();
    if (const char* env = std::getenv("FINSENT_KERNELS")) {
        if (std::strcmp(env, "scalar") == 0) isa = Isa::scalar;
        // "avx2" keeps the probed level; it cannot force an unsupported ISA
    }
    return isa;
}

Active& active() {
    static Active a = [] {
        Isa isa = initial_isa();
        return Active{{&table_for(isa)}, {isa}};
    }();
    return a;
}

inline const KernelTable& t() {
    return *active().table.load(std::memory_order_relaxed);
}

}  // namespace

Isa best_supported() {
#ifdef FINSENT_WITH_AVX2
    if (__builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma")) {
        return Isa::avx2;
    }
#endif
    return Isa::scalar;
}

Isa active_isa() { return active().isa.load(std::memory_order_relaxed); }

bool set_isa(Isa isa) {
    if (isa == Isa::avx2 && best_supported() != Isa::avx2) return false;
    active().isa.store(isa, std::memory_order_relaxed);
    active().table.store(&table_for(isa), std::memory_order_relaxed);
    return true;
}

const char* isa_name(Isa isa) {
    switch (isa) {
        case Isa::scalar: return "scalar";
        case Isa::avx2: return "avx2";
    }
    return "unknown";
}

const KernelTable& table_for(Isa isa) {
    if (isa == Isa::avx2) {
#ifdef FINSENT_WITH_AVX2
        if (best_supported() == Isa::avx2) return avx2_table();
#endif
        throw std::runtime_error("kernels: avx2 not available on this machine/build");
    }
    return scalar_table();
}

double dot(const double* a, const double* b, std::size_t n) { return t().dot(a, b, n); }
double sum(const double* x, std::size_t n) { return t().sum(x, n); }
void axpy(double alpha, const double* x, double* y, std::size_t n) {
    t().axpy(alpha, x, y, n);
}
void scal(double alpha, double* x, std::size_t n) { t().scal(alpha, x, n); }
void add(const double* a, const double* b, double* out, std::size_t n) {
    t().add(a, b, out, n);
}
void sub(const double* a, const double* b, double* out, std::size_t n) {
    t().sub(a, b, out, n);
}
void mul(const double* a, const double* b, double* out, std::size_t n) {
    t().mul(a, b, out, n);
}
void gemv(const double* a, std::size_t m, std::size_t n, const double* x, double* y) {
    t().gemv(a, m, n, x, y);
}
void gemv_t(const double* a, std::size_t m, std::size_t n, const double* x, double* y) {
    t().gemv_t(a, m, n, x, y);
}
void gemv_acc(const double* a, std::size_t m, std::size_t n, const double* x, double* y) {
    t().gemv_acc(a, m, n, x, y);
}
void gemv_t_acc(const double* a, std::size_t m, std::size_t n, const double* x,
                double* y) {
    t().gemv_t_acc(a, m, n, x, y);
}
void ger(double alpha, const double* x, std::size_t m, const double* y, std::size_t n,
         double* a) {
    t().ger(alpha, x, m, y, n, a);
}
void vexp(const double* x, double* out, std::size_t n) { t().vexp(x, out, n); }
void vtanh(const double* x, double* out, std::size_t n) { t().vtanh(x, out, n); }
void vsigmoid(const double* x, double* out, std::size_t n) { t().vsigmoid(x, out, n); }

}  // namespace finsent::kern
