// AVX2+FMA kernel variants. Compiled with -mavx2 -mfma on x86-64 only and
// reached exclusively through the dispatch table after a CPUID check.
//
// Accumulation order differs from the scalar reference (4 partial sums,
// FMA contraction), so results agree to rounding, not bitwise. The
// equivalence bounds are pinned in tests/test_kernels.cpp.

#include "finsent/kernels.hpp"

#if defined(__x86_64__) || defined(_M_X64)

#include <immintrin.h>

#include <cmath>
#include <cstddef>

namespace finsent::kern {

namespace {

inline double hsum(__m256d v) {
    __m128d lo = _mm256_castpd256_pd128(v);
    __m128d hi = _mm256_extractf128_pd(v, 1);
    lo = _mm_add_pd(lo, hi);
    __m128d swapped = _mm_unpackhi_pd(lo, lo);
    return _mm_cvtsd_f64(_mm_add_sd(lo, swapped));
}

double dot_avx2(const double* a, const double* b, std::size_t n) {
    __m256d acc0 = _mm256_setzero_pd();
    __m256d acc1 = _mm256_setzero_pd();
    __m256d acc2 = _mm256_setzero_pd();
    __m256d acc3 = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 16 <= n; i += 16) {
        acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
        acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4), acc1);
        acc2 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 8), _mm256_loadu_pd(b + i + 8), acc2);
        acc3 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 12), _mm256_loadu_pd(b + i + 12), acc3);
    }
    for (; i + 4 <= n; i += 4) {
        acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
    }
    acc0 = _mm256_add_pd(_mm256_add_pd(acc0, acc1), _mm256_add_pd(acc2, acc3));
    double s = hsum(acc0);
    for (; i < n; ++i) s += a[i] * b[i];
    return s;
}

double sum_avx2(const double* x, std::size_t n) {
    __m256d acc0 = _mm256_setzero_pd();
    __m256d acc1 = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        acc0 = _mm256_add_pd(acc0, _mm256_loadu_pd(x + i));
        acc1 = _mm256_add_pd(acc1, _mm256_loadu_pd(x + i + 4));
    }
    for (; i + 4 <= n; i += 4) acc0 = _mm256_add_pd(acc0, _mm256_loadu_pd(x + i));
    double s = hsum(_mm256_add_pd(acc0, acc1));
    for (; i < n; ++i) s += x[i];
    return s;
}

void axpy_avx2(double alpha, const double* x, double* y, std::size_t n) {
    const __m256d va = _mm256_set1_pd(alpha);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d vy = _mm256_loadu_pd(y + i);
        vy = _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), vy);
        _mm256_storeu_pd(y + i, vy);
    }
    for (; i < n; ++i) y[i] += alpha * x[i];
}

void scal_avx2(double alpha, double* x, std::size_t n) {
    const __m256d va = _mm256_set1_pd(alpha);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        _mm256_storeu_pd(x + i, _mm256_mul_pd(va, _mm256_loadu_pd(x + i)));
    }
    for (; i < n; ++i) x[i] *= alpha;
}

void add_avx2(const double* a, const double* b, double* out, std::size_t n) {
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        _mm256_storeu_pd(out + i,
                         _mm256_add_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
    }
    for (; i < n; ++i) out[i] = a[i] + b[i];
}

void sub_avx2(const double* a, const double* b, double* out, std::size_t n) {
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        _mm256_storeu_pd(out + i,
                         _mm256_sub_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
    }
    for (; i < n; ++i) out[i] = a[i] - b[i];
}

void mul_avx2(const double* a, const double* b, double* out, std::size_t n) {
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        _mm256_storeu_pd(out + i,
                         _mm256_mul_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
    }
    for (; i < n; ++i) out[i] = a[i] * b[i];
}

void gemv_avx2(const double* a, std::size_t m, std::size_t n, const double* x,
               double* y) {
    for (std::size_t i = 0; i < m; ++i) y[i] = dot_avx2(a + i * n, x, n);
}

void gemv_t_avx2(const double* a, std::size_t m, std::size_t n, const double* x,
                 double* y) {
    for (std::size_t j = 0; j < n; ++j) y[j] = 0.0;
    for (std::size_t i = 0; i < m; ++i) axpy_avx2(x[i], a + i * n, y, n);
}

void gemv_acc_avx2(const double* a, std::size_t m, std::size_t n, const double* x,
                   double* y) {
    for (std::size_t i = 0; i < m; ++i) y[i] += dot_avx2(a + i * n, x, n);
}

void gemv_t_acc_avx2(const double* a, std::size_t m, std::size_t n, const double* x,
                     double* y) {
    for (std::size_t i = 0; i < m; ++i) axpy_avx2(x[i], a + i * n, y, n);
}

void ger_avx2(double alpha, const double* x, std::size_t m, const double* y,
              std::size_t n, double* a) {
    for (std::size_t i = 0; i < m; ++i) axpy_avx2(alpha * x[i], y, a + i * n, n);
}

// exp(x) = 2^k * exp(r), k = round(x / ln 2), |r| <= ln(2)/2.
// exp(r) by degree-13 Taylor series (truncation < 5e-18 relative on the
// reduced range); 2^k applied through the exponent bits. Inputs clamped to
// [-708, 709] to keep 2^k in the normal range, matching the scalar kernel.
inline __m256d exp4(__m256d x) {
    const __m256d log2e = _mm256_set1_pd(1.4426950408889634074);
    const __m256d ln2_hi = _mm256_set1_pd(6.93145751953125e-1);
    const __m256d ln2_lo = _mm256_set1_pd(1.42860682030941723212e-6);

    x = _mm256_min_pd(x, _mm256_set1_pd(709.0));
    x = _mm256_max_pd(x, _mm256_set1_pd(-708.0));

    __m256d k = _mm256_round_pd(_mm256_mul_pd(x, log2e),
                                _MM_FROUND_TO_NEAREST_INT | _MM_FROUND_NO_EXC);
    __m256d r = _mm256_fnmadd_pd(k, ln2_hi, x);
    r = _mm256_fnmadd_pd(k, ln2_lo, r);

    __m256d p = _mm256_set1_pd(1.6059043836821613e-10);  // 1/13!
    p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(2.0876756987868100e-9));
    p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(2.5052108385441720e-8));
    p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(2.7557319223985888e-7));
    p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(2.7557319223985893e-6));
    p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(2.4801587301587302e-5));
    p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.9841269841269841e-4));
    p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.3888888888888889e-3));
    p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(8.3333333333333332e-3));
    p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(4.1666666666666664e-2));
    p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.6666666666666666e-1));
    p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(0.5));
    p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0));
    p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0));

    __m128i k32 = _mm256_cvtpd_epi32(k);
    __m256i k64 = _mm256_cvtepi32_epi64(k32);
    __m256i bits = _mm256_slli_epi64(_mm256_add_epi64(k64, _mm256_set1_epi64x(1023)), 52);
    return _mm256_mul_pd(p, _mm256_castsi256_pd(bits));
}

const __m256d kSignMask = _mm256_set1_pd(-0.0);

// tanh(x) = sign(x) * (1 - e) / (1 + e), e = exp(-2|x|)
inline __m256d tanh4(__m256d x) {
    const __m256d one = _mm256_set1_pd(1.0);
    __m256d ax = _mm256_andnot_pd(kSignMask, x);
    __m256d e = exp4(_mm256_mul_pd(ax, _mm256_set1_pd(-2.0)));
    __m256d t = _mm256_div_pd(_mm256_sub_pd(one, e), _mm256_add_pd(one, e));
    return _mm256_or_pd(t, _mm256_and_pd(x, kSignMask));
}

// sigmoid(x) = (x >= 0 ? 1 : e) / (1 + e), e = exp(-|x|)
inline __m256d sigmoid4(__m256d x) {
    const __m256d one = _mm256_set1_pd(1.0);
    __m256d ax = _mm256_andnot_pd(kSignMask, x);
    __m256d e = exp4(_mm256_sub_pd(_mm256_setzero_pd(), ax));
    __m256d nonneg = _mm256_cmp_pd(x, _mm256_setzero_pd(), _CMP_GE_OQ);
    __m256d num = _mm256_blendv_pd(e, one, nonneg);
    return _mm256_div_pd(num, _mm256_add_pd(one, e));
}

void vexp_avx2(const double* x, double* out, std::size_t n) {
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) _mm256_storeu_pd(out + i, exp4(_mm256_loadu_pd(x + i)));
    if (i < n) {
        double buf_in[4] = {0, 0, 0, 0};
        double buf_out[4];
        for (std::size_t j = i; j < n; ++j) buf_in[j - i] = x[j];
        _mm256_storeu_pd(buf_out, exp4(_mm256_loadu_pd(buf_in)));
        for (std::size_t j = i; j < n; ++j) out[j] = buf_out[j - i];
    }
}

void vtanh_avx2(const double* x, double* out, std::size_t n) {
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) _mm256_storeu_pd(out + i, tanh4(_mm256_loadu_pd(x + i)));
    if (i < n) {
        double buf_in[4] = {0, 0, 0, 0};
        double buf_out[4];
        for (std::size_t j = i; j < n; ++j) buf_in[j - i] = x[j];
        _mm256_storeu_pd(buf_out, tanh4(_mm256_loadu_pd(buf_in)));
        for (std::size_t j = i; j < n; ++j) out[j] = buf_out[j - i];
    }
}

void vsigmoid_avx2(const double* x, double* out, std::size_t n) {
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) _mm256_storeu_pd(out + i, sigmoid4(_mm256_loadu_pd(x + i)));
    if (i < n) {
        double buf_in[4] = {0, 0, 0, 0};
        double buf_out[4];
        for (std::size_t j = i; j < n; ++j) buf_in[j - i] = x[j];
        _mm256_storeu_pd(buf_out, sigmoid4(_mm256_loadu_pd(buf_in)));
        for (std::size_t j = i; j < n; ++j) out[j] = buf_out[j - i];
    }
}

}  // namespace

const KernelTable& avx2_table() {
    static const KernelTable t = {
        dot_avx2,      sum_avx2,        axpy_avx2,  scal_avx2,
        add_avx2,      sub_avx2,        mul_avx2,   gemv_avx2,
        gemv_t_avx2,   gemv_acc_avx2,   gemv_t_acc_avx2, ger_avx2,
        vexp_avx2,     vtanh_avx2,      vsigmoid_avx2,
    };
    return t;
}

}  // namespace finsent::kern

#endif  // x86-64
