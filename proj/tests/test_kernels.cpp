#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "finsent/kernels.hpp"
#include "finsent/rng.hpp"

using namespace finsent;
using kern::Isa;

namespace {

std::vector<double> random_vec(RunRng& rng, std::size_t n, double lo = -1.0,
                               double hi = 1.0) {
    std::vector<double> v(n);
    for (auto& x : v) x = rng.next_uniform(lo, hi);
    return v;
}

bool close(double a, double b, double atol, double rtol) {
    return std::fabs(a - b) <= atol + rtol * std::fabs(b);
}

// The AVX2 variants reassociate and contract with FMA, so agreement with
// the scalar reference is to rounding. These bounds are the contract.
constexpr double kLinAtol = 1e-13;
constexpr double kLinRtol = 1e-12;
constexpr double kTransAtol = 1e-14;
constexpr double kTransRtol = 1e-12;

bool have_avx2() { return kern::best_supported() == Isa::avx2; }

}  // namespace

TEST_CASE("dispatch reports a valid level and can be forced to scalar") {
    const Isa initial = kern::active_isa();
    CHECK(kern::set_isa(Isa::scalar));
    CHECK(kern::active_isa() == Isa::scalar);
    double a[3] = {1.0, 2.0, 3.0};
    double b[3] = {4.0, 5.0, 6.0};
    CHECK(kern::dot(a, b, 3) == doctest::Approx(32.0));
    if (have_avx2()) {
        CHECK(kern::set_isa(Isa::avx2));
        CHECK(kern::active_isa() == Isa::avx2);
        CHECK(kern::dot(a, b, 3) == doctest::Approx(32.0));
    }
    kern::set_isa(initial);
}

TEST_CASE("scalar reference kernels: hand values") {
    const auto& t = kern::table_for(Isa::scalar);
    double a[4] = {1, -2, 3, 0.5};
    double b[4] = {2, 1, -1, 4};
    CHECK(t.dot(a, b, 4) == doctest::Approx(-1.0));
    CHECK(t.sum(a, 4) == doctest::Approx(2.5));

    double y[4] = {1, 1, 1, 1};
    t.axpy(2.0, a, y, 4);
    CHECK(y[0] == doctest::Approx(3.0));
    CHECK(y[1] == doctest::Approx(-3.0));

    // y = A x, A = [[1,2],[3,4]], x = [1,-1]
    double mat[4] = {1, 2, 3, 4};
    double x2[2] = {1, -1};
    double out2[2];
    t.gemv(mat, 2, 2, x2, out2);
    CHECK(out2[0] == doctest::Approx(-1.0));
    CHECK(out2[1] == doctest::Approx(-1.0));
    t.gemv_t(mat, 2, 2, x2, out2);
    CHECK(out2[0] == doctest::Approx(-2.0));
    CHECK(out2[1] == doctest::Approx(-2.0));
}

TEST_CASE("avx2 variants agree with the scalar reference on random data") {
    if (!have_avx2()) return;
    const auto& s = kern::table_for(Isa::scalar);
    const auto& v = kern::table_for(Isa::avx2);
    RunRng rng(42);

    // assorted lengths around the 4- and 16-lane boundaries
    for (std::size_t n : {1u, 2u, 3u, 4u, 5u, 7u, 8u, 15u, 16u, 17u, 33u, 100u, 257u}) {
        auto a = random_vec(rng, n, -2.0, 2.0);
        auto b = random_vec(rng, n, -2.0, 2.0);

        CHECK(close(v.dot(a.data(), b.data(), n), s.dot(a.data(), b.data(), n), kLinAtol,
                    kLinRtol));
        CHECK(close(v.sum(a.data(), n), s.sum(a.data(), n), kLinAtol, kLinRtol));

        auto y1 = random_vec(rng, n);
        auto y2 = y1;
        s.axpy(0.37, a.data(), y1.data(), n);
        v.axpy(0.37, a.data(), y2.data(), n);
        for (std::size_t i = 0; i < n; ++i) CHECK(close(y2[i], y1[i], kLinAtol, kLinRtol));

        std::vector<double> o1(n), o2(n);
        s.add(a.data(), b.data(), o1.data(), n);
        v.add(a.data(), b.data(), o2.data(), n);
        for (std::size_t i = 0; i < n; ++i) CHECK(o1[i] == o2[i]);
        s.sub(a.data(), b.data(), o1.data(), n);
        v.sub(a.data(), b.data(), o2.data(), n);
        for (std::size_t i = 0; i < n; ++i) CHECK(o1[i] == o2[i]);
        s.mul(a.data(), b.data(), o1.data(), n);
        v.mul(a.data(), b.data(), o2.data(), n);
        for (std::size_t i = 0; i < n; ++i) CHECK(o1[i] == o2[i]);

        auto sc1 = a;
        auto sc2 = a;
        s.scal(-1.75, sc1.data(), n);
        v.scal(-1.75, sc2.data(), n);
        for (std::size_t i = 0; i < n; ++i) CHECK(sc1[i] == sc2[i]);
    }
}

TEST_CASE("avx2 matrix kernels agree with the scalar reference") {
    if (!have_avx2()) return;
    const auto& s = kern::table_for(Isa::scalar);
    const auto& v = kern::table_for(Isa::avx2);
    RunRng rng(7);

    for (auto [m, n] : std::vector<std::pair<std::size_t, std::size_t>>{
             {1, 1}, {3, 5}, {8, 8}, {13, 7}, {40, 33}, {150, 300}}) {
        auto mat = random_vec(rng, m * n);
        auto x = random_vec(rng, n);
        auto xt = random_vec(rng, m);

        std::vector<double> y1(m), y2(m);
        s.gemv(mat.data(), m, n, x.data(), y1.data());
        v.gemv(mat.data(), m, n, x.data(), y2.data());
        for (std::size_t i = 0; i < m; ++i) CHECK(close(y2[i], y1[i], kLinAtol, kLinRtol));

        std::vector<double> z1(n), z2(n);
        s.gemv_t(mat.data(), m, n, xt.data(), z1.data());
        v.gemv_t(mat.data(), m, n, xt.data(), z2.data());
        for (std::size_t i = 0; i < n; ++i) CHECK(close(z2[i], z1[i], kLinAtol, kLinRtol));

        auto acc1 = random_vec(rng, m);
        auto acc2 = acc1;
        s.gemv_acc(mat.data(), m, n, x.data(), acc1.data());
        v.gemv_acc(mat.data(), m, n, x.data(), acc2.data());
        for (std::size_t i = 0; i < m; ++i)
            CHECK(close(acc2[i], acc1[i], kLinAtol, kLinRtol));

        auto tacc1 = random_vec(rng, n);
        auto tacc2 = tacc1;
        s.gemv_t_acc(mat.data(), m, n, xt.data(), tacc1.data());
        v.gemv_t_acc(mat.data(), m, n, xt.data(), tacc2.data());
        for (std::size_t i = 0; i < n; ++i)
            CHECK(close(tacc2[i], tacc1[i], kLinAtol, kLinRtol));

        auto a1 = random_vec(rng, m * n);
        auto a2 = a1;
        s.ger(0.6, xt.data(), m, x.data(), n, a1.data());
        v.ger(0.6, xt.data(), m, x.data(), n, a2.data());
        for (std::size_t i = 0; i < m * n; ++i)
            CHECK(close(a2[i], a1[i], kLinAtol, kLinRtol));
    }
}

TEST_CASE("avx2 transcendentals agree with libm across the useful range") {
    if (!have_avx2()) return;
    const auto& v = kern::table_for(Isa::avx2);
    RunRng rng(99);

    std::vector<double> xs;
    // dense random coverage plus the edges that matter
    for (int i = 0; i < 4000; ++i) xs.push_back(rng.next_uniform(-30.0, 30.0));
    for (int i = 0; i < 500; ++i) xs.push_back(rng.next_uniform(-700.0, 700.0));
    for (int i = 0; i < 500; ++i) xs.push_back(rng.next_uniform(-1e-6, 1e-6));
    for (double e : {0.0, -0.0, 1.0, -1.0, 708.0, -708.0, 709.0, -708.5, 20.0, -20.0,
                     1e-300, -1e-300})
        xs.push_back(e);

    std::vector<double> got(xs.size());

    v.vexp(xs.data(), got.data(), xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) {
        double x = std::min(std::max(xs[i], -708.0), 709.0);
        CHECK(close(got[i], std::exp(x), 0.0, 1e-13));
    }

    v.vtanh(xs.data(), got.data(), xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) {
        CHECK(close(got[i], std::tanh(xs[i]), kTransAtol, kTransRtol));
    }
    // sign preservation at zero
    {
        double z[2] = {0.0, -0.0};
        double o[2];
        v.vtanh(z, o, 2);
        CHECK(o[0] == 0.0);
        CHECK(std::signbit(o[1]));
    }

    v.vsigmoid(xs.data(), got.data(), xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) {
        double ref = 1.0 / (1.0 + std::exp(-xs[i]));
        CHECK(close(got[i], ref, kTransAtol, kTransRtol));
        CHECK(got[i] >= 0.0);
        CHECK(got[i] <= 1.0);
    }
}

TEST_CASE("scalar transcendental kernels match libm definitions") {
    const auto& s = kern::table_for(Isa::scalar);
    std::vector<double> xs = {-5.0, -1.0, -1e-9, 0.0, 1e-9, 0.5, 3.0, 25.0};
    std::vector<double> got(xs.size());
    s.vtanh(xs.data(), got.data(), xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) CHECK(got[i] == std::tanh(xs[i]));
    s.vsigmoid(xs.data(), got.data(), xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) {
        CHECK(got[i] == doctest::Approx(1.0 / (1.0 + std::exp(-xs[i]))).epsilon(1e-15));
    }
}
