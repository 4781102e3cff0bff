#include <doctest.h>

#include <random>
#include <vector>

#include "oracles.hpp"
#include "pnc/kernels.hpp"
#include "pnc/numerics.hpp"

using namespace pnc;

namespace {

std::vector<cplx> random_samples(std::size_t n, uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g;
    std::vector<cplx> v(n);
    for (auto& x : v) x = {g(rng), g(rng)};
    return v;
}

double max_diff(const std::vector<cplx>& a, const std::vector<cplx>& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

}  // namespace

TEST_CASE("scalar kernels against plain complex arithmetic") {
    const auto* t = &kernels::scalar_table();
    for (std::size_t n : {1u, 3u, 8u, 17u, 64u}) {
        const auto a = random_samples(n, 1);
        const auto b = random_samples(n, 2);
        std::vector<cplx> out(n);
        t->cmul(a.data(), b.data(), out.data(), n);
        for (std::size_t i = 0; i < n; ++i) CHECK(std::abs(out[i] - a[i] * b[i]) < 1e-14);
        t->cmul_conj(a.data(), b.data(), out.data(), n);
        for (std::size_t i = 0; i < n; ++i) CHECK(std::abs(out[i] - a[i] * std::conj(b[i])) < 1e-14);
        cplx dot{};
        double nrm = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            dot += std::conj(a[i]) * b[i];
            nrm += std::norm(a[i]);
        }
        CHECK(std::abs(t->cdot(a.data(), b.data(), n) - dot) < 1e-12);
        CHECK(std::abs(t->norm2(a.data(), n) - nrm) < 1e-12);
    }
}

TEST_CASE("avx2 kernels match scalar reference") {
    const auto* s = &kernels::scalar_table();
    const auto* v = kernels::avx2_table();
    if (v == nullptr) {
        MESSAGE("AVX2 not available on this CPU; equivalence test skipped");
        return;
    }
    for (std::size_t n : {1u, 2u, 3u, 5u, 8u, 31u, 64u, 257u}) {
        const auto a = random_samples(n, 10 + n);
        const auto b = random_samples(n, 20 + n);
        std::vector<cplx> o1(n), o2(n);
        s->cmul(a.data(), b.data(), o1.data(), n);
        v->cmul(a.data(), b.data(), o2.data(), n);
        CHECK(max_diff(o1, o2) < 1e-13);
        s->cmul_conj(a.data(), b.data(), o1.data(), n);
        v->cmul_conj(a.data(), b.data(), o2.data(), n);
        CHECK(max_diff(o1, o2) < 1e-13);
        CHECK(std::abs(s->cdot(a.data(), b.data(), n) - v->cdot(a.data(), b.data(), n)) < 1e-11);
        CHECK(std::abs(s->norm2(a.data(), n) - v->norm2(a.data(), n)) < 1e-11);
        auto y1 = b, y2 = b;
        s->caxpy(cplx{0.3, -1.2}, a.data(), y1.data(), n);
        v->caxpy(cplx{0.3, -1.2}, a.data(), y2.data(), n);
        CHECK(max_diff(y1, y2) < 1e-13);
        y1 = a;
        y2 = a;
        s->rscale(0.25, y1.data(), n);
        v->rscale(0.25, y2.data(), n);
        CHECK(max_diff(y1, y2) == 0.0);
    }
}

TEST_CASE("fft is identical in value under either kernel set") {
    if (kernels::avx2_table() == nullptr) return;
    std::mt19937_64 rng(5);
    for (Eigen::Index n : {1, 2, 4, 8, 64, 256}) {
        const CVec x = oracle::random_cvec(n, rng);
        kernels::select(kernels::Isa::scalar);
        const CVec a = fft(x);
        kernels::select(kernels::Isa::avx2);
        const CVec b = fft(x);
        CHECK((a - b).norm() <= 1e-12 * (1.0 + x.norm()));
    }
}

TEST_CASE("butterfly stage: avx2 matches scalar for every stage width") {
    const auto* v = kernels::avx2_table();
    if (v == nullptr) return;
    const auto& s = kernels::scalar_table();
    const std::size_t n = 64;
    for (std::size_t half = 1; half < n; half *= 2) {
        const auto tw = random_samples(half, 100 + half);
        auto a = random_samples(n, 200 + half);
        auto b = a;
        s.butterfly_stage(a.data(), n, half, tw.data());
        v->butterfly_stage(b.data(), n, half, tw.data());
        CHECK(max_diff(a, b) < 1e-13);
    }
}
