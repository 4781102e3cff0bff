// Compiled with -mavx2 -mfma on x86-64. Two complex doubles per __m256d,
// laid out [re0, im0, re1, im1]; tails fall back to scalar.

#include "pnc/kernels.hpp"

#if defined(__x86_64__) && defined(__AVX2__) && defined(__FMA__)
#include <immintrin.h>

namespace pnc::kernels {
namespace {

inline cplx mul(cplx a, cplx b) {
    return {a.real() * b.real() - a.imag() * b.imag(), a.real() * b.imag() + a.imag() * b.real()};
}

inline __m256d load(const cplx* p) { return _mm256_loadu_pd(reinterpret_cast<const double*>(p)); }
inline void store(cplx* p, __m256d v) { _mm256_storeu_pd(reinterpret_cast<double*>(p), v); }

// a * b for two packed complex pairs.
inline __m256d mul2(__m256d a, __m256d b) {
    const __m256d b_re = _mm256_movedup_pd(b);
    const __m256d b_im = _mm256_permute_pd(b, 0xF);
    const __m256d a_sw = _mm256_permute_pd(a, 0x5);
    return _mm256_fmaddsub_pd(a, b_re, _mm256_mul_pd(a_sw, b_im));
}

inline __m256d conj2(__m256d v) {
    const __m256d sign = _mm256_setr_pd(0.0, -0.0, 0.0, -0.0);
    return _mm256_xor_pd(v, sign);
}

void cmul(const cplx* a, const cplx* b, cplx* out, std::size_t n) {
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) store(out + i, mul2(load(a + i), load(b + i)));
    for (; i < n; ++i) out[i] = mul(a[i], b[i]);
}

void cmul_conj(const cplx* a, const cplx* b, cplx* out, std::size_t n) {
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) store(out + i, mul2(load(a + i), conj2(load(b + i))));
    for (; i < n; ++i) out[i] = mul(a[i], std::conj(b[i]));
}

cplx cdot(const cplx* a, const cplx* b, std::size_t n) {
    // conj(a)*b: re = ar*br + ai*bi, im = ar*bi - ai*br
    __m256d acc_rr = _mm256_setzero_pd();  // [ar*br, ai*bi, ...]
    __m256d acc_ri = _mm256_setzero_pd();  // [ar*bi, ai*br, ...]
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) {
        const __m256d va = load(a + i);
        const __m256d vb = load(b + i);
        acc_rr = _mm256_fmadd_pd(va, vb, acc_rr);
        acc_ri = _mm256_fmadd_pd(va, _mm256_permute_pd(vb, 0x5), acc_ri);
    }
    alignas(32) double rr[4];
    alignas(32) double ri[4];
    _mm256_store_pd(rr, acc_rr);
    _mm256_store_pd(ri, acc_ri);
    double re = rr[0] + rr[1] + rr[2] + rr[3];
    double im = (ri[0] - ri[1]) + (ri[2] - ri[3]);
    for (; i < n; ++i) {
        re += a[i].real() * b[i].real() + a[i].imag() * b[i].imag();
        im += a[i].real() * b[i].imag() - a[i].imag() * b[i].real();
    }
    return {re, im};
}

void caxpy(cplx alpha, const cplx* x, cplx* y, std::size_t n) {
    const __m256d va = _mm256_setr_pd(alpha.real(), alpha.imag(), alpha.real(), alpha.imag());
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) store(y + i, _mm256_add_pd(load(y + i), mul2(load(x + i), va)));
    for (; i < n; ++i) y[i] += mul(alpha, x[i]);
}

void rscale(double s, cplx* x, std::size_t n) {
    const __m256d vs = _mm256_set1_pd(s);
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) store(x + i, _mm256_mul_pd(load(x + i), vs));
    for (; i < n; ++i) x[i] *= s;
}

double norm2(const cplx* x, std::size_t n) {
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) {
        const __m256d v = load(x + i);
        acc = _mm256_fmadd_pd(v, v, acc);
    }
    alignas(32) double t[4];
    _mm256_store_pd(t, acc);
    double s = (t[0] + t[1]) + (t[2] + t[3]);
    for (; i < n; ++i) s += x[i].real() * x[i].real() + x[i].imag() * x[i].imag();
    return s;
}

void butterfly_stage(cplx* data, std::size_t n, std::size_t half, const cplx* tw) {
    if (half < 2) {
        for (std::size_t base = 0; base < n; base += 2) {
            const cplx t = mul(tw[0], data[base + 1]);
            data[base + 1] = data[base] - t;
            data[base] += t;
        }
        return;
    }
    for (std::size_t base = 0; base < n; base += 2 * half) {
        cplx* lo = data + base;
        cplx* hi = lo + half;
        for (std::size_t j = 0; j < half; j += 2) {
            const __m256d t = mul2(load(tw + j), load(hi + j));
            const __m256d l = load(lo + j);
            store(hi + j, _mm256_sub_pd(l, t));
            store(lo + j, _mm256_add_pd(l, t));
        }
    }
}

}  // namespace

const KernelTable* avx2_table() {
    static const KernelTable table{Isa::avx2, cmul, cmul_conj, cdot, caxpy, rscale, norm2, butterfly_stage};
    if (!__builtin_cpu_supports("avx2") || !__builtin_cpu_supports("fma")) return nullptr;
    return &table;
}

}  // namespace pnc::kernels

#else

namespace pnc::kernels {
const KernelTable* avx2_table() { return nullptr; }
}  // namespace pnc::kernels

#endif
