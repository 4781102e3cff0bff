#include "pnc/kernels.hpp"

namespace pnc::kernels {
namespace {

// Written out by hand: std::complex operator* routes through the C99 Annex G
// NaN-recovery path, which is slow and not what the vector variants compute.
inline cplx mul(cplx a, cplx b) {
    return {a.real() * b.real() - a.imag() * b.imag(), a.real() * b.imag() + a.imag() * b.real()};
}

void cmul(const cplx* a, const cplx* b, cplx* out, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out[i] = mul(a[i], b[i]);
}

void cmul_conj(const cplx* a, const cplx* b, cplx* out, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out[i] = mul(a[i], std::conj(b[i]));
}

cplx cdot(const cplx* a, const cplx* b, std::size_t n) {
    double re = 0.0, im = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        re += a[i].real() * b[i].real() + a[i].imag() * b[i].imag();
        im += a[i].real() * b[i].imag() - a[i].imag() * b[i].real();
    }
    return {re, im};
}

void caxpy(cplx alpha, const cplx* x, cplx* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] += mul(alpha, x[i]);
}

void rscale(double s, cplx* x, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) x[i] *= s;
}

double norm2(const cplx* x, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += x[i].real() * x[i].real() + x[i].imag() * x[i].imag();
    return acc;
}

void butterfly_stage(cplx* data, std::size_t n, std::size_t half, const cplx* tw) {
    for (std::size_t base = 0; base < n; base += 2 * half) {
        cplx* lo = data + base;
        cplx* hi = lo + half;
        for (std::size_t j = 0; j < half; ++j) {
            const cplx t = mul(tw[j], hi[j]);
            hi[j] = lo[j] - t;
            lo[j] += t;
        }
    }
}

}  // namespace

const KernelTable& scalar_table() {
    static const KernelTable table{Isa::scalar, cmul, cmul_conj, cdot, caxpy, rscale, norm2, butterfly_stage};
    return table;
}

}  // namespace pnc::kernels
