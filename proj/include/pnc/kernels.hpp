#pragma once

// Data-parallel inner loops. Each kernel has a scalar reference version and,
// on x86-64 hosts with AVX2+FMA, a vectorised version. The active table is
// picked once at first use from CPUID.

#include <cstddef>
#include <span>
#include <string_view>

#include "pnc/types.hpp"

namespace pnc::kernels {

enum class Isa { scalar, avx2 };

struct KernelTable {
    Isa isa;
    // out[i] = a[i] * b[i]
    void (*cmul)(const cplx* a, const cplx* b, cplx* out, std::size_t n);
    // out[i] = a[i] * conj(b[i])
    void (*cmul_conj)(const cplx* a, const cplx* b, cplx* out, std::size_t n);
    // sum conj(a[i]) * b[i]
    cplx (*cdot)(const cplx* a, const cplx* b, std::size_t n);
    // y[i] += alpha * x[i]
    void (*caxpy)(cplx alpha, const cplx* x, cplx* y, std::size_t n);
    // x[i] *= s
    void (*rscale)(double s, cplx* x, std::size_t n);
    // sum |x[i]|^2
    double (*norm2)(const cplx* x, std::size_t n);
    // One radix-2 DIT stage over a length-n buffer: blocks of 2*half, twiddles tw[0..half).
    void (*butterfly_stage)(cplx* data, std::size_t n, std::size_t half, const cplx* tw);
};

const KernelTable& scalar_table();
// nullptr when the host or build lacks AVX2+FMA.
const KernelTable* avx2_table();

const KernelTable& active();
// Test hook: force a table. Returns false if the requested ISA is unavailable.
bool select(Isa isa);
std::string_view isa_name(Isa isa);

// Span conveniences over the active table.
inline void cmul(std::span<const cplx> a, std::span<const cplx> b, std::span<cplx> out) {
    active().cmul(a.data(), b.data(), out.data(), out.size());
}
inline void cmul_conj(std::span<const cplx> a, std::span<const cplx> b, std::span<cplx> out) {
    active().cmul_conj(a.data(), b.data(), out.data(), out.size());
}
inline cplx cdot(std::span<const cplx> a, std::span<const cplx> b) {
    return active().cdot(a.data(), b.data(), a.size());
}
inline void caxpy(cplx alpha, std::span<const cplx> x, std::span<cplx> y) {
    active().caxpy(alpha, x.data(), y.data(), y.size());
}
inline double norm2(std::span<const cplx> x) { return active().norm2(x.data(), x.size()); }

}  // namespace pnc::kernels
