#pragma once

// Complex linear-algebra kernel shared by every other module.
//
// Conventions:
//  * fft/ifft are unitary: fft(x) = F_N x with F_N[k][n] = exp(-2*pi*i*k*n/N)/sqrt(N).
//  * Eigen- and singular values are returned in descending order, ties kept in
//    the order the underlying solver produced them.
//  * Every eigenvector / singular vector is rotated so that its
//    largest-magnitude entry (first one, on near-ties) is real and positive.

#include <span>

#include "pnc/types.hpp"

namespace pnc {

struct EigResult {
    RVec values;   // non-increasing
    CMat vectors;  // column i pairs with values[i]
};

struct SvdResult {
    CMat u;     // m x min(m,n)
    RVec sigma; // min(m,n), non-increasing
    CMat q;     // n x n, right singular vectors as columns
};

bool is_power_of_two(Eigen::Index n);

CVec fft(const CVec& x);
CVec ifft(const CVec& x);
// In-place variants over raw storage; length must be a power of two.
void fft_inplace(std::span<cplx> x);
void ifft_inplace(std::span<cplx> x);

// Dense unitary DFT matrix, F_N.
CMat dft_matrix(Eigen::Index n);

EigResult herm_eig(const CMat& a);
SvdResult svd(const CMat& a);
CMat pinv(const CMat& a, double rcond = 1e-12);

// Rotates v so that its largest-magnitude entry is real-positive; returns the
// unit-modulus factor that was applied.
cplx normalize_phase(Eigen::Ref<CVec> v);

}  // namespace pnc
