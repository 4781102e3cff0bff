#pragma once

// Compensation bases V^(d): Karhunen-Loeve (eigenvectors of the phase-noise
// covariance), low-frequency DFT columns, or DCT-II columns.

#include <filesystem>
#include <string_view>

#include "pnc/phase_noise.hpp"
#include "pnc/types.hpp"

namespace pnc {

enum class BasisKind { kl, dft, dct, tracked };

std::string_view to_string(BasisKind kind);
BasisKind basis_kind_from_string(std::string_view s);

struct CompBasis {
    CMat v;  // N x d
    BasisKind kind = BasisKind::dft;

    int d() const { return static_cast<int>(v.cols()); }
    int n() const { return static_cast<int>(v.rows()); }
};

CompBasis kl_basis(const PnCovariance& cov, int d);
// Unit-norm DFT columns in order of increasing |frequency|: k = 0, 1, n-1, 2, n-2, ...
CompBasis dft_basis(int n, int d);
// Orthonormal DCT-II columns 0..d-1.
CompBasis dct_basis(int n, int d);
// Frequency index of the j-th column of dft_basis.
int dft_column_frequency(int n, int j);

// Relative residual ||psi - V V^+ psi|| / ||psi|| of projecting psi onto span(V).
double projection_residual(const CMat& v, const CVec& psi);

// N rows, 2d columns: re(v_0), im(v_0), re(v_1), ... with a header row.
void write_basis_csv(const std::filesystem::path& path, const CompBasis& basis);

}  // namespace pnc
