#pragma once

// Per-symbol time-domain phase-noise compensation.
//
// For each receive branch b the equation matrix is
//     W_b = Lambda_b^{-1} F_N diag(z_b) V
// and the coefficients gamma solve W_p gamma ~= s_p on the stacked pilot rows
// (optionally plus null-tone rows with target 0) of all branches. The
// correction V gamma approximates exp(-j phi); branch estimates are combined
// with maximum-ratio weights |lambda_b|^2.

#include <span>
#include <vector>

#include "pnc/basis.hpp"
#include "pnc/ofdm.hpp"
#include "pnc/types.hpp"

namespace pnc {

enum class SolveMethod { ls, tls };

std::string_view to_string(SolveMethod m);
SolveMethod solve_method_from_string(std::string_view s);

// Tones with |lambda_k| below this fraction of the branch maximum contribute no equations.
inline constexpr double kToneExclusion = 1e-6;

struct CompConfig {
    SolveMethod method = SolveMethod::ls;
    bool use_null_tones = false;
    double rcond = 1e-12;
};

struct TlsSolution {
    CVec gamma;
    bool fell_back = false;  // q22 == 0 or too few rows: gamma is the LS solution
    CMat delta_w;            // implied minimal perturbation (empty on fallback)
    CVec delta_s;
};

struct CompResult {
    CVec gamma;
    FreqSymbol s_hat;
    CVec correction;  // V gamma
    double evm_db = 0.0;
    ErrorEnergy energy;
    int equations = 0;
    bool underdetermined = false;
};

std::vector<char> usable_tones(const CVec& lambda);

// F_N diag(z) V, one FFT per basis column.
CMat transform_columns(const CVec& z, const CMat& v);
// Lambda^{-1} F_N diag(z) V; rows of excluded tones are zero.
CMat build_w(const CVec& z, const CVec& lambda, const CompBasis& basis);

CVec solve_ls(const CMat& w_rows, const CVec& s_rows, double rcond = 1e-12);
TlsSolution solve_tls_detail(const CMat& w_rows, const CVec& s_rows, double rcond = 1e-12);
CVec solve_tls(const CMat& w_rows, const CVec& s_rows, double rcond = 1e-12);
CVec solve(SolveMethod method, const CMat& w_rows, const CVec& s_rows, double rcond);

CompResult compensate(std::span<const CVec> z, std::span<const CVec> lambda, const CompBasis& basis,
                      const FreqSymbol& ref, const CompConfig& cfg);
// No phase-noise correction: per-branch zero-forcing plus MRC only.
CompResult equalize_only(std::span<const CVec> z, std::span<const CVec> lambda, const FreqSymbol& ref);

}  // namespace pnc
