#include "pnc/basis.hpp"

#include <cmath>
#include <cstdio>
#include <numbers>
#include <stdexcept>
#include <string>

#include "pnc/numerics.hpp"

namespace pnc {
namespace {

void check_d(int n, int d) {
    if (d < 1 || d > n) {
        throw std::invalid_argument("basis: d must lie in [1, " + std::to_string(n) + "], got " + std::to_string(d));
    }
}

}  // namespace

std::string_view to_string(BasisKind kind) {
    switch (kind) {
        case BasisKind::kl: return "kl";
        case BasisKind::dft: return "dft";
        case BasisKind::dct: return "dct";
        case BasisKind::tracked: return "tracked";
    }
    return "?";
}

BasisKind basis_kind_from_string(std::string_view s) {
    if (s == "kl") return BasisKind::kl;
    if (s == "dft") return BasisKind::dft;
    if (s == "dct") return BasisKind::dct;
    if (s == "tracked") return BasisKind::tracked;
    throw std::invalid_argument("unknown basis kind '" + std::string(s) + "'");
}

CompBasis kl_basis(const PnCovariance& cov, int d) {
    const int n = static_cast<int>(cov.r.rows());
    check_d(n, d);
    const EigResult eig = herm_eig(cov.r);
    return {eig.vectors.leftCols(d), BasisKind::kl};
}

int dft_column_frequency(int n, int j) {
    if (j == 0) return 0;
    const int k = (j + 1) / 2;
    return j % 2 == 1 ? k : n - k;
}

CompBasis dft_basis(int n, int d) {
    check_d(n, d);
    CMat v(n, d);
    const double scale = 1.0 / std::sqrt(static_cast<double>(n));
    for (int j = 0; j < d; ++j) {
        const long long k = dft_column_frequency(n, j);
        for (int m = 0; m < n; ++m) {
            const double ang = -2.0 * std::numbers::pi * static_cast<double>((k * m) % n) / n;
            v(m, j) = std::polar(scale, ang);
        }
    }
    return {std::move(v), BasisKind::dft};
}

CompBasis dct_basis(int n, int d) {
    check_d(n, d);
    CMat v(n, d);
    for (int k = 0; k < d; ++k) {
        const double alpha = std::sqrt((k == 0 ? 1.0 : 2.0) / n);
        for (int m = 0; m < n; ++m) {
            v(m, k) = alpha * std::cos(std::numbers::pi * (2.0 * m + 1.0) * k / (2.0 * n));
        }
    }
    return {std::move(v), BasisKind::dct};
}

double projection_residual(const CMat& v, const CVec& psi) {
    const CVec coeffs = pinv(v) * psi;
    return (psi - v * coeffs).norm() / psi.norm();
}

void write_basis_csv(const std::filesystem::path& path, const CompBasis& basis) {
    std::FILE* f = std::fopen(path.string().c_str(), "w");
    if (f == nullptr) throw ConfigError("cannot write basis file " + path.string());
    for (int j = 0; j < basis.d(); ++j) std::fprintf(f, "%sre%d,im%d", j ? "," : "", j, j);
    std::fprintf(f, "\n");
    for (int m = 0; m < basis.n(); ++m) {
        for (int j = 0; j < basis.d(); ++j) {
            std::fprintf(f, "%s%.17g,%.17g", j ? "," : "", basis.v(m, j).real(), basis.v(m, j).imag());
        }
        std::fprintf(f, "\n");
    }
    std::fclose(f);
}

}  // namespace pnc
