#include "pnc/compensator.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "pnc/kernels.hpp"
#include "pnc/numerics.hpp"

namespace pnc {

std::string_view to_string(SolveMethod m) { return m == SolveMethod::ls ? "ls" : "tls"; }

SolveMethod solve_method_from_string(std::string_view s) {
    if (s == "ls") return SolveMethod::ls;
    if (s == "tls") return SolveMethod::tls;
    throw std::invalid_argument("unknown method '" + std::string(s) + "'");
}

std::vector<char> usable_tones(const CVec& lambda) {
    const double peak = lambda.size() ? lambda.cwiseAbs().maxCoeff() : 0.0;
    if (!(peak > 0.0)) throw std::invalid_argument("channel response is identically zero");
    std::vector<char> ok(lambda.size());
    for (Eigen::Index k = 0; k < lambda.size(); ++k) ok[k] = std::abs(lambda[k]) >= kToneExclusion * peak;
    return ok;
}

CMat transform_columns(const CVec& z, const CMat& v) {
    if (v.rows() != z.size()) throw std::invalid_argument("basis length differs from symbol length");
    const auto n = static_cast<std::size_t>(z.size());
    CMat g(v.rows(), v.cols());
    for (Eigen::Index j = 0; j < v.cols(); ++j) {
        std::span<cplx> col{g.col(j).data(), n};
        kernels::cmul({z.data(), n}, {v.col(j).data(), n}, col);
        fft_inplace(col);
    }
    return g;
}

CMat build_w(const CVec& z, const CVec& lambda, const CompBasis& basis) {
    const std::vector<char> ok = usable_tones(lambda);
    CMat w = transform_columns(z, basis.v);
    for (Eigen::Index k = 0; k < w.rows(); ++k) {
        if (ok[k]) {
            w.row(k) /= lambda[k];
        } else {
            w.row(k).setZero();
        }
    }
    return w;
}

CVec solve_ls(const CMat& w_rows, const CVec& s_rows, double rcond) {
    if (w_rows.rows() != s_rows.size()) throw std::invalid_argument("solve_ls: row count mismatch");
    if (w_rows.size() == 0) return CVec::Zero(w_rows.cols());
    Eigen::CompleteOrthogonalDecomposition<CMat> cod;
    cod.setThreshold(rcond);
    cod.compute(w_rows);
    return cod.solve(s_rows);
}

TlsSolution solve_tls_detail(const CMat& w_rows, const CVec& s_rows, double rcond) {
    if (w_rows.rows() != s_rows.size()) throw std::invalid_argument("solve_tls: row count mismatch");
    const Eigen::Index m = w_rows.rows();
    const Eigen::Index d = w_rows.cols();
    TlsSolution out;
    if (m < d + 1) {
        out.gamma = solve_ls(w_rows, s_rows, rcond);
        out.fell_back = true;
        return out;
    }
    CMat aug(m, d + 1);
    aug.leftCols(d) = w_rows;
    aug.col(d) = s_rows;
    const SvdResult s = svd(aug);
    const CVec q = s.q.col(d);
    const cplx q22 = q[d];
    if (std::abs(q22) <= 1e-12) {
        out.gamma = solve_ls(w_rows, s_rows, rcond);
        out.fell_back = true;
        return out;
    }
    out.gamma = -q.head(d) / q22;
    const CMat delta = -s.sigma[d] * s.u.col(d) * q.adjoint();
    out.delta_w = delta.leftCols(d);
    out.delta_s = delta.col(d);
    return out;
}

CVec solve_tls(const CMat& w_rows, const CVec& s_rows, double rcond) {
    return solve_tls_detail(w_rows, s_rows, rcond).gamma;
}

CVec solve(SolveMethod method, const CMat& w_rows, const CVec& s_rows, double rcond) {
    return method == SolveMethod::ls ? solve_ls(w_rows, s_rows, rcond) : solve_tls(w_rows, s_rows, rcond);
}

namespace {

void check_branches(std::span<const CVec> z, std::span<const CVec> lambda, const FreqSymbol& ref) {
    if (z.empty() || z.size() != lambda.size()) {
        throw std::invalid_argument("compensate: need one channel response per received branch");
    }
    for (std::size_t b = 0; b < z.size(); ++b) {
        if (z[b].size() != ref.layout->n || lambda[b].size() != ref.layout->n) {
            throw std::invalid_argument("compensate: branch length differs from tone count");
        }
    }
}

// s_hat_k = sum_b conj(lambda_bk) y_bk / sum_b |lambda_bk|^2
FreqSymbol mrc_combine(const std::vector<CVec>& per_branch_freq, std::span<const CVec> lambda,
                       const FreqSymbol& ref) {
    const Eigen::Index n = ref.layout->n;
    CVec num = CVec::Zero(n);
    RVec den = RVec::Zero(n);
    for (std::size_t b = 0; b < per_branch_freq.size(); ++b) {
        num += lambda[b].conjugate().cwiseProduct(per_branch_freq[b]);
        den += lambda[b].cwiseAbs2();
    }
    FreqSymbol out{CVec::Zero(n), ref.layout};
    for (Eigen::Index k = 0; k < n; ++k) {
        if (den[k] > 0.0) out.s[k] = num[k] / den[k];
    }
    return out;
}

}  // namespace

CompResult compensate(std::span<const CVec> z, std::span<const CVec> lambda, const CompBasis& basis,
                      const FreqSymbol& ref, const CompConfig& cfg) {
    check_branches(z, lambda, ref);
    const ToneLayout& layout = *ref.layout;
    const int d = basis.d();

    std::vector<CMat> g(z.size());
    std::vector<int> row_tone;
    std::vector<int> row_branch;
    for (std::size_t b = 0; b < z.size(); ++b) {
        g[b] = transform_columns(z[b], basis.v);
        const std::vector<char> ok = usable_tones(lambda[b]);
        for (int k : layout.pilot_idx) {
            if (ok[k]) {
                row_tone.push_back(k);
                row_branch.push_back(static_cast<int>(b));
            }
        }
        if (cfg.use_null_tones) {
            for (int k : layout.null_idx) {
                if (ok[k]) {
                    row_tone.push_back(k);
                    row_branch.push_back(static_cast<int>(b));
                }
            }
        }
    }

    const auto rows = static_cast<Eigen::Index>(row_tone.size());
    CMat w_rows(rows, d);
    CVec s_rows(rows);
    for (Eigen::Index r = 0; r < rows; ++r) {
        const int k = row_tone[r];
        const int b = row_branch[r];
        w_rows.row(r) = g[b].row(k) / lambda[b][k];
        s_rows[r] = ref.s[k];  // zero on null tones
    }

    CompResult out;
    out.equations = static_cast<int>(rows);
    out.underdetermined = rows < d;
    out.gamma = rows > 0 ? solve(cfg.method, w_rows, s_rows, cfg.rcond) : CVec::Zero(d);
    if (!out.gamma.allFinite()) throw NumericalError("compensate: non-finite coefficients");
    out.correction = basis.v * out.gamma;

    std::vector<CVec> freq(z.size());
    for (std::size_t b = 0; b < z.size(); ++b) freq[b] = g[b] * out.gamma;
    out.s_hat = mrc_combine(freq, lambda, ref);
    out.energy = error_energy(out.s_hat, ref);
    out.evm_db = out.energy.db();
    return out;
}

CompResult equalize_only(std::span<const CVec> z, std::span<const CVec> lambda, const FreqSymbol& ref) {
    check_branches(z, lambda, ref);
    std::vector<CVec> freq;
    for (const CVec& zb : z) freq.push_back(fft(zb));
    CompResult out;
    out.correction = CVec::Ones(ref.layout->n);
    out.s_hat = mrc_combine(freq, lambda, ref);
    out.energy = error_energy(out.s_hat, ref);
    out.evm_db = out.energy.db();
    return out;
}

}  // namespace pnc
