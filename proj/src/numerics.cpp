#include "pnc/numerics.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <memory>
#include <numbers>
#include <numeric>
#include <vector>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include "pnc/kernels.hpp"

namespace pnc {
namespace {

struct FftPlan {
    std::size_t n = 0;
    std::vector<std::uint32_t> bitrev;
    // Stage s (half = 2^s) owns tw[half-1 .. 2*half-1).
    std::vector<cplx> forward_tw;
    std::vector<cplx> inverse_tw;
};

std::shared_ptr<const FftPlan> make_plan(std::size_t n) {
    auto plan = std::make_shared<FftPlan>();
    plan->n = n;
    const int bits = std::countr_zero(n);
    plan->bitrev.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        std::uint32_t r = 0;
        for (int b = 0; b < bits; ++b) r |= ((i >> b) & 1u) << (bits - 1 - b);
        plan->bitrev[i] = r;
    }
    plan->forward_tw.resize(n > 1 ? n - 1 : 0);
    plan->inverse_tw.resize(plan->forward_tw.size());
    for (std::size_t half = 1; half < n; half *= 2) {
        for (std::size_t j = 0; j < half; ++j) {
            const double ang = -std::numbers::pi * static_cast<double>(j) / static_cast<double>(half);
            plan->forward_tw[half - 1 + j] = std::polar(1.0, ang);
            plan->inverse_tw[half - 1 + j] = std::polar(1.0, -ang);
        }
    }
    return plan;
}

const FftPlan& plan_for(std::size_t n) {
    thread_local std::vector<std::shared_ptr<const FftPlan>> cache(64);
    auto& slot = cache[std::countr_zero(n)];
    if (!slot) slot = make_plan(n);
    return *slot;
}

void transform(std::span<cplx> x, bool inverse) {
    const std::size_t n = x.size();
    if (n == 0 || !std::has_single_bit(n)) {
        throw std::invalid_argument("fft: length must be a power of two, got " + std::to_string(n));
    }
    const FftPlan& plan = plan_for(n);
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t r = plan.bitrev[i];
        if (r > i) std::swap(x[i], x[r]);
    }
    const auto& k = kernels::active();
    const cplx* tw = inverse ? plan.inverse_tw.data() : plan.forward_tw.data();
    for (std::size_t half = 1; half < n; half *= 2) k.butterfly_stage(x.data(), n, half, tw + half - 1);
    k.rscale(1.0 / std::sqrt(static_cast<double>(n)), x.data(), n);
}

void check_finite(const CMat& a, const char* what) {
    if (!a.allFinite()) throw NumericalError(std::string(what) + ": non-finite input");
}

}  // namespace

bool is_power_of_two(Eigen::Index n) { return n > 0 && std::has_single_bit(static_cast<std::size_t>(n)); }

void fft_inplace(std::span<cplx> x) { transform(x, false); }
void ifft_inplace(std::span<cplx> x) { transform(x, true); }

CVec fft(const CVec& x) {
    CVec y = x;
    fft_inplace({y.data(), static_cast<std::size_t>(y.size())});
    return y;
}

CVec ifft(const CVec& x) {
    CVec y = x;
    ifft_inplace({y.data(), static_cast<std::size_t>(y.size())});
    return y;
}

CMat dft_matrix(Eigen::Index n) {
    CMat f(n, n);
    const double scale = 1.0 / std::sqrt(static_cast<double>(n));
    for (Eigen::Index k = 0; k < n; ++k) {
        for (Eigen::Index m = 0; m < n; ++m) {
            // reduce k*m mod n first so large products keep full precision
            const auto km = static_cast<double>((k * m) % n);
            f(k, m) = std::polar(scale, -2.0 * std::numbers::pi * km / static_cast<double>(n));
        }
    }
    return f;
}

cplx normalize_phase(Eigen::Ref<CVec> v) {
    if (v.size() == 0) return {1.0, 0.0};
    const double peak = v.cwiseAbs().maxCoeff();
    if (peak == 0.0) return {1.0, 0.0};
    Eigen::Index pick = 0;
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        if (std::abs(v[i]) >= peak * (1.0 - 1e-9)) {
            pick = i;
            break;
        }
    }
    const cplx rot = std::conj(v[pick]) / std::abs(v[pick]);
    v *= rot;
    v[pick] = std::abs(v[pick]);
    return rot;
}

EigResult herm_eig(const CMat& a) {
    if (a.rows() != a.cols()) throw std::invalid_argument("herm_eig: matrix must be square");
    check_finite(a, "herm_eig");
    const CMat sym = 0.5 * (a + a.adjoint());
    Eigen::SelfAdjointEigenSolver<CMat> solver(sym);
    if (solver.info() != Eigen::Success) throw NumericalError("herm_eig: eigensolver did not converge");

    // Eigen returns ascending values; reorder descending, stable w.r.t. solver order on ties.
    const Eigen::Index n = a.rows();
    std::vector<Eigen::Index> order(n);
    std::iota(order.begin(), order.end(), 0);
    const RVec& ev = solver.eigenvalues();
    std::stable_sort(order.begin(), order.end(), [&](Eigen::Index i, Eigen::Index j) { return ev[i] > ev[j]; });

    EigResult out{RVec(n), CMat(n, n)};
    for (Eigen::Index i = 0; i < n; ++i) {
        out.values[i] = ev[order[i]];
        out.vectors.col(i) = solver.eigenvectors().col(order[i]).normalized();
        normalize_phase(out.vectors.col(i));
    }
    return out;
}

SvdResult svd(const CMat& a) {
    check_finite(a, "svd");
    Eigen::JacobiSVD<CMat> solver(a, Eigen::ComputeThinU | Eigen::ComputeFullV);
    SvdResult out{solver.matrixU(), solver.singularValues(), solver.matrixV()};
    const Eigen::Index k = out.sigma.size();
    // Same rotation on q_i and u_i keeps U diag(sigma) Q^* unchanged.
    for (Eigen::Index i = 0; i < out.q.cols(); ++i) {
        const cplx rot = normalize_phase(out.q.col(i));
        if (i < k) out.u.col(i) *= rot;
    }
    return out;
}

CMat pinv(const CMat& a, double rcond) {
    if (a.size() == 0) return CMat::Zero(a.cols(), a.rows());
    const SvdResult s = svd(a);
    const Eigen::Index k = s.sigma.size();
    const double cutoff = k > 0 ? rcond * s.sigma[0] : 0.0;
    CMat out = CMat::Zero(a.cols(), a.rows());
    for (Eigen::Index i = 0; i < k; ++i) {
        if (s.sigma[i] <= cutoff || s.sigma[i] == 0.0) continue;
        out.noalias() += (s.q.col(i) / s.sigma[i]) * s.u.col(i).adjoint();
    }
    return out;
}

}  // namespace pnc
