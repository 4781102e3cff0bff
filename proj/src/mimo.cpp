#include "pnc/mimo.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "pnc/numerics.hpp"

namespace pnc {

MuSystem MuSystem::from_channels(const std::vector<ChannelState>& per_user, double tx_pn_sigma_deg) {
    if (per_user.empty()) throw std::invalid_argument("MuSystem: no users");
    MuSystem sys;
    sys.n_users = static_cast<int>(per_user.size());
    sys.n_rx = per_user.front().n_rx();
    sys.tx_pn_sigma_deg = tx_pn_sigma_deg;
    if (sys.n_rx < sys.n_users) {
        throw std::invalid_argument("MuSystem: need at least as many receive antennas as users");
    }
    for (const ChannelState& ch : per_user) {
        if (ch.n_rx() != sys.n_rx || ch.n() != per_user.front().n()) {
            throw std::invalid_argument("MuSystem: users disagree on antenna count or tone count");
        }
        sys.lambda.push_back(ch.lambda);
    }
    return sys;
}

CMat MuSystem::tone_matrix(int k) const {
    CMat h(n_rx, n_users);
    for (int u = 0; u < n_users; ++u) {
        for (int r = 0; r < n_rx; ++r) h(r, u) = lambda[u][r][k];
    }
    return h;
}

ZfBeamformer zf_beamformer(const MuSystem& sys) {
    const int n = sys.n();
    ZfBeamformer zf;
    zf.b.resize(n);
    zf.full_rank.assign(n, 0);
    double peak = 0.0;
    std::vector<RVec> sv(n);
    for (int k = 0; k < n; ++k) {
        sv[k] = svd(sys.tone_matrix(k)).sigma;
        peak = std::max(peak, sv[k][0]);
    }
    int usable = 0;
    for (int k = 0; k < n; ++k) {
        const CMat h = sys.tone_matrix(k);
        zf.full_rank[k] = peak > 0.0 && sv[k][sv[k].size() - 1] >= kToneExclusion * peak;
        if (zf.full_rank[k]) {
            zf.b[k] = pinv(h);
            ++usable;
        } else {
            zf.b[k] = CMat::Zero(sys.n_users, sys.n_rx);
        }
    }
    if (usable == 0) throw NumericalError("zf_beamformer: every tone is rank-deficient");
    return zf;
}

std::vector<CVec> mu_receive(const MuSystem& sys, std::span<const CVec> x, std::span<const CVec> tx_psi,
                             const CVec& rx_psi, const NoiseSpec& noise) {
    if (static_cast<int>(x.size()) != sys.n_users) throw std::invalid_argument("mu_receive: one signal per user");
    if (!tx_psi.empty() && tx_psi.size() != x.size()) throw std::invalid_argument("mu_receive: tx phase per user");
    const int n = sys.n();
    std::vector<CVec> xf(sys.n_users);
    for (int u = 0; u < sys.n_users; ++u) {
        xf[u] = fft(tx_psi.empty() ? x[u] : CVec(x[u].cwiseProduct(tx_psi[u])));
    }
    std::vector<CVec> z(sys.n_rx);
    for (int r = 0; r < sys.n_rx; ++r) {
        CVec yf = CVec::Zero(n);
        double ref_power = 0.0;
        for (int u = 0; u < sys.n_users; ++u) {
            yf += sys.lambda[u][r].cwiseProduct(xf[u]);
            ref_power += sys.lambda[u][r].squaredNorm() / n;
        }
        CVec y = ifft(yf);
        if (std::isfinite(noise.snr_db)) {
            add_awgn(y, ref_power / std::pow(10.0, noise.snr_db / 10.0), hash64(noise.seed, r));
        }
        z[r] = rx_psi.size() ? CVec(y.cwiseProduct(rx_psi)) : y;
    }
    return z;
}

std::vector<CMat> mu_build_w(const ZfBeamformer& zf, std::span<const CVec> z, const CompBasis& basis) {
    if (zf.b.empty() || static_cast<Eigen::Index>(z.size()) != zf.b.front().cols()) {
        throw std::invalid_argument("mu_build_w: one received signal per antenna");
    }
    const Eigen::Index n_users = zf.b.front().rows();
    const int n = zf.n();
    std::vector<CMat> g;
    for (const CVec& zr : z) g.push_back(transform_columns(zr, basis.v));
    std::vector<CMat> w(n_users, CMat::Zero(n, basis.d()));
    for (Eigen::Index u = 0; u < n_users; ++u) {
        for (std::size_t r = 0; r < z.size(); ++r) {
            for (int k = 0; k < n; ++k) w[u].row(k) += zf.b[k](u, r) * g[r].row(k);
        }
    }
    return w;
}

namespace {

void check_refs(const ZfBeamformer& zf, std::span<const FreqSymbol> refs) {
    if (static_cast<Eigen::Index>(refs.size()) != zf.b.front().rows()) {
        throw std::invalid_argument("mu_compensate: one reference symbol per user");
    }
    for (const FreqSymbol& r : refs) {
        if (r.layout->n != zf.n()) throw std::invalid_argument("mu_compensate: tone count mismatch");
    }
}

}  // namespace

std::vector<CompResult> mu_compensate(const ZfBeamformer& zf, std::span<const CVec> z, const CompBasis& basis,
                                      std::span<const FreqSymbol> refs, const CompConfig& cfg) {
    check_refs(zf, refs);
    const std::vector<CMat> w = mu_build_w(zf, z, basis);
    const int d = basis.d();

    std::vector<std::pair<int, int>> rows;  // (user, tone)
    for (std::size_t u = 0; u < refs.size(); ++u) {
        const ToneLayout& layout = *refs[u].layout;
        for (int k : layout.pilot_idx) {
            if (zf.full_rank[k]) rows.emplace_back(static_cast<int>(u), k);
        }
        if (cfg.use_null_tones) {
            for (int k : layout.null_idx) {
                if (zf.full_rank[k]) rows.emplace_back(static_cast<int>(u), k);
            }
        }
    }
    const auto m = static_cast<Eigen::Index>(rows.size());
    CMat w_rows(m, d);
    CVec s_rows(m);
    for (Eigen::Index i = 0; i < m; ++i) {
        const auto [u, k] = rows[i];
        w_rows.row(i) = w[u].row(k);
        s_rows[i] = refs[u].s[k];
    }
    const CVec gamma = m > 0 ? solve(cfg.method, w_rows, s_rows, cfg.rcond) : CVec::Zero(d);
    if (!gamma.allFinite()) throw NumericalError("mu_compensate: non-finite coefficients");

    std::vector<CompResult> out(refs.size());
    for (std::size_t u = 0; u < refs.size(); ++u) {
        CompResult& res = out[u];
        res.gamma = gamma;
        res.correction = basis.v * gamma;
        res.equations = static_cast<int>(m);
        res.underdetermined = m < d;
        res.s_hat = FreqSymbol{w[u] * gamma, refs[u].layout};
        res.energy = error_energy(res.s_hat, refs[u]);
        res.evm_db = res.energy.db();
    }
    return out;
}

std::vector<CompResult> mu_equalize_only(const ZfBeamformer& zf, std::span<const CVec> z,
                                         std::span<const FreqSymbol> refs) {
    check_refs(zf, refs);
    const int n = zf.n();
    std::vector<CVec> zf_in;
    for (const CVec& zr : z) zf_in.push_back(fft(zr));
    std::vector<CompResult> out(refs.size());
    for (std::size_t u = 0; u < refs.size(); ++u) {
        CVec s = CVec::Zero(n);
        for (int k = 0; k < n; ++k) {
            for (std::size_t r = 0; r < z.size(); ++r) s[k] += zf.b[k](u, r) * zf_in[r][k];
        }
        CompResult& res = out[u];
        res.correction = CVec::Ones(n);
        res.s_hat = FreqSymbol{std::move(s), refs[u].layout};
        res.energy = error_energy(res.s_hat, refs[u]);
        res.evm_db = res.energy.db();
    }
    return out;
}

}  // namespace pnc
