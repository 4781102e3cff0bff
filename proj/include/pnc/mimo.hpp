#pragma once

// Multiuser uplink: N_u single-antenna users, N_r receive antennas sharing one
// LO. Per-tone zero-forcing separates the users; the receiver phase noise is
// estimated jointly from every user's pilots.

#include <span>
#include <vector>

#include "pnc/basis.hpp"
#include "pnc/channel.hpp"
#include "pnc/compensator.hpp"
#include "pnc/ofdm.hpp"
#include "pnc/phase_noise.hpp"

namespace pnc {

struct MuSystem {
    int n_users = 0;
    int n_rx = 0;
    std::vector<std::vector<CVec>> lambda;  // [user][rx], per-tone gains
    double tx_pn_sigma_deg = 0.0;

    // One ChannelState per user, each with n_rx branches.
    static MuSystem from_channels(const std::vector<ChannelState>& per_user, double tx_pn_sigma_deg = 0.0);
    int n() const { return lambda.empty() ? 0 : static_cast<int>(lambda.front().front().size()); }
    // N_r x N_u channel matrix of tone k.
    CMat tone_matrix(int k) const;
};

struct ZfBeamformer {
    std::vector<CMat> b;          // per tone, N_u x N_r
    std::vector<char> full_rank;  // per tone

    int n() const { return static_cast<int>(b.size()); }
};

ZfBeamformer zf_beamformer(const MuSystem& sys);

// z_r = psi_rx .* (sum_u H_{u,r} (psi_tx_u .* x_u) + n_r). Empty tx_psi means none.
std::vector<CVec> mu_receive(const MuSystem& sys, std::span<const CVec> x, std::span<const CVec> tx_psi,
                             const CVec& rx_psi, const NoiseSpec& noise);

// Per-user equation matrices W_u = sum_r diag(B[u,r]) F_N diag(z_r) V.
std::vector<CMat> mu_build_w(const ZfBeamformer& zf, std::span<const CVec> z, const CompBasis& basis);

std::vector<CompResult> mu_compensate(const ZfBeamformer& zf, std::span<const CVec> z, const CompBasis& basis,
                                      std::span<const FreqSymbol> refs, const CompConfig& cfg);
// ZF separation only, no phase-noise correction.
std::vector<CompResult> mu_equalize_only(const ZfBeamformer& zf, std::span<const CVec> z,
                                         std::span<const FreqSymbol> refs);

}  // namespace pnc
