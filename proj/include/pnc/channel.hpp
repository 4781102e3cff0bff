#pragma once

// Quasi-static multipath channels with circulant (cyclic-prefix) action and AWGN.

#include <filesystem>
#include <limits>
#include <vector>

#include "pnc/types.hpp"

namespace pnc {

struct DelayProfile {
    enum class Kind { uniform, exp_decay };
    Kind kind = Kind::uniform;
    double tau = 1.0;  // decay constant in taps, exp_decay only

    static DelayProfile uniform() { return {}; }
    static DelayProfile exp_decay(double tau) { return {Kind::exp_decay, tau}; }
};

// One set of taps and per-tone gains per receive branch.
// lambda[b] = sqrt(N) * fft(taps[b]), so H_b = F* diag(lambda[b]) F.
struct ChannelState {
    std::vector<CVec> taps;
    std::vector<CVec> lambda;

    int n() const { return taps.empty() ? 0 : static_cast<int>(taps.front().size()); }
    int n_rx() const { return static_cast<int>(taps.size()); }
};

struct NoiseSpec {
    double snr_db = std::numeric_limits<double>::infinity();  // +inf disables noise
    uint64_t seed = 0;
};

ChannelState gen_channel(int n, int n_taps, DelayProfile profile, uint64_t seed, int n_rx = 1);
// Builds a channel from explicit taps, zero-padded to n.
ChannelState channel_from_taps(const std::vector<CVec>& taps, int n);
CVec tone_response(const CVec& taps_padded);

// Per-sample noise variance for a branch: mean_k |lambda_k|^2 / 10^(snr/10),
// i.e. relative to E||Hx||^2/N for unit-energy symbols on every tone.
double noise_variance(const CVec& lambda, double snr_db);

// y_b = circ(h_b) x + n_b for every branch, computed as F*(lambda_b .* F x).
std::vector<CVec> apply_channel(const ChannelState& ch, const CVec& x, const NoiseSpec& noise);
// Circular convolution of x with taps h (no noise); used per user in multiuser paths.
CVec circular_apply(const CVec& lambda, const CVec& x);
// Adds complex white Gaussian noise of the given per-sample variance.
void add_awgn(CVec& y, double variance, uint64_t seed);

// One tap per line, "re,im" (or a single real value). Blank lines and lines
// starting with '#' are ignored.
CVec load_taps_csv(const std::filesystem::path& path);

}  // namespace pnc
