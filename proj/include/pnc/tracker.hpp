#pragma once

// Decision-directed phase-noise re-estimation and PAST subspace tracking of
// the phase-noise process psi. Compensation uses conj(V): if psi lies in
// span(V) then exp(-j*phi) = conj(psi) lies in span(conj(V)).

#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "pnc/basis.hpp"
#include "pnc/compensator.hpp"
#include "pnc/ofdm.hpp"
#include "pnc/phase_noise.hpp"

namespace pnc {

struct TrackerState {
    CompBasis v;  // spans psi, not the correction
    CMat p;       // d x d
    double beta = 0.9;
    double alpha = 0.1;
    std::optional<CMat> r;
    long long symbol_counter = 0;

    // P_0 = I_d; r starts at V0 V0^H when tracked.
    static TrackerState init(CompBasis v0, double beta, double alpha = 0.1, bool track_r = false);
    // The basis handed to the compensator.
    CompBasis compensation_basis() const;
};

PhaseNoiseRealization dd_phase_estimate(const CVec& z, const FreqSymbol& s_hat, const CVec& lambda);
// Multi-branch form: psi_hat(n) = exp(j * arg(sum_b z_b(n) conj(y_b(n)))), y_b = F*(lambda_b .* s_hat).
PhaseNoiseRealization dd_phase_estimate(std::span<const CVec> z, const FreqSymbol& s_hat,
                                        std::span<const CVec> lambda);

void past_update(TrackerState& state, const CVec& psi_hat);

struct TrackerConfig {
    CompConfig comp;
    int training_symbols = 0;  // use the true symbols for decisions while symbol index < this
    int freeze_after = -1;     // stop updating from this symbol index on; < 0 never
};

struct RxSymbol {
    std::vector<CVec> z;  // per branch
    FreqSymbol ref;
};

struct TrackedRun {
    std::vector<CompResult> results;
    TrackerState state;
};

// One tracking step: compensate with the current basis, decide, re-estimate, update.
CompResult track_symbol(TrackerState& state, const RxSymbol& rx, std::span<const CVec> lambda, const Constellation& c,
                        const TrackerConfig& cfg);
TrackedRun run_tracked(std::span<const RxSymbol> stream, std::span<const CVec> lambda, TrackerState state,
                       const Constellation& c, const TrackerConfig& cfg);

void save_tracker_state(const std::filesystem::path& path, const TrackerState& state);
TrackerState load_tracker_state(const std::filesystem::path& path);

}  // namespace pnc
