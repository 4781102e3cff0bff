#pragma once

// Locked-oscillator phase noise: psi(t) = exp(j*phi(t)) with phi an IIR-filtered
// white Gaussian sequence, its sample covariance, residual carrier offset, and
// ingestion of externally recorded phase samples.

#include <filesystem>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include "pnc/types.hpp"

namespace pnc {

// Rational transfer function b(z)/a(z) with a[0] == 1.
struct IirFilter {
    std::vector<double> b;
    std::vector<double> a;

    // Chebyshev type I lowpass via the bilinear transform; cutoff is the
    // passband edge as a fraction of the sample rate, in (0, 0.5).
    static IirFilter chebyshev1_lowpass(int order, double ripple_db, double cutoff);

    std::vector<cplx> poles() const;
    bool stable() const;
    // sqrt(sum h[k]^2) of the impulse response: output std for unit-variance white input.
    double noise_gain() const;
};

struct PnModel {
    int order = 2;
    double ripple_db = 1.0;
    double cutoff = 0.006;  // fraction of the sample rate
    double sigma_deg = 3.0;
    uint64_t seed = 0;

    IirFilter filter() const { return IirFilter::chebyshev1_lowpass(order, ripple_db, cutoff); }
};

struct PhaseNoiseRealization {
    CVec psi;  // unit modulus
    RVec phi;  // radians, psi = exp(j*phi)

    static PhaseNoiseRealization from_phase(RVec phi);
    // Projects each sample onto the unit circle; phi = arg(psi).
    static PhaseNoiseRealization from_samples(const CVec& samples);
    Eigen::Index size() const { return psi.size(); }
};

struct PnCovariance {
    CMat r;
    int n_samples_used = 0;
};

struct CarrierOffset {
    double ppm = 0.0;
    double carrier_hz = 5e9;
    double sample_rate_hz = 20e6;

    double delta_f() const { return ppm * 1e-6 * carrier_hz; }
    // Residual-carrier phasor c_m = exp(j*2*pi*delta_f*m/fs) for m = start..start+n-1.
    CVec phasor(Eigen::Index n, long long start_sample) const;
};

// Stateful generator: the filter state runs across consecutive calls so the
// process is continuous over symbol boundaries. Not thread-safe; use one
// instance per worker.
class PnGenerator {
public:
    explicit PnGenerator(const PnModel& model);

    PhaseNoiseRealization next(Eigen::Index n);
    const PnModel& model() const { return model_; }

private:
    double step();

    PnModel model_;
    IirFilter filter_;
    std::vector<double> state_;
    std::mt19937_64 rng_;
    std::normal_distribution<double> white_{0.0, 1.0};
    double scale_ = 0.0;
};

PhaseNoiseRealization gen_pn(const PnModel& model, Eigen::Index n);
PnCovariance estimate_cov(std::span<const PhaseNoiseRealization> realizations);
PhaseNoiseRealization apply_offset(const PhaseNoiseRealization& psi, const CarrierOffset& off, long long start_sample);

// Text format, one sample per line: a bare number is a phase in radians, a
// "re,im" pair is a complex sample projected to the unit circle. Blank lines
// and '#' comments are skipped. Returns floor(L/n) consecutive windows.
std::vector<PhaseNoiseRealization> load_pn_samples(const std::filesystem::path& path, Eigen::Index n);
// Writes the phases (radians, %.17g), one per line, so reloading reproduces psi bit-for-bit.
void write_pn_samples(const std::filesystem::path& path, std::span<const PhaseNoiseRealization> realizations);

// Cycles through pre-loaded windows; optionally rescales the phases so their
// overall standard deviation equals sigma_deg.
class PnFileSource {
public:
    PnFileSource(std::vector<PhaseNoiseRealization> windows, std::optional<double> sigma_deg, std::size_t offset = 0);
    PhaseNoiseRealization next();
    std::size_t size() const { return windows_.size(); }

private:
    std::vector<PhaseNoiseRealization> windows_;
    std::size_t cursor_ = 0;
};

}  // namespace pnc
