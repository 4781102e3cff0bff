#include "pnc/phase_noise.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <string>

#include <Eigen/Eigenvalues>

#include "text_io.hpp"

namespace pnc {
namespace {

// Polynomial in z^{-1} with the given roots, leading coefficient 1.
std::vector<cplx> poly_from_roots(const std::vector<cplx>& roots) {
    std::vector<cplx> c{1.0};
    for (const cplx& r : roots) {
        std::vector<cplx> next(c.size() + 1, 0.0);
        for (std::size_t i = 0; i < c.size(); ++i) {
            next[i] += c[i];
            next[i + 1] -= r * c[i];
        }
        c = std::move(next);
    }
    return c;
}

}  // namespace

IirFilter IirFilter::chebyshev1_lowpass(int order, double ripple_db, double cutoff) {
    if (order < 1) throw std::invalid_argument("chebyshev1: order must be >= 1");
    if (!(ripple_db > 0.0)) throw std::invalid_argument("chebyshev1: ripple must be positive");
    if (!(cutoff > 0.0 && cutoff < 0.5)) throw std::invalid_argument("chebyshev1: cutoff must lie in (0, 0.5)");

    const double eps = std::sqrt(std::pow(10.0, ripple_db / 10.0) - 1.0);
    const double mu = std::asinh(1.0 / eps) / order;
    const double warped = 2.0 * std::tan(std::numbers::pi * cutoff);  // bilinear prewarp, T = 1

    std::vector<cplx> zpoles;
    for (int k = 1; k <= order; ++k) {
        const double theta = std::numbers::pi * (2.0 * k - 1.0) / (2.0 * order);
        const cplx s = warped * cplx{-std::sinh(mu) * std::sin(theta), std::cosh(mu) * std::cos(theta)};
        zpoles.push_back((2.0 + s) / (2.0 - s));
    }
    const std::vector<cplx> den = poly_from_roots(zpoles);
    const std::vector<cplx> num = poly_from_roots(std::vector<cplx>(order, cplx{-1.0, 0.0}));

    IirFilter f;
    for (const cplx& c : den) f.a.push_back(c.real());
    for (const cplx& c : num) f.b.push_back(c.real());

    // DC gain 1/sqrt(1+eps^2) for even order, 1 for odd.
    double num_dc = 0.0, den_dc = 0.0;
    for (double v : f.b) num_dc += v;
    for (double v : f.a) den_dc += v;
    const double target = order % 2 == 0 ? 1.0 / std::sqrt(1.0 + eps * eps) : 1.0;
    const double g = target * den_dc / num_dc;
    for (double& v : f.b) v *= g;
    return f;
}

std::vector<cplx> IirFilter::poles() const {
    // Companion-matrix roots of z^p + a1 z^{p-1} + ... + ap.
    const int p = static_cast<int>(a.size()) - 1;
    if (p <= 0) return {};
    Eigen::MatrixXd comp = Eigen::MatrixXd::Zero(p, p);
    for (int j = 0; j < p; ++j) comp(0, j) = -a[j + 1] / a[0];
    for (int i = 1; i < p; ++i) comp(i, i - 1) = 1.0;
    Eigen::EigenSolver<Eigen::MatrixXd> es(comp, false);
    std::vector<cplx> out;
    for (int i = 0; i < p; ++i) out.push_back(es.eigenvalues()[i]);
    return out;
}

bool IirFilter::stable() const {
    if (a.empty() || a[0] == 0.0) return false;
    for (const cplx& p : poles()) {
        if (!(std::abs(p) < 1.0)) return false;
    }
    return true;
}

double IirFilter::noise_gain() const {
    if (!stable()) throw std::invalid_argument("IirFilter: unstable filter");
    const std::size_t taps = std::max(a.size(), b.size());
    std::vector<double> st(taps, 0.0);
    double energy = 0.0;
    double tail = 0.0;
    for (std::size_t k = 0; k < 50'000'000; ++k) {
        const double x = k == 0 ? 1.0 : 0.0;
        const double y = (b.empty() ? 0.0 : b[0]) * x + st[0];
        for (std::size_t i = 0; i + 1 < taps; ++i) {
            const double bi = i + 1 < b.size() ? b[i + 1] : 0.0;
            const double ai = i + 1 < a.size() ? a[i + 1] : 0.0;
            st[i] = bi * x - ai * y + st[i + 1];
        }
        energy += y * y;
        tail += y * y;
        if (k % 4096 == 4095) {
            if (k > 8192 && tail <= 1e-18 * energy) break;
            tail = 0.0;
        }
    }
    return std::sqrt(energy);
}

PhaseNoiseRealization PhaseNoiseRealization::from_phase(RVec phi) {
    PhaseNoiseRealization r;
    r.psi.resize(phi.size());
    for (Eigen::Index i = 0; i < phi.size(); ++i) r.psi[i] = std::polar(1.0, phi[i]);
    r.phi = std::move(phi);
    return r;
}

PhaseNoiseRealization PhaseNoiseRealization::from_samples(const CVec& samples) {
    RVec phi(samples.size());
    CVec psi(samples.size());
    for (Eigen::Index i = 0; i < samples.size(); ++i) {
        const double mag = std::abs(samples[i]);
        if (!(mag > 0.0) || !std::isfinite(mag)) {
            throw std::invalid_argument("phase-noise sample " + std::to_string(i) + " has no defined phase");
        }
        psi[i] = samples[i] / mag;
        phi[i] = std::arg(samples[i]);
    }
    return {std::move(psi), std::move(phi)};
}

CVec CarrierOffset::phasor(Eigen::Index n, long long start_sample) const {
    const double step = delta_f() / sample_rate_hz;  // cycles per sample
    CVec c(n);
    for (Eigen::Index m = 0; m < n; ++m) {
        const double cycles = step * static_cast<double>(start_sample + m);
        const double frac = cycles - std::floor(cycles);
        c[m] = std::polar(1.0, 2.0 * std::numbers::pi * frac);
    }
    return c;
}

PnGenerator::PnGenerator(const PnModel& model)
    : model_(model), filter_(model.filter()), rng_(model.seed) {
    if (!(model.sigma_deg >= 0.0) || !std::isfinite(model.sigma_deg)) {
        throw std::invalid_argument("PnModel: sigma_deg must be finite and >= 0");
    }
    if (!filter_.stable()) throw std::invalid_argument("PnModel: filter is unstable");
    state_.assign(std::max(filter_.a.size(), filter_.b.size()), 0.0);
    scale_ = model.sigma_deg * std::numbers::pi / 180.0 / filter_.noise_gain();
    // Burn in so the first symbol already sees the stationary process.
    for (int i = 0; i < 8192; ++i) step();
}

double PnGenerator::step() {
    const double x = white_(rng_);
    const auto& b = filter_.b;
    const auto& a = filter_.a;
    const double y = b[0] * x + state_[0];
    for (std::size_t i = 0; i + 1 < state_.size(); ++i) {
        const double bi = i + 1 < b.size() ? b[i + 1] : 0.0;
        const double ai = i + 1 < a.size() ? a[i + 1] : 0.0;
        state_[i] = bi * x - ai * y + state_[i + 1];
    }
    return y;
}

PhaseNoiseRealization PnGenerator::next(Eigen::Index n) {
    if (n < 1) throw std::invalid_argument("gen_pn: n must be >= 1");
    RVec phi(n);
    for (Eigen::Index i = 0; i < n; ++i) phi[i] = scale_ * step();
    return PhaseNoiseRealization::from_phase(std::move(phi));
}

PhaseNoiseRealization gen_pn(const PnModel& model, Eigen::Index n) { return PnGenerator(model).next(n); }

PnCovariance estimate_cov(std::span<const PhaseNoiseRealization> realizations) {
    if (realizations.empty()) throw std::invalid_argument("estimate_cov: no realizations");
    const Eigen::Index n = realizations.front().size();
    CMat r = CMat::Zero(n, n);
    for (const auto& rz : realizations) {
        if (rz.size() != n) throw std::invalid_argument("estimate_cov: realizations differ in length");
        r.noalias() += rz.psi * rz.psi.adjoint();
    }
    r /= static_cast<double>(realizations.size());
    return {std::move(r), static_cast<int>(realizations.size())};
}

PhaseNoiseRealization apply_offset(const PhaseNoiseRealization& psi, const CarrierOffset& off, long long start_sample) {
    if (off.ppm == 0.0) return psi;
    const CVec c = off.phasor(psi.size(), start_sample);
    PhaseNoiseRealization out;
    out.psi = psi.psi.cwiseProduct(c);
    out.phi.resize(psi.size());
    const double step = 2.0 * std::numbers::pi * off.delta_f() / off.sample_rate_hz;
    for (Eigen::Index m = 0; m < psi.size(); ++m) {
        out.phi[m] = psi.phi[m] + step * static_cast<double>(start_sample + m);
    }
    return out;
}

std::vector<PhaseNoiseRealization> load_pn_samples(const std::filesystem::path& path, Eigen::Index n) {
    if (n < 1) throw std::invalid_argument("load_pn_samples: window length must be >= 1");
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open phase-noise file " + path.string());
    std::vector<double> phases;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto parsed = detail::parse_sample_line(line);
        switch (parsed.kind) {
            case detail::SampleLine::Kind::skip:
                break;
            case detail::SampleLine::Kind::real:
                phases.push_back(parsed.value.real());
                break;
            case detail::SampleLine::Kind::complex:
                if (parsed.value == cplx{0.0, 0.0}) {
                    throw ConfigError(path.string() + ":" + std::to_string(lineno) + ": zero sample has no phase");
                }
                phases.push_back(std::arg(parsed.value));
                break;
            case detail::SampleLine::Kind::bad:
                throw ConfigError(path.string() + ":" + std::to_string(lineno) + ": malformed sample '" + line + "'");
        }
    }
    if (static_cast<Eigen::Index>(phases.size()) < n) {
        throw ConfigError(path.string() + ": " + std::to_string(phases.size()) + " samples, need at least " +
                          std::to_string(n));
    }
    std::vector<PhaseNoiseRealization> out;
    for (std::size_t start = 0; start + n <= phases.size(); start += n) {
        out.push_back(PhaseNoiseRealization::from_phase(Eigen::Map<const RVec>(phases.data() + start, n)));
    }
    return out;
}

void write_pn_samples(const std::filesystem::path& path, std::span<const PhaseNoiseRealization> realizations) {
    std::FILE* f = std::fopen(path.string().c_str(), "w");
    if (f == nullptr) throw ConfigError("cannot write phase-noise file " + path.string());
    for (const auto& r : realizations) {
        for (Eigen::Index i = 0; i < r.phi.size(); ++i) std::fprintf(f, "%.17g\n", r.phi[i]);
    }
    std::fclose(f);
}

PnFileSource::PnFileSource(std::vector<PhaseNoiseRealization> windows, std::optional<double> sigma_deg,
                           std::size_t offset)
    : windows_(std::move(windows)) {
    if (windows_.empty()) throw std::invalid_argument("PnFileSource: no windows");
    cursor_ = offset % windows_.size();
    if (sigma_deg) {
        double sum = 0.0, sum2 = 0.0, count = 0.0;
        for (const auto& w : windows_) {
            sum += w.phi.sum();
            sum2 += w.phi.squaredNorm();
            count += static_cast<double>(w.phi.size());
        }
        const double mean = sum / count;
        const double sd = std::sqrt(std::max(sum2 / count - mean * mean, 0.0));
        const double k = sd > 0.0 ? (*sigma_deg * std::numbers::pi / 180.0) / sd : 0.0;
        for (auto& w : windows_) w = PhaseNoiseRealization::from_phase(((w.phi.array() - mean) * k).matrix());
    }
}

PhaseNoiseRealization PnFileSource::next() {
    const PhaseNoiseRealization& w = windows_[cursor_];
    cursor_ = (cursor_ + 1) % windows_.size();
    return w;
}

}  // namespace pnc
