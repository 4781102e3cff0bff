#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <numbers>
#include <random>

#include "oracles.hpp"
#include "pnc/numerics.hpp"
#include "pnc/phase_noise.hpp"

using namespace pnc;

namespace {

void check_coeffs(const IirFilter& f, const std::vector<double>& b, const std::vector<double>& a) {
    REQUIRE(f.b.size() == b.size());
    REQUIRE(f.a.size() == a.size());
    for (std::size_t i = 0; i < b.size(); ++i) CHECK(f.b[i] == doctest::Approx(b[i]).epsilon(1e-9));
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(f.a[i] == doctest::Approx(a[i]).epsilon(1e-12));
}

}  // namespace

TEST_CASE("chebyshev1 design matches frozen scipy.signal.cheby1 coefficients") {
    // scipy normalises Wn to Nyquist, so cheby1(2, 1, 0.012) is cutoff 0.006 here.
    check_coeffs(IirFilter::chebyshev1_lowpass(2, 1.0, 0.006),
                 {0.000341999474297764, 0.000683998948595528, 0.000341999474297764},
                 {1.0, -1.9579312689830701, 0.9594661878691647});
    check_coeffs(IirFilter::chebyshev1_lowpass(3, 0.5, 0.05),
                 {0.0022935958930524287, 0.006880787679157286, 0.006880787679157286, 0.0022935958930524287},
                 {1.0, -2.5418894400893937, 2.2355290119908107, -0.6752908047569975});
    check_coeffs(IirFilter::chebyshev1_lowpass(2, 1.0, 0.01),
                 {0.0009370911456515141, 0.0018741822913030282, 0.0009370911456515141},
                 {1.0, -1.929169817354214, 0.9333755515893499});
    CHECK(IirFilter::chebyshev1_lowpass(2, 1.0, 0.006).stable());
    CHECK_THROWS_AS(IirFilter::chebyshev1_lowpass(2, 1.0, 0.6), std::invalid_argument);
}

TEST_CASE("gen_pn examples") {
    PnModel m;
    m.sigma_deg = 0.0;
    const PhaseNoiseRealization z = gen_pn(m, 64);
    CHECK((z.psi - CVec::Ones(64)).norm() == 0.0);

    m.sigma_deg = 3.0;
    m.seed = 12;
    CHECK(gen_pn(m, 64).psi == gen_pn(m, 64).psi);

    PnGenerator g(m);
    const PhaseNoiseRealization long_run = g.next(100000);
    const double mean = long_run.phi.mean();
    const double sd = std::sqrt((long_run.phi.array() - mean).square().mean()) * 180.0 / std::numbers::pi;
    CHECK(std::abs(sd - 3.0) < 0.06);
    for (Eigen::Index i = 0; i < long_run.size(); i += 97) {
        CHECK(std::abs(std::abs(long_run.psi[i]) - 1.0) < 1e-12);
        CHECK(std::abs(long_run.psi[i] - std::polar(1.0, long_run.phi[i])) < 1e-12);
    }
}

TEST_CASE("generator is continuous across calls") {
    PnModel m;
    m.seed = 4;
    PnGenerator a(m), b(m);
    const PhaseNoiseRealization whole = a.next(128);
    const PhaseNoiseRealization p1 = b.next(64);
    const PhaseNoiseRealization p2 = b.next(64);
    CHECK(whole.phi.head(64) == p1.phi);
    CHECK(whole.phi.tail(64) == p2.phi);
}

TEST_CASE("estimate_cov examples") {
    PnModel m;
    m.seed = 3;
    const PhaseNoiseRealization one = gen_pn(m, 32);
    const PnCovariance c1 = estimate_cov(std::span(&one, 1));
    const EigResult e1 = herm_eig(c1.r);
    CHECK(std::abs(e1.values[0] - 32.0) < 1e-9);
    CHECK(std::abs(e1.values[1]) < 1e-9);

    const PhaseNoiseRealization zero = PhaseNoiseRealization::from_phase(RVec::Zero(16));
    const std::vector<PhaseNoiseRealization> zs(5, zero);
    CHECK((estimate_cov(zs).r - CMat::Ones(16, 16)).norm() < 1e-12);

    PnGenerator g(m);
    std::vector<PhaseNoiseRealization> ten;
    for (int i = 0; i < 10; ++i) ten.push_back(g.next(64));
    const PnCovariance c = estimate_cov(ten);
    CHECK((c.r - c.r.adjoint()).norm() < 1e-10);
    for (int i = 0; i < 64; ++i) CHECK(std::abs(c.r(i, i) - 1.0) < 1e-6);
    const EigResult e = herm_eig(c.r);
    CHECK(e.values.minCoeff() >= -1e-9 * e.values.sum() / 64);
    CHECK(e.values.head(4).sum() >= 0.99 * e.values.sum());
}

TEST_CASE("apply_offset examples") {
    PnModel m;
    m.seed = 8;
    const PhaseNoiseRealization p = gen_pn(m, 64);
    CHECK(apply_offset(p, CarrierOffset{}, 100).psi == p.psi);

    // delta_f * Ts = 1/N: one full cycle across the symbol.
    CarrierOffset off;
    off.sample_rate_hz = 64.0;
    off.carrier_hz = 1e6;
    off.ppm = 1.0;  // delta_f = 1 Hz
    const PhaseNoiseRealization ones = PhaseNoiseRealization::from_phase(RVec::Zero(64));
    const PhaseNoiseRealization ramp = apply_offset(ones, off, 0);
    for (int k = 0; k < 64; ++k) CHECK(std::abs(ramp.psi[k] - std::polar(1.0, 2.0 * std::numbers::pi * k / 64)) < 1e-12);

    // Covariance of offset realisations equals diag(c) R diag(c)^H for a fixed start.
    std::vector<PhaseNoiseRealization> raw, shifted;
    PnGenerator g(m);
    CarrierOffset off2;
    off2.ppm = 3.0;
    for (int i = 0; i < 20; ++i) {
        raw.push_back(g.next(64));
        shifted.push_back(apply_offset(raw.back(), off2, 1234));
    }
    const CVec c = off2.phasor(64, 1234);
    const CMat expect = c.asDiagonal() * estimate_cov(raw).r * c.conjugate().asDiagonal();
    CHECK((estimate_cov(shifted).r - expect).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("eigenvector modulation identity") {
    std::mt19937_64 rng(21);
    const CMat g = oracle::random_cmat(16, 16, rng);
    const CMat r = g * g.adjoint();
    RVec ph(16);
    std::uniform_real_distribution<double> u(-3.0, 3.0);
    for (auto& v : ph) v = u(rng);
    const CVec c = PhaseNoiseRealization::from_phase(ph).psi;
    const CMat rt = c.asDiagonal() * r * c.conjugate().asDiagonal();
    const EigResult e = herm_eig(r);
    const EigResult et = herm_eig(rt);
    for (int i = 0; i < 16; ++i) {
        CHECK(std::abs(e.values[i] - et.values[i]) < 1e-9 * e.values[0]);
        const CVec mod = c.cwiseProduct(e.vectors.col(i));
        const cplx align = et.vectors.col(i).dot(mod);  // global phase
        CHECK(std::abs(std::abs(align) - 1.0) < 1e-9);
        CHECK((mod - et.vectors.col(i) * align).norm() < 1e-9);
    }
}

TEST_CASE("phase-noise sample files") {
    const auto dir = std::filesystem::temp_directory_path();
    const auto zeros = dir / "pnc_pn_zeros.txt";
    {
        std::ofstream f(zeros);
        for (int i = 0; i < 3 * 16 + 5; ++i) f << "0\n";
    }
    const auto w = load_pn_samples(zeros, 16);
    CHECK(w.size() == 3);
    for (const auto& r : w) CHECK((r.psi - CVec::Ones(16)).norm() == 0.0);

    PnModel m;
    m.seed = 77;
    PnGenerator g(m);
    std::vector<PhaseNoiseRealization> orig;
    for (int i = 0; i < 4; ++i) orig.push_back(g.next(32));
    const auto path = dir / "pnc_pn_roundtrip.txt";
    write_pn_samples(path, orig);
    const auto back = load_pn_samples(path, 32);
    REQUIRE(back.size() == 4);
    for (int i = 0; i < 4; ++i) CHECK(back[i].psi == orig[i].psi);

    {
        std::ofstream f(zeros);
        f << "0.1\n0.2,x\n";
    }
    CHECK_THROWS_AS(load_pn_samples(zeros, 1), ConfigError);
    CHECK_THROWS_AS(load_pn_samples(dir / "pnc_no_such_file.txt", 4), ConfigError);
    std::filesystem::remove(zeros);
    std::filesystem::remove(path);
}
