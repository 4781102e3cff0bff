#include <doctest.h>

#include <random>

#include "oracles.hpp"
#include "pnc/mimo.hpp"
#include "pnc/numerics.hpp"

using namespace pnc;

namespace {

MuSystem random_system(int n, int users, int rx, uint64_t seed) {
    std::vector<ChannelState> per_user;
    for (int u = 0; u < users; ++u) per_user.push_back(gen_channel(n, 4, DelayProfile::uniform(), hash64(seed, u), rx));
    return MuSystem::from_channels(per_user);
}

CMat kron(const CMat& a, const CMat& b) {
    CMat out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
        for (Eigen::Index j = 0; j < a.cols(); ++j) out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    }
    return out;
}

std::shared_ptr<const ToneLayout> layout_for(int n) {
    if (n == 64) return std::make_shared<const ToneLayout>(ToneLayout::standard());
    return std::make_shared<const ToneLayout>(ToneLayout::make(n, {0, n / 2}));
}

}  // namespace

TEST_CASE("zf_beamformer examples") {
    CVec one = CVec::Zero(1);
    one[0] = 1.0;
    const ChannelState flat = channel_from_taps({one, one}, 16);
    const ZfBeamformer zf = zf_beamformer(MuSystem::from_channels({flat}));
    for (int k = 0; k < 16; ++k) {
        CHECK(std::abs(zf.b[k](0, 0) - 0.5) < 1e-12);
        CHECK(std::abs(zf.b[k](0, 1) - 0.5) < 1e-12);
    }

    // Orthogonal users: user u only reaches antenna u.
    MuSystem diag;
    diag.n_users = diag.n_rx = 2;
    diag.lambda = {{CVec::Constant(8, cplx{2.0, 1.0}), CVec::Zero(8)}, {CVec::Zero(8), CVec::Constant(8, -0.5)}};
    const ZfBeamformer zd = zf_beamformer(diag);
    for (int k = 0; k < 8; ++k) {
        CHECK(std::abs(zd.b[k](0, 0) - 1.0 / cplx{2.0, 1.0}) < 1e-12);
        CHECK(std::abs(zd.b[k](1, 1) - (-2.0)) < 1e-12);
        CHECK(std::abs(zd.b[k](0, 1)) < 1e-12);
        CHECK(std::abs(zd.b[k](1, 0)) < 1e-12);
    }

    const MuSystem sys = random_system(64, 2, 2, 3);
    const ZfBeamformer zr = zf_beamformer(sys);
    for (int k = 0; k < 64; ++k) {
        REQUIRE(zr.full_rank[k]);
        CHECK((zr.b[k] * sys.tone_matrix(k) - CMat::Identity(2, 2)).cwiseAbs().maxCoeff() < 1e-9);
    }
}

TEST_CASE("zf_beamformer marks rank-deficient tones") {
    MuSystem sys;
    sys.n_users = sys.n_rx = 2;
    CVec a = CVec::Ones(4), b = CVec::Ones(4);
    b[2] = 0.0;
    a[2] = 0.0;
    sys.lambda = {{a, CVec::Ones(4) * 0.5}, {CVec::Ones(4) * 0.3, b}};
    sys.lambda[1][0][2] = 0.0;
    sys.lambda[0][1][2] = 0.0;
    const ZfBeamformer zf = zf_beamformer(sys);
    CHECK(!zf.full_rank[2]);
    CHECK(zf.full_rank[0]);

    MuSystem dead;
    dead.n_users = dead.n_rx = 1;
    dead.lambda = {{CVec::Zero(4)}};
    CHECK_THROWS_AS(zf_beamformer(dead), NumericalError);
}

TEST_CASE("mu_build_w equals the materialised Kronecker oracle at N = 8") {
    const int n = 8;
    std::mt19937_64 rng(4);
    for (int users : {1, 2}) {
        const int rx = users + 1;
        const MuSystem sys = random_system(n, users, rx, 10 + users);
        const ZfBeamformer zf = zf_beamformer(sys);
        const CompBasis v{oracle::random_cmat(n, 3, rng), BasisKind::kl};
        std::vector<CVec> z;
        for (int r = 0; r < rx; ++r) z.push_back(oracle::random_cvec(n, rng));

        const CMat f = oracle::dense_dft(n);
        CMat bf = CMat::Zero(users * n, rx * n);
        for (int k = 0; k < n; ++k) {
            for (int u = 0; u < users; ++u) {
                for (int r = 0; r < rx; ++r) bf(u * n + k, r * n + k) = zf.b[k](u, r);
            }
        }
        const CMat b_time = kron(CMat::Identity(users, users), f.adjoint()) * bf * kron(CMat::Identity(rx, rx), f);
        CMat zbig = CMat::Zero(rx * n, rx * n);
        for (int r = 0; r < rx; ++r) zbig.block(r * n, r * n, n, n) = z[r].asDiagonal();
        const CMat stacked_v = kron(CMat::Ones(rx, 1), v.v);
        const CMat dense = kron(CMat::Identity(users, users), f) * b_time * zbig * stacked_v;

        const std::vector<CMat> w = mu_build_w(zf, z, v);
        for (int u = 0; u < users; ++u) CHECK((w[u] - dense.middleRows(u * n, n)).cwiseAbs().maxCoeff() < 1e-9);
    }
}

TEST_CASE("ZF property and joint exact recovery") {
    const int n = 64;
    const MuSystem sys = random_system(n, 2, 3, 5);
    const ZfBeamformer zf = zf_beamformer(sys);
    const auto l = layout_for(n);
    const Constellation c = Constellation::qam(256);
    std::vector<FreqSymbol> refs{make_symbol(l, c, 1), make_symbol(l, c, 2)};
    std::vector<CVec> x{modulate(refs[0]), modulate(refs[1])};
    const std::vector<CVec> y = mu_receive(sys, x, {}, CVec(), {});
    const auto eq = mu_equalize_only(zf, y, refs);
    for (int u = 0; u < 2; ++u) CHECK((eq[u].s_hat.s - refs[u].s).cwiseAbs().maxCoeff() < 1e-8);

    const auto comp = mu_compensate(zf, y, dft_basis(n, 1), refs, {});
    for (int u = 0; u < 2; ++u) CHECK(comp[u].evm_db <= -180.0);

    // Receiver phase inside the basis span (a DFT tone times a constant), tx PN = 0.
    CVec psi(n);
    for (int m = 0; m < n; ++m) psi[m] = std::polar(1.0, 0.3 + 2.0 * std::numbers::pi * m / n);
    const std::vector<CVec> z = mu_receive(sys, x, {}, psi, {});
    const auto rec = mu_compensate(zf, z, dft_basis(n, 3), refs, {});
    for (int u = 0; u < 2; ++u) CHECK(rec[u].evm_db <= -80.0);
    CHECK(rec[0].equations == 32);
}

TEST_CASE("single user with two antennas reduces to two-branch compensation on consistent systems") {
    const int n = 64;
    const MuSystem sys = random_system(n, 1, 2, 8);
    const ZfBeamformer zf = zf_beamformer(sys);
    const auto l = layout_for(n);
    const FreqSymbol ref = make_symbol(l, Constellation::qam(64), 5);
    CVec psi(n);
    for (int m = 0; m < n; ++m) psi[m] = std::polar(1.0, -0.2 - 2.0 * std::numbers::pi * 2 * m / n);
    const std::vector<CVec> x{modulate(ref)};
    const std::vector<CVec> z = mu_receive(sys, x, {}, psi, {});
    const CompBasis b = dft_basis(n, 5);
    const auto mu = mu_compensate(zf, z, b, std::span(&ref, 1), {});
    const CompResult simo = compensate(z, sys.lambda[0], b, ref, {});
    CHECK((mu[0].gamma - simo.gamma).norm() < 1e-9);
}

TEST_CASE("mu_compensate flags underdetermined systems") {
    const MuSystem sys = random_system(64, 2, 2, 9);
    const ZfBeamformer zf = zf_beamformer(sys);
    const auto l = layout_for(64);
    std::vector<FreqSymbol> refs{make_symbol(l, Constellation::qam(16), 1), make_symbol(l, Constellation::qam(16), 2)};
    std::vector<CVec> x{modulate(refs[0]), modulate(refs[1])};
    const auto z = mu_receive(sys, x, {}, CVec(), {40.0, 3});
    const auto res = mu_compensate(zf, z, dft_basis(64, 40), refs, {});
    CHECK(res[0].underdetermined);
    CHECK(res[1].gamma.allFinite());
    CHECK_THROWS_AS(MuSystem::from_channels({gen_channel(64, 4, DelayProfile::uniform(), 1, 1),
                                             gen_channel(64, 4, DelayProfile::uniform(), 2, 1)}),
                    std::invalid_argument);
}
