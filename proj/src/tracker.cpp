#include "pnc/tracker.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

#include "pnc/numerics.hpp"
#include "text_io.hpp"

namespace pnc {

TrackerState TrackerState::init(CompBasis v0, double beta, double alpha, bool track_r) {
    if (!(beta > 0.0 && beta <= 1.0)) throw std::invalid_argument("tracker: beta must lie in (0, 1]");
    if (!(alpha > 0.0 && alpha <= 1.0)) throw std::invalid_argument("tracker: alpha must lie in (0, 1]");
    TrackerState s;
    s.p = CMat::Identity(v0.d(), v0.d());
    if (track_r) s.r = v0.v * v0.v.adjoint();
    s.v = std::move(v0);
    s.v.kind = BasisKind::tracked;
    s.beta = beta;
    s.alpha = alpha;
    return s;
}

CompBasis TrackerState::compensation_basis() const { return {v.v.conjugate(), BasisKind::tracked}; }

PhaseNoiseRealization dd_phase_estimate(const CVec& z, const FreqSymbol& s_hat, const CVec& lambda) {
    return dd_phase_estimate(std::span<const CVec>(&z, 1), s_hat, std::span<const CVec>(&lambda, 1));
}

PhaseNoiseRealization dd_phase_estimate(std::span<const CVec> z, const FreqSymbol& s_hat,
                                        std::span<const CVec> lambda) {
    if (z.empty() || z.size() != lambda.size()) throw std::invalid_argument("dd_phase_estimate: branch mismatch");
    const Eigen::Index n = s_hat.s.size();
    CVec acc = CVec::Zero(n);
    RVec power = RVec::Zero(n);
    for (std::size_t b = 0; b < z.size(); ++b) {
        if (z[b].size() != n || lambda[b].size() != n) throw std::invalid_argument("dd_phase_estimate: length mismatch");
        const CVec y = ifft(lambda[b].cwiseProduct(s_hat.s));
        acc += z[b].cwiseProduct(y.conjugate());
        power += y.cwiseAbs2();
    }
    const double peak = power.maxCoeff();
    if (!(peak > 0.0)) throw NumericalError("dd_phase_estimate: reconstructed signal is zero");
    // |y| < 1e-9 max|y|  <=>  |y|^2 < 1e-18 max|y|^2
    std::vector<char> ok(n);
    for (Eigen::Index i = 0; i < n; ++i) ok[i] = power[i] >= 1e-18 * peak && acc[i] != cplx{};
    RVec phi(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        Eigen::Index src = i;
        for (Eigen::Index off = 1; !ok[src] && off < n; ++off) {
            if (i - off >= 0 && ok[i - off]) {
                src = i - off;
            } else if (i + off < n && ok[i + off]) {
                src = i + off;
            }
        }
        if (!ok[src]) throw NumericalError("dd_phase_estimate: no usable samples");
        phi[i] = std::arg(acc[src]);
    }
    return PhaseNoiseRealization::from_phase(std::move(phi));
}

void past_update(TrackerState& st, const CVec& psi_hat) {
    CMat& v = st.v.v;
    if (psi_hat.size() != v.rows()) throw std::invalid_argument("past_update: length mismatch");
    const CVec y = v.adjoint() * psi_hat;
    const CVec h = st.p * y;
    const cplx denom = st.beta + y.dot(h);  // y^H h
    const CVec g = h / denom;
    st.p = (st.p - g * h.adjoint()) / st.beta;
    st.p = 0.5 * (st.p + st.p.adjoint()).eval();
    const CVec e = psi_hat - v * y;
    v.noalias() += e * g.adjoint();
    if (st.r) *st.r = (1.0 - st.alpha) * *st.r + st.alpha * psi_hat * psi_hat.adjoint();
    ++st.symbol_counter;
}

CompResult track_symbol(TrackerState& state, const RxSymbol& rx, std::span<const CVec> lambda, const Constellation& c,
                        const TrackerConfig& cfg) {
    const long long m = state.symbol_counter;
    CompResult res = compensate(rx.z, lambda, state.compensation_basis(), rx.ref, cfg.comp);
    if (cfg.freeze_after >= 0 && m >= cfg.freeze_after) {
        ++state.symbol_counter;
        return res;
    }
    const FreqSymbol decided = m < cfg.training_symbols ? rx.ref : decide_with_pilots(res.s_hat, rx.ref, c);
    const PhaseNoiseRealization psi_hat = dd_phase_estimate(rx.z, decided, lambda);
    past_update(state, psi_hat.psi);
    if (!state.v.v.allFinite()) throw NumericalError("tracker: basis became non-finite");
    return res;
}

TrackedRun run_tracked(std::span<const RxSymbol> stream, std::span<const CVec> lambda, TrackerState state,
                       const Constellation& c, const TrackerConfig& cfg) {
    TrackedRun out;
    out.results.reserve(stream.size());
    for (const RxSymbol& rx : stream) out.results.push_back(track_symbol(state, rx, lambda, c, cfg));
    out.state = std::move(state);
    return out;
}

namespace {

void write_matrix(std::FILE* f, const CMat& m) {
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            std::fprintf(f, "%s%.17g,%.17g", j ? "," : "", m(i, j).real(), m(i, j).imag());
        }
        std::fprintf(f, "\n");
    }
}

CMat read_matrix(std::istream& in, Eigen::Index rows, Eigen::Index cols, const std::string& what) {
    CMat m(rows, cols);
    std::string line;
    for (Eigen::Index i = 0; i < rows; ++i) {
        if (!std::getline(in, line)) throw ConfigError("tracker state: truncated " + what);
        std::stringstream ss(line);
        std::string cell;
        for (Eigen::Index j = 0; j < 2 * cols; ++j) {
            if (!std::getline(ss, cell, ',')) throw ConfigError("tracker state: short row in " + what);
            double v = 0.0;
            if (!detail::parse_double(cell, v)) throw ConfigError("tracker state: bad number '" + cell + "' in " + what);
            if (j % 2 == 0) {
                m(i, j / 2).real(v);
            } else {
                m(i, j / 2).imag(v);
            }
        }
    }
    return m;
}

}  // namespace

void save_tracker_state(const std::filesystem::path& path, const TrackerState& st) {
    std::FILE* f = std::fopen(path.string().c_str(), "w");
    if (f == nullptr) throw ConfigError("cannot write tracker state " + path.string());
    std::fprintf(f, "n,d,beta,alpha,symbol_counter\n%d,%d,%.17g,%.17g,%lld\n", st.v.n(), st.v.d(), st.beta, st.alpha,
                 st.symbol_counter);
    write_matrix(f, st.v.v);
    write_matrix(f, st.p);
    std::fclose(f);
}

TrackerState load_tracker_state(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open tracker state " + path.string());
    std::string header, values;
    std::getline(in, header);
    std::getline(in, values);
    if (header != "n,d,beta,alpha,symbol_counter") throw ConfigError("tracker state: unexpected header");
    int n = 0, d = 0;
    double beta = 0.0, alpha = 0.0;
    long long counter = 0;
    if (std::sscanf(values.c_str(), "%d,%d,%lf,%lf,%lld", &n, &d, &beta, &alpha, &counter) != 5 || n < 1 || d < 1) {
        throw ConfigError("tracker state: malformed parameter line");
    }
    TrackerState st = TrackerState::init({read_matrix(in, n, d, "V"), BasisKind::tracked}, beta, alpha);
    st.p = read_matrix(in, d, d, "P");
    st.symbol_counter = counter;
    return st;
}

}  // namespace pnc
