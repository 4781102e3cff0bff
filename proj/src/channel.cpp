#include "pnc/channel.hpp"

#include <cmath>
#include <fstream>
#include <random>
#include <sstream>
#include <string>

#include "pnc/kernels.hpp"
#include "pnc/numerics.hpp"
#include "text_io.hpp"

namespace pnc {

CVec tone_response(const CVec& taps_padded) {
    return std::sqrt(static_cast<double>(taps_padded.size())) * fft(taps_padded);
}

ChannelState gen_channel(int n, int n_taps, DelayProfile profile, uint64_t seed, int n_rx) {
    if (n_taps < 1 || n_taps > n) {
        throw std::invalid_argument("gen_channel: n_taps must lie in [1, N], got " + std::to_string(n_taps));
    }
    if (n_rx < 1) throw std::invalid_argument("gen_channel: n_rx must be positive");
    if (profile.kind == DelayProfile::Kind::exp_decay && !(profile.tau > 0.0)) {
        throw std::invalid_argument("gen_channel: exp_decay tau must be positive");
    }
    std::vector<double> power(n_taps, 1.0);
    if (profile.kind == DelayProfile::Kind::exp_decay) {
        for (int t = 0; t < n_taps; ++t) power[t] = std::exp(-t / profile.tau);
    }
    double total = 0.0;
    for (double p : power) total += p;

    ChannelState ch;
    for (int b = 0; b < n_rx; ++b) {
        std::mt19937_64 rng(hash64(seed, static_cast<uint64_t>(b)));
        std::normal_distribution<double> g(0.0, std::sqrt(0.5));
        CVec h = CVec::Zero(n);
        for (int t = 0; t < n_taps; ++t) {
            const double re = g(rng);
            const double im = g(rng);
            h[t] = std::sqrt(power[t] / total) * cplx{re, im};
        }
        ch.lambda.push_back(tone_response(h));
        ch.taps.push_back(std::move(h));
    }
    return ch;
}

ChannelState channel_from_taps(const std::vector<CVec>& taps, int n) {
    ChannelState ch;
    for (const CVec& t : taps) {
        if (t.size() < 1 || t.size() > n) {
            throw std::invalid_argument("channel_from_taps: tap count must lie in [1, N]");
        }
        CVec h = CVec::Zero(n);
        h.head(t.size()) = t;
        ch.lambda.push_back(tone_response(h));
        ch.taps.push_back(std::move(h));
    }
    return ch;
}

double noise_variance(const CVec& lambda, double snr_db) {
    if (std::isnan(snr_db)) throw std::invalid_argument("noise: snr_db is NaN");
    if (std::isinf(snr_db) && snr_db > 0) return 0.0;
    return lambda.squaredNorm() / static_cast<double>(lambda.size()) * std::pow(10.0, -snr_db / 10.0);
}

void add_awgn(CVec& y, double variance, uint64_t seed) {
    if (variance <= 0.0) return;
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g(0.0, std::sqrt(variance / 2.0));
    for (Eigen::Index i = 0; i < y.size(); ++i) {
        const double re = g(rng);
        const double im = g(rng);
        y[i] += cplx{re, im};
    }
}

CVec circular_apply(const CVec& lambda, const CVec& x) {
    CVec xf = fft(x);
    kernels::cmul({lambda.data(), static_cast<std::size_t>(lambda.size())},
                  {xf.data(), static_cast<std::size_t>(xf.size())},
                  {xf.data(), static_cast<std::size_t>(xf.size())});
    return ifft(xf);
}

std::vector<CVec> apply_channel(const ChannelState& ch, const CVec& x, const NoiseSpec& noise) {
    if (x.size() != ch.n()) throw std::invalid_argument("apply_channel: x length must equal N");
    std::vector<CVec> out;
    out.reserve(ch.n_rx());
    for (int b = 0; b < ch.n_rx(); ++b) {
        CVec y = circular_apply(ch.lambda[b], x);
        add_awgn(y, noise_variance(ch.lambda[b], noise.snr_db), hash64(noise.seed, static_cast<uint64_t>(b)));
        out.push_back(std::move(y));
    }
    return out;
}

CVec load_taps_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open channel tap file " + path.string());
    std::vector<cplx> taps;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto parsed = detail::parse_sample_line(line);
        if (parsed.kind == detail::SampleLine::Kind::skip) continue;
        if (parsed.kind == detail::SampleLine::Kind::bad) {
            throw ConfigError(path.string() + ":" + std::to_string(lineno) + ": malformed tap '" + line + "'");
        }
        taps.push_back(parsed.kind == detail::SampleLine::Kind::complex ? parsed.value
                                                                         : cplx{parsed.value.real(), 0.0});
    }
    if (taps.empty()) throw ConfigError(path.string() + ": no taps");
    return Eigen::Map<CVec>(taps.data(), static_cast<Eigen::Index>(taps.size()));
}

}  // namespace pnc
