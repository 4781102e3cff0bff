#include "pnc/ofdm.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>
#include <string>

#include "pnc/numerics.hpp"

namespace pnc {

ToneLayout ToneLayout::make(int n, std::vector<int> pilots, std::vector<int> nulls) {
    if (n < 1) throw std::invalid_argument("ToneLayout: tone count must be positive");
    std::sort(pilots.begin(), pilots.end());
    std::sort(nulls.begin(), nulls.end());
    std::vector<char> used(n, 0);
    auto mark = [&](const std::vector<int>& idx, const char* what) {
        for (int k : idx) {
            if (k < 0 || k >= n) {
                throw std::invalid_argument(std::string("ToneLayout: ") + what + " index " + std::to_string(k) +
                                            " outside [0, " + std::to_string(n) + ")");
            }
            if (used[k]) throw std::invalid_argument("ToneLayout: tone " + std::to_string(k) + " assigned twice");
            used[k] = 1;
        }
    };
    mark(pilots, "pilot");
    mark(nulls, "null");
    ToneLayout out;
    out.n = n;
    out.pilot_idx = std::move(pilots);
    out.null_idx = std::move(nulls);
    for (int k = 0; k < n; ++k) {
        if (!used[k]) out.data_idx.push_back(k);
    }
    return out;
}

ToneLayout ToneLayout::standard(bool dc_pilot) {
    std::vector<int> pilots;
    for (int k = dc_pilot ? 0 : 1; k <= 6; ++k) pilots.push_back(k);
    pilots.push_back(20);
    pilots.push_back(42);
    for (int k = 57; k <= 63; ++k) pilots.push_back(k);
    return make(64, std::move(pilots));
}

Constellation Constellation::qam(int order) {
    if (order != 4 && order != 16 && order != 64 && order != 256) {
        throw std::invalid_argument("Constellation: order must be one of 4, 16, 64, 256");
    }
    Constellation c;
    c.order_ = order;
    c.side_ = static_cast<int>(std::lround(std::sqrt(order)));
    const int m = c.side_;
    const int bits = std::countr_zero(static_cast<unsigned>(m));
    c.scale_ = 1.0 / std::sqrt(2.0 * (m * m - 1) / 3.0);
    c.axis_gray_.resize(m);
    for (int i = 0; i < m; ++i) c.axis_gray_[i] = static_cast<std::uint32_t>(i ^ (i >> 1));
    c.points_.reserve(order);
    c.labels_.reserve(order);
    for (int i = 0; i < m; ++i) {
        for (int q = 0; q < m; ++q) {
            c.points_.emplace_back((2 * i - (m - 1)) * c.scale_, (2 * q - (m - 1)) * c.scale_);
            c.labels_.push_back((c.axis_gray_[i] << bits) | c.axis_gray_[q]);
        }
    }
    return c;
}

int Constellation::nearest(cplx v) const {
    const int m = side_;
    auto axis = [&](double x) {
        const double t = (x / scale_ + (m - 1)) / 2.0;
        if (!(t > 0.0)) return 0;
        if (t >= m - 1) return m - 1;
        const int lo = static_cast<int>(std::floor(t));
        const double dlo = t - lo;
        const double dhi = (lo + 1) - t;
        if (dlo < dhi) return lo;
        if (dhi < dlo) return lo + 1;
        return axis_gray_[lo] < axis_gray_[lo + 1] ? lo : lo + 1;
    };
    return axis(v.real()) * m + axis(v.imag());
}

CVec FreqSymbol::pilots() const {
    CVec p(layout->pilot_idx.size());
    for (std::size_t i = 0; i < layout->pilot_idx.size(); ++i) p[i] = s[layout->pilot_idx[i]];
    return p;
}

FreqSymbol make_symbol(std::shared_ptr<const ToneLayout> layout, const Constellation& c, uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> pick(0, c.order() - 1);
    FreqSymbol sym{CVec::Zero(layout->n), layout};
    std::vector<char> is_null(layout->n, 0);
    for (int k : layout->null_idx) is_null[k] = 1;
    for (int k = 0; k < layout->n; ++k) {
        if (!is_null[k]) sym.s[k] = c.points()[pick(rng)];
    }
    return sym;
}

CVec modulate(const FreqSymbol& sym) { return ifft(sym.s); }

CVec demodulate(const CVec& x) { return fft(x); }

double ErrorEnergy::db() const {
    if (error == 0.0) return kEvmFloorDb;
    if (reference == 0.0) return std::numeric_limits<double>::infinity();
    return std::max(10.0 * std::log10(error / reference), kEvmFloorDb);
}

namespace {

void check_same_layout(const FreqSymbol& a, const FreqSymbol& b) {
    if (!a.layout || !b.layout) throw std::invalid_argument("FreqSymbol without layout");
    if (a.layout != b.layout && !(*a.layout == *b.layout)) {
        throw std::invalid_argument("FreqSymbol layouts differ");
    }
}

}  // namespace

ErrorEnergy error_energy(const FreqSymbol& est, const FreqSymbol& ref, EvmScope scope) {
    check_same_layout(est, ref);
    ErrorEnergy e;
    auto add = [&](const std::vector<int>& idx) {
        for (int k : idx) {
            e.error += std::norm(est.s[k] - ref.s[k]);
            e.reference += std::norm(ref.s[k]);
        }
    };
    add(ref.layout->data_idx);
    if (scope == EvmScope::all_active) add(ref.layout->pilot_idx);
    return e;
}

double evm_db(const FreqSymbol& est, const FreqSymbol& ref, EvmScope scope) {
    return error_energy(est, ref, scope).db();
}

FreqSymbol hard_decide(const FreqSymbol& est, const Constellation& c) {
    FreqSymbol out{CVec::Zero(est.s.size()), est.layout};
    auto snap = [&](const std::vector<int>& idx) {
        for (int k : idx) out.s[k] = c.points()[c.nearest(est.s[k])];
    };
    snap(est.layout->data_idx);
    snap(est.layout->pilot_idx);
    return out;
}

FreqSymbol decide_with_pilots(const FreqSymbol& est, const FreqSymbol& ref, const Constellation& c) {
    check_same_layout(est, ref);
    FreqSymbol out{CVec::Zero(est.s.size()), est.layout};
    for (int k : est.layout->data_idx) out.s[k] = c.points()[c.nearest(est.s[k])];
    for (int k : est.layout->pilot_idx) out.s[k] = ref.s[k];
    return out;
}

std::pair<int, int> symbol_errors(const FreqSymbol& est, const FreqSymbol& ref, const Constellation& c) {
    check_same_layout(est, ref);
    int errors = 0;
    for (int k : ref.layout->data_idx) {
        if (c.nearest(est.s[k]) != c.nearest(ref.s[k])) ++errors;
    }
    return {errors, static_cast<int>(ref.layout->data_idx.size())};
}

}  // namespace pnc
