#pragma once

// QAM constellations, tone layouts, OFDM (de)modulation and EVM/SER metrics.

#include <cstdint>
#include <memory>
#include <vector>

#include "pnc/types.hpp"

namespace pnc {

struct ToneLayout {
    int n = 0;
    std::vector<int> pilot_idx;  // sorted
    std::vector<int> null_idx;   // sorted
    std::vector<int> data_idx;   // sorted complement

    // Validates disjointness/range and fills data_idx.
    static ToneLayout make(int n, std::vector<int> pilots, std::vector<int> nulls = {});
    // 64 tones, pilots at 0-based {0..6, 20, 42, 57..63}; with dc_pilot=false
    // tone 0 becomes a data tone and 15 pilots remain.
    static ToneLayout standard(bool dc_pilot = true);

    int n_pilot() const { return static_cast<int>(pilot_idx.size()); }
    bool operator==(const ToneLayout&) const = default;
};

class Constellation {
public:
    // Gray-mapped square QAM with unit average energy; order in {4, 16, 64, 256}.
    static Constellation qam(int order);

    int order() const { return order_; }
    const std::vector<cplx>& points() const { return points_; }
    // Gray label of points()[i].
    const std::vector<std::uint32_t>& labels() const { return labels_; }
    // Nearest point index; exact ties go to the smaller label.
    int nearest(cplx v) const;
    double min_distance() const { return 2.0 * scale_; }

private:
    int order_ = 0;
    int side_ = 0;
    double scale_ = 1.0;  // half the spacing between adjacent levels
    std::vector<cplx> points_;
    std::vector<std::uint32_t> labels_;
    std::vector<std::uint32_t> axis_gray_;
};

struct FreqSymbol {
    CVec s;
    std::shared_ptr<const ToneLayout> layout;

    CVec pilots() const;
};

enum class EvmScope { data_only, all_active };

inline constexpr double kEvmFloorDb = -300.0;

FreqSymbol make_symbol(std::shared_ptr<const ToneLayout> layout, const Constellation& c, uint64_t seed);
CVec modulate(const FreqSymbol& sym);
CVec demodulate(const CVec& x);

// Error and reference energies over the scope; the building block for
// linear-domain aggregation.
struct ErrorEnergy {
    double error = 0.0;
    double reference = 0.0;
    ErrorEnergy& operator+=(const ErrorEnergy& o) {
        error += o.error;
        reference += o.reference;
        return *this;
    }
    double db() const;
};

ErrorEnergy error_energy(const FreqSymbol& est, const FreqSymbol& ref, EvmScope scope = EvmScope::data_only);
double evm_db(const FreqSymbol& est, const FreqSymbol& ref, EvmScope scope = EvmScope::data_only);

FreqSymbol hard_decide(const FreqSymbol& est, const Constellation& c);
// Hard decisions on data tones, reference values on pilot tones, zeros on nulls.
FreqSymbol decide_with_pilots(const FreqSymbol& est, const FreqSymbol& ref, const Constellation& c);
// Symbol errors on data tones and the number of data tones compared.
std::pair<int, int> symbol_errors(const FreqSymbol& est, const FreqSymbol& ref, const Constellation& c);

}  // namespace pnc
