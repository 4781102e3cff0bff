#pragma once

// Line parser shared by the tap and phase-noise sample readers.

#include <charconv>
#include <cmath>
#include <string_view>

#include "pnc/types.hpp"

namespace pnc::detail {

struct SampleLine {
    enum class Kind { skip, real, complex, bad };
    Kind kind = Kind::skip;
    cplx value{};
};

inline std::string_view trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

inline bool parse_double(std::string_view s, double& out) {
    s = trim(s);
    if (s.empty()) return false;
    if (s.front() == '+') s.remove_prefix(1);
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc{} && ptr == s.data() + s.size() && std::isfinite(out);
}

inline SampleLine parse_sample_line(std::string_view line) {
    line = trim(line);
    if (line.empty() || line.front() == '#') return {};
    const auto comma = line.find(',');
    SampleLine out;
    if (comma == std::string_view::npos) {
        double v = 0.0;
        if (!parse_double(line, v)) return {SampleLine::Kind::bad, {}};
        return {SampleLine::Kind::real, {v, 0.0}};
    }
    double re = 0.0, im = 0.0;
    if (line.find(',', comma + 1) != std::string_view::npos || !parse_double(line.substr(0, comma), re) ||
        !parse_double(line.substr(comma + 1), im)) {
        return {SampleLine::Kind::bad, {}};
    }
    return {SampleLine::Kind::complex, {re, im}};
}

}  // namespace pnc::detail
