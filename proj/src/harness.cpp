#include "pnc/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <sstream>
#include <thread>

#include "pnc/mimo.hpp"
#include "pnc/ofdm.hpp"
#include "pnc/tracker.hpp"
#include "text_io.hpp"

namespace pnc {

std::string_view to_string(ScenarioKind k) {
    switch (k) {
        case ScenarioKind::evm_vs_d: return "evm_vs_d";
        case ScenarioKind::evm_vs_sigma: return "evm_vs_sigma";
        case ScenarioKind::mimo_sweep: return "mimo_sweep";
        case ScenarioKind::tracking: return "tracking";
        case ScenarioKind::custom: return "custom";
    }
    return "?";
}

ScenarioKind scenario_kind_from_string(std::string_view s) {
    for (auto k : {ScenarioKind::evm_vs_d, ScenarioKind::evm_vs_sigma, ScenarioKind::mimo_sweep,
                   ScenarioKind::tracking, ScenarioKind::custom}) {
        if (to_string(k) == s) return k;
    }
    throw std::invalid_argument("unknown scenario '" + std::string(s) + "'");
}

int Scenario::channels() const {
    if (n_channels > 0) return n_channels;
    return std::max(1, static_cast<int>(std::lround(300.0 * scale)));
}

uint64_t channel_seed(uint64_t master, int c) { return hash64(master, static_cast<uint64_t>(c)); }

// ---------------------------------------------------------------- config

namespace {

[[noreturn]] void bad_value(const std::string& key, const std::string& value, const std::string& why) {
    throw ConfigError("key '" + key + "': " + why + " (got '" + value + "')");
}

double to_double(const std::string& key, const std::string& value) {
    double v = 0.0;
    if (!detail::parse_double(value, v)) bad_value(key, value, "expected a finite number");
    return v;
}

long long to_int(const std::string& key, const std::string& value) {
    const std::string_view s = detail::trim(value);
    long long v = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || ec != std::errc{} || ptr != s.data() + s.size()) bad_value(key, value, "expected an integer");
    return v;
}

uint64_t to_u64(const std::string& key, const std::string& value) {
    const std::string_view s = detail::trim(value);
    uint64_t v = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || ec != std::errc{} || ptr != s.data() + s.size()) {
        bad_value(key, value, "expected an unsigned 64-bit integer");
    }
    return v;
}

bool to_bool(const std::string& key, const std::string& value) {
    const std::string_view s = detail::trim(value);
    if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
    if (s == "false" || s == "0" || s == "no" || s == "off") return false;
    bad_value(key, value, "expected true or false");
}

std::vector<std::string> split_list(const std::string& value) {
    std::vector<std::string> out;
    std::stringstream ss(value);
    std::string item;
    while (std::getline(ss, item, ',')) out.emplace_back(detail::trim(item));
    return out;
}

// "a,b,c" or "lo:hi" or "lo:step:hi" (inclusive).
std::vector<double> to_double_list(const std::string& key, const std::string& value) {
    std::vector<double> out;
    for (const std::string& item : split_list(value)) {
        if (item.find(':') == std::string::npos) {
            out.push_back(to_double(key, item));
            continue;
        }
        std::vector<std::string> parts;
        std::stringstream ss(item);
        std::string p;
        while (std::getline(ss, p, ':')) parts.push_back(p);
        if (parts.size() != 2 && parts.size() != 3) bad_value(key, value, "range must be lo:hi or lo:step:hi");
        const double lo = to_double(key, parts.front());
        const double hi = to_double(key, parts.back());
        const double step = parts.size() == 3 ? to_double(key, parts[1]) : 1.0;
        if (!(step > 0.0) || hi < lo) bad_value(key, value, "empty or invalid range");
        const auto count = static_cast<long long>(std::floor((hi - lo) / step + 1e-9));
        if (count > 100000) bad_value(key, value, "range too long");
        for (long long i = 0; i <= count; ++i) out.push_back(lo + static_cast<double>(i) * step);
    }
    if (out.empty()) bad_value(key, value, "list must not be empty");
    return out;
}

std::vector<int> to_int_list(const std::string& key, const std::string& value) {
    std::vector<int> out;
    for (double v : to_double_list(key, value)) {
        if (v != std::floor(v)) bad_value(key, value, "expected integers");
        out.push_back(static_cast<int>(v));
    }
    return out;
}

}  // namespace

void set_scenario_key(Scenario& sc, const std::string& key, const std::string& value) {
    try {
        if (key == "scenario") {
            sc.name = scenario_kind_from_string(detail::trim(value));
        } else if (key == "seed") {
            sc.seed = to_u64(key, value);
        } else if (key == "n_channels") {
            sc.n_channels = static_cast<int>(to_int(key, value));
            if (sc.n_channels < 1) bad_value(key, value, "must be >= 1");
        } else if (key == "scale") {
            sc.scale = to_double(key, value);
            if (!(sc.scale > 0.0)) bad_value(key, value, "must be > 0");
        } else if (key == "n_symbols") {
            sc.n_symbols = static_cast<int>(to_int(key, value));
            if (sc.n_symbols < 1) bad_value(key, value, "must be >= 1");
        } else if (key == "snr_db") {
            const std::string_view s = detail::trim(value);
            if (s == "inf" || s == "+inf") {
                sc.snr_db = std::numeric_limits<double>::infinity();
            } else {
                sc.snr_db = to_double(key, value);
            }
        } else if (key == "n") {
            sc.n = static_cast<int>(to_int(key, value));
        } else if (key == "qam") {
            sc.qam = static_cast<int>(to_int(key, value));
        } else if (key == "dc_pilot") {
            sc.dc_pilot = to_bool(key, value);
        } else if (key == "n_rx") {
            sc.n_rx = static_cast<int>(to_int(key, value));
            if (sc.n_rx < 1) bad_value(key, value, "must be >= 1");
        } else if (key == "n_taps") {
            sc.n_taps = static_cast<int>(to_int(key, value));
            if (sc.n_taps < 1) bad_value(key, value, "must be >= 1");
        } else if (key == "delay_profile") {
            const std::string_view s = detail::trim(value);
            if (s == "uniform") {
                sc.delay.kind = DelayProfile::Kind::uniform;
            } else if (s == "exp_decay") {
                sc.delay.kind = DelayProfile::Kind::exp_decay;
            } else {
                bad_value(key, value, "expected uniform or exp_decay");
            }
        } else if (key == "delay_tau") {
            sc.delay.tau = to_double(key, value);
            if (!(sc.delay.tau > 0.0)) bad_value(key, value, "must be > 0");
        } else if (key == "pn_order") {
            sc.pn.order = static_cast<int>(to_int(key, value));
            if (sc.pn.order < 1) bad_value(key, value, "must be >= 1");
        } else if (key == "pn_ripple_db") {
            sc.pn.ripple_db = to_double(key, value);
            if (!(sc.pn.ripple_db > 0.0)) bad_value(key, value, "must be > 0");
        } else if (key == "pn_cutoff") {
            sc.pn.cutoff = to_double(key, value);
            if (!(sc.pn.cutoff > 0.0 && sc.pn.cutoff < 0.5)) bad_value(key, value, "must lie in (0, 0.5)");
        } else if (key == "sigma_deg") {
            sc.pn.sigma_deg = to_double(key, value);
            if (sc.pn.sigma_deg < 0.0) bad_value(key, value, "must be >= 0");
        } else if (key == "pn_file") {
            sc.pn_file = std::string(detail::trim(value));
        } else if (key == "pn_file_rescale") {
            sc.pn_file_rescale = to_bool(key, value);
        } else if (key == "kl_calibration_symbols") {
            sc.kl_calibration_symbols = static_cast<int>(to_int(key, value));
            if (sc.kl_calibration_symbols < 1) bad_value(key, value, "must be >= 1");
        } else if (key == "bases") {
            sc.bases.clear();
            for (const std::string& item : split_list(value)) sc.bases.push_back(basis_kind_from_string(item));
            if (sc.bases.empty()) bad_value(key, value, "list must not be empty");
        } else if (key == "d") {
            sc.d_values = to_int_list(key, value);
            for (int d : sc.d_values) {
                if (d < 0) bad_value(key, value, "d must be >= 0");
            }
        } else if (key == "sigma_list") {
            sc.sigma_values = to_double_list(key, value);
            for (double s : sc.sigma_values) {
                if (s < 0.0) bad_value(key, value, "sigma must be >= 0");
            }
        } else if (key == "method") {
            sc.method = solve_method_from_string(detail::trim(value));
        } else if (key == "use_null_tones") {
            sc.use_null_tones = to_bool(key, value);
        } else if (key == "n_users") {
            sc.n_users = static_cast<int>(to_int(key, value));
            if (sc.n_users < 1) bad_value(key, value, "must be >= 1");
        } else if (key == "tx_sigma_list") {
            sc.tx_sigma_values = to_double_list(key, value);
            for (double s : sc.tx_sigma_values) {
                if (s < 0.0) bad_value(key, value, "sigma must be >= 0");
            }
        } else if (key == "beta") {
            sc.beta = to_double(key, value);
            if (!(sc.beta > 0.0 && sc.beta <= 1.0)) bad_value(key, value, "must lie in (0, 1]");
        } else if (key == "alpha") {
            sc.alpha = to_double(key, value);
            if (!(sc.alpha > 0.0 && sc.alpha <= 1.0)) bad_value(key, value, "must lie in (0, 1]");
        } else if (key == "track_covariance") {
            sc.track_r = to_bool(key, value);
        } else if (key == "offset_ppm") {
            sc.offset.ppm = to_double(key, value);
        } else if (key == "carrier_hz") {
            sc.offset.carrier_hz = to_double(key, value);
            if (!(sc.offset.carrier_hz > 0.0)) bad_value(key, value, "must be > 0");
        } else if (key == "sample_rate_hz") {
            sc.offset.sample_rate_hz = to_double(key, value);
            if (!(sc.offset.sample_rate_hz > 0.0)) bad_value(key, value, "must be > 0");
        } else if (key == "training_symbols") {
            sc.training_symbols = static_cast<int>(to_int(key, value));
            if (sc.training_symbols < 0) bad_value(key, value, "must be >= 0");
        } else if (key == "freeze_after") {
            sc.freeze_after = static_cast<int>(to_int(key, value));
        } else if (key == "per_symbol_rows") {
            sc.per_symbol_rows = to_bool(key, value);
        } else if (key == "timing") {
            sc.timing = to_bool(key, value);
        } else if (key == "threads") {
            sc.threads = static_cast<int>(to_int(key, value));
            if (sc.threads < 0) bad_value(key, value, "must be >= 0");
        } else {
            throw ConfigError("unknown key '" + key + "'");
        }
    } catch (const std::invalid_argument& e) {
        throw ConfigError("key '" + key + "': " + e.what());
    }
}

void validate(const Scenario& sc) {
    if (sc.n < 2 || (sc.n & (sc.n - 1)) != 0) throw ConfigError("key 'n': must be a power of two >= 2");
    if (sc.n != 64 && sc.dc_pilot != true) throw ConfigError("key 'dc_pilot': only meaningful for n = 64");
    if (sc.qam != 4 && sc.qam != 16 && sc.qam != 64 && sc.qam != 256) {
        throw ConfigError("key 'qam': must be 4, 16, 64 or 256");
    }
    if (sc.n_taps > sc.n) throw ConfigError("key 'n_taps': exceeds n");
    for (int d : sc.d_values) {
        if (d > sc.n) throw ConfigError("key 'd': value " + std::to_string(d) + " exceeds n");
    }
    if (sc.name == ScenarioKind::mimo_sweep && sc.n_rx < sc.n_users) {
        throw ConfigError("key 'n_rx': must be >= n_users for mimo_sweep");
    }
    if (sc.name == ScenarioKind::tracking && !sc.pn_file.empty()) {
        throw ConfigError("key 'pn_file': not supported by the tracking scenario");
    }
    for (BasisKind b : sc.bases) {
        if (b == BasisKind::tracked && sc.name != ScenarioKind::tracking) {
            throw ConfigError("key 'bases': 'tracked' is only valid for the tracking scenario");
        }
    }
}

Scenario parse_config_text(const std::string& text, const std::string& origin, const std::filesystem::path& base_dir) {
    Scenario sc;
    std::stringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string_view t = detail::trim(line);
        if (t.empty() || t.front() == '#') continue;
        const auto eq = t.find('=');
        const std::string where = origin + ":" + std::to_string(lineno) + ": ";
        if (eq == std::string_view::npos) throw ConfigError(where + "expected 'key = value'");
        std::string key(detail::trim(t.substr(0, eq)));
        std::string value(detail::trim(t.substr(eq + 1)));
        if (const auto hash = value.find('#'); hash != std::string::npos) value = std::string(detail::trim(value.substr(0, hash)));
        if (key.empty()) throw ConfigError(where + "missing key");
        if (value.empty()) throw ConfigError(where + "key '" + key + "': missing value");
        try {
            set_scenario_key(sc, key, value);
        } catch (const ConfigError& e) {
            throw ConfigError(where + e.what());
        }
    }
    if (!sc.pn_file.empty() && sc.pn_file.is_relative() && !base_dir.empty()) sc.pn_file = base_dir / sc.pn_file;
    return sc;
}

Scenario parse_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config_text(ss.str(), path.string(), path.parent_path());
}

// ---------------------------------------------------------------- running

namespace {

// EVM aggregates as the mean of per-symbol linear error ratios.
struct Acc {
    double ratio_sum = 0.0;
    long long errors = 0;
    long long compared = 0;
    double equations = 0.0;
    long long symbols = 0;
    double wall_ms = 0.0;

    static double linear_ratio(const ErrorEnergy& e) {
        if (e.error == 0.0) return 0.0;
        return e.reference > 0.0 ? e.error / e.reference : std::numeric_limits<double>::infinity();
    }
    double db() const {
        if (symbols == 0 || ratio_sum == 0.0) return kEvmFloorDb;
        return std::max(kEvmFloorDb, 10.0 * std::log10(ratio_sum / static_cast<double>(symbols)));
    }

    void add(const CompResult& res, const std::pair<int, int>& ser, double ms) {
        ratio_sum += linear_ratio(res.energy);
        errors += ser.first;
        compared += ser.second;
        equations += res.equations;
        ++symbols;
        wall_ms += ms;
    }
    void merge(const Acc& o) {
        ratio_sum += o.ratio_sum;
        errors += o.errors;
        compared += o.compared;
        equations += o.equations;
        symbols += o.symbols;
        wall_ms += o.wall_ms;
    }
};

struct Point {
    std::string basis;  // "none" for d = 0
    BasisKind kind = BasisKind::dft;
    int d = 0;
    double sigma = 0.0;
    double tx_sigma = 0.0;
};

struct ChannelOutcome {
    std::vector<Acc> points;
    std::vector<std::vector<Acc>> per_symbol;  // [point][symbol], tracking only
    std::vector<ResultRow> rows;
};

class Timer {
public:
    explicit Timer(bool on) : on_(on) {
        if (on_) t0_ = std::chrono::steady_clock::now();
    }
    double ms() const {
        if (!on_) return 0.0;
        return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0_).count();
    }

private:
    bool on_;
    std::chrono::steady_clock::time_point t0_;
};

ResultRow make_row(const Scenario& sc, const Point& p, const Acc& a, uint64_t cseed, long long sym, bool aggregate) {
    ResultRow r;
    r.scenario = std::string(to_string(sc.name));
    r.channel_seed = cseed;
    r.symbol_index = sym;
    r.aggregate = aggregate;
    r.basis_kind = p.basis;
    r.d = p.d;
    r.sigma_deg = p.sigma;
    r.tx_sigma_deg = p.tx_sigma;
    r.method = p.d == 0 ? "none" : std::string(to_string(sc.method));
    r.evm_db = a.db();
    r.ser = a.compared ? static_cast<double>(a.errors) / static_cast<double>(a.compared) : 0.0;
    r.equations = a.symbols ? a.equations / static_cast<double>(a.symbols) : 0.0;
    r.wall_ms = a.wall_ms;
    return r;
}

std::shared_ptr<const ToneLayout> layout_for(const Scenario& sc) {
    if (sc.n == 64) return std::make_shared<const ToneLayout>(ToneLayout::standard(sc.dc_pilot));
    // Other sizes: 16 evenly spaced pilots (or n/4 when n < 64), no nulls.
    const int count = std::min(16, std::max(1, sc.n / 4));
    std::vector<int> pilots;
    for (int i = 0; i < count; ++i) pilots.push_back(i * sc.n / count);
    return std::make_shared<const ToneLayout>(ToneLayout::make(sc.n, pilots));
}

// Phase-noise source for one channel: synthetic generator or file windows.
std::function<PhaseNoiseRealization()> pn_source(const Scenario& sc, double sigma, uint64_t seed,
                                                 const std::vector<PhaseNoiseRealization>* file_windows) {
    if (file_windows != nullptr) {
        auto src = std::make_shared<PnFileSource>(
            *file_windows, sc.pn_file_rescale ? std::optional<double>(sigma) : std::nullopt,
            static_cast<std::size_t>(seed % file_windows->size()));
        return [src] { return src->next(); };
    }
    PnModel m = sc.pn;
    m.sigma_deg = sigma;
    m.seed = seed;
    auto gen = std::make_shared<PnGenerator>(m);
    const Eigen::Index n = sc.n;
    return [gen, n] { return gen->next(n); };
}

PnCovariance calibrate(const std::function<PhaseNoiseRealization()>& next, int count) {
    std::vector<PhaseNoiseRealization> cal;
    for (int i = 0; i < count; ++i) cal.push_back(next());
    return estimate_cov(cal);
}

CompBasis make_basis(BasisKind kind, int n, int d, const PnCovariance* cov) {
    switch (kind) {
        case BasisKind::kl: return kl_basis(*cov, d);
        case BasisKind::dft: return dft_basis(n, d);
        case BasisKind::dct: return dct_basis(n, d);
        case BasisKind::tracked: return dft_basis(n, d);
    }
    throw std::logic_error("make_basis");
}

std::vector<Point> plan_points(const Scenario& sc) {
    std::vector<Point> pts;
    auto add_for_sigma = [&](double sigma, double tx_sigma, const std::vector<int>& ds) {
        bool none_added = false;
        for (int d : ds) {
            if (d == 0) {
                if (!none_added) pts.push_back({"none", BasisKind::dft, 0, sigma, tx_sigma});
                none_added = true;
                continue;
            }
            for (BasisKind b : sc.bases) pts.push_back({std::string(to_string(b)), b, d, sigma, tx_sigma});
        }
    };
    switch (sc.name) {
        case ScenarioKind::evm_vs_d:
        case ScenarioKind::tracking:
            add_for_sigma(sc.pn.sigma_deg, 0.0, sc.d_values);
            break;
        case ScenarioKind::custom: {
            const int d = sc.d_values.front();
            pts.push_back(d == 0 ? Point{"none", BasisKind::dft, 0, sc.pn.sigma_deg, 0.0}
                                 : Point{std::string(to_string(sc.bases.front())), sc.bases.front(), d,
                                         sc.pn.sigma_deg, 0.0});
            break;
        }
        case ScenarioKind::evm_vs_sigma:
            for (double s : sc.sigma_values) add_for_sigma(s, 0.0, sc.d_values);
            break;
        case ScenarioKind::mimo_sweep:
            for (double tx : sc.tx_sigma_values) {
                for (double s : sc.sigma_values) add_for_sigma(s, tx, sc.d_values);
            }
            break;
    }
    return pts;
}

ChannelOutcome run_simo_channel(const Scenario& sc, const std::vector<Point>& pts, int c,
                                const std::vector<PhaseNoiseRealization>* file_windows) {
    const uint64_t cs = channel_seed(sc.seed, c);
    const auto layout = layout_for(sc);
    const Constellation con = Constellation::qam(sc.qam);
    const ChannelState ch = gen_channel(sc.n, sc.n_taps, sc.delay, hash64(cs, 1), sc.n_rx);
    const CompConfig cfg{sc.method, sc.use_null_tones};
    ChannelOutcome out;
    out.points.resize(pts.size());

    // Points sharing a sigma share the phase-noise realization.
    std::map<double, std::vector<std::size_t>> by_sigma;
    for (std::size_t i = 0; i < pts.size(); ++i) by_sigma[pts[i].sigma].push_back(i);

    for (const auto& [sigma, idx] : by_sigma) {
        auto next_pn = pn_source(sc, sigma, hash64(cs, 2), file_windows);
        std::optional<PnCovariance> cov;
        const bool need_kl = std::any_of(idx.begin(), idx.end(), [&](std::size_t i) {
            return pts[i].d > 0 && pts[i].kind == BasisKind::kl;
        });
        if (need_kl) cov = calibrate(next_pn, sc.kl_calibration_symbols);
        std::vector<std::optional<CompBasis>> bases(pts.size());
        for (std::size_t i : idx) {
            if (pts[i].d > 0) bases[i] = make_basis(pts[i].kind, sc.n, pts[i].d, cov ? &*cov : nullptr);
        }
        for (int m = 0; m < sc.n_symbols; ++m) {
            const FreqSymbol ref = make_symbol(layout, con, hash64(hash64(cs, 3), static_cast<uint64_t>(m)));
            const CVec x = modulate(ref);
            const PhaseNoiseRealization psi = next_pn();
            std::vector<CVec> z = apply_channel(ch, x, {sc.snr_db, hash64(hash64(cs, 4), static_cast<uint64_t>(m))});
            for (CVec& zb : z) zb = zb.cwiseProduct(psi.psi);
            for (std::size_t i : idx) {
                const Timer t(sc.timing);
                const CompResult res = pts[i].d == 0 ? equalize_only(z, ch.lambda, ref)
                                                     : compensate(z, ch.lambda, *bases[i], ref, cfg);
                const double ms = t.ms();
                const auto ser = symbol_errors(res.s_hat, ref, con);
                out.points[i].add(res, ser, ms);
                if (sc.per_symbol_rows || sc.name == ScenarioKind::custom) {
                    Acc one;
                    one.add(res, ser, ms);
                    out.rows.push_back(make_row(sc, pts[i], one, cs, m, false));
                }
            }
        }
    }
    return out;
}

ChannelOutcome run_mimo_channel(const Scenario& sc, const std::vector<Point>& pts, int c,
                                const std::vector<PhaseNoiseRealization>* file_windows) {
    const uint64_t cs = channel_seed(sc.seed, c);
    const auto layout = layout_for(sc);
    const Constellation con = Constellation::qam(sc.qam);
    std::vector<ChannelState> per_user;
    for (int u = 0; u < sc.n_users; ++u) {
        per_user.push_back(gen_channel(sc.n, sc.n_taps, sc.delay, hash64(cs, 10 + static_cast<uint64_t>(u)), sc.n_rx));
    }
    const MuSystem sys = MuSystem::from_channels(per_user);
    const ZfBeamformer zf = zf_beamformer(sys);
    const CompConfig cfg{sc.method, sc.use_null_tones};
    ChannelOutcome out;
    out.points.resize(pts.size());

    std::map<std::pair<double, double>, std::vector<std::size_t>> groups;
    for (std::size_t i = 0; i < pts.size(); ++i) groups[{pts[i].tx_sigma, pts[i].sigma}].push_back(i);

    for (const auto& [key, idx] : groups) {
        const auto [tx_sigma, sigma] = key;
        auto next_pn = pn_source(sc, sigma, hash64(cs, 2), file_windows);
        std::vector<std::function<PhaseNoiseRealization()>> tx_pn;
        if (tx_sigma > 0.0) {
            for (int u = 0; u < sc.n_users; ++u) {
                tx_pn.push_back(pn_source(sc, tx_sigma, hash64(cs, 20 + static_cast<uint64_t>(u)), nullptr));
            }
        }
        std::optional<PnCovariance> cov;
        const bool need_kl = std::any_of(idx.begin(), idx.end(), [&](std::size_t i) {
            return pts[i].d > 0 && pts[i].kind == BasisKind::kl;
        });
        if (need_kl) cov = calibrate(next_pn, sc.kl_calibration_symbols);
        std::vector<std::optional<CompBasis>> bases(pts.size());
        for (std::size_t i : idx) {
            if (pts[i].d > 0) bases[i] = make_basis(pts[i].kind, sc.n, pts[i].d, cov ? &*cov : nullptr);
        }
        for (int m = 0; m < sc.n_symbols; ++m) {
            std::vector<FreqSymbol> refs;
            std::vector<CVec> x;
            std::vector<CVec> txp;
            for (int u = 0; u < sc.n_users; ++u) {
                const uint64_t sym_seed = hash64(hash64(cs, 3), static_cast<uint64_t>(m) * sc.n_users + u);
                refs.push_back(make_symbol(layout, con, sym_seed));
                x.push_back(modulate(refs.back()));
                if (!tx_pn.empty()) txp.push_back(tx_pn[u]().psi);
            }
            const PhaseNoiseRealization psi = next_pn();
            const std::vector<CVec> z =
                mu_receive(sys, x, txp, psi.psi, {sc.snr_db, hash64(hash64(cs, 4), static_cast<uint64_t>(m))});
            for (std::size_t i : idx) {
                const Timer t(sc.timing);
                const std::vector<CompResult> res =
                    pts[i].d == 0 ? mu_equalize_only(zf, z, refs) : mu_compensate(zf, z, *bases[i], refs, cfg);
                const double ms = t.ms() / sc.n_users;
                Acc one;
                for (int u = 0; u < sc.n_users; ++u) {
                    const auto ser = symbol_errors(res[u].s_hat, refs[u], con);
                    out.points[i].add(res[u], ser, ms);
                    one.add(res[u], ser, ms);
                }
                if (sc.per_symbol_rows) out.rows.push_back(make_row(sc, pts[i], one, cs, m, false));
            }
        }
    }
    return out;
}

ChannelOutcome run_tracking_channel(const Scenario& sc, const std::vector<Point>& pts, int c) {
    const uint64_t cs = channel_seed(sc.seed, c);
    const auto layout = layout_for(sc);
    const Constellation con = Constellation::qam(sc.qam);
    const ChannelState ch = gen_channel(sc.n, sc.n_taps, sc.delay, hash64(cs, 1), sc.n_rx);
    const CompConfig cfg{sc.method, sc.use_null_tones};
    const TrackerConfig tcfg{cfg, sc.training_symbols, sc.freeze_after};
    ChannelOutcome out;
    out.points.resize(pts.size());
    out.per_symbol.assign(pts.size(), std::vector<Acc>(sc.n_symbols));

    auto next_pn = pn_source(sc, sc.pn.sigma_deg, hash64(cs, 2), nullptr);
    const long long n = sc.n;
    const long long cal_start = -static_cast<long long>(sc.kl_calibration_symbols) * n;
    std::optional<PnCovariance> cov;
    if (std::any_of(pts.begin(), pts.end(), [](const Point& p) { return p.d > 0 && p.kind == BasisKind::kl; })) {
        std::vector<PhaseNoiseRealization> cal;
        for (int i = 0; i < sc.kl_calibration_symbols; ++i) {
            cal.push_back(apply_offset(next_pn(), sc.offset, cal_start + i * n));
        }
        cov = estimate_cov(cal);
    }
    std::vector<std::optional<CompBasis>> frozen(pts.size());
    std::vector<std::optional<TrackerState>> trackers(pts.size());
    for (std::size_t i = 0; i < pts.size(); ++i) {
        if (pts[i].d == 0) continue;
        if (pts[i].kind == BasisKind::tracked) {
            trackers[i] = TrackerState::init(dft_basis(sc.n, pts[i].d), sc.beta, sc.alpha, sc.track_r);
        } else {
            frozen[i] = make_basis(pts[i].kind, sc.n, pts[i].d, cov ? &*cov : nullptr);
        }
    }

    for (int m = 0; m < sc.n_symbols; ++m) {
        RxSymbol rx;
        rx.ref = make_symbol(layout, con, hash64(hash64(cs, 3), static_cast<uint64_t>(m)));
        const CVec x = modulate(rx.ref);
        const PhaseNoiseRealization psi = apply_offset(next_pn(), sc.offset, m * n);
        rx.z = apply_channel(ch, x, {sc.snr_db, hash64(hash64(cs, 4), static_cast<uint64_t>(m))});
        for (CVec& zb : rx.z) zb = zb.cwiseProduct(psi.psi);
        for (std::size_t i = 0; i < pts.size(); ++i) {
            const Timer t(sc.timing);
            CompResult res;
            if (pts[i].d == 0) {
                res = equalize_only(rx.z, ch.lambda, rx.ref);
            } else if (trackers[i]) {
                res = track_symbol(*trackers[i], rx, ch.lambda, con, tcfg);
            } else {
                res = compensate(rx.z, ch.lambda, *frozen[i], rx.ref, cfg);
            }
            const double ms = t.ms();
            const auto ser = symbol_errors(res.s_hat, rx.ref, con);
            out.points[i].add(res, ser, ms);
            out.per_symbol[i][m].add(res, ser, ms);
            if (sc.per_symbol_rows) out.rows.push_back(make_row(sc, pts[i], out.per_symbol[i][m], cs, m, false));
        }
    }
    return out;
}

}  // namespace

std::vector<ResultRow> run_scenario(const Scenario& sc) {
    validate(sc);
    const std::vector<Point> pts = plan_points(sc);
    const int n_channels = sc.channels();

    std::optional<std::vector<PhaseNoiseRealization>> file_windows;
    if (!sc.pn_file.empty()) file_windows = load_pn_samples(sc.pn_file, sc.n);
    const auto* fw = file_windows ? &*file_windows : nullptr;

    std::vector<ChannelOutcome> outcomes(n_channels);
    std::atomic<int> next{0};
    std::exception_ptr failure;
    std::mutex failure_mu;
    auto worker = [&] {
        for (int c = next.fetch_add(1); c < n_channels; c = next.fetch_add(1)) {
            try {
                switch (sc.name) {
                    case ScenarioKind::mimo_sweep: outcomes[c] = run_mimo_channel(sc, pts, c, fw); break;
                    case ScenarioKind::tracking: outcomes[c] = run_tracking_channel(sc, pts, c); break;
                    default: outcomes[c] = run_simo_channel(sc, pts, c, fw); break;
                }
            } catch (...) {
                const std::lock_guard lock(failure_mu);
                if (!failure) failure = std::current_exception();
                next.store(n_channels);
            }
        }
    };
    const int hw = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
    const int n_threads = std::min(n_channels, sc.threads > 0 ? sc.threads : hw);
    if (n_threads <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int t = 0; t < n_threads; ++t) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    if (failure) std::rethrow_exception(failure);

    // Deterministic merge in channel order.
    std::vector<ResultRow> rows;
    std::vector<Acc> total(pts.size());
    std::vector<std::vector<Acc>> per_symbol;
    if (sc.name == ScenarioKind::tracking) per_symbol.assign(pts.size(), std::vector<Acc>(sc.n_symbols));
    for (const ChannelOutcome& o : outcomes) {
        rows.insert(rows.end(), o.rows.begin(), o.rows.end());
        for (std::size_t i = 0; i < pts.size(); ++i) total[i].merge(o.points[i]);
        for (std::size_t i = 0; i < per_symbol.size(); ++i) {
            for (int m = 0; m < sc.n_symbols; ++m) per_symbol[i][m].merge(o.per_symbol[i][m]);
        }
    }
    for (std::size_t i = 0; i < per_symbol.size(); ++i) {
        for (int m = 0; m < sc.n_symbols; ++m) rows.push_back(make_row(sc, pts[i], per_symbol[i][m], sc.seed, m, true));
    }
    for (std::size_t i = 0; i < pts.size(); ++i) rows.push_back(make_row(sc, pts[i], total[i], sc.seed, -1, true));
    return rows;
}

std::string csv_header() {
    return "scenario,channel_seed,symbol_index,aggregate,basis_kind,d,sigma_deg,tx_sigma_deg,method,evm_db,ser,"
           "equations,wall_ms";
}

std::string csv_line(const ResultRow& r) {
    char buf[512];
    std::snprintf(buf, sizeof buf, "%s,%llu,%lld,%d,%s,%d,%.6g,%.6g,%s,%.6f,%.6e,%.6g,%.3f", r.scenario.c_str(),
                  static_cast<unsigned long long>(r.channel_seed), r.symbol_index, r.aggregate ? 1 : 0,
                  r.basis_kind.c_str(), r.d, r.sigma_deg, r.tx_sigma_deg, r.method.c_str(), r.evm_db, r.ser,
                  r.equations, r.wall_ms);
    return buf;
}

void write_csv(std::ostream& out, const std::vector<ResultRow>& rows) {
    out << csv_header() << '\n';
    for (const ResultRow& r : rows) out << csv_line(r) << '\n';
}

void write_csv(const std::filesystem::path& path, const std::vector<ResultRow>& rows) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot write " + path.string());
    write_csv(out, rows);
}

}  // namespace pnc
