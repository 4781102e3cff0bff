#pragma once

// Experiment scenarios driven by `key = value` config files, emitting one CSV
// row per sweep point (plus optional per-symbol rows).

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "pnc/basis.hpp"
#include "pnc/channel.hpp"
#include "pnc/compensator.hpp"
#include "pnc/phase_noise.hpp"

namespace pnc {

enum class ScenarioKind { evm_vs_d, evm_vs_sigma, mimo_sweep, tracking, custom };

std::string_view to_string(ScenarioKind k);
ScenarioKind scenario_kind_from_string(std::string_view s);

struct Scenario {
    ScenarioKind name = ScenarioKind::evm_vs_d;
    uint64_t seed = 1;
    int n_channels = 0;  // 0: round(300 * scale)
    double scale = 0.1;
    int n_symbols = 100;
    double snr_db = 45.0;

    int n = 64;
    int qam = 256;
    bool dc_pilot = true;
    int n_rx = 2;
    int n_taps = 8;
    DelayProfile delay;

    PnModel pn;  // pn.seed is ignored; per-channel seeds are derived
    std::filesystem::path pn_file;
    bool pn_file_rescale = false;  // rescale file phases to sigma_deg
    int kl_calibration_symbols = 10;

    std::vector<BasisKind> bases{BasisKind::kl, BasisKind::dft};
    std::vector<int> d_values{0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12};
    std::vector<double> sigma_values{0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
    SolveMethod method = SolveMethod::ls;
    bool use_null_tones = false;

    int n_users = 2;
    std::vector<double> tx_sigma_values{0.0, 1.0};

    double beta = 0.9;
    double alpha = 0.1;
    bool track_r = false;
    CarrierOffset offset;
    int training_symbols = 0;
    int freeze_after = -1;

    bool per_symbol_rows = false;
    bool timing = false;
    int threads = 0;  // 0: hardware concurrency

    int channels() const;
};

// Sets one key; throws ConfigError naming the key on unknown keys or bad values.
void set_scenario_key(Scenario& sc, const std::string& key, const std::string& value);
// Cross-field checks; throws ConfigError.
void validate(const Scenario& sc);

Scenario parse_config_text(const std::string& text, const std::string& origin = "<config>",
                           const std::filesystem::path& base_dir = {});
Scenario parse_config(const std::filesystem::path& path);

struct ResultRow {
    std::string scenario;
    uint64_t channel_seed = 0;
    long long symbol_index = -1;
    bool aggregate = true;
    std::string basis_kind;
    int d = 0;
    double sigma_deg = 0.0;
    double tx_sigma_deg = 0.0;
    std::string method;
    double evm_db = 0.0;
    double ser = 0.0;
    double equations = 0.0;
    double wall_ms = 0.0;
};

// Child seed of channel c: hash64(master, c).
uint64_t channel_seed(uint64_t master, int c);

std::vector<ResultRow> run_scenario(const Scenario& sc);

std::string csv_header();
std::string csv_line(const ResultRow& r);
void write_csv(std::ostream& out, const std::vector<ResultRow>& rows);
void write_csv(const std::filesystem::path& path, const std::vector<ResultRow>& rows);

}  // namespace pnc
