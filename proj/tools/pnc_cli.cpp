#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <string>

#include <CLI11.hpp>

#include "pnc/basis.hpp"
#include "pnc/harness.hpp"
#include "pnc/phase_noise.hpp"

namespace fs = std::filesystem;

namespace {

fs::path default_out(const pnc::Scenario& sc) {
    const char* dir = std::getenv("PNC_OUT_DIR");
    const fs::path base = dir && *dir ? fs::path(dir) : fs::path("results");
    return base / (std::string(pnc::to_string(sc.name)) + "_" + std::to_string(sc.seed) + ".csv");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"OFDM phase-noise compensation experiments"};
    app.require_subcommand(1);

    std::string config, scenario, out;
    uint64_t seed = 0;
    double scale = 0.0;
    bool full = false;
    auto* run = app.add_subcommand("run", "run a scenario and write CSV");
    run->add_option("--config", config, "config file (key = value lines)")->required();
    run->add_option("--scenario", scenario, "evm_vs_d | evm_vs_sigma | mimo_sweep | tracking | custom");
    run->add_option("--seed", seed, "master seed");
    run->add_option("--out", out, "output CSV path");
    run->add_option("--scale", scale, "channel-count scale (300 * scale channels)");
    run->add_flag("--full", full, "full scale (scale = 1, 300 channels)");

    std::string pn_out;
    int pn_n = 64, pn_count = 100;
    double pn_sigma = 3.0, pn_cutoff = 0.006;
    uint64_t pn_seed = 1;
    auto* gen = app.add_subcommand("gen-pn", "write synthetic phase-noise phases, one per line");
    gen->add_option("--out", pn_out, "output file")->required();
    gen->add_option("--n", pn_n, "samples per window");
    gen->add_option("--windows", pn_count, "number of windows");
    gen->add_option("--sigma", pn_sigma, "std of phi in degrees");
    gen->add_option("--cutoff", pn_cutoff, "lowpass cutoff, fraction of fs");
    gen->add_option("--seed", pn_seed, "generator seed");

    std::string basis_out, basis_kind = "kl";
    int basis_d = 8, basis_cal = 1000;
    auto* bas = app.add_subcommand("basis", "export a compensation basis as CSV");
    bas->add_option("--out", basis_out, "output file")->required();
    bas->add_option("--kind", basis_kind, "kl | dft | dct");
    bas->add_option("-d", basis_d, "number of basis vectors");
    bas->add_option("--n", pn_n, "symbol length");
    bas->add_option("--sigma", pn_sigma, "PN std in degrees (kl)");
    bas->add_option("--cutoff", pn_cutoff, "PN cutoff (kl)");
    bas->add_option("--calibration", basis_cal, "calibration windows (kl)");
    bas->add_option("--seed", pn_seed, "PN seed (kl)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try {
        if (*run) {
            pnc::Scenario sc = pnc::parse_config(config);
            if (!scenario.empty()) pnc::set_scenario_key(sc, "scenario", scenario);
            if (run->count("--seed")) sc.seed = seed;
            if (run->count("--scale")) pnc::set_scenario_key(sc, "scale", std::to_string(scale));
            if (full) {
                sc.scale = 1.0;
                sc.n_channels = 0;
            }
            const fs::path path = out.empty() ? default_out(sc) : fs::path(out);
            const auto rows = pnc::run_scenario(sc);
            pnc::write_csv(path, rows);
            std::printf("%zu rows -> %s\n", rows.size(), path.string().c_str());
        } else if (*gen) {
            pnc::PnModel m;
            m.sigma_deg = pn_sigma;
            m.cutoff = pn_cutoff;
            m.seed = pn_seed;
            pnc::PnGenerator g(m);
            std::vector<pnc::PhaseNoiseRealization> w;
            for (int i = 0; i < pn_count; ++i) w.push_back(g.next(pn_n));
            pnc::write_pn_samples(pn_out, w);
        } else if (*bas) {
            const pnc::BasisKind kind = pnc::basis_kind_from_string(basis_kind);
            pnc::CompBasis b;
            if (kind == pnc::BasisKind::kl) {
                pnc::PnModel m;
                m.sigma_deg = pn_sigma;
                m.cutoff = pn_cutoff;
                m.seed = pn_seed;
                pnc::PnGenerator g(m);
                std::vector<pnc::PhaseNoiseRealization> cal;
                for (int i = 0; i < basis_cal; ++i) cal.push_back(g.next(pn_n));
                b = pnc::kl_basis(pnc::estimate_cov(cal), basis_d);
            } else if (kind == pnc::BasisKind::dft) {
                b = pnc::dft_basis(pn_n, basis_d);
            } else if (kind == pnc::BasisKind::dct) {
                b = pnc::dct_basis(pn_n, basis_d);
            } else {
                throw pnc::ConfigError("basis kind must be kl, dft or dct");
            }
            pnc::write_basis_csv(basis_out, b);
        }
    } catch (const pnc::ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const pnc::NumericalError& e) {
        std::fprintf(stderr, "numerical failure: %s\n", e.what());
        return 3;
    } catch (const std::invalid_argument& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    }
    return 0;
}
