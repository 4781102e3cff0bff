#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "pnc/harness.hpp"

using namespace pnc;
namespace fs = std::filesystem;

namespace {

const ResultRow& find_row(const std::vector<ResultRow>& rows, const std::string& basis, int d, double sigma = -1) {
    for (const ResultRow& r : rows) {
        if (r.aggregate && r.symbol_index < 0 && r.basis_kind == basis && r.d == d &&
            (sigma < 0 || r.sigma_deg == sigma)) {
            return r;
        }
    }
    FAIL("row not found: " << basis << " d=" << d);
    throw;
}

std::string csv_of(const std::vector<ResultRow>& rows) {
    std::ostringstream out;
    write_csv(out, rows);
    return out.str();
}

}  // namespace

TEST_CASE("empty config gives the default scenario") {
    const Scenario sc = parse_config_text("");
    CHECK(sc.name == ScenarioKind::evm_vs_d);
    CHECK(sc.n == 64);
    CHECK(sc.qam == 256);
    CHECK(sc.n_rx == 2);
    CHECK(sc.pn.sigma_deg == 3.0);
    CHECK(sc.pn.order == 2);
    CHECK(sc.n_symbols == 100);
    CHECK(sc.channels() == 30);
    Scenario full = sc;
    full.scale = 1.0;
    CHECK(full.channels() == 300);
}

TEST_CASE("config parsing: values, lists, comments") {
    const Scenario sc = parse_config_text(
        "# comment\n"
        "scenario = evm_vs_sigma\n"
        "seed = 18446744073709551615\n"
        "sigma_list = 0:2:6, 9\n"
        "d = 0, 1, 4:6   # inline\n"
        "bases = dct\n"
        "method = tls\n"
        "snr_db = inf\n");
    CHECK(sc.name == ScenarioKind::evm_vs_sigma);
    CHECK(sc.seed == 18446744073709551615ULL);
    CHECK(sc.sigma_values == std::vector<double>{0, 2, 4, 6, 9});
    CHECK(sc.d_values == std::vector<int>{0, 1, 4, 5, 6});
    CHECK(sc.bases == std::vector<BasisKind>{BasisKind::dct});
    CHECK(sc.method == SolveMethod::tls);
    CHECK(std::isinf(sc.snr_db));
}

TEST_CASE("config errors name the key and the line") {
    auto message = [](const std::string& text) {
        try {
            parse_config_text(text, "cfg");
        } catch (const ConfigError& e) {
            return std::string(e.what());
        }
        return std::string();
    };
    const std::string neg = message("n_symbols = 5\nsigma_deg = -1\n");
    CHECK(neg.find("sigma_deg") != std::string::npos);
    CHECK(neg.find("cfg:2") != std::string::npos);
    CHECK(message("bogus_key = 3\n").find("bogus_key") != std::string::npos);
    CHECK(message("n_symbols = ten\n").find("n_symbols") != std::string::npos);
    CHECK(message("just words\n").find("cfg:1") != std::string::npos);
    CHECK(message("scenario = fig99\n").find("scenario") != std::string::npos);
    CHECK(message("d =\n").find("missing value") != std::string::npos);
}

TEST_CASE("pn_file selects measured-sample ingestion") {
    const Scenario sc = parse_config_text("pn_file = samples.txt\n", "cfg", "/data/run");
    CHECK(sc.pn_file == fs::path("/data/run/samples.txt"));

    const fs::path dir = fs::temp_directory_path() / "pnc_harness_pn";
    fs::create_directories(dir);
    {
        std::ofstream f(dir / "samples.txt");
        for (int i = 0; i < 64 * 12; ++i) f << 0.01 * std::sin(0.05 * i) << "\n";
    }
    {
        std::ofstream f(dir / "run.cfg");
        f << "pn_file = samples.txt\nn_channels = 2\nn_symbols = 5\nd = 0, 4\nbases = dft\n";
    }
    const Scenario from_file = parse_config(dir / "run.cfg");
    CHECK(from_file.pn_file == dir / "samples.txt");
    const auto rows = run_scenario(from_file);
    CHECK(rows.size() == 2);
    fs::remove_all(dir);
}

TEST_CASE("evm_vs_d axis convention: d = 0 is no compensation, d = 1 is CPE") {
    Scenario sc = parse_config_text("n_channels = 3\nn_symbols = 20\nd = 0, 1\nbases = dft\n");
    const auto rows = run_scenario(sc);
    REQUIRE(rows.size() == 2);
    const ResultRow& none = find_row(rows, "none", 0);
    const ResultRow& cpe = find_row(rows, "dft", 1);
    CHECK(none.method == "none");
    CHECK(cpe.evm_db < none.evm_db);
    CHECK(cpe.equations == 32.0);
}

TEST_CASE("sigma = 0 point carries no phase-noise contribution") {
    // Baseline without any phase noise: a measured-sample file of zero phases.
    const fs::path dir = fs::temp_directory_path() / "pnc_harness_zero_pn";
    fs::create_directories(dir);
    {
        std::ofstream f(dir / "zeros.txt");
        for (int i = 0; i < 64 * 4; ++i) f << "0\n";
    }
    const std::string common = "n_channels = 4\nn_symbols = 30\nd = 0, 1, 8\nbases = kl, dft\n";
    const auto swept = run_scenario(parse_config_text("scenario = evm_vs_sigma\nsigma_list = 0, 3\n" + common));
    const auto clean = run_scenario(parse_config_text("pn_file = zeros.txt\n" + common, "cfg", dir));
    for (const auto& [basis, d] : std::vector<std::pair<std::string, int>>{{"none", 0}, {"kl", 1}, {"dft", 1}, {"kl", 8}, {"dft", 8}}) {
        CHECK(std::abs(find_row(swept, basis, d, 0.0).evm_db - find_row(clean, basis, d).evm_db) < 0.1);
        CHECK(find_row(swept, basis, d, 3.0).evm_db > find_row(swept, basis, d, 0.0).evm_db);
    }
    fs::remove_all(dir);
}

TEST_CASE("aggregate EVM is the dB of the mean linear ratio") {
    Scenario sc = parse_config_text("n_channels = 2\nn_symbols = 10\nd = 4\nbases = dft\nper_symbol_rows = true\n");
    const auto rows = run_scenario(sc);
    double sum = 0.0, sum_db = 0.0;
    int count = 0;
    for (const ResultRow& r : rows) {
        if (!r.aggregate) {
            sum += std::pow(10.0, r.evm_db / 10.0);
            sum_db += r.evm_db;
            ++count;
        }
    }
    REQUIRE(count == 20);
    const double agg = find_row(rows, "dft", 4).evm_db;
    CHECK(std::abs(agg - 10.0 * std::log10(sum / count)) < 1e-4);
    CHECK(std::abs(agg - sum_db / count) > 1e-3);
}

TEST_CASE("same master seed gives byte-identical CSV regardless of thread count") {
    Scenario sc = parse_config_text("n_channels = 4\nn_symbols = 10\nd = 0, 2, 6\nper_symbol_rows = true\n");
    sc.threads = 1;
    const std::string a = csv_of(run_scenario(sc));
    sc.threads = 3;
    const std::string b = csv_of(run_scenario(sc));
    CHECK(a == b);
    sc.seed = 2;
    CHECK(csv_of(run_scenario(sc)) != a);
}

TEST_CASE("csv header is fixed") {
    CHECK(csv_header() ==
          "scenario,channel_seed,symbol_index,aggregate,basis_kind,d,sigma_deg,tx_sigma_deg,method,evm_db,ser,"
          "equations,wall_ms");
}

TEST_CASE("every scenario kind runs") {
    const auto mimo = run_scenario(parse_config_text(
        "scenario = mimo_sweep\nn_channels = 2\nn_symbols = 4\nsigma_list = 3\ntx_sigma_list = 0, 1\nd = 0, 4\n"));
    CHECK(mimo.size() == 2 * 3);
    const auto track = run_scenario(parse_config_text(
        "scenario = tracking\nn_channels = 1\nn_symbols = 20\nbases = tracked, dft\nd = 4\noffset_ppm = 1\n"));
    CHECK(track.size() == 2 * 20 + 2);
    const auto custom = run_scenario(parse_config_text("scenario = custom\nn_channels = 1\nn_symbols = 3\nd = 5\n"));
    CHECK(custom.size() == 3 + 1);
    CHECK_THROWS_AS(run_scenario(parse_config_text("bases = tracked\n")), ConfigError);
}

TEST_CASE("cli exit codes") {
    const fs::path dir = fs::temp_directory_path() / "pnc_cli_test";
    fs::create_directories(dir);
    {
        std::ofstream(dir / "ok.cfg") << "n_channels = 1\nn_symbols = 2\nd = 0, 1\n";
        std::ofstream(dir / "bad.cfg") << "no_such_key = 1\n";
    }
    const std::string cli = PNC_CLI_PATH;
    auto run = [&](const std::string& args) {
        const int rc = std::system((cli + " " + args + " > /dev/null 2>&1").c_str());
        return WEXITSTATUS(rc);
    };
    CHECK(run("run --config " + (dir / "ok.cfg").string() + " --out " + (dir / "o.csv").string()) == 0);
    CHECK(fs::exists(dir / "o.csv"));
    CHECK(run("run --config " + (dir / "bad.cfg").string() + " --out " + (dir / "b.csv").string()) == 2);
    CHECK(run("run --config " + (dir / "missing.cfg").string()) == 2);
    CHECK(run("run --config " + (dir / "ok.cfg").string() + " --scenario nope") == 2);
    fs::remove_all(dir);
}
