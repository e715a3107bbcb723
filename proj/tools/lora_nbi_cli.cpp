// lora-nbi: run one experiment from a config file and/or flags.
//
//   lora-nbi fit_table --config configs/fit_table.conf --out fits.csv
//   lora-nbi ser_vs_rssi --set sf=7 --set rssi_grid=-130:-118:1

#include "lora_nbi/lora_nbi.hpp"

#include <CLI11.hpp>

#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace {

enum Exit { kOk = 0, kRuntimeError = 1, kConfigError = 2, kIoError = 3 };

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw lora_nbi::OutputError("cannot read config file `" + path + "`");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

struct Flags {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<std::uint64_t> trials;
    std::string out;
    std::string format;
    std::optional<unsigned> workers;
    std::vector<std::string> sets;
    bool print_config = false;
};

lora_nbi::ExperimentConfig build_config(lora_nbi::ExperimentKind kind, const Flags& f) {
    using namespace lora_nbi;
    ExperimentConfig cfg;
    cfg.experiment = kind;
    if (!f.config_path.empty()) {
        try {
            cfg = parse_config(read_file(f.config_path), kind);
        } catch (const ConfigError& e) {
            throw ConfigError(e.line(), e.key(), f.config_path + ": " + e.what());
        }
        if (cfg.experiment != kind) {
            throw ConfigError(0, "experiment",
                              f.config_path + " sets experiment = " + std::string(to_string(cfg.experiment)) +
                                  " but the subcommand is " + std::string(to_string(kind)));
        }
    }
    for (const auto& s : f.sets) {
        const auto eq = s.find('=');
        if (eq == std::string::npos) throw ConfigError(0, "", "--set expects key=value, got `" + s + "`");
        if (detail::trim(std::string_view(s).substr(0, eq)) == "experiment") {
            throw ConfigError(0, "experiment", "--set cannot change the experiment; use the subcommand");
        }
        set_config_value(cfg, std::string_view(s).substr(0, eq), std::string_view(s).substr(eq + 1));
    }
    if (f.seed) set_config_value(cfg, "seed", std::to_string(*f.seed));
    if (f.trials) set_config_value(cfg, "trials", std::to_string(*f.trials));
    if (!f.out.empty()) set_config_value(cfg, "output", f.out);
    if (!f.format.empty()) set_config_value(cfg, "format", f.format);
    return cfg;
}

}  // namespace

int main(int argc, char** argv) {
    using namespace lora_nbi;
    CLI::App app{"LoRa CSS robustness against narrowband interference"};
    app.set_version_flag("--version", std::string(kVersion));
    app.require_subcommand(1);

    Flags flags;
    std::vector<std::pair<CLI::App*, ExperimentKind>> subs;
    const std::pair<ExperimentKind, const char*> help[] = {
        {ExperimentKind::ser_vs_rssi, "noise-only SER versus RSSI and the zero-error threshold R_T"},
        {ExperimentKind::ser_vs_inr, "SER versus INR at fixed SNR per interferer kind"},
        {ExperimentKind::inr_threshold, "highest zero-error INR for each SNR of snr_grid"},
        {ExperimentKind::fit_table, "threshold curves and the fitted (alpha, beta, gamma) table"},
        {ExperimentKind::validate_spa, "per-bin exact versus stationary-phase interference magnitudes"},
        {ExperimentKind::waveform_dump, "interferer waveforms as index,real,imag"},
    };
    for (const auto& [kind, text] : help) {
        CLI::App* sub = app.add_subcommand(std::string(to_string(kind)), text);
        sub->add_option("--config", flags.config_path, "key = value config file")->check(CLI::ExistingFile);
        sub->add_option("--seed", flags.seed, "64-bit seed");
        sub->add_option("--trials", flags.trials, "trials per measurement");
        sub->add_option("--out", flags.out, "output path");
        sub->add_option("--format", flags.format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
        sub->add_option("--workers", flags.workers,
                        std::string("worker threads (speed only; default from ") + kWorkersEnv + ")")
            ->check(CLI::PositiveNumber);
        sub->add_option("--set", flags.sets, "override one config key, key=value (repeatable)");
        sub->add_flag("--print-config", flags.print_config, "print the resolved config and exit");
        subs.emplace_back(sub, kind);
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kConfigError;
    }

    ExperimentKind kind{};
    for (const auto& [sub, k] : subs) {
        if (sub->parsed()) kind = k;
    }

    try {
        const ExperimentConfig cfg = build_config(kind, flags);
        if (flags.print_config) {
            std::cout << render_config(cfg);
            return kOk;
        }
        RunOptions opt;
        if (flags.workers) opt.workers = *flags.workers;
        opt.progress = [](const std::string& msg) { std::cerr << "[lora-nbi] " << msg << "\n"; };
        const RunReport report = run_experiment(cfg, opt);
        std::cout << report.summary;
        for (const auto& f : report.files) std::cerr << "[lora-nbi] wrote " << f << "\n";
        return kOk;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kConfigError;
    } catch (const OutputError& e) {
        std::cerr << "I/O error: " << e.what() << "\n";
        return kIoError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kRuntimeError;
    }
}
