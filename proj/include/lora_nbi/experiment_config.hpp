#pragma once

// Flat experiment configuration.
//
//   # comment
//   experiment = fit_table
//   sf = 7, 8, 9
//   rssi_grid = -145:-110:1
//
// One `key = value` per line. Grids are `start:stop:step` (inclusive) or a
// single value. Lists are comma separated. Unknown keys are errors.

#include "lora_nbi/channel.hpp"
#include "lora_nbi/sweeps.hpp"
#include "lora_nbi/waveforms.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

namespace lora_nbi {

enum class ExperimentKind { ser_vs_rssi, ser_vs_inr, inr_threshold, fit_table, validate_spa, waveform_dump };
enum class OutputFormat { csv, json };

inline std::string_view to_string(ExperimentKind e) {
    switch (e) {
        case ExperimentKind::ser_vs_rssi: return "ser_vs_rssi";
        case ExperimentKind::ser_vs_inr: return "ser_vs_inr";
        case ExperimentKind::inr_threshold: return "inr_threshold";
        case ExperimentKind::fit_table: return "fit_table";
        case ExperimentKind::validate_spa: return "validate_spa";
        case ExperimentKind::waveform_dump: return "waveform_dump";
    }
    return "?";
}

inline std::string_view to_string(OutputFormat f) { return f == OutputFormat::csv ? "csv" : "json"; }

inline constexpr ExperimentKind kAllExperiments[] = {
    ExperimentKind::ser_vs_rssi, ExperimentKind::ser_vs_inr,   ExperimentKind::inr_threshold,
    ExperimentKind::fit_table,   ExperimentKind::validate_spa, ExperimentKind::waveform_dump};

inline std::optional<ExperimentKind> parse_experiment_kind(std::string_view s) {
    for (auto e : kAllExperiments) {
        if (to_string(e) == s) return e;
    }
    return std::nullopt;
}

class ConfigError : public std::runtime_error {
public:
    ConfigError(std::size_t line, std::string key, const std::string& what)
        : std::runtime_error(line ? "line " + std::to_string(line) + ": " + what : what),
          line_(line), key_(std::move(key)) {}

    std::size_t line() const noexcept { return line_; }  // 0 when not tied to a line
    const std::string& key() const noexcept { return key_; }

private:
    std::size_t line_;
    std::string key_;
};

struct Grid {
    double start = 0.0;
    double stop = 0.0;
    double step = 1.0;

    std::vector<double> values() const {
        const auto count = static_cast<std::size_t>(std::floor((stop - start) / step + 1e-9)) + 1;
        std::vector<double> v(count);
        for (std::size_t i = 0; i < count; ++i) v[i] = start + static_cast<double>(i) * step;
        return v;
    }

    friend bool operator==(const Grid&, const Grid&) = default;
};

struct ExperimentConfig {
    ExperimentKind experiment = ExperimentKind::ser_vs_rssi;
    std::vector<int> sf_list{7};
    std::vector<InterfererKind> kind_list{InterfererKind::bpsk, InterfererKind::gmsk, InterfererKind::awgn_control};
    Grid rssi_grid{-145.0, -110.0, 1.0};
    Grid snr_grid{0.0, 0.0, 1.0};
    Grid inr_grid{-20.0, 30.0, 1.0};
    Grid fit_snr_offsets{1.0, 35.0, 1.0};  // fit SNRs relative to the pole
    double inr_step_db = kDefaultInrStepDb;
    double start_offset_db = kDefaultStartOffsetDb;  // scan starts at SNR + offset
    std::size_t trials = 10000;
    std::uint64_t seed = 1;
    std::string output_path;  // empty: derived from the experiment name
    std::string points_output;
    OutputFormat output_format = OutputFormat::csv;
    NoiseModel noise;
    InterfererParams interferer;  // kind is taken from kind_list
    std::size_t spa_draws = 10;
    double dump_duration_s = 0.1;
    double dump_sample_rate_hz = LoRaConfig::kDefaultBandwidthHz;
    double dump_freq_offset_hz = 0.0;
    double dump_power_mw = 1.0;

    std::string resolved_output() const {
        return output_path.empty() ? std::string(to_string(experiment)) + "." + std::string(to_string(output_format))
                                   : output_path;
    }

    friend bool operator==(const ExperimentConfig&, const ExperimentConfig&) = default;
};

namespace detail {

inline std::string_view trim(std::string_view s) {
    const auto* ws = " \t\r";
    const auto b = s.find_first_not_of(ws);
    if (b == std::string_view::npos) return {};
    return s.substr(b, s.find_last_not_of(ws) - b + 1);
}

inline std::vector<std::string_view> split(std::string_view s, char sep) {
    std::vector<std::string_view> out;
    std::size_t pos = 0;
    while (true) {
        const auto next = s.find(sep, pos);
        out.push_back(trim(s.substr(pos, next == std::string_view::npos ? std::string_view::npos : next - pos)));
        if (next == std::string_view::npos) return out;
        pos = next + 1;
    }
}

inline std::size_t edit_distance(std::string_view a, std::string_view b) {
    std::vector<std::size_t> row(b.size() + 1);
    for (std::size_t j = 0; j <= b.size(); ++j) row[j] = j;
    for (std::size_t i = 1; i <= a.size(); ++i) {
        std::size_t diag = row[0];
        row[0] = i;
        for (std::size_t j = 1; j <= b.size(); ++j) {
            const std::size_t up = row[j];
            row[j] = std::min({row[j] + 1, row[j - 1] + 1, diag + (a[i - 1] == b[j - 1] ? 0 : 1)});
            diag = up;
        }
    }
    return row[b.size()];
}

inline std::string format_double(double v) {
    char buf[64];
    const auto r = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, r.ptr);
}

template <class T>
bool parse_number(std::string_view s, T& out) {
    if (s.empty()) return false;
    if constexpr (std::is_floating_point_v<T>) {
        if (s.front() == '+') s.remove_prefix(1);
    }
    const auto r = std::from_chars(s.data(), s.data() + s.size(), out);
    return r.ec == std::errc{} && r.ptr == s.data() + s.size();
}

class ConfigParser {
public:
    using Setter = void (*)(ConfigParser&, ExperimentConfig&, std::string_view);

    // `fallback` stands in for a missing `experiment` key.
    ExperimentConfig parse(std::string_view text, std::optional<ExperimentKind> fallback = std::nullopt) {
        ExperimentConfig cfg;
        if (fallback) cfg.experiment = *fallback;
        std::map<std::string, std::size_t, std::less<>> seen;
        std::size_t line_no = 0;
        for (std::string_view raw : split(text, '\n')) {
            ++line_no;
            line_ = line_no;
            const auto hash = raw.find('#');
            const std::string_view line = trim(raw.substr(0, hash));
            if (line.empty()) continue;
            const auto eq = line.find('=');
            if (eq == std::string_view::npos) fail("", "expected `key = value`, got `" + std::string(line) + "`");
            const std::string key(trim(line.substr(0, eq)));
            if (key.empty()) fail("", "missing key before `=`");
            if (auto it = seen.find(key); it != seen.end()) {
                fail(key, "duplicate key `" + key + "` (first set on line " + std::to_string(it->second) + ")");
            }
            apply(cfg, key, trim(line.substr(eq + 1)));
            seen.emplace(key, line_no);
        }
        line_ = 0;
        if (!seen.count("experiment") && !fallback) fail("experiment", "missing required key `experiment`");
        validate(cfg);
        return cfg;
    }

    void apply(ExperimentConfig& cfg, std::string_view key, std::string_view value) {
        key_ = std::string(key);
        const Setter setter = find(key_);
        if (!setter) {
            std::string msg = "unknown key `" + key_ + "`";
            if (const auto s = suggest(key_)) msg += "; did you mean `" + *s + "`?";
            fail(key_, msg);
        }
        if (value.empty()) fail(key_, "key `" + key_ + "` has an empty value");
        setter(*this, cfg, value);
    }

    void validate(const ExperimentConfig& cfg) const {
        if (cfg.noise.bandwidth_hz <= cfg.interferer.occupied_bandwidth_hz) {
            fail("occupied_bandwidth_hz", "occupied_bandwidth_hz must be below bandwidth_hz");
        }
    }

    [[noreturn]] void fail(const std::string& key, const std::string& msg) const { throw ConfigError(line_, key, msg); }
    [[noreturn]] void bad(const std::string& what) const { fail(key_, "key `" + key_ + "`: " + what); }

    double real(std::string_view s) {
        double v = 0.0;
        if (!parse_number(s, v) || !std::isfinite(v)) bad("expected a number, got `" + std::string(s) + "`");
        return v;
    }
    double positive(std::string_view s) {
        const double v = real(s);
        if (!(v > 0.0)) bad("must be positive");
        return v;
    }
    std::uint64_t u64(std::string_view s) {
        std::uint64_t v = 0;
        if (!parse_number(s, v)) bad("expected a non-negative integer, got `" + std::string(s) + "`");
        return v;
    }
    Grid grid(std::string_view s) {
        const auto parts = split(s, ':');
        Grid g;
        if (parts.size() == 1) {
            g.start = g.stop = real(parts[0]);
            return g;
        }
        if (parts.size() != 3) bad("malformed grid `" + std::string(s) + "`; expected start:stop:step");
        g.start = real(parts[0]);
        g.stop = real(parts[1]);
        g.step = real(parts[2]);
        if (!(g.step > 0.0)) bad("grid step must be positive");
        if (g.stop < g.start) bad("grid stop is below start");
        return g;
    }

    static const std::map<std::string, Setter, std::less<>>& table();

private:
    static Setter find(std::string_view key) {
        const auto& t = table();
        const auto it = t.find(key);
        return it == t.end() ? nullptr : it->second;
    }

    static std::optional<std::string> suggest(std::string_view key) {
        std::optional<std::string> best;
        std::size_t best_d = 3;  // suggest only close matches
        for (const auto& [k, _] : table()) {
            const auto d = edit_distance(key, k);
            if (d < best_d) {
                best_d = d;
                best = k;
            }
        }
        return best;
    }

    std::size_t line_ = 0;
    std::string key_;
};

inline const std::map<std::string, ConfigParser::Setter, std::less<>>& ConfigParser::table() {
    static const std::map<std::string, Setter, std::less<>> t = {
        {"experiment",
         [](ConfigParser& p, ExperimentConfig& c, std::string_view v) {
             const auto e = parse_experiment_kind(v);
             if (!e) p.bad("unknown experiment `" + std::string(v) + "`");
             c.experiment = *e;
         }},
        {"sf",
         [](ConfigParser& p, ExperimentConfig& c, std::string_view v) {
             c.sf_list.clear();
             for (auto item : split(v, ',')) {
                 const auto sf = p.u64(item);
                 if (sf < 7 || sf > 12) p.bad("spreading factor " + std::string(item) + " outside 7..12");
                 if (std::find(c.sf_list.begin(), c.sf_list.end(), int(sf)) != c.sf_list.end()) {
                     p.bad("spreading factor " + std::string(item) + " listed twice");
                 }
                 c.sf_list.push_back(static_cast<int>(sf));
             }
         }},
        {"kind",
         [](ConfigParser& p, ExperimentConfig& c, std::string_view v) {
             c.kind_list.clear();
             for (auto item : split(v, ',')) {
                 const auto k = parse_interferer_kind(item);
                 if (!k) p.bad("unknown interferer kind `" + std::string(item) + "`; expected bpsk, gmsk or awgn");
                 if (std::find(c.kind_list.begin(), c.kind_list.end(), *k) != c.kind_list.end()) {
                     p.bad("interferer kind `" + std::string(item) + "` listed twice");
                 }
                 c.kind_list.push_back(*k);
             }
         }},
        {"rssi_grid", [](ConfigParser& p, ExperimentConfig& c, std::string_view v) { c.rssi_grid = p.grid(v); }},
        {"snr_grid", [](ConfigParser& p, ExperimentConfig& c, std::string_view v) { c.snr_grid = p.grid(v); }},
        {"inr_grid", [](ConfigParser& p, ExperimentConfig& c, std::string_view v) { c.inr_grid = p.grid(v); }},
        {"fit_snr_offsets",
         [](ConfigParser& p, ExperimentConfig& c, std::string_view v) {
             c.fit_snr_offsets = p.grid(v);
             if (!(c.fit_snr_offsets.start > 0.0)) p.bad("offsets must be above the pole (start > 0)");
         }},
        {"inr_step_db", [](ConfigParser& p, ExperimentConfig& c, std::string_view v) { c.inr_step_db = p.positive(v); }},
        {"start_offset_db",
         [](ConfigParser& p, ExperimentConfig& c, std::string_view v) { c.start_offset_db = p.real(v); }},
        {"trials",
         [](ConfigParser& p, ExperimentConfig& c, std::string_view v) {
             const auto t = p.u64(v);
             if (t < 1) p.bad("must be at least 1");
             c.trials = static_cast<std::size_t>(t);
         }},
        {"seed", [](ConfigParser& p, ExperimentConfig& c, std::string_view v) { c.seed = p.u64(v); }},
        {"output", [](ConfigParser&, ExperimentConfig& c, std::string_view v) { c.output_path = std::string(v); }},
        {"points_output",
         [](ConfigParser&, ExperimentConfig& c, std::string_view v) { c.points_output = std::string(v); }},
        {"format",
         [](ConfigParser& p, ExperimentConfig& c, std::string_view v) {
             if (v == "csv") {
                 c.output_format = OutputFormat::csv;
             } else if (v == "json") {
                 c.output_format = OutputFormat::json;
             } else {
                 p.bad("expected csv or json, got `" + std::string(v) + "`");
             }
         }},
        {"bandwidth_hz",
         [](ConfigParser& p, ExperimentConfig& c, std::string_view v) {
             c.noise.bandwidth_hz = p.positive(v);
         }},
        {"noise_figure_db",
         [](ConfigParser& p, ExperimentConfig& c, std::string_view v) { c.noise.noise_figure_db = p.real(v); }},
        {"temperature_k",
         [](ConfigParser& p, ExperimentConfig& c, std::string_view v) { c.noise.temperature_k = p.positive(v); }},
        {"occupied_bandwidth_hz",
         [](ConfigParser& p, ExperimentConfig& c, std::string_view v) {
             c.interferer.occupied_bandwidth_hz = p.positive(v);
         }},
        {"bit_rate_hz",
         [](ConfigParser& p, ExperimentConfig& c, std::string_view v) { c.interferer.bit_rate_hz = p.positive(v); }},
        {"gmsk_bt", [](ConfigParser& p, ExperimentConfig& c, std::string_view v) { c.interferer.gmsk_bt = p.positive(v); }},
        {"modulation_index",
         [](ConfigParser& p, ExperimentConfig& c, std::string_view v) {
             c.interferer.modulation_index = p.positive(v);
         }},
        {"bpsk_pulse",
         [](ConfigParser& p, ExperimentConfig& c, std::string_view v) {
             const auto f = parse_pulse_family(v);
             if (!f) p.bad("expected rc or rrc, got `" + std::string(v) + "`");
             c.interferer.bpsk_pulse = *f;
         }},
        {"bpsk_rolloff",
         [](ConfigParser& p, ExperimentConfig& c, std::string_view v) {
             const double r = p.real(v);
             if (!(r > 0.0 && r <= 1.0)) p.bad("roll-off must be in (0, 1]");
             c.interferer.bpsk_rolloff = r;
         }},
        {"spa_draws",
         [](ConfigParser& p, ExperimentConfig& c, std::string_view v) {
             const auto d = p.u64(v);
             if (d < 1) p.bad("must be at least 1");
             c.spa_draws = static_cast<std::size_t>(d);
         }},
        {"dump_duration_s",
         [](ConfigParser& p, ExperimentConfig& c, std::string_view v) { c.dump_duration_s = p.positive(v); }},
        {"dump_sample_rate_hz",
         [](ConfigParser& p, ExperimentConfig& c, std::string_view v) { c.dump_sample_rate_hz = p.positive(v); }},
        {"dump_freq_offset_hz",
         [](ConfigParser& p, ExperimentConfig& c, std::string_view v) { c.dump_freq_offset_hz = p.real(v); }},
        {"dump_power_mw",
         [](ConfigParser& p, ExperimentConfig& c, std::string_view v) {
             const double w = p.real(v);
             if (w < 0.0) p.bad("must not be negative");
             c.dump_power_mw = w;
         }},
    };
    return t;
}

inline std::string render_grid(const Grid& g) {
    return format_double(g.start) + ":" + format_double(g.stop) + ":" + format_double(g.step);
}

}  // namespace detail

inline ExperimentConfig parse_config(std::string_view text,
                                     std::optional<ExperimentKind> fallback = std::nullopt) {
    return detail::ConfigParser{}.parse(text, fallback);
}

// Single `key = value` override, validated like a config line.
inline void set_config_value(ExperimentConfig& cfg, std::string_view key, std::string_view value) {
    detail::ConfigParser p;
    p.apply(cfg, detail::trim(key), detail::trim(value));
    p.validate(cfg);
}

// Every key, in a form parse_config() reads back to an equal config.
inline std::string render_config(const ExperimentConfig& c) {
    using detail::format_double;
    std::ostringstream os;
    os << "experiment = " << to_string(c.experiment) << "\n";
    os << "sf = ";
    for (std::size_t i = 0; i < c.sf_list.size(); ++i) os << (i ? ", " : "") << c.sf_list[i];
    os << "\nkind = ";
    for (std::size_t i = 0; i < c.kind_list.size(); ++i) os << (i ? ", " : "") << to_string(c.kind_list[i]);
    os << "\nrssi_grid = " << detail::render_grid(c.rssi_grid) << "\n";
    os << "snr_grid = " << detail::render_grid(c.snr_grid) << "\n";
    os << "inr_grid = " << detail::render_grid(c.inr_grid) << "\n";
    os << "fit_snr_offsets = " << detail::render_grid(c.fit_snr_offsets) << "\n";
    os << "inr_step_db = " << format_double(c.inr_step_db) << "\n";
    os << "start_offset_db = " << format_double(c.start_offset_db) << "\n";
    os << "trials = " << c.trials << "\n";
    os << "seed = " << c.seed << "\n";
    if (!c.output_path.empty()) os << "output = " << c.output_path << "\n";
    if (!c.points_output.empty()) os << "points_output = " << c.points_output << "\n";
    os << "format = " << to_string(c.output_format) << "\n";
    os << "bandwidth_hz = " << format_double(c.noise.bandwidth_hz) << "\n";
    os << "noise_figure_db = " << format_double(c.noise.noise_figure_db) << "\n";
    os << "temperature_k = " << format_double(c.noise.temperature_k) << "\n";
    os << "occupied_bandwidth_hz = " << format_double(c.interferer.occupied_bandwidth_hz) << "\n";
    os << "bit_rate_hz = " << format_double(c.interferer.bit_rate_hz) << "\n";
    os << "gmsk_bt = " << format_double(c.interferer.gmsk_bt) << "\n";
    os << "modulation_index = " << format_double(c.interferer.modulation_index) << "\n";
    os << "bpsk_pulse = " << to_string(c.interferer.bpsk_pulse) << "\n";
    os << "bpsk_rolloff = " << format_double(c.interferer.bpsk_rolloff) << "\n";
    os << "spa_draws = " << c.spa_draws << "\n";
    os << "dump_duration_s = " << format_double(c.dump_duration_s) << "\n";
    os << "dump_sample_rate_hz = " << format_double(c.dump_sample_rate_hz) << "\n";
    os << "dump_freq_offset_hz = " << format_double(c.dump_freq_offset_hz) << "\n";
    os << "dump_power_mw = " << format_double(c.dump_power_mw) << "\n";
    return os.str();
}

}  // namespace lora_nbi
