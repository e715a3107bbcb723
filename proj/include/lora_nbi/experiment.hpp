#pragma once

// Experiment orchestration and result files. Every row carries the experiment
// id, schema and toolkit versions and the seed, so a file stands on its own.

#include "lora_nbi/channel.hpp"
#include "lora_nbi/experiment_config.hpp"
#include "lora_nbi/fitting.hpp"
#include "lora_nbi/stationary_phase.hpp"
#include "lora_nbi/sweeps.hpp"
#include "lora_nbi/version.hpp"
#include "lora_nbi/waveforms.hpp"

#include <json.hpp>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iomanip>
#include <memory>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace lora_nbi {

class OutputError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// One table cell: preformatted text plus how to type it in JSON.
struct Cell {
    enum class Type { number, integer, text, empty };
    std::string text;
    Type type = Type::text;
};

struct Table {
    std::vector<std::string> columns;
    std::vector<std::vector<Cell>> rows;
};

namespace fmt {

inline std::string printf_str(const char* spec, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, spec, v);
    std::string s(buf);
    // Never print a negative zero.
    if (s.front() == '-' && s.find_first_not_of("-0.e+", 0) == std::string::npos) s.erase(0, 1);
    return s;
}

inline Cell db(double v) { return {printf_str("%.2f", v), Cell::Type::number}; }
inline Cell prob(double v) { return {printf_str("%.3e", v), Cell::Type::number}; }
inline Cell slope(double v) { return {printf_str("%.4f", v), Cell::Type::number}; }
inline Cell r2(double v) { return {printf_str("%.6f", v), Cell::Type::number}; }
inline Cell real(double v) { return {printf_str("%.9e", v), Cell::Type::number}; }
inline Cell hz(double v) { return {printf_str("%.3f", v), Cell::Type::number}; }
inline Cell integer(std::uint64_t v) { return {std::to_string(v), Cell::Type::integer}; }
inline Cell text(std::string_view s) { return {std::string(s), Cell::Type::text}; }
inline Cell empty() { return {"", Cell::Type::empty}; }

}  // namespace fmt

inline std::string csv_escape(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

inline void write_csv(std::ostream& os, const Table& t) {
    for (std::size_t i = 0; i < t.columns.size(); ++i) os << (i ? "," : "") << t.columns[i];
    os << "\n";
    for (const auto& row : t.rows) {
        for (std::size_t i = 0; i < row.size(); ++i) os << (i ? "," : "") << csv_escape(row[i].text);
        os << "\n";
    }
}

inline void write_json(std::ostream& os, const Table& t) {
    nlohmann::ordered_json rows = nlohmann::ordered_json::array();
    for (const auto& row : t.rows) {
        nlohmann::ordered_json obj = nlohmann::ordered_json::object();
        for (std::size_t i = 0; i < row.size(); ++i) {
            const Cell& c = row[i];
            switch (c.type) {
                case Cell::Type::number: obj[t.columns[i]] = std::strtod(c.text.c_str(), nullptr); break;
                case Cell::Type::integer: obj[t.columns[i]] = std::strtoull(c.text.c_str(), nullptr, 10); break;
                case Cell::Type::text: obj[t.columns[i]] = c.text; break;
                case Cell::Type::empty: obj[t.columns[i]] = nullptr; break;
            }
        }
        rows.push_back(std::move(obj));
    }
    nlohmann::ordered_json doc;
    doc["columns"] = t.columns;
    doc["rows"] = std::move(rows);
    os << doc.dump(2) << "\n";
}

inline void write_table(std::ostream& os, const Table& t, OutputFormat f) {
    if (f == OutputFormat::csv) {
        write_csv(os, t);
    } else {
        write_json(os, t);
    }
}

// Fixed-width rendering of selected columns for the terminal.
inline std::string summary_table(const Table& t, const std::vector<std::string>& cols) {
    std::vector<std::size_t> idx;
    for (const auto& c : cols) {
        for (std::size_t i = 0; i < t.columns.size(); ++i) {
            if (t.columns[i] == c) idx.push_back(i);
        }
    }
    std::vector<std::size_t> width;
    for (std::size_t i : idx) {
        std::size_t w = t.columns[i].size();
        for (const auto& r : t.rows) w = std::max(w, r[i].text.size());
        width.push_back(w);
    }
    std::ostringstream os;
    for (std::size_t j = 0; j < idx.size(); ++j) os << (j ? "  " : "") << std::setw(int(width[j])) << t.columns[idx[j]];
    os << "\n";
    for (const auto& r : t.rows) {
        for (std::size_t j = 0; j < idx.size(); ++j) os << (j ? "  " : "") << std::setw(int(width[j])) << r[idx[j]].text;
        os << "\n";
    }
    return os.str();
}

struct RunOptions {
    unsigned workers = default_workers();
    std::function<void(const std::string&)> progress;  // diagnostic messages, may be empty
};

struct RunReport {
    std::vector<std::string> files;
    std::string summary;
    std::vector<Table> tables;  // one per file, in the same order
};

// Stationary-phase test case: an un-offset unit-power envelope segment and the
// offset to apply to it.
struct SpaCase {
    ComplexBaseband segment;
    double delta_f_hz = 0.0;
};

inline SpaCase draw_spa_case(const LoRaConfig& cfg, const NoiseModel& noise, InterfererParams ip,
                             std::uint64_t seed, std::uint64_t draw) {
    const TrialEngine engine(cfg, noise, ip, seed);
    RngStream rng(seed, draw);
    const auto [lo, hi] = engine.offset_range();
    if (ip.kind == InterfererKind::awgn_control) {
        ComplexBaseband seg = gen_awgn(cfg.n(), 1.0, rng, cfg.bandwidth_hz());
        return {std::move(seg), rng.uniform(lo, hi)};
    }
    const InterferenceBatch batch = engine.generate_batch(rng);
    const double df = rng.uniform(lo, hi);
    return {random_segment(*batch.waveform, cfg.n(), rng, batch.guard), df};
}

// Generator used by waveform_dump; power 0 gives an all-zero waveform.
inline ComplexBaseband dump_waveform(const ExperimentConfig& c, InterfererKind kind, RngStream& rng) {
    const double fs = c.dump_sample_rate_hz;
    const InterfererParams& ip = c.interferer;
    ComplexBaseband w = [&] {
        switch (kind) {
            case InterfererKind::bpsk:
                return gen_bpsk(ip.bit_rate_hz, c.dump_duration_s, fs, NyquistPulse(ip.bpsk_pulse, ip.bpsk_rolloff), rng);
            case InterfererKind::gmsk:
                return gen_gmsk(ip.bit_rate_hz, GaussianPhasePulse(ip.gmsk_bt), c.dump_duration_s, fs, rng,
                                ip.modulation_index);
            case InterfererKind::awgn_control:
                break;
        }
        return gen_awgn(detail::sample_count(c.dump_duration_s, fs), 1.0, rng, fs);
    }();
    if (c.dump_power_mw == 0.0) return ComplexBaseband(std::vector<cplx>(w.size()), fs);
    return apply_freq_offset(normalize_power(w, c.dump_power_mw), c.dump_freq_offset_hz);
}

namespace detail {

inline std::vector<std::string> meta_columns() { return {"experiment", "schema_version", "toolkit_version", "seed"}; }

inline std::vector<Cell> meta_cells(const ExperimentConfig& c) {
    return {fmt::text(to_string(c.experiment)), fmt::integer(kSchemaVersion), fmt::text(kVersion),
            fmt::integer(c.seed)};
}

inline Table make_table(const std::vector<std::string>& cols) {
    Table t;
    t.columns = meta_columns();
    t.columns.insert(t.columns.end(), cols.begin(), cols.end());
    return t;
}

inline void add_row(Table& t, const ExperimentConfig& c, std::vector<Cell> cells) {
    std::vector<Cell> row = meta_cells(c);
    row.insert(row.end(), std::make_move_iterator(cells.begin()), std::make_move_iterator(cells.end()));
    if (row.size() != t.columns.size()) throw std::logic_error("row width does not match the table header");
    t.rows.push_back(std::move(row));
}

inline std::string status_name(const ThresholdOutcome& o) {
    if (!o.failure) return "ok";
    return *o.failure == ThresholdSearchError::Reason::start_error_free ? "start_error_free" : "floor_reached";
}

inline void say(const RunOptions& opt, const std::string& msg) {
    if (opt.progress) opt.progress(msg);
}

inline LoRaConfig lora(const ExperimentConfig& c, int sf) { return LoRaConfig(sf, c.noise.bandwidth_hz); }

inline InterfererParams interferer_for(const ExperimentConfig& c, InterfererKind kind) {
    InterfererParams ip = c.interferer;
    ip.kind = kind;
    return ip;
}

inline std::vector<ThresholdQuery> queries_for(const std::vector<double>& snrs, double offset) {
    std::vector<ThresholdQuery> q;
    for (double s : snrs) q.push_back({s, s + offset});
    return q;
}

}  // namespace detail

inline const std::vector<std::string>& columns_ser_vs_rssi() {
    static const std::vector<std::string> c = {"sf",   "bandwidth_hz", "noise_floor_dbm", "trials", "rssi_dbm",
                                               "snr_db", "errors",     "ser",             "ci_low", "ci_high",
                                               "r_t_dbm"};
    return c;
}
inline const std::vector<std::string>& columns_ser_vs_inr() {
    static const std::vector<std::string> c = {"sf",     "kind",   "bandwidth_hz", "noise_floor_dbm", "trials",
                                               "snr_db", "inr_db", "errors",       "ser",             "ci_low",
                                               "ci_high"};
    return c;
}
inline const std::vector<std::string>& columns_inr_threshold() {
    static const std::vector<std::string> c = {"sf",           "kind",        "trials",     "snr_db", "start_inr_db",
                                               "inr_step_db", "max_inr_db", "status"};
    return c;
}
inline const std::vector<std::string>& columns_fit_points() {
    static const std::vector<std::string> c = {"sf",           "kind",        "trials",     "pole_db", "snr_db",
                                               "start_inr_db", "inr_step_db", "max_inr_db", "status"};
    return c;
}
inline const std::vector<std::string>& columns_fit_table() {
    static const std::vector<std::string> c = {"sf",    "kind",  "trials", "r_t_dbm",   "pole_db",       "points",
                                               "alpha", "beta",  "gamma",  "r_squared", "gamma_flagged", "status"};
    return c;
}
inline const std::vector<std::string>& columns_validate_spa() {
    static const std::vector<std::string> c = {"sf", "kind",     "draw",      "delta_f_hz", "k",
                                               "n_k", "mapped_n", "exact_mag", "approx_mag"};
    return c;
}
inline const std::vector<std::string>& columns_waveform_dump() {
    static const std::vector<std::string> c = {"index", "real", "imag"};
    return c;
}

inline Table run_ser_vs_rssi(const ExperimentConfig& c, const RunOptions& opt, std::string& summary) {
    Table t = detail::make_table(columns_ser_vs_rssi());
    const auto grid = c.rssi_grid.values();
    std::ostringstream sum;
    for (int sf : c.sf_list) {
        detail::say(opt, "ser_vs_rssi: SF" + std::to_string(sf));
        const RssiSweep sweep = sweep_ser_vs_rssi(detail::lora(c, sf), c.noise, grid, c.trials, c.seed, opt.workers);
        for (const auto& p : sweep.points) {
            detail::add_row(t, c,
                            {fmt::integer(std::uint64_t(sf)), fmt::hz(c.noise.bandwidth_hz),
                             fmt::db(c.noise.noise_floor_dbm()), fmt::integer(c.trials), fmt::db(p.x),
                             fmt::db(p.x - c.noise.noise_floor_dbm()), fmt::integer(p.estimate.errors),
                             fmt::prob(p.estimate.ser()), fmt::prob(p.estimate.ci_low()),
                             fmt::prob(p.estimate.ci_high()), sweep.r_t_dbm ? fmt::db(*sweep.r_t_dbm) : fmt::empty()});
        }
        sum << "SF" << sf << "  R_T = " << (sweep.r_t_dbm ? fmt::db(*sweep.r_t_dbm).text + " dBm" : "not found");
        if (!sweep.diagnostic.empty()) sum << "  (" << sweep.diagnostic << ")";
        sum << "\n";
    }
    summary = sum.str();
    return t;
}

inline Table run_ser_vs_inr(const ExperimentConfig& c, const RunOptions& opt, std::string& summary) {
    Table t = detail::make_table(columns_ser_vs_inr());
    const auto inrs = c.inr_grid.values();
    for (int sf : c.sf_list) {
        for (auto kind : c.kind_list) {
            for (double snr : c.snr_grid.values()) {
                detail::say(opt, "ser_vs_inr: SF" + std::to_string(sf) + " " + std::string(to_string(kind)) +
                                     " SNR " + fmt::db(snr).text);
                const auto pts = sweep_ser_vs_inr(detail::lora(c, sf), c.noise, snr, detail::interferer_for(c, kind),
                                                  inrs, c.trials, c.seed, opt.workers);
                for (const auto& p : pts) {
                    detail::add_row(t, c,
                                    {fmt::integer(std::uint64_t(sf)), fmt::text(to_string(kind)),
                                     fmt::hz(c.noise.bandwidth_hz), fmt::db(c.noise.noise_floor_dbm()),
                                     fmt::integer(c.trials), fmt::db(snr), fmt::db(p.x),
                                     fmt::integer(p.estimate.errors), fmt::prob(p.estimate.ser()),
                                     fmt::prob(p.estimate.ci_low()), fmt::prob(p.estimate.ci_high())});
                }
            }
        }
    }
    summary = summary_table(t, {"sf", "kind", "snr_db", "inr_db", "errors", "ser"});
    return t;
}

inline Table run_inr_threshold(const ExperimentConfig& c, const RunOptions& opt, std::string& summary) {
    Table t = detail::make_table(columns_inr_threshold());
    const auto queries = detail::queries_for(c.snr_grid.values(), c.start_offset_db);
    for (int sf : c.sf_list) {
        for (auto kind : c.kind_list) {
            detail::say(opt, "inr_threshold: SF" + std::to_string(sf) + " " + std::string(to_string(kind)));
            const auto out = find_max_inr_curve(detail::lora(c, sf), c.noise, detail::interferer_for(c, kind),
                                                queries, c.inr_step_db, c.trials, c.seed, opt.workers);
            for (std::size_t i = 0; i < out.size(); ++i) {
                detail::add_row(t, c,
                                {fmt::integer(std::uint64_t(sf)), fmt::text(to_string(kind)), fmt::integer(c.trials),
                                 fmt::db(out[i].snr_db), fmt::db(queries[i].start_inr_db), fmt::db(c.inr_step_db),
                                 out[i].max_inr_db ? fmt::db(*out[i].max_inr_db) : fmt::empty(),
                                 fmt::text(detail::status_name(out[i]))});
            }
        }
    }
    summary = summary_table(t, {"sf", "kind", "snr_db", "max_inr_db", "status"});
    return t;
}

// Returns one fitted row per (SF, kind) and, through `points`, every
// threshold point the fits were made from.
inline Table run_fit_table(const ExperimentConfig& c, const RunOptions& opt, Table& points, std::string& summary) {
    Table t = detail::make_table(columns_fit_table());
    points = detail::make_table(columns_fit_points());
    const auto rssi = c.rssi_grid.values();
    const auto offsets = c.fit_snr_offsets.values();
    for (int sf : c.sf_list) {
        const LoRaConfig cfg = detail::lora(c, sf);
        detail::say(opt, "fit_table: SF" + std::to_string(sf) + " noise-only sweep");
        const RssiSweep sweep = sweep_ser_vs_rssi(cfg, c.noise, rssi, c.trials, c.seed, opt.workers);
        const auto sf_cell = fmt::integer(std::uint64_t(sf));
        if (!sweep.r_t_dbm || sweep.grid_limited) {
            for (auto kind : c.kind_list) {
                detail::add_row(t, c,
                                {sf_cell, fmt::text(to_string(kind)), fmt::integer(c.trials),
                                 sweep.r_t_dbm ? fmt::db(*sweep.r_t_dbm) : fmt::empty(), fmt::empty(),
                                 fmt::integer(0), fmt::empty(), fmt::empty(), fmt::empty(), fmt::empty(),
                                 fmt::empty(), fmt::text(sweep.r_t_dbm ? "r_t_grid_limited" : "r_t_not_found")});
            }
            continue;
        }
        const double pole = *sweep.r_t_dbm - c.noise.noise_floor_dbm() - 1.0;
        std::vector<double> snrs;
        for (double o : offsets) snrs.push_back(pole + o);
        const auto queries = detail::queries_for(snrs, c.start_offset_db);
        for (auto kind : c.kind_list) {
            detail::say(opt, "fit_table: SF" + std::to_string(sf) + " " + std::string(to_string(kind)));
            const auto out = find_max_inr_curve(cfg, c.noise, detail::interferer_for(c, kind), queries,
                                                c.inr_step_db, c.trials, c.seed, opt.workers);
            ThresholdCurve curve;
            curve.sf = sf;
            curve.kind = kind;
            curve.pole_db = pole;
            for (std::size_t i = 0; i < out.size(); ++i) {
                detail::add_row(points, c,
                                {sf_cell, fmt::text(to_string(kind)), fmt::integer(c.trials), fmt::db(pole),
                                 fmt::db(out[i].snr_db), fmt::db(queries[i].start_inr_db), fmt::db(c.inr_step_db),
                                 out[i].max_inr_db ? fmt::db(*out[i].max_inr_db) : fmt::empty(),
                                 fmt::text(detail::status_name(out[i]))});
                if (out[i].max_inr_db) curve.points.emplace_back(out[i].snr_db, *out[i].max_inr_db);
            }
            std::vector<Cell> row = {sf_cell, fmt::text(to_string(kind)), fmt::integer(c.trials),
                                     fmt::db(*sweep.r_t_dbm), fmt::db(pole), fmt::integer(curve.points.size())};
            try {
                const FitParams f = fit_threshold_model(curve);
                row.insert(row.end(), {fmt::slope(f.alpha), fmt::db(f.beta), fmt::db(f.gamma),
                                       f.r_squared ? fmt::r2(*f.r_squared) : fmt::text("degenerate"),
                                       fmt::integer(f.gamma_flagged() ? 1 : 0), fmt::text("ok")});
            } catch (const std::exception& e) {
                const bool few = curve.points.size() < 4;
                row.insert(row.end(), {fmt::empty(), fmt::empty(), fmt::empty(), fmt::empty(), fmt::empty(),
                                       fmt::text(few ? "insufficient_points" : "fit_failed")});
                detail::say(opt, std::string("fit_table: ") + e.what());
            }
            detail::add_row(t, c, std::move(row));
        }
    }
    summary = summary_table(t, {"sf", "kind", "r_t_dbm", "pole_db", "alpha", "beta", "gamma", "r_squared", "status"});
    return t;
}

inline Table run_validate_spa(const ExperimentConfig& c, const RunOptions& opt, std::string& summary) {
    Table t = detail::make_table(columns_validate_spa());
    std::ostringstream sum;
    sum << "sf  kind  draws  mean_rms_rel  mean_spread\n";
    for (int sf : c.sf_list) {
        const LoRaConfig cfg = detail::lora(c, sf);
        for (auto kind : c.kind_list) {
            detail::say(opt, "validate_spa: SF" + std::to_string(sf) + " " + std::string(to_string(kind)));
            const InterfererParams ip = detail::interferer_for(c, kind);
            double rms = 0.0;
            double spread = 0.0;
            for (std::size_t d = 0; d < c.spa_draws; ++d) {
                const SpaCase sc = draw_spa_case(cfg, c.noise, ip, c.seed, d);
                const ApproximationReport r = approximation_error(cfg, sc.segment, sc.delta_f_hz);
                rms += r.rms_rel;
                spread += profile_spread(r.exact);
                for (std::size_t k = 0; k < cfg.n(); ++k) {
                    detail::add_row(t, c,
                                    {fmt::integer(std::uint64_t(sf)), fmt::text(to_string(kind)), fmt::integer(d),
                                     fmt::hz(sc.delta_f_hz), fmt::integer(k), fmt::slope(r.n_k[k]),
                                     fmt::integer(mapped_sample({cfg, sc.delta_f_hz, k})), fmt::real(r.exact[k]),
                                     fmt::real(r.approx[k])});
                }
            }
            const double draws = static_cast<double>(c.spa_draws);
            sum << sf << "  " << to_string(kind) << "  " << c.spa_draws << "  " << fmt::real(rms / draws).text << "  "
                << fmt::real(spread / draws).text << "\n";
        }
    }
    summary = sum.str();
    return t;
}

inline Table run_waveform_dump(const ExperimentConfig& c, InterfererKind kind, std::size_t kind_index) {
    RngStream rng(c.seed, kind_index);
    const ComplexBaseband w = dump_waveform(c, kind, rng);
    Table t;
    t.columns = columns_waveform_dump();
    for (std::size_t i = 0; i < w.size(); ++i) {
        t.rows.push_back({fmt::integer(i), fmt::real(w[i].real()), fmt::real(w[i].imag())});
    }
    return t;
}

// "out.csv" -> "out_gmsk.csv".
inline std::string suffixed_path(const std::string& path, std::string_view suffix) {
    const auto slash = path.find_last_of('/');
    const auto dot = path.find_last_of('.');
    if (dot == std::string::npos || (slash != std::string::npos && dot < slash)) {
        return path + "_" + std::string(suffix);
    }
    return path.substr(0, dot) + "_" + std::string(suffix) + path.substr(dot);
}

inline std::unique_ptr<std::ofstream> open_output(const std::string& path) {
    auto os = std::make_unique<std::ofstream>(path, std::ios::binary | std::ios::trunc);
    if (!*os) throw OutputError("cannot open output file `" + path + "` for writing");
    return os;
}

// Opens every output first, so an unwritable path fails before any work.
inline RunReport run_experiment(const ExperimentConfig& c, const RunOptions& opt = {}) {
    RunReport report;
    const std::string main_path = c.resolved_output();
    std::vector<std::string> paths;
    if (c.experiment == ExperimentKind::waveform_dump && c.kind_list.size() > 1) {
        for (auto kind : c.kind_list) paths.push_back(suffixed_path(main_path, to_string(kind)));
    } else {
        paths.push_back(main_path);
    }
    if (c.experiment == ExperimentKind::fit_table && !c.points_output.empty()) paths.push_back(c.points_output);
    std::vector<std::unique_ptr<std::ofstream>> streams;
    for (const auto& p : paths) streams.push_back(open_output(p));

    std::string summary;
    switch (c.experiment) {
        case ExperimentKind::ser_vs_rssi: report.tables.push_back(run_ser_vs_rssi(c, opt, summary)); break;
        case ExperimentKind::ser_vs_inr: report.tables.push_back(run_ser_vs_inr(c, opt, summary)); break;
        case ExperimentKind::inr_threshold: report.tables.push_back(run_inr_threshold(c, opt, summary)); break;
        case ExperimentKind::fit_table: {
            Table points;
            report.tables.push_back(run_fit_table(c, opt, points, summary));
            if (!c.points_output.empty()) report.tables.push_back(std::move(points));
            break;
        }
        case ExperimentKind::validate_spa: report.tables.push_back(run_validate_spa(c, opt, summary)); break;
        case ExperimentKind::waveform_dump: {
            std::ostringstream sum;
            for (std::size_t i = 0; i < c.kind_list.size(); ++i) {
                report.tables.push_back(run_waveform_dump(c, c.kind_list[i], i));
                sum << to_string(c.kind_list[i]) << ": " << report.tables.back().rows.size() << " samples -> "
                    << paths[i] << "\n";
            }
            summary = sum.str();
            break;
        }
    }
    for (std::size_t i = 0; i < streams.size(); ++i) {
        write_table(*streams[i], report.tables[i], c.output_format);
        streams[i]->close();
        if (!*streams[i]) throw OutputError("failed writing output file `" + paths[i] + "`");
    }
    report.files = paths;
    report.summary = summary;
    return report;
}

}  // namespace lora_nbi
