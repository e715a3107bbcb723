#pragma once

// Experiment sweeps over one set of trial draws: SER versus RSSI, SER versus
// INR, and the descending search for the highest zero-error INR.

#include "lora_nbi/channel.hpp"

#include <cmath>
#include <optional>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace lora_nbi {

struct SerPoint {
    double x = 0.0;  // RSSI in dBm or INR in dB, depending on the sweep
    SerEstimate estimate;
};

struct RssiSweep {
    std::vector<SerPoint> points;
    std::optional<double> r_t_dbm;  // lowest zero-error RSSI with zero errors above it
    bool grid_limited = false;      // the lowest grid point already had zero errors
    std::string diagnostic;
};

namespace detail {

inline void check_grid(std::span<const double> grid, const char* what) {
    if (grid.empty()) throw std::invalid_argument(std::string(what) + " grid is empty");
    for (std::size_t i = 1; i < grid.size(); ++i) {
        if (!(grid[i] > grid[i - 1])) {
            throw std::invalid_argument(std::string(what) + " grid must be strictly increasing");
        }
    }
}

}  // namespace detail

inline RssiSweep sweep_ser_vs_rssi(const LoRaConfig& cfg, const NoiseModel& noise,
                                   std::span<const double> rssi_grid_dbm, std::size_t trials,
                                   std::uint64_t seed, unsigned workers = default_workers()) {
    detail::check_grid(rssi_grid_dbm, "RSSI");
    if (trials < 1) throw std::invalid_argument("trials must be at least 1");
    const TrialEngine engine(cfg, noise, std::nullopt, seed);
    std::vector<PowerLevel> levels;
    for (double rssi : rssi_grid_dbm) levels.push_back(power_level(cfg, dbm_to_mw(rssi), 0.0));
    const auto errors = count_errors(engine, trials, levels, workers);

    RssiSweep sweep;
    for (std::size_t i = 0; i < rssi_grid_dbm.size(); ++i) {
        sweep.points.push_back({rssi_grid_dbm[i], {errors[i], trials}});
    }
    // Walk down from the top while every point is error free.
    std::optional<std::size_t> lowest;
    for (std::size_t i = errors.size(); i-- > 0;) {
        if (errors[i] != 0) break;
        lowest = i;
    }
    if (!lowest) {
        std::ostringstream msg;
        msg << "R_T not found: highest grid RSSI " << rssi_grid_dbm.back() << " dBm still has "
            << errors.back() << " errors; extend the grid upward";
        sweep.diagnostic = msg.str();
    } else {
        sweep.r_t_dbm = rssi_grid_dbm[*lowest];
        if (*lowest == 0) {
            sweep.grid_limited = true;
            sweep.diagnostic = "R_T is grid-limited: the lowest grid RSSI already has zero errors";
        }
    }
    return sweep;
}

inline std::vector<SerPoint> sweep_ser_vs_inr(const LoRaConfig& cfg, const NoiseModel& noise, double snr_db,
                                              const InterfererParams& interferer,
                                              std::span<const double> inr_grid_db, std::size_t trials,
                                              std::uint64_t seed, unsigned workers = default_workers()) {
    detail::check_grid(inr_grid_db, "INR");
    if (trials < 1) throw std::invalid_argument("trials must be at least 1");
    const TrialEngine engine(cfg, noise, interferer, seed);
    const double pn = noise.noise_power_mw();
    std::vector<PowerLevel> levels;
    for (double inr : inr_grid_db) {
        levels.push_back(power_level(cfg, pn * db_to_ratio(snr_db), pn * db_to_ratio(inr)));
    }
    const auto errors = count_errors(engine, trials, levels, workers);
    std::vector<SerPoint> out;
    for (std::size_t i = 0; i < inr_grid_db.size(); ++i) out.push_back({inr_grid_db[i], {errors[i], trials}});
    return out;
}

// Raised by the INR threshold search.
class ThresholdSearchError : public std::runtime_error {
public:
    enum class Reason { start_error_free, floor_reached };

    ThresholdSearchError(Reason reason, const std::string& what) : std::runtime_error(what), reason_(reason) {}
    Reason reason() const noexcept { return reason_; }

private:
    Reason reason_;
};

struct ThresholdQuery {
    double snr_db = 0.0;
    double start_inr_db = 40.0;
};

struct ThresholdOutcome {
    double snr_db = 0.0;
    std::optional<double> max_inr_db;
    std::optional<ThresholdSearchError::Reason> failure;
    std::string diagnostic;
};

inline constexpr double kDefaultStartOffsetDb = 40.0;
inline constexpr double kDefaultInrStepDb = 0.5;
inline constexpr double kScanFloorSpanDb = 80.0;

namespace detail {

inline std::size_t scan_level_count(double step_db) {
    return static_cast<std::size_t>(std::floor(kScanFloorSpanDb / step_db + 1e-9)) + 1;
}

// Levels start_inr, start_inr - step, ... down to start_inr - 80 dB.
inline std::vector<PowerLevel> scan_levels(const LoRaConfig& cfg, const NoiseModel& noise, const ThresholdQuery& q,
                                           double step_db) {
    const double pn = noise.noise_power_mw();
    std::vector<PowerLevel> levels(scan_level_count(step_db));
    for (std::size_t l = 0; l < levels.size(); ++l) {
        const double inr = q.start_inr_db - static_cast<double>(l) * step_db;
        levels[l] = power_level(cfg, pn * db_to_ratio(q.snr_db), pn * db_to_ratio(inr));
    }
    return levels;
}

inline ThresholdOutcome scan_outcome(const ThresholdQuery& q, double step_db, const std::vector<char>& errs) {
    ThresholdOutcome out;
    out.snr_db = q.snr_db;
    std::ostringstream msg;
    if (!errs[0]) {
        out.failure = ThresholdSearchError::Reason::start_error_free;
        msg << "start INR " << q.start_inr_db << " dB already has zero errors at SNR " << q.snr_db
            << " dB; raise start_inr_db";
        out.diagnostic = msg.str();
        return out;
    }
    for (std::size_t l = 1; l < errs.size(); ++l) {
        if (!errs[l]) {
            out.max_inr_db = q.start_inr_db - static_cast<double>(l) * step_db;
            return out;
        }
    }
    out.failure = ThresholdSearchError::Reason::floor_reached;
    msg << "no zero-error INR found down to " << q.start_inr_db - kScanFloorSpanDb << " dB at SNR " << q.snr_db
        << " dB (noise alone causes errors)";
    out.diagnostic = msg.str();
    return out;
}

// Per-trial summary used to settle most levels without touching every bin.
struct DrawBounds {
    double max_noise = 0.0;         // max_{k != p} |Y_n[k]|
    double max_interference = 0.0;  // max_{k != p} |Y_i[k]|
    std::size_t noise_peak = 0;
    std::size_t interference_peak = 0;
};

inline DrawBounds draw_bounds(const TrialDraw& d, std::size_t n) {
    DrawBounds b;
    b.noise_peak = b.interference_peak = d.symbol == 0 ? 1 : 0;
    for (std::size_t k = 0; k < n; ++k) {
        if (k == d.symbol) continue;
        if (!d.noise.empty()) {
            const double a = std::abs(d.noise[k]);
            if (a > b.max_noise) {
                b.max_noise = a;
                b.noise_peak = k;
            }
        }
        if (!d.interference.empty()) {
            const double a = std::abs(d.interference[k]);
            if (a > b.max_interference) {
                b.max_interference = a;
                b.interference_peak = k;
            }
        }
    }
    return b;
}

inline bool bin_beats(const TrialDraw& d, std::size_t k, double target, const PowerLevel& level) {
    const double v = std::norm(bin_value(d, k, level.peak, level.interference_amp));
    return k < d.symbol ? v >= target : v > target;
}

// Same answer as trial_errs(), usually from two bins and a bound.
inline bool trial_errs_fast(const TrialDraw& d, std::size_t n, const DrawBounds& b, const PowerLevel& level) {
    const double target = std::norm(bin_value(d, d.symbol, level.peak, level.interference_amp));
    // |a_k + s*b_k| <= max|a| + s*max|b| for every k != p.
    const double bound = b.max_noise + level.interference_amp * b.max_interference;
    if (bound * bound * (1.0 + 1e-9) < target) return false;
    if (bin_beats(d, b.interference_peak, target, level)) return true;
    if (bin_beats(d, b.noise_peak, target, level)) return true;
    return trial_errs(d, n, level.peak, level.interference_amp);
}

}  // namespace detail

// Descending INR scan for several SNR points over one shared set of draws.
// For each query the result equals running `trials` trials at start_inr,
// start_inr - step, ... and stopping at the first level without errors.
inline std::vector<ThresholdOutcome> find_max_inr_curve(const LoRaConfig& cfg, const NoiseModel& noise,
                                                        const InterfererParams& interferer,
                                                        std::span<const ThresholdQuery> queries, double step_db,
                                                        std::size_t trials, std::uint64_t seed,
                                                        unsigned workers = default_workers()) {
    if (!(step_db > 0.0)) throw std::invalid_argument("step_db must be positive");
    if (trials < 1) throw std::invalid_argument("trials must be at least 1");
    const TrialEngine engine(cfg, noise, interferer, seed);
    const std::size_t n = cfg.n();
    std::vector<std::vector<PowerLevel>> levels;
    for (const auto& q : queries) levels.push_back(detail::scan_levels(cfg, noise, q, step_db));

    // errs[w][q][l]: some trial seen by worker w errs at level l of query q.
    // The union over workers does not depend on how batches were distributed.
    const unsigned pool = std::max(1u, workers);
    std::vector<std::vector<std::vector<char>>> errs(
        pool, std::vector<std::vector<char>>(queries.size(), std::vector<char>(detail::scan_level_count(step_db), 0)));
    parallel_for(batch_count(trials), pool, [&](std::size_t b, unsigned w) {
        const InterferenceBatch batch = engine.make_batch(b);
        const std::size_t end = std::min(trials, (b + 1) * kTrialsPerBatch);
        for (std::size_t t = b * kTrialsPerBatch; t < end; ++t) {
            const TrialDraw d = engine.draw_trial(t, batch);
            const detail::DrawBounds bounds = detail::draw_bounds(d, n);
            for (std::size_t qi = 0; qi < queries.size(); ++qi) {
                auto& seen = errs[w][qi];
                for (std::size_t l = 0; l < seen.size(); ++l) {
                    if (!seen[l] && detail::trial_errs_fast(d, n, bounds, levels[qi][l])) seen[l] = 1;
                }
            }
        }
    });

    std::vector<ThresholdOutcome> out;
    for (std::size_t qi = 0; qi < queries.size(); ++qi) {
        std::vector<char> merged(detail::scan_level_count(step_db), 0);
        for (unsigned w = 0; w < pool; ++w) {
            for (std::size_t l = 0; l < merged.size(); ++l) merged[l] |= errs[w][qi][l];
        }
        out.push_back(detail::scan_outcome(queries[qi], step_db, merged));
    }
    return out;
}

inline double find_max_inr(const LoRaConfig& cfg, const NoiseModel& noise, double snr_db,
                           const InterfererParams& interferer, double start_inr_db, double step_db,
                           std::size_t trials, std::uint64_t seed, unsigned workers = default_workers()) {
    const ThresholdQuery q{snr_db, start_inr_db};
    const auto out = find_max_inr_curve(cfg, noise, interferer, std::span(&q, 1), step_db, trials, seed, workers);
    if (out[0].failure) throw ThresholdSearchError(*out[0].failure, out[0].diagnostic);
    return *out[0].max_inr_db;
}

// Literal level-by-level scan: full error count at every level until the
// first zero. Slow; kept as the reference for find_max_inr.
inline double find_max_inr_reference(const LoRaConfig& cfg, const NoiseModel& noise, double snr_db,
                                     const InterfererParams& interferer, double start_inr_db, double step_db,
                                     std::size_t trials, std::uint64_t seed, unsigned workers = default_workers()) {
    if (!(step_db > 0.0)) throw std::invalid_argument("step_db must be positive");
    const TrialEngine engine(cfg, noise, interferer, seed);
    const ThresholdQuery q{snr_db, start_inr_db};
    const auto levels = detail::scan_levels(cfg, noise, q, step_db);
    std::vector<char> errs(levels.size(), 1);
    for (std::size_t l = 0; l < levels.size(); ++l) {
        const auto count = count_errors(engine, trials, std::span(&levels[l], 1), workers);
        errs[l] = count[0] != 0;
        if (!errs[l]) break;
    }
    const auto out = detail::scan_outcome(q, step_db, errs);
    if (out.failure) throw ThresholdSearchError(*out.failure, out.diagnostic);
    return *out.max_inr_db;
}

}  // namespace lora_nbi
