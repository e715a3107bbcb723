#pragma once

// Per-trial decision statistics and Monte Carlo symbol error rate estimation.
//
// Trial t always draws from RngStream(seed, t): first the true symbol, then the
// noise bins, then the interferer offset and segment start. Interference
// waveforms are generated once per batch of kTrialsPerBatch trials from a
// dedicated batch stream. None of the draws depend on the signal or
// interference power, so a trial's draws can be evaluated at many power levels.

#include "lora_nbi/baseband.hpp"
#include "lora_nbi/css.hpp"
#include "lora_nbi/lora_config.hpp"
#include "lora_nbi/parallel.hpp"
#include "lora_nbi/rng.hpp"
#include "lora_nbi/waveforms.hpp"

#include <cmath>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

namespace lora_nbi {

inline constexpr double kBoltzmann = 1.380649e-23;  // J/K
inline constexpr std::size_t kTrialsPerBatch = 100;
inline constexpr std::size_t kWaveformSymbolsPerBatch = 100;
inline constexpr double kGuardBitPeriods = 4.0;
inline constexpr std::uint64_t kBatchStreamTag = std::uint64_t{1} << 63;

inline double dbm_to_mw(double dbm) { return std::pow(10.0, dbm / 10.0); }
inline double mw_to_dbm(double mw) { return 10.0 * std::log10(mw); }
inline double db_to_ratio(double db) { return std::pow(10.0, db / 10.0); }

struct NoiseModel {
    double bandwidth_hz = LoRaConfig::kDefaultBandwidthHz;
    double temperature_k = 290.0;
    double noise_figure_db = 6.0;

    double thermal_dbm() const { return mw_to_dbm(kBoltzmann * temperature_k * bandwidth_hz * 1e3); }
    double noise_floor_dbm() const { return thermal_dbm() + noise_figure_db; }
    double noise_power_mw() const { return dbm_to_mw(noise_floor_dbm()); }

    friend bool operator==(const NoiseModel&, const NoiseModel&) = default;
};

// Interferer waveform parameters. 600 Hz occupancy for both modulated kinds.
struct InterfererParams {
    InterfererKind kind = InterfererKind::gmsk;
    double occupied_bandwidth_hz = 600.0;
    double bit_rate_hz = 600.0;  // BPSK bit rate and GMSK symbol rate
    double gmsk_bt = 0.5;
    double modulation_index = 0.5;
    PulseFamily bpsk_pulse = PulseFamily::root_raised_cosine;
    double bpsk_rolloff = 1.0;

    friend bool operator==(const InterfererParams&, const InterfererParams&) = default;
};

struct Scenario {
    LoRaConfig cfg{7};
    double snr_db = 0.0;
    std::optional<double> inr_db;
    std::optional<InterfererParams> interferer;
    NoiseModel noise;
    std::size_t trials = 10000;
    std::uint64_t seed = 1;
    bool noise_enabled = true;  // false models the P_n -> 0 limit for the noise term only

    double noise_power_mw() const { return noise.noise_power_mw(); }
    double signal_power_mw() const { return noise_power_mw() * db_to_ratio(snr_db); }
    double rssi_dbm() const { return noise.noise_floor_dbm() + snr_db; }
    double interference_power_mw() const {
        return interferer && inr_db ? noise_power_mw() * db_to_ratio(*inr_db) : 0.0;
    }

    void validate() const {
        if (trials < 1) throw std::domain_error("scenario needs at least one trial");
        if (interferer && !inr_db) throw std::domain_error("scenario has an interferer but no INR");
        if (interferer && interferer->occupied_bandwidth_hz >= cfg.bandwidth_hz()) {
            throw std::domain_error("interferer bandwidth must be below the LoRa bandwidth");
        }
    }

    static Scenario from_rssi(const LoRaConfig& cfg, const NoiseModel& noise, double rssi_dbm) {
        Scenario s;
        s.cfg = cfg;
        s.noise = noise;
        s.snr_db = rssi_dbm - noise.noise_floor_dbm();
        return s;
    }
};

struct SerEstimate {
    std::size_t errors = 0;
    std::size_t trials = 0;

    double ser() const { return trials == 0 ? 0.0 : static_cast<double>(errors) / static_cast<double>(trials); }

    // Wilson score interval.
    std::pair<double, double> wilson_ci(double z = 1.959963984540054) const {
        if (trials == 0) return {0.0, 1.0};
        const double n = static_cast<double>(trials);
        const double p = ser();
        const double z2 = z * z;
        const double denom = 1.0 + z2 / n;
        const double centre = (p + z2 / (2.0 * n)) / denom;
        const double half = z * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n)) / denom;
        return {std::max(0.0, centre - half), std::min(1.0, centre + half)};
    }
    double ci_low() const { return wilson_ci().first; }
    double ci_high() const { return wilson_ci().second; }
};

// Unit-power (1 mW) interference waveform shared by one batch of trials.
struct InterferenceBatch {
    std::optional<ComplexBaseband> waveform;
    std::size_t guard = 0;  // samples excluded at each end for filter transients
};

// Random components of one trial, at physical noise scale and unit
// interference power. Combined by bin_value() at any (signal, interference)
// amplitude pair.
struct TrialDraw {
    std::size_t symbol = 0;
    std::vector<cplx> noise;         // Y_n[k]; empty when noise is disabled
    std::vector<cplx> interference;  // Y_i[k] for P_i = 1 mW; empty without interferer
};

// peak = sqrt(P_s)*N, interference_amp = sqrt(P_i / 1 mW).
inline cplx bin_value(const TrialDraw& d, std::size_t k, double peak, double interference_amp) {
    cplx y = d.noise.empty() ? cplx{} : d.noise[k];
    if (k == d.symbol) y = cplx(peak, 0.0) + y;
    if (!d.interference.empty()) y += interference_amp * d.interference[k];
    return y;
}

inline DecisionStatistic combine(const TrialDraw& d, std::size_t n, double peak, double interference_amp) {
    std::vector<cplx> bins(n);
    for (std::size_t k = 0; k < n; ++k) bins[k] = bin_value(d, k, peak, interference_amp);
    return DecisionStatistic(std::move(bins));
}

// True when demodulate() of the combined statistic would not return d.symbol.
inline bool trial_errs(const TrialDraw& d, std::size_t n, double peak, double interference_amp) {
    const std::size_t p = d.symbol;
    const double target = std::norm(bin_value(d, p, peak, interference_amp));
    for (std::size_t k = 0; k < p; ++k) {
        if (std::norm(bin_value(d, k, peak, interference_amp)) >= target) return true;
    }
    for (std::size_t k = p + 1; k < n; ++k) {
        if (std::norm(bin_value(d, k, peak, interference_amp)) > target) return true;
    }
    return false;
}

// Immutable per-experiment state shared by all workers.
class TrialEngine {
public:
    TrialEngine(const LoRaConfig& cfg, const NoiseModel& noise,
                std::optional<InterfererParams> interferer, std::uint64_t seed, bool noise_enabled = true)
        : cfg_(cfg), noise_(noise), interferer_(std::move(interferer)), seed_(seed),
          noise_enabled_(noise_enabled), dechirp_(cfg) {
        if (interferer_) {
            const double w = interferer_->occupied_bandwidth_hz;
            if (!(w > 0.0) || w >= cfg.bandwidth_hz()) {
                throw std::domain_error("interferer bandwidth must be positive and below the LoRa bandwidth");
            }
            if (interferer_->kind == InterfererKind::gmsk) {
                gmsk_pulse_ = std::make_shared<const GaussianPhasePulse>(interferer_->gmsk_bt);
            } else if (interferer_->kind == InterfererKind::bpsk) {
                bpsk_pulse_ = std::make_shared<const NyquistPulse>(interferer_->bpsk_pulse, interferer_->bpsk_rolloff);
            }
        }
    }

    explicit TrialEngine(const Scenario& s)
        : TrialEngine(s.cfg, s.noise, s.interferer, s.seed, s.noise_enabled) {}

    const LoRaConfig& config() const noexcept { return cfg_; }
    const NoiseModel& noise() const noexcept { return noise_; }
    const std::optional<InterfererParams>& interferer() const noexcept { return interferer_; }
    const Dechirper& dechirper() const noexcept { return dechirp_; }
    std::uint64_t seed() const noexcept { return seed_; }

    bool needs_waveform() const noexcept {
        return interferer_ && interferer_->kind != InterfererKind::awgn_control;
    }

    // Admissible centre offsets keep the whole interferer inside the band.
    std::pair<double, double> offset_range() const {
        const double half = (cfg_.bandwidth_hz() - interferer_->occupied_bandwidth_hz) / 2.0;
        return {-half, half};
    }

    InterferenceBatch make_batch(std::uint64_t batch_index) const {
        InterferenceBatch batch;
        if (!needs_waveform()) return batch;
        RngStream rng(seed_, kBatchStreamTag | batch_index);
        batch = generate_batch(rng);
        return batch;
    }

    InterferenceBatch generate_batch(RngStream& rng) const {
        InterferenceBatch batch;
        if (!needs_waveform()) return batch;
        const double fs = cfg_.bandwidth_hz();
        const double duration = static_cast<double>(kWaveformSymbolsPerBatch) * cfg_.symbol_duration_s();
        const InterfererParams& ip = *interferer_;
        ComplexBaseband raw = ip.kind == InterfererKind::bpsk
                                  ? gen_bpsk(ip.bit_rate_hz, duration, fs, *bpsk_pulse_, rng)
                                  : gen_gmsk(ip.bit_rate_hz, *gmsk_pulse_, duration, fs, rng, ip.modulation_index);
        batch.waveform = normalize_power(raw, 1.0);
        batch.guard = static_cast<std::size_t>(std::ceil(kGuardBitPeriods * fs / ip.bit_rate_hz));
        return batch;
    }

    // Unit-power interference segment with its random frequency offset applied.
    ComplexBaseband draw_interference_segment(RngStream& rng, const InterferenceBatch& batch) const {
        const std::size_t n = cfg_.n();
        if (interferer_->kind == InterfererKind::awgn_control) {
            return gen_awgn(n, 1.0, rng, cfg_.bandwidth_hz());
        }
        if (!batch.waveform) throw std::logic_error("interference batch has no waveform");
        const auto [lo, hi] = offset_range();
        const double delta_f = rng.uniform(lo, hi);
        return apply_freq_offset(random_segment(*batch.waveform, n, rng, batch.guard), delta_f);
    }

    TrialDraw draw_components(std::size_t symbol, RngStream& rng, const InterferenceBatch& batch) const {
        const std::size_t n = cfg_.n();
        if (symbol >= n) throw std::domain_error("symbol index out of range");
        TrialDraw d;
        d.symbol = symbol;
        if (noise_enabled_) {
            // Each bin ~ CN(0, N*P_n/2 per dimension).
            const double sigma = std::sqrt(static_cast<double>(n) * noise_.noise_power_mw() / 2.0);
            d.noise.resize(n);
            for (cplx& y : d.noise) {
                const double re = rng.normal();
                const double im = rng.normal();
                y = {sigma * re, sigma * im};
            }
        }
        if (interferer_) {
            const ComplexBaseband segment = draw_interference_segment(rng, batch);
            d.interference.resize(n);
            dechirp_.transform(segment.samples(), d.interference);
        }
        return d;
    }

    TrialDraw draw_trial(std::uint64_t trial, const InterferenceBatch& batch) const {
        RngStream rng(seed_, trial);
        const std::size_t symbol = rng.uniform_index(cfg_.n());
        return draw_components(symbol, rng, batch);
    }

    // Full time-domain route: synthesize sigma_s + sigma_n + sigma_i, then
    // dechirp and transform.
    DecisionStatistic time_domain_statistic(std::size_t symbol, RngStream& rng, const InterferenceBatch& batch,
                                            double signal_mw, double interference_mw) const {
        const std::size_t n = cfg_.n();
        const double fs = cfg_.bandwidth_hz();
        std::vector<cplx> rx = std::move(make_symbol(cfg_, symbol, std::sqrt(signal_mw))).release();
        if (noise_enabled_) {
            const ComplexBaseband noise = gen_awgn(n, noise_.noise_power_mw(), rng, fs);
            for (std::size_t i = 0; i < n; ++i) rx[i] += noise[i];
        }
        if (interferer_) {
            ComplexBaseband interference = [&] {
                if (interferer_->kind == InterfererKind::awgn_control) {
                    return gen_awgn(n, interference_mw, rng, fs);
                }
                const auto [lo, hi] = offset_range();
                const double delta_f = rng.uniform(lo, hi);
                const ComplexBaseband seg = random_segment(*batch.waveform, n, rng, batch.guard);
                const double amp = std::sqrt(interference_mw);
                std::vector<cplx> scaled(n);
                for (std::size_t i = 0; i < n; ++i) scaled[i] = amp * seg[i];
                return apply_freq_offset(ComplexBaseband(std::move(scaled), fs), delta_f);
            }();
            for (std::size_t i = 0; i < n; ++i) rx[i] += interference[i];
        }
        return dechirp_(ComplexBaseband(std::move(rx), fs));
    }

private:
    LoRaConfig cfg_;
    NoiseModel noise_;
    std::optional<InterfererParams> interferer_;
    std::uint64_t seed_;
    bool noise_enabled_;
    Dechirper dechirp_;
    std::shared_ptr<const GaussianPhasePulse> gmsk_pulse_;
    std::shared_ptr<const NyquistPulse> bpsk_pulse_;
};

// (peak, interference_amp) pair at which a set of draws is evaluated.
struct PowerLevel {
    double peak = 0.0;
    double interference_amp = 0.0;
};

inline PowerLevel power_level(const LoRaConfig& cfg, double signal_mw, double interference_mw) {
    return {std::sqrt(signal_mw) * static_cast<double>(cfg.n()), std::sqrt(interference_mw)};
}

inline std::size_t batch_count(std::size_t trials) { return (trials + kTrialsPerBatch - 1) / kTrialsPerBatch; }

// Error counts of the same `trials` draws at every level.
inline std::vector<std::size_t> count_errors(const TrialEngine& engine, std::size_t trials,
                                             std::span<const PowerLevel> levels, unsigned workers) {
    const std::size_t n = engine.config().n();
    const std::size_t batches = batch_count(trials);
    std::vector<std::vector<std::size_t>> per_batch(batches, std::vector<std::size_t>(levels.size(), 0));
    parallel_for(batches, workers, [&](std::size_t b, unsigned) {
        const InterferenceBatch batch = engine.make_batch(b);
        const std::size_t end = std::min(trials, (b + 1) * kTrialsPerBatch);
        for (std::size_t t = b * kTrialsPerBatch; t < end; ++t) {
            const TrialDraw d = engine.draw_trial(t, batch);
            for (std::size_t j = 0; j < levels.size(); ++j) {
                if (trial_errs(d, n, levels[j].peak, levels[j].interference_amp)) ++per_batch[b][j];
            }
        }
    });
    std::vector<std::size_t> totals(levels.size(), 0);
    for (const auto& row : per_batch) {
        for (std::size_t j = 0; j < row.size(); ++j) totals[j] += row[j];
    }
    return totals;
}

// Hybrid trial: Y_s set directly in bin p, Y_n drawn per bin, Y_i from a
// dechirped interference segment. Without `batch`, a waveform is generated
// from `rng` first.
inline DecisionStatistic build_trial_statistic(const Scenario& scenario, std::size_t p, RngStream& rng,
                                               const InterferenceBatch* batch = nullptr) {
    scenario.validate();
    const TrialEngine engine(scenario);
    InterferenceBatch local;
    if (batch == nullptr) {
        local = engine.generate_batch(rng);
        batch = &local;
    }
    const TrialDraw d = engine.draw_components(p, rng, *batch);
    const PowerLevel level =
        power_level(scenario.cfg, scenario.signal_power_mw(), scenario.interference_power_mw());
    return combine(d, scenario.cfg.n(), level.peak, level.interference_amp);
}

inline DecisionStatistic build_trial_statistic_timedomain(const Scenario& scenario, std::size_t p,
                                                          RngStream& rng,
                                                          const InterferenceBatch* batch = nullptr) {
    scenario.validate();
    const TrialEngine engine(scenario);
    InterferenceBatch local;
    if (batch == nullptr) {
        local = engine.generate_batch(rng);
        batch = &local;
    }
    return engine.time_domain_statistic(p, rng, *batch, scenario.signal_power_mw(),
                                        scenario.interference_power_mw());
}

enum class TrialPath { hybrid, time_domain };

inline SerEstimate estimate_ser(const Scenario& scenario, unsigned workers = default_workers(),
                                TrialPath path = TrialPath::hybrid) {
    scenario.validate();
    const TrialEngine engine(scenario);
    if (path == TrialPath::hybrid) {
        const PowerLevel level =
            power_level(scenario.cfg, scenario.signal_power_mw(), scenario.interference_power_mw());
        const auto errors = count_errors(engine, scenario.trials, std::span(&level, 1), workers);
        return {errors[0], scenario.trials};
    }
    const std::size_t batches = batch_count(scenario.trials);
    std::vector<std::size_t> per_batch(batches, 0);
    parallel_for(batches, workers, [&](std::size_t b, unsigned) {
        const InterferenceBatch batch = engine.make_batch(b);
        const std::size_t end = std::min(scenario.trials, (b + 1) * kTrialsPerBatch);
        for (std::size_t t = b * kTrialsPerBatch; t < end; ++t) {
            RngStream rng(scenario.seed, t);
            const std::size_t symbol = rng.uniform_index(scenario.cfg.n());
            const DecisionStatistic stat = engine.time_domain_statistic(
                symbol, rng, batch, scenario.signal_power_mw(), scenario.interference_power_mw());
            if (demodulate(stat) != symbol) ++per_batch[b];
        }
    });
    std::size_t errors = 0;
    for (std::size_t e : per_batch) errors += e;
    return {errors, scenario.trials};
}

}  // namespace lora_nbi
