#pragma once

// Stationary-phase view of the interference term: after dechirping, bin k of a
// slowly varying narrowband interferer is dominated by the sample at the
// stationary point n_k of its phase, so |Y_i[k]| ~ sqrt(N) * |i[n_k]|.

#include "lora_nbi/baseband.hpp"
#include "lora_nbi/css.hpp"
#include "lora_nbi/lora_config.hpp"
#include "lora_nbi/waveforms.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace lora_nbi {

struct PhaseKernel {
    LoRaConfig cfg{7};
    double delta_f_hz = 0.0;
    std::size_t k = 0;

    void validate() const {
        if (k >= cfg.n()) throw std::domain_error("bin index " + std::to_string(k) + " out of range");
    }
};

// F[n;k] = 2 pi df n / B - pi n (n - N) / N - 2 pi k n / N, for real n.
inline double phase_term(const PhaseKernel& kernel, double n) {
    const double big_n = static_cast<double>(kernel.cfg.n());
    const double kk = static_cast<double>(kernel.k);
    return 2.0 * std::numbers::pi * kernel.delta_f_hz * n / kernel.cfg.bandwidth_hz() -
           std::numbers::pi * n * (n - big_n) / big_n - 2.0 * std::numbers::pi * kk * n / big_n;
}

// n_k = N df / B - k + N / 2 (not reduced mod N).
inline double stationary_index(const PhaseKernel& kernel) {
    kernel.validate();
    const double big_n = static_cast<double>(kernel.cfg.n());
    return big_n * kernel.delta_f_hz / kernel.cfg.bandwidth_hz() - static_cast<double>(kernel.k) + big_n / 2.0;
}

// Nearest integer to n_k, wrapped into [0, N).
inline std::size_t mapped_sample(const PhaseKernel& kernel) {
    const auto n = static_cast<std::int64_t>(kernel.cfg.n());
    auto idx = static_cast<std::int64_t>(std::llround(stationary_index(kernel))) % n;
    if (idx < 0) idx += n;
    return static_cast<std::size_t>(idx);
}

namespace detail {

inline void check_segment(const LoRaConfig& cfg, const ComplexBaseband& segment) {
    if (segment.size() != cfg.n() || segment.sample_rate_hz() != cfg.bandwidth_hz()) {
        throw std::invalid_argument("segment must hold N samples at the LoRa bandwidth sample rate");
    }
}

}  // namespace detail

// sqrt(N) * |i[n_k mod N]| for every bin k. `segment` is the envelope i[n]
// before the frequency offset.
inline std::vector<double> approx_interference_bins(const LoRaConfig& cfg, const ComplexBaseband& segment,
                                                    double delta_f_hz) {
    detail::check_segment(cfg, segment);
    const double root_n = std::sqrt(static_cast<double>(cfg.n()));
    std::vector<double> out(cfg.n());
    for (std::size_t k = 0; k < cfg.n(); ++k) {
        out[k] = root_n * std::abs(segment[mapped_sample({cfg, delta_f_hz, k})]);
    }
    return out;
}

// Complex form sqrt(N) * exp(j (F(n_k;k) - pi/4)) * i[n_k]. When n_k wraps by
// w periods into [0, N) the sampled phase picks up 2 pi w n_k, since
// F(n) and F(n) + 2 pi w n agree on integer n.
inline std::vector<cplx> approx_interference_bins_complex(const LoRaConfig& cfg, const ComplexBaseband& segment,
                                                          double delta_f_hz) {
    detail::check_segment(cfg, segment);
    const double root_n = std::sqrt(static_cast<double>(cfg.n()));
    const auto big_n = static_cast<double>(cfg.n());
    std::vector<cplx> out(cfg.n());
    for (std::size_t k = 0; k < cfg.n(); ++k) {
        const PhaseKernel kernel{cfg, delta_f_hz, k};
        const double nk = stationary_index(kernel);
        const double wraps = -std::floor(static_cast<double>(std::llround(nk)) / big_n);
        const double alias = wraps * (nk - std::floor(nk));
        const double phase = phase_term(kernel, nk) + 2.0 * std::numbers::pi * alias - std::numbers::pi / 4.0;
        out[k] = root_n * std::polar(1.0, phase) * segment[mapped_sample(kernel)];
    }
    return out;
}

struct ApproximationReport {
    std::vector<double> exact;    // |Y_i[k]| from the dechirped DFT
    std::vector<double> approx;   // sqrt(N) |i[n_k]|
    std::vector<double> n_k;      // unreduced stationary index per bin
    std::vector<double> per_bin;  // |exact - approx|
    double max_abs = 0.0;
    double rms_abs = 0.0;
    double max_rel = 0.0;  // relative values are divided by sqrt(N * P_i)
    double rms_rel = 0.0;
};

inline ApproximationReport approximation_error(const LoRaConfig& cfg, const ComplexBaseband& segment,
                                               double delta_f_hz) {
    detail::check_segment(cfg, segment);
    const std::size_t n = cfg.n();
    ApproximationReport r;
    const DecisionStatistic exact = dechirp_dft(cfg, apply_freq_offset(segment, delta_f_hz));
    r.approx = approx_interference_bins(cfg, segment, delta_f_hz);
    r.exact.resize(n);
    r.n_k.resize(n);
    r.per_bin.resize(n);
    double sq = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        r.exact[k] = std::abs(exact[k]);
        r.n_k[k] = stationary_index({cfg, delta_f_hz, k});
        r.per_bin[k] = std::abs(r.exact[k] - r.approx[k]);
        r.max_abs = std::max(r.max_abs, r.per_bin[k]);
        sq += r.per_bin[k] * r.per_bin[k];
    }
    r.rms_abs = std::sqrt(sq / static_cast<double>(n));
    const double scale = std::sqrt(static_cast<double>(n) * segment.mean_power());
    if (scale > 0.0) {
        r.max_rel = r.max_abs / scale;
        r.rms_rel = r.rms_abs / scale;
    }
    return r;
}

// (max - min) / mean of a magnitude profile.
inline double profile_spread(std::span<const double> mags) {
    if (mags.empty()) throw std::invalid_argument("profile_spread: empty profile");
    const auto [lo, hi] = std::minmax_element(mags.begin(), mags.end());
    double mean = 0.0;
    for (double m : mags) mean += m;
    mean /= static_cast<double>(mags.size());
    return mean > 0.0 ? (*hi - *lo) / mean : 0.0;
}

}  // namespace lora_nbi
