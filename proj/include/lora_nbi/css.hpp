#pragma once

// Chirp spread spectrum symbols, dechirping and the argmax symbol decision.

#include "lora_nbi/baseband.hpp"
#include "lora_nbi/fft.hpp"
#include "lora_nbi/lora_config.hpp"

#include <cmath>
#include <cstdint>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

namespace lora_nbi {

namespace detail {

// exp(j*pi*m/N) for an integer phase numerator m, reduced exactly mod 2N
// before going to floating point.
inline cplx exp_j_pi_over_n(std::int64_t m, std::int64_t n) {
    const std::int64_t period = 2 * n;
    m %= period;
    if (m < 0) m += period;
    const double phase = std::numbers::pi * static_cast<double>(m) / static_cast<double>(n);
    return {std::cos(phase), std::sin(phase)};
}

}  // namespace detail

// sigma_0[n] = exp(j*pi*n*(n - N)/N)
inline ComplexBaseband make_upchirp(const LoRaConfig& cfg) {
    const auto n_sym = static_cast<std::int64_t>(cfg.n());
    std::vector<cplx> out(cfg.n());
    for (std::int64_t n = 0; n < n_sym; ++n) {
        out[static_cast<std::size_t>(n)] = detail::exp_j_pi_over_n(n * (n - n_sym), n_sym);
    }
    return ComplexBaseband(std::move(out), cfg.bandwidth_hz());
}

// Symbol p: the upchirp multiplied by exp(j*2*pi*p*n/N), which is a cyclic
// shift of the upchirp up to a constant phase. Dechirping it gives a tone
// whose DFT peak is real-positive with magnitude amplitude*N at bin p.
inline ComplexBaseband make_symbol(const LoRaConfig& cfg, std::size_t p, double amplitude) {
    if (p >= cfg.n()) {
        throw std::domain_error("symbol index " + std::to_string(p) + " out of range for SF" +
                                std::to_string(cfg.sf()));
    }
    if (!(amplitude > 0.0) || !std::isfinite(amplitude)) {
        throw std::domain_error("symbol amplitude must be positive");
    }
    const auto n_sym = static_cast<std::int64_t>(cfg.n());
    const auto shift = static_cast<std::int64_t>(p);
    std::vector<cplx> out(cfg.n());
    for (std::int64_t n = 0; n < n_sym; ++n) {
        out[static_cast<std::size_t>(n)] =
            amplitude * detail::exp_j_pi_over_n(n * (n - n_sym) + 2 * shift * n, n_sym);
    }
    return ComplexBaseband(std::move(out), cfg.bandwidth_hz());
}

// Holds the conjugate upchirp so repeated dechirping does not regenerate it.
class Dechirper {
public:
    explicit Dechirper(const LoRaConfig& cfg) : cfg_(cfg), scratch_size_(cfg.n()) {
        const ComplexBaseband up = make_upchirp(cfg);
        conj_chirp_.resize(cfg.n());
        for (std::size_t n = 0; n < cfg.n(); ++n) conj_chirp_[n] = std::conj(up[n]);
    }

    const LoRaConfig& config() const noexcept { return cfg_; }

    // Y[k] = sum_n conj(sigma_0[n]) * x[n] * exp(-j 2 pi k n / N)
    void transform(std::span<const cplx> received, std::span<cplx> bins) const {
        if (received.size() != scratch_size_ || bins.size() != scratch_size_) {
            throw std::invalid_argument("dechirp: expected exactly " +
                                        std::to_string(scratch_size_) + " samples");
        }
        std::vector<cplx> dechirped(scratch_size_);
        for (std::size_t n = 0; n < scratch_size_; ++n) dechirped[n] = conj_chirp_[n] * received[n];
        fft_forward(dechirped, bins);
    }

    DecisionStatistic operator()(const ComplexBaseband& received) const {
        if (received.sample_rate_hz() != cfg_.bandwidth_hz()) {
            throw std::invalid_argument("dechirp: sample rate must equal the LoRa bandwidth");
        }
        std::vector<cplx> bins(scratch_size_);
        transform(received.samples(), bins);
        return DecisionStatistic(std::move(bins));
    }

private:
    LoRaConfig cfg_;
    std::size_t scratch_size_;
    std::vector<cplx> conj_chirp_;
};

inline DecisionStatistic dechirp_dft(const LoRaConfig& cfg, const ComplexBaseband& received) {
    if (received.size() != cfg.n()) {
        throw std::invalid_argument("dechirp: expected exactly " + std::to_string(cfg.n()) +
                                    " samples, got " + std::to_string(received.size()));
    }
    return Dechirper(cfg)(received);
}

// argmax_k |Y[k]|; the lowest index wins ties.
inline std::size_t demodulate(std::span<const cplx> bins) {
    std::size_t best = 0;
    double best_power = -1.0;
    for (std::size_t k = 0; k < bins.size(); ++k) {
        const double power = std::norm(bins[k]);
        if (power > best_power) {
            best_power = power;
            best = k;
        }
    }
    return best;
}

inline std::size_t demodulate(const DecisionStatistic& stat) { return demodulate(stat.bins()); }

}  // namespace lora_nbi
