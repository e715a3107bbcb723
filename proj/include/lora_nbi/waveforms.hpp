#pragma once

// Interferer and noise waveforms: pulse-shaped BPSK, GMSK and complex AWGN,
// plus the power / frequency / segment operations applied to them.

#include "lora_nbi/baseband.hpp"
#include "lora_nbi/lora_config.hpp"
#include "lora_nbi/rng.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <numbers>
#include <optional>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace lora_nbi {

enum class InterfererKind { bpsk, gmsk, awgn_control };

inline std::string_view to_string(InterfererKind kind) {
    switch (kind) {
        case InterfererKind::bpsk: return "bpsk";
        case InterfererKind::gmsk: return "gmsk";
        case InterfererKind::awgn_control: return "awgn";
    }
    return "unknown";
}

inline std::optional<InterfererKind> parse_interferer_kind(std::string_view text) {
    if (text == "bpsk" || text == "BPSK") return InterfererKind::bpsk;
    if (text == "gmsk" || text == "GMSK") return InterfererKind::gmsk;
    if (text == "awgn" || text == "AWGN" || text == "awgn_control" || text == "AWGN_CONTROL") {
        return InterfererKind::awgn_control;
    }
    return std::nullopt;
}

struct InterferenceSpec {
    InterfererKind kind = InterfererKind::gmsk;
    double occupied_bandwidth_hz = 600.0;
    double power_mw = 1.0;
    double freq_offset_hz = 0.0;

    // Throws std::domain_error unless the interferer lies fully inside the
    // LoRa band.
    void validate(const LoRaConfig& cfg) const {
        const double band = cfg.bandwidth_hz();
        if (!(occupied_bandwidth_hz > 0.0) || occupied_bandwidth_hz >= band) {
            throw std::domain_error("interferer bandwidth must be positive and below the LoRa bandwidth");
        }
        if (!(power_mw > 0.0)) throw std::domain_error("interferer power must be positive");
        if (std::abs(freq_offset_hz) + occupied_bandwidth_hz / 2.0 > band / 2.0) {
            throw std::domain_error("interferer must lie entirely inside the LoRa band");
        }
    }
};

namespace detail {

inline std::size_t sample_count(double duration_s, double sample_rate_hz) {
    return static_cast<std::size_t>(std::llround(duration_s * sample_rate_hz));
}

inline void check_modulator_rates(double rate_hz, double duration_s, double sample_rate_hz) {
    if (!(rate_hz > 0.0) || !(duration_s > 0.0) || !(sample_rate_hz > 0.0)) {
        throw std::domain_error("rates and duration must be positive");
    }
    if (duration_s * rate_hz < 8.0) {
        throw std::domain_error("waveform must span at least 8 bits");
    }
    if (sample_rate_hz < 10.0 * rate_hz) {
        throw std::domain_error("sample rate must be at least 10x the bit rate");
    }
}

}  // namespace detail

enum class PulseFamily { raised_cosine, root_raised_cosine };

inline std::string_view to_string(PulseFamily f) {
    return f == PulseFamily::raised_cosine ? "rc" : "rrc";
}

inline std::optional<PulseFamily> parse_pulse_family(std::string_view text) {
    if (text == "rc" || text == "raised_cosine") return PulseFamily::raised_cosine;
    if (text == "rrc" || text == "root_raised_cosine") return PulseFamily::root_raised_cosine;
    return std::nullopt;
}

// Raised-cosine or root-raised-cosine pulse in units of bit periods, both
// with unit DC gain, tabulated over |x| <= half_span and linearly
// interpolated:
//   rc:  sinc(x) cos(pi r x) / (1 - (2 r x)^2)
//   rrc: [sin(pi x (1-r)) + 4 r x cos(pi x (1+r))] / [pi x (1 - (4 r x)^2)]
// Both spectra vanish at multiples of the bit rate for r <= 1, so shifted
// copies sum to exactly one.
class NyquistPulse {
public:
    explicit NyquistPulse(PulseFamily family = PulseFamily::root_raised_cosine, double rolloff = 1.0,
                          int half_span_bits = 24, double table_step = 1e-4)
        : family_(family), rolloff_(rolloff), half_span_(half_span_bits), step_(table_step) {
        if (!(rolloff > 0.0) || rolloff > 1.0) throw std::domain_error("roll-off must be in (0, 1]");
        if (half_span_bits < 2) throw std::domain_error("pulse span must be at least 2 bits");
        const auto count = static_cast<std::size_t>(std::ceil(half_span_ / step_)) + 2;
        table_.resize(count);
        for (std::size_t i = 0; i < count; ++i) table_[i] = exact(static_cast<double>(i) * step_);
    }

    PulseFamily family() const noexcept { return family_; }
    double rolloff() const noexcept { return rolloff_; }
    int half_span() const noexcept { return half_span_; }

    double operator()(double x) const noexcept {
        const double pos = std::abs(x) / step_;
        const auto i = static_cast<std::size_t>(pos);
        if (i + 1 >= table_.size()) return 0.0;
        const double frac = pos - static_cast<double>(i);
        return table_[i] + frac * (table_[i + 1] - table_[i]);
    }

    double exact(double x) const noexcept {
        constexpr double pi = std::numbers::pi;
        const double r = rolloff_;
        const double ax = std::abs(x);
        if (family_ == PulseFamily::raised_cosine) {
            const double edge = 1.0 / (2.0 * r);
            if (std::abs(ax - edge) < 1e-9) return pi / 4.0 * std::sin(pi * edge) / (pi * edge);
            const double sinc = ax < 1e-12 ? 1.0 : std::sin(pi * ax) / (pi * ax);
            const double d = 2.0 * r * ax;
            return sinc * std::cos(pi * r * ax) / (1.0 - d * d);
        }
        if (ax < 1e-12) return 1.0 - r + 4.0 * r / pi;
        const double edge = 1.0 / (4.0 * r);
        if (std::abs(ax - edge) < 1e-9) {
            return r / std::numbers::sqrt2 *
                   ((1.0 + 2.0 / pi) * std::sin(pi / (4.0 * r)) + (1.0 - 2.0 / pi) * std::cos(pi / (4.0 * r)));
        }
        const double d = 4.0 * r * ax;
        return (std::sin(pi * ax * (1.0 - r)) + 4.0 * r * ax * std::cos(pi * ax * (1.0 + r))) /
               (pi * ax * (1.0 - d * d));
    }

private:
    PulseFamily family_;
    double rolloff_;
    int half_span_;
    double step_;
    std::vector<double> table_;
};

// Pulse-shaped BPSK: sum_k b_k p(t/T - k - 1/2), bit k centred at (k + 1/2) T.
// The sum is formed as b_ref + sum_k (b_k - b_ref) p(...) with b_ref the bit
// whose centre precedes the sample, so runs of equal bits give an exactly flat
// envelope and the pulse truncation only acts where bits change. Bits beyond
// either end of `bits` repeat the end value. The result is real-valued.
inline ComplexBaseband bpsk_from_bits(std::span<const int> bits, double bit_rate_hz, std::size_t n_samples,
                                      double sample_rate_hz, const NyquistPulse& pulse) {
    if (bits.empty()) throw std::domain_error("bpsk: no bits");
    if (n_samples == 0) throw std::domain_error("bpsk: no samples requested");
    const auto last = static_cast<std::int64_t>(bits.size()) - 1;
    auto bit_at = [&](std::int64_t k) {
        return static_cast<double>(bits[static_cast<std::size_t>(std::clamp<std::int64_t>(k, 0, last))]);
    };
    const std::int64_t span = pulse.half_span();
    const double bits_per_sample = bit_rate_hz / sample_rate_hz;
    std::vector<cplx> out(n_samples);
    for (std::size_t n = 0; n < n_samples; ++n) {
        const double u = static_cast<double>(n) * bits_per_sample - 0.5;
        const auto k0 = static_cast<std::int64_t>(std::floor(u));
        const double ref = bit_at(k0);
        double acc = ref;
        for (std::int64_t k = k0 - span; k <= k0 + span + 1; ++k) {
            const double diff = bit_at(k) - ref;
            if (diff != 0.0) acc += diff * pulse(u - static_cast<double>(k));
        }
        out[n] = {acc, 0.0};
    }
    return ComplexBaseband(std::move(out), sample_rate_hz);
}

inline ComplexBaseband bpsk_from_bits(std::span<const int> bits, double bit_rate_hz, std::size_t n_samples,
                                      double sample_rate_hz) {
    return bpsk_from_bits(bits, bit_rate_hz, n_samples, sample_rate_hz, NyquistPulse());
}

inline ComplexBaseband gen_bpsk(double bit_rate_hz, double duration_s, double sample_rate_hz,
                                const NyquistPulse& pulse, RngStream& rng) {
    detail::check_modulator_rates(bit_rate_hz, duration_s, sample_rate_hz);
    const std::size_t n_samples = detail::sample_count(duration_s, sample_rate_hz);
    const auto n_bits = static_cast<std::size_t>(std::ceil(duration_s * bit_rate_hz)) + 2;
    std::vector<int> bits(n_bits);
    for (int& b : bits) b = rng.sign_bit();
    return bpsk_from_bits(bits, bit_rate_hz, n_samples, sample_rate_hz, pulse);
}

inline ComplexBaseband gen_bpsk(double bit_rate_hz, double duration_s, double sample_rate_hz, RngStream& rng) {
    return gen_bpsk(bit_rate_hz, duration_s, sample_rate_hz, NyquistPulse(), rng);
}

// Cumulative phase pulse of GMSK in units of bit periods: the integral of a
// unit rectangle of width one bit convolved with a Gaussian whose 3-dB
// bandwidth is bt/T. Rises from 0 to 1 around tau = 0 (the bit centre).
// Tabulated once per BT product and linearly interpolated.
class GaussianPhasePulse {
public:
    explicit GaussianPhasePulse(double bt_product, double table_step = 1e-4)
        : bt_(bt_product), step_(table_step) {
        if (!(bt_product > 0.0) || bt_product > 1.0) {
            throw std::domain_error("GMSK BT product must be in (0, 1]");
        }
        sigma_ = std::sqrt(std::log(2.0)) / (2.0 * std::numbers::pi * bt_product);
        half_span_ = 0.5 + 8.0 * sigma_;
        const auto count = static_cast<std::size_t>(std::ceil(2.0 * half_span_ / step_)) + 2;
        table_.resize(count);
        for (std::size_t i = 0; i < count; ++i) {
            table_[i] = exact(-half_span_ + static_cast<double>(i) * step_);
        }
    }

    double bt() const noexcept { return bt_; }
    double half_span() const noexcept { return half_span_; }

    double operator()(double tau) const noexcept {
        if (tau <= -half_span_) return 0.0;
        if (tau >= half_span_) return 1.0;
        const double pos = (tau + half_span_) / step_;
        const auto i = static_cast<std::size_t>(pos);
        const double frac = pos - static_cast<double>(i);
        return table_[i] + frac * (table_[i + 1] - table_[i]);
    }

    // Closed form: Psi(tau + 1/2) - Psi(tau - 1/2), Psi(x) = x*Phi(x/s) + s*phi(x/s).
    double exact(double tau) const noexcept {
        auto psi = [this](double x) {
            const double z = x / sigma_;
            const double cdf = 0.5 * std::erfc(-z / std::numbers::sqrt2);
            const double pdf = std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi);
            return x * cdf + sigma_ * pdf;
        };
        return psi(tau + 0.5) - psi(tau - 0.5);
    }

private:
    double bt_;
    double step_;
    double sigma_ = 0.0;
    double half_span_ = 0.0;
    std::vector<double> table_;
};

// GMSK: NRZ bits through the Gaussian frequency pulse, integrated to phase with
// the given modulation index. Bit k occupies [k, k+1) bit periods. Every sample
// has unit magnitude.
inline ComplexBaseband gmsk_from_bits(std::span<const int> bits, double symbol_rate_hz,
                                      std::size_t n_samples, double sample_rate_hz,
                                      const GaussianPhasePulse& pulse, double modulation_index = 0.5) {
    if (bits.empty()) throw std::domain_error("gmsk: no bits");
    if (n_samples == 0) throw std::domain_error("gmsk: no samples requested");
    const auto n_bits = static_cast<std::int64_t>(bits.size());
    std::vector<std::int64_t> prefix(bits.size() + 1, 0);  // prefix[k] = sum of bits[0..k)
    for (std::size_t k = 0; k < bits.size(); ++k) prefix[k + 1] = prefix[k] + bits[k];

    const double span = pulse.half_span();
    const double bits_per_sample = symbol_rate_hz / sample_rate_hz;
    const double phase_per_unit = std::numbers::pi * modulation_index;
    std::vector<cplx> out(n_samples);
    for (std::size_t n = 0; n < n_samples; ++n) {
        const double u = static_cast<double>(n) * bits_per_sample;
        // Bits whose pulse has fully settled (tau > span) contribute 1 each.
        const auto settled = std::clamp<std::int64_t>(
            static_cast<std::int64_t>(std::ceil(u - 0.5 - span)), 0, n_bits);
        const auto last = std::clamp<std::int64_t>(
            static_cast<std::int64_t>(std::floor(u - 0.5 + span)), -1, n_bits - 1);
        double acc = static_cast<double>(prefix[static_cast<std::size_t>(settled)]);
        for (std::int64_t k = settled; k <= last; ++k) {
            acc += bits[static_cast<std::size_t>(k)] * pulse(u - static_cast<double>(k) - 0.5);
        }
        const double phase = phase_per_unit * acc;
        out[n] = {std::cos(phase), std::sin(phase)};
    }
    return ComplexBaseband(std::move(out), sample_rate_hz);
}

inline ComplexBaseband gen_gmsk(double symbol_rate_hz, const GaussianPhasePulse& pulse,
                                double duration_s, double sample_rate_hz, RngStream& rng,
                                double modulation_index = 0.5) {
    detail::check_modulator_rates(symbol_rate_hz, duration_s, sample_rate_hz);
    const std::size_t n_samples = detail::sample_count(duration_s, sample_rate_hz);
    const auto n_bits = static_cast<std::size_t>(std::ceil(duration_s * symbol_rate_hz)) +
                        static_cast<std::size_t>(std::ceil(pulse.half_span())) + 2;
    std::vector<int> bits(n_bits);
    for (int& b : bits) b = rng.sign_bit();
    return gmsk_from_bits(bits, symbol_rate_hz, n_samples, sample_rate_hz, pulse, modulation_index);
}

inline ComplexBaseband gen_gmsk(double symbol_rate_hz, double bt_product, double duration_s,
                                double sample_rate_hz, RngStream& rng) {
    const GaussianPhasePulse pulse(bt_product);
    return gen_gmsk(symbol_rate_hz, pulse, duration_s, sample_rate_hz, rng);
}

// Circular complex Gaussian, variance power_mw/2 per real dimension.
inline ComplexBaseband gen_awgn(std::size_t n_samples, double power_mw, RngStream& rng,
                                double sample_rate_hz = LoRaConfig::kDefaultBandwidthHz) {
    if (n_samples == 0) throw std::domain_error("awgn: n_samples must be at least 1");
    if (!(power_mw >= 0.0)) throw std::domain_error("awgn: power must be non-negative");
    const double sigma = std::sqrt(power_mw / 2.0);
    std::vector<cplx> out(n_samples);
    for (cplx& s : out) {
        const double re = rng.normal();
        const double im = rng.normal();
        s = {sigma * re, sigma * im};
    }
    return ComplexBaseband(std::move(out), sample_rate_hz);
}

inline ComplexBaseband normalize_power(const ComplexBaseband& w, double target_mw) {
    if (!(target_mw > 0.0)) throw std::domain_error("normalize_power: target must be positive");
    const double power = w.mean_power();
    if (!(power > 0.0)) throw std::domain_error("normalize_power: waveform has zero energy");
    const double gain = std::sqrt(target_mw / power);
    std::vector<cplx> out(w.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = gain * w[i];
    return ComplexBaseband(std::move(out), w.sample_rate_hz());
}

// x[n] * exp(j 2 pi delta_f n / fs); cycles are reduced mod 1 before the
// trigonometric call so long waveforms keep full phase precision.
inline ComplexBaseband apply_freq_offset(const ComplexBaseband& w, double delta_f_hz) {
    std::vector<cplx> out(w.size());
    const double fs = w.sample_rate_hz();
    for (std::size_t n = 0; n < out.size(); ++n) {
        const double cycles = delta_f_hz * static_cast<double>(n) / fs;
        const double phase = 2.0 * std::numbers::pi * (cycles - std::floor(cycles));
        out[n] = w[n] * cplx(std::cos(phase), std::sin(phase));
    }
    return ComplexBaseband(std::move(out), fs);
}

// Contiguous n_samples slice starting uniformly in [guard, size - n_samples - guard].
inline ComplexBaseband random_segment(const ComplexBaseband& w, std::size_t n_samples,
                                      RngStream& rng, std::size_t guard = 0) {
    if (n_samples == 0) throw std::domain_error("random_segment: empty segment requested");
    if (n_samples + 2 * guard > w.size()) {
        throw std::domain_error("random_segment: segment of " + std::to_string(n_samples) +
                                " samples does not fit a waveform of " + std::to_string(w.size()));
    }
    const std::size_t starts = w.size() - n_samples - 2 * guard + 1;
    const std::size_t start = guard + rng.uniform_index(starts);
    const auto src = w.samples().subspan(start, n_samples);
    return ComplexBaseband(std::vector<cplx>(src.begin(), src.end()), w.sample_rate_hz());
}

inline void write_waveform_csv(std::ostream& os, const ComplexBaseband& w) {
    os << "index,real,imag\n";
    char line[96];
    for (std::size_t n = 0; n < w.size(); ++n) {
        std::snprintf(line, sizeof line, "%zu,%.9e,%.9e\n", n, w[n].real(), w[n].imag());
        os << line;
    }
}

}  // namespace lora_nbi
