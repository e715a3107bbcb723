#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

namespace lora_nbi {

using cplx = std::complex<double>;

// Complex baseband samples. |x|^2 is instantaneous power in mW.
class ComplexBaseband {
public:
    ComplexBaseband(std::vector<cplx> samples, double sample_rate_hz)
        : samples_(std::move(samples)), sample_rate_hz_(sample_rate_hz) {
        if (samples_.empty()) {
            throw std::invalid_argument("baseband waveform must be non-empty");
        }
        if (!(sample_rate_hz_ > 0.0) || !std::isfinite(sample_rate_hz_)) {
            throw std::invalid_argument("sample rate must be positive and finite");
        }
        for (const cplx& s : samples_) {
            if (!std::isfinite(s.real()) || !std::isfinite(s.imag())) {
                throw std::invalid_argument("baseband waveform contains non-finite samples");
            }
        }
    }

    std::span<const cplx> samples() const noexcept { return samples_; }
    const cplx& operator[](std::size_t i) const { return samples_[i]; }
    std::size_t size() const noexcept { return samples_.size(); }
    double sample_rate_hz() const noexcept { return sample_rate_hz_; }

    double mean_power() const noexcept {
        double acc = 0.0;
        for (const cplx& s : samples_) acc += std::norm(s);
        return acc / static_cast<double>(samples_.size());
    }

    std::vector<cplx> release() && { return std::move(samples_); }

private:
    std::vector<cplx> samples_;
    double sample_rate_hz_;
};

// Sample-wise sum of equally long, equally sampled waveforms.
inline ComplexBaseband operator+(const ComplexBaseband& a, const ComplexBaseband& b) {
    if (a.size() != b.size() || a.sample_rate_hz() != b.sample_rate_hz()) {
        throw std::invalid_argument("cannot add waveforms of different length or rate");
    }
    std::vector<cplx> out(a.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] + b[i];
    return ComplexBaseband(std::move(out), a.sample_rate_hz());
}

// The N dechirped DFT bins Y[k] the symbol decision is taken from.
class DecisionStatistic {
public:
    explicit DecisionStatistic(std::vector<cplx> bins) : bins_(std::move(bins)) {
        if (bins_.empty()) throw std::invalid_argument("decision statistic must be non-empty");
    }

    std::span<const cplx> bins() const noexcept { return bins_; }
    const cplx& operator[](std::size_t k) const { return bins_[k]; }
    std::size_t size() const noexcept { return bins_.size(); }

private:
    std::vector<cplx> bins_;
};

}  // namespace lora_nbi
