#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>

namespace lora_nbi {

// Spreading factor and bandwidth of a LoRa link. One sample per chip, so the
// symbol is n() samples long at a sample rate equal to the bandwidth.
class LoRaConfig {
public:
    static constexpr int kMinSf = 7;
    static constexpr int kMaxSf = 12;
    static constexpr double kDefaultBandwidthHz = 125000.0;

    explicit LoRaConfig(int sf, double bandwidth_hz = kDefaultBandwidthHz)
        : sf_(sf), bandwidth_hz_(bandwidth_hz) {
        if (sf < kMinSf || sf > kMaxSf) {
            throw std::domain_error("spreading factor " + std::to_string(sf) +
                                    " outside 7..12");
        }
        if (!(bandwidth_hz > 0.0) || !std::isfinite(bandwidth_hz)) {
            throw std::domain_error("bandwidth must be positive and finite");
        }
    }

    int sf() const noexcept { return sf_; }
    double bandwidth_hz() const noexcept { return bandwidth_hz_; }
    std::size_t n() const noexcept { return std::size_t{1} << sf_; }
    double symbol_duration_s() const noexcept {
        return static_cast<double>(n()) / bandwidth_hz_;
    }

    friend bool operator==(const LoRaConfig&, const LoRaConfig&) = default;

private:
    int sf_;
    double bandwidth_hz_;
};

}  // namespace lora_nbi
