#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <stdexcept>

namespace lora_nbi {

// Reproducible random stream identified by (seed, stream_id). Two streams with
// the same pair produce bit-identical draws; distinct stream ids give
// independent streams, so trial t can always use stream t whatever thread it
// runs on.
class RngStream {
public:
    RngStream(std::uint64_t seed, std::uint64_t stream_id)
        : seed_(seed), stream_id_(stream_id), engine_(make_engine(seed, stream_id)) {}

    std::uint64_t seed() const noexcept { return seed_; }
    std::uint64_t stream_id() const noexcept { return stream_id_; }

    // Uniform on [0, 1).
    double uniform() { return std::uniform_real_distribution<double>(0.0, 1.0)(engine_); }

    double uniform(double lo, double hi) {
        return std::uniform_real_distribution<double>(lo, hi)(engine_);
    }

    // Uniform integer on [0, count).
    std::size_t uniform_index(std::size_t count) {
        if (count == 0) throw std::invalid_argument("uniform_index: empty range");
        return std::uniform_int_distribution<std::size_t>(0, count - 1)(engine_);
    }

    double normal() { return normal_(engine_); }

    // Equiprobable +1 / -1.
    int sign_bit() { return (engine_() >> 63) != 0 ? 1 : -1; }

private:
    static std::mt19937_64 make_engine(std::uint64_t seed, std::uint64_t stream_id) {
        std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                          static_cast<std::uint32_t>(stream_id),
                          static_cast<std::uint32_t>(stream_id >> 32), 0x6c6f7261u};
        return std::mt19937_64(seq);
    }

    std::uint64_t seed_;
    std::uint64_t stream_id_;
    std::mt19937_64 engine_;
    std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace lora_nbi
