#pragma once

// Thin FFTW wrapper: un-normalized forward DFT, one cached plan per length.

#include <fftw3.h>

#include <complex>
#include <cstddef>
#include <map>
#include <memory>
#include <mutex>
#include <span>
#include <stdexcept>
#include <vector>

namespace lora_nbi {

namespace detail {

class FftPlan {
public:
    explicit FftPlan(std::size_t n) : n_(n) {
        // Planning with FFTW_ESTIMATE never touches the buffers' contents.
        auto* in = fftw_alloc_complex(n);
        auto* out = fftw_alloc_complex(n);
        plan_ = fftw_plan_dft_1d(static_cast<int>(n), in, out, FFTW_FORWARD,
                                 FFTW_ESTIMATE | FFTW_UNALIGNED);
        fftw_free(in);
        fftw_free(out);
        if (plan_ == nullptr) throw std::runtime_error("FFTW planning failed");
    }
    ~FftPlan() { fftw_destroy_plan(plan_); }
    FftPlan(const FftPlan&) = delete;
    FftPlan& operator=(const FftPlan&) = delete;

    // fftw_execute_dft on an existing plan is safe to call concurrently.
    void execute(std::span<const std::complex<double>> in,
                 std::span<std::complex<double>> out) const {
        // FFTW's new-array interface takes non-const input but does not
        // modify it for out-of-place complex transforms.
        auto* src = const_cast<fftw_complex*>(reinterpret_cast<const fftw_complex*>(in.data()));
        fftw_execute_dft(plan_, src, reinterpret_cast<fftw_complex*>(out.data()));
    }

    std::size_t size() const noexcept { return n_; }

private:
    std::size_t n_;
    fftw_plan plan_;
};

inline const FftPlan& plan_for(std::size_t n) {
    static std::mutex mutex;
    static std::map<std::size_t, std::unique_ptr<FftPlan>> plans;
    std::lock_guard lock(mutex);
    auto& slot = plans[n];
    if (!slot) slot = std::make_unique<FftPlan>(n);
    return *slot;
}

}  // namespace detail

// out[k] = sum_n in[n] exp(-j 2 pi k n / N), no 1/N scaling.
inline void fft_forward(std::span<const std::complex<double>> in,
                        std::span<std::complex<double>> out) {
    if (in.size() != out.size() || in.empty()) {
        throw std::invalid_argument("fft_forward: input and output must have equal non-zero length");
    }
    if (in.data() == out.data()) {
        throw std::invalid_argument("fft_forward: in-place transform not supported");
    }
    detail::plan_for(in.size()).execute(in, out);
}

inline std::vector<std::complex<double>> fft_forward(std::span<const std::complex<double>> in) {
    std::vector<std::complex<double>> out(in.size());
    fft_forward(in, out);
    return out;
}

}  // namespace lora_nbi
