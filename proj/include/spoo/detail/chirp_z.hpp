// chirp_z.hpp — Bluestein chirp-z transform on top of FFTW.
//
// Evaluates z_j = Σ_k y_k exp(iθ·j·k) for j < M in O((K+M) log(K+M)). Sums of
// the form Σ_k a_k exp(-iω_k t_j) over two independent uniform grids reduce to
// this after factoring out the grid offsets.

#pragma once

#include <fftw3.h>

#include <complex>
#include <cstddef>
#include <map>
#include <memory>
#include <mutex>
#include <span>
#include <stdexcept>
#include <vector>

namespace spoo::detail {

class FftBuffer {
public:
    explicit FftBuffer(std::size_t n) : n_(n), data_(fftw_alloc_complex(n)) {
        if (!data_) throw std::bad_alloc();
    }
    ~FftBuffer() { fftw_free(data_); }
    FftBuffer(const FftBuffer&) = delete;
    FftBuffer& operator=(const FftBuffer&) = delete;

    fftw_complex* raw() noexcept { return data_; }
    std::complex<double>* data() noexcept { return reinterpret_cast<std::complex<double>*>(data_); }
    std::complex<double>& operator[](std::size_t i) noexcept { return data()[i]; }
    std::size_t size() const noexcept { return n_; }

private:
    std::size_t n_;
    fftw_complex* data_;
};

// Plans are created once per length under a lock (the FFTW planner is not
// thread-safe) and executed with the new-array interface afterwards.
class FftPlans {
public:
    static const FftPlans& get(std::size_t n) {
        static std::mutex m;
        static std::map<std::size_t, std::unique_ptr<FftPlans>> cache;
        std::lock_guard lock(m);
        auto& slot = cache[n];
        if (!slot) slot.reset(new FftPlans(n));
        return *slot;
    }

    void forward(FftBuffer& buf) const { fftw_execute_dft(fwd_, buf.raw(), buf.raw()); }
    void backward(FftBuffer& buf) const { fftw_execute_dft(bwd_, buf.raw(), buf.raw()); }

    ~FftPlans() {
        fftw_destroy_plan(fwd_);
        fftw_destroy_plan(bwd_);
    }

private:
    explicit FftPlans(std::size_t n) {
        FftBuffer scratch(n);
        const int len = static_cast<int>(n);
        fwd_ = fftw_plan_dft_1d(len, scratch.raw(), scratch.raw(), FFTW_FORWARD, FFTW_ESTIMATE);
        bwd_ = fftw_plan_dft_1d(len, scratch.raw(), scratch.raw(), FFTW_BACKWARD, FFTW_ESTIMATE);
        if (!fwd_ || !bwd_) throw std::runtime_error("fftw: plan creation failed");
    }

    fftw_plan fwd_{nullptr};
    fftw_plan bwd_{nullptr};
};

inline std::size_t next_pow2(std::size_t n) {
    std::size_t p = 1;
    while (p < n) p <<= 1;
    return p;
}

inline std::vector<std::complex<double>> chirp_z(std::span<const std::complex<double>> y, double theta,
                                                 std::size_t n_out) {
    const std::size_t K = y.size();
    if (K == 0 || n_out == 0) return std::vector<std::complex<double>>(n_out);
    const std::size_t L = next_pow2(K + n_out - 1);
    const auto& plans = FftPlans::get(L);

    auto chirp = [theta](std::size_t m) {
        const double mm = static_cast<double>(m);
        return std::polar(1.0, 0.5 * theta * (mm * mm));
    };

    FftBuffer u(L), v(L);
    for (std::size_t i = 0; i < L; ++i) u[i] = v[i] = 0.0;
    for (std::size_t k = 0; k < K; ++k) u[k] = y[k] * chirp(k);
    for (std::size_t m = 0; m < n_out; ++m) v[m] = std::conj(chirp(m));
    for (std::size_t m = 1; m < K; ++m) v[L - m] = std::conj(chirp(m));

    plans.forward(u);
    plans.forward(v);
    for (std::size_t i = 0; i < L; ++i) u[i] *= v[i];
    plans.backward(u);

    const double scale = 1.0 / static_cast<double>(L);
    std::vector<std::complex<double>> z(n_out);
    for (std::size_t j = 0; j < n_out; ++j) z[j] = u[j] * scale * chirp(j);
    return z;
}

}  // namespace spoo::detail
