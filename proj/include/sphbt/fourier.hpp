#ifndef SPHBT_FOURIER_HPP
#define SPHBT_FOURIER_HPP

// Orthonormal sine / cosine transforms on half-integer nodes r_i = (i - 1/2) dr,
// backed by FFTW's RODFT10/RODFT01 and REDFT10/REDFT01 kinds.
//
// Sine kind, slot k = 0..N-1 is the mode n = k + 1:
//   f_n = sum_i c_n sin(pi n (i - 1/2) / N) psi_i
// Cosine kind, slot k is the mode n = k:
//   f_n = sum_i c_n cos(pi n (i - 1/2) / N) psi_i
// with c_n = sqrt(2/N) except for the sine n = N and cosine n = 0 modes,
// where c_n = sqrt(1/N).
//
// The transforms run in long double (fftw3l) and round once on output. With
// double FFTW the forward/inverse round trip grows the norm by about 1e-16,
// which adds up to ~1e-12 over a long propagation.

#include <fftw3.h>

#include <cmath>
#include <complex>
#include <map>
#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

#include "sphbt/errors.hpp"

namespace sphbt {

enum class FourierKind { sine, cosine };

namespace detail {

// FFTW's planner is not thread safe; execution with the new-array interface is.
inline std::mutex& fftw_planner_mutex() {
    static std::mutex m;
    return m;
}

class R2RPlan {
public:
    R2RPlan(int n, int howmany, fftwl_r2r_kind kind) : len_(static_cast<std::size_t>(n) * static_cast<std::size_t>(howmany)) {
        std::lock_guard<std::mutex> lock(fftw_planner_mutex());
        long double* buf = fftwl_alloc_real(len_);
        if (!buf) throw NumericError("fftwl_alloc_real failed");
        const int dims[1] = {n};
        const fftwl_r2r_kind kinds[1] = {kind};
        plan_ = fftwl_plan_many_r2r(1, dims, howmany, buf, nullptr, howmany, 1, buf, nullptr, howmany, 1, kinds,
                                    FFTW_ESTIMATE | FFTW_UNALIGNED);
        fftwl_free(buf);
        if (!plan_) throw NumericError("FFTW could not create an r2r plan of length " + std::to_string(n));
    }
    R2RPlan(const R2RPlan&) = delete;
    R2RPlan& operator=(const R2RPlan&) = delete;
    ~R2RPlan() {
        std::lock_guard<std::mutex> lock(fftw_planner_mutex());
        fftwl_destroy_plan(plan_);
    }

    std::size_t length() const { return len_; }
    /// In-place execution on an interleaved buffer of length() values.
    void execute(long double* data) const { fftwl_execute_r2r(plan_, data, data); }

private:
    std::size_t len_;
    fftwl_plan plan_ = nullptr;
};

inline std::vector<long double>& fourier_workspace(std::size_t n) {
    thread_local std::vector<long double> buf;
    if (buf.size() < n) buf.resize(n);
    return buf;
}

} // namespace detail

class FourierStage {
public:
    FourierStage(long n, FourierKind kind) : n_(n), kind_(kind) {
        if (n < 1) throw DomainError("FourierStage: length must be positive");
        const int ni = static_cast<int>(n);
        const auto fwd = kind == FourierKind::sine ? FFTW_RODFT10 : FFTW_REDFT10;
        const auto inv = kind == FourierKind::sine ? FFTW_RODFT01 : FFTW_REDFT01;
        real_fwd_ = std::make_unique<detail::R2RPlan>(ni, 1, fwd);
        real_inv_ = std::make_unique<detail::R2RPlan>(ni, 1, inv);
        cplx_fwd_ = std::make_unique<detail::R2RPlan>(ni, 2, fwd);
        cplx_inv_ = std::make_unique<detail::R2RPlan>(ni, 2, inv);

        // forward post-scale and inverse pre-scale per slot, FFTW's factor 2 folded in
        // in long double, so that the forward/inverse round trip carries no
        // systematic scale bias
        const auto nl = static_cast<long double>(n);
        post_.assign(static_cast<std::size_t>(n), std::sqrt(2.0L / nl) / 2.0L);
        pre_ = post_;
        const std::size_t special = kind == FourierKind::sine ? static_cast<std::size_t>(n - 1) : 0;
        post_[special] = std::sqrt(1.0L / nl) / 2.0L;
        pre_[special] = std::sqrt(1.0L / nl);
    }

    long size() const { return n_; }
    FourierKind kind() const { return kind_; }

    /// out = sign * F * in. in and out may alias.
    template <class T>
    void forward(std::span<const T> in, std::span<T> out, double sign = 1.0) const {
        check(in.size(), out.size());
        const auto& plan = plan_for<T>(true);
        auto& w = detail::fourier_workspace(plan.length());
        const auto* src = reinterpret_cast<const double*>(in.data());
        for (std::size_t k = 0; k < plan.length(); ++k) w[k] = src[k];
        plan.execute(w.data());
        constexpr std::size_t width = sizeof(T) / sizeof(double);
        auto* dst = reinterpret_cast<double*>(out.data());
        for (std::size_t k = 0; k < plan.length(); ++k)
            dst[k] = static_cast<double>(w[k] * (sign * post_[k / width]));
    }

    /// out = sign * F^T * in. in and out may alias.
    template <class T>
    void inverse(std::span<const T> in, std::span<T> out, double sign = 1.0) const {
        check(in.size(), out.size());
        const auto& plan = plan_for<T>(false);
        auto& w = detail::fourier_workspace(plan.length());
        constexpr std::size_t width = sizeof(T) / sizeof(double);
        const auto* src = reinterpret_cast<const double*>(in.data());
        for (std::size_t k = 0; k < plan.length(); ++k) w[k] = src[k] * (sign * pre_[k / width]);
        plan.execute(w.data());
        auto* dst = reinterpret_cast<double*>(out.data());
        for (std::size_t k = 0; k < plan.length(); ++k) dst[k] = static_cast<double>(w[k]);
    }

private:
    void check(std::size_t a, std::size_t b) const {
        if (a != static_cast<std::size_t>(n_) || b != static_cast<std::size_t>(n_))
            throw DomainError("FourierStage: vector length " + std::to_string(a) + " does not match plan length " +
                              std::to_string(n_));
    }

    template <class T>
    const detail::R2RPlan& plan_for(bool fwd) const {
        if constexpr (std::is_same_v<T, double>) {
            return fwd ? *real_fwd_ : *real_inv_;
        } else {
            static_assert(std::is_same_v<T, std::complex<double>>, "FourierStage supports double and complex<double>");
            return fwd ? *cplx_fwd_ : *cplx_inv_;
        }
    }

    long n_;
    FourierKind kind_;
    std::unique_ptr<detail::R2RPlan> real_fwd_, real_inv_, cplx_fwd_, cplx_inv_;
    std::vector<long double> post_, pre_;
};

/// Shared stage for (length, kind); stages are immutable and reused by every
/// radial plan of the same parity and length.
inline std::shared_ptr<const FourierStage> shared_fourier_stage(long n, FourierKind kind) {
    static std::mutex m;
    static std::map<std::pair<long, int>, std::weak_ptr<const FourierStage>> cache;
    std::lock_guard<std::mutex> lock(m);
    auto& slot = cache[{n, static_cast<int>(kind)}];
    if (auto sp = slot.lock()) return sp;
    auto sp = std::make_shared<const FourierStage>(n, kind);
    slot = sp;
    return sp;
}

} // namespace sphbt

#endif
