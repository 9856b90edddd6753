#pragma once

#include <complex>
#include <map>
#include <mutex>
#include <numbers>
#include <tuple>
#include <utility>
#include <vector>

#include <fftw3.h>

#include "tvlam/grid.hpp"

namespace tvlam {

using Complex = std::complex<double>;

/// Fraction of the largest denominator below which a spectral denominator is
/// treated as zero. Only the zero frequency triggers it for difference kernels.
inline constexpr double kZeroDenominatorGuard = 1e-12;

/// Per-frequency multipliers on a length-n circle, index k in {0,...,n-1}.
struct SpectralKernel1D {
    std::vector<Complex> entries;

    [[nodiscard]] int size() const { return static_cast<int>(entries.size()); }
};

/// Per-frequency multipliers on an n1 x n2 torus, row-major in (k1, k2).
struct SpectralKernel2D {
    int n1 = 0;
    int n2 = 0;
    std::vector<Complex> entries;

    [[nodiscard]] Complex at(int k1, int k2) const {
        return entries[static_cast<std::size_t>(k1) * n2 + k2];
    }
};

namespace detail {

// One cached FFTW plan per (d, n1, n2, transform kind). Plans are created with
// FFTW_UNALIGNED so they can execute on any caller buffer; creation is
// serialized because the FFTW planner is not thread-safe. Executing a cached
// plan on fresh arrays is safe from any thread.
class FftPlanCache {
public:
    static FftPlanCache& instance() {
        static FftPlanCache cache;
        return cache;
    }

    void execute(const GridShape& s, int sign, const Complex* in, Complex* out) {
        fftw_execute_dft(plan_for(s, sign),
                         reinterpret_cast<fftw_complex*>(const_cast<Complex*>(in)),
                         reinterpret_cast<fftw_complex*>(out));
    }

    /// Half-spectrum forward transform of real data: out holds the first
    /// n2/2 + 1 columns (all of it in 1D), the rest being conjugate-redundant.
    /// Out-of-place r2c leaves the input intact; FFTW's signature is simply
    /// not const-qualified.
    void execute_r2c(const GridShape& s, const double* in, Complex* out) {
        fftw_execute_dft_r2c(plan_for(s, kR2c), const_cast<double*>(in),
                             reinterpret_cast<fftw_complex*>(out));
    }

    /// Inverse of execute_r2c up to a factor n. Overwrites the input spectrum:
    /// FFTW destroys multi-dimensional c2r inputs.
    void execute_c2r(const GridShape& s, Complex* in, double* out) {
        fftw_execute_dft_c2r(plan_for(s, kC2r), reinterpret_cast<fftw_complex*>(in), out);
    }

    FftPlanCache(const FftPlanCache&) = delete;
    FftPlanCache& operator=(const FftPlanCache&) = delete;

private:
    static constexpr int kR2c = 2;
    static constexpr int kC2r = 3;

    fftw_plan plan_for(const GridShape& s, int kind) {
        std::lock_guard<std::mutex> lock(mu_);
        const auto key = std::make_tuple(s.d, s.n1, s.n2, kind);
        const auto it = plans_.find(key);
        if (it != plans_.end()) return it->second;

        constexpr unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
        fftw_plan p = nullptr;
        if (kind == FFTW_FORWARD || kind == FFTW_BACKWARD) {
            std::vector<Complex> sa(static_cast<std::size_t>(s.n())), sb(sa.size());
            auto* a = reinterpret_cast<fftw_complex*>(sa.data());
            auto* b = reinterpret_cast<fftw_complex*>(sb.data());
            p = (s.d == 1) ? fftw_plan_dft_1d(s.n1, a, b, kind, flags)
                           : fftw_plan_dft_2d(s.n1, s.n2, a, b, kind, flags);
        } else {
            const int cols = (s.d == 1) ? s.n1 : s.n2;
            const int rows = (s.d == 1) ? 1 : s.n1;
            std::vector<double> sr(static_cast<std::size_t>(s.n()));
            std::vector<Complex> sc(static_cast<std::size_t>(rows) *
                                    (static_cast<std::size_t>(cols) / 2 + 1));
            auto* c = reinterpret_cast<fftw_complex*>(sc.data());
            if (kind == kR2c)
                p = (s.d == 1) ? fftw_plan_dft_r2c_1d(s.n1, sr.data(), c, flags)
                               : fftw_plan_dft_r2c_2d(s.n1, s.n2, sr.data(), c, flags);
            else
                p = (s.d == 1) ? fftw_plan_dft_c2r_1d(s.n1, c, sr.data(), flags)
                               : fftw_plan_dft_c2r_2d(s.n1, s.n2, c, sr.data(), flags);
        }
        plans_.emplace(key, p);
        return p;
    }

    FftPlanCache() = default;
    ~FftPlanCache() {
        for (auto& [key, plan] : plans_) fftw_destroy_plan(plan);
    }

    std::map<std::tuple<int, int, int, int>, fftw_plan> plans_;
    std::mutex mu_;
};

/// Reused per-thread spectral buffers: at large grid sizes, heap churn for
/// multi-megabyte temporaries costs as much as the transforms themselves.
inline std::vector<Complex>& spectral_scratch(int which, std::size_t size) {
    thread_local std::vector<Complex> bufs[2];
    auto& b = bufs[which];
    if (b.size() < size) b.resize(size);
    return b;
}

} // namespace detail

/// Unnormalized forward DFT, exponent e^{-2*pi*i*<j,k>/n} per axis. The 2D
/// transform is the tensor product of the 1D transforms (row-major layout).
inline std::vector<Complex> dft_forward(const GridShape& s, std::span<const double> x) {
    detail::check_shape(s);
    detail::require(static_cast<long>(x.size()) == s.n(), "dft_forward: size mismatch");
    std::vector<Complex> in(x.begin(), x.end());
    std::vector<Complex> out(in.size());
    detail::FftPlanCache::instance().execute(s, FFTW_FORWARD, in.data(), out.data());
    return out;
}

std::vector<Complex> dft_forward(const GridSample auto& g) {
    return dft_forward(g.shape(), g.values());
}

/// Normalized complex inverse DFT (division by n).
inline std::vector<Complex> dft_inverse(const GridShape& s, std::span<const Complex> X) {
    detail::check_shape(s);
    detail::require(static_cast<long>(X.size()) == s.n(), "dft_inverse: size mismatch");
    std::vector<Complex> out(X.size());
    detail::FftPlanCache::instance().execute(s, FFTW_BACKWARD, X.data(), out.data());
    const double scale = 1.0 / static_cast<double>(s.n());
    for (auto& v : out) v *= scale;
    return out;
}

/// Real part of the normalized inverse DFT: the pseudo-inverse of dft_forward
/// on real inputs.
inline std::vector<double> dft_inverse_real(const GridShape& s, std::span<const Complex> X) {
    auto full = dft_inverse(s, X);
    std::vector<double> out(full.size());
    for (std::size_t i = 0; i < full.size(); ++i) out[i] = full[i].real();
    return out;
}

template <GridSample G>
G dft_inverse_real_as(const GridShape& s, std::span<const Complex> X) {
    return G(s, dft_inverse_real(s, X));
}

/// DFT of the periodic forward-difference kernel x_{i+1} - x_i:
/// entries[k] = e^{+2*pi*i*k/n} - 1. Annihilates constants (entry 0 is 0).
inline SpectralKernel1D kernel_forward_diff(int n) {
    detail::require(n >= 1, "kernel_forward_diff: n must be >= 1");
    SpectralKernel1D k;
    k.entries.resize(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        const double theta = 2.0 * std::numbers::pi * i / n;
        k.entries[static_cast<std::size_t>(i)] = Complex(std::cos(theta) - 1.0, std::sin(theta));
    }
    return k;
}

/// DFT of the periodic backward-difference kernel z_i - z_{i-1}:
/// entries[k] = 1 - e^{-2*pi*i*k/n} = -conj(kernel_forward_diff(n)[k]),
/// consistent with div = -grad^T.
inline SpectralKernel1D kernel_backward_diff(int n) {
    detail::require(n >= 1, "kernel_backward_diff: n must be >= 1");
    SpectralKernel1D k;
    k.entries.resize(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        const double theta = 2.0 * std::numbers::pi * i / n;
        k.entries[static_cast<std::size_t>(i)] = Complex(1.0 - std::cos(theta), std::sin(theta));
    }
    return k;
}

/// Per-frequency pseudo-inverse conj(K)/|K|^2, hard zero where the squared
/// modulus falls under the guard (only the zero frequency for difference
/// kernels).
inline SpectralKernel1D kernel_pinv_1d(const SpectralKernel1D& k) {
    SpectralKernel1D out;
    out.entries.resize(k.entries.size());
    double max_denom = 0.0;
    for (const auto& v : k.entries) max_denom = std::max(max_denom, std::norm(v));
    const double eps_zero = kZeroDenominatorGuard * max_denom;
    for (std::size_t i = 0; i < k.entries.size(); ++i) {
        const double denom = std::norm(k.entries[i]);
        out.entries[i] = (denom > eps_zero) ? std::conj(k.entries[i]) / denom : Complex(0.0, 0.0);
    }
    return out;
}

namespace detail {

enum class Axis { vertical, horizontal };

template <class F>
SpectralKernel2D make_kernel_2d(int n1, int n2, Axis axis, F&& entry) {
    require(n1 >= 1 && n2 >= 1, "spectral kernel: extents must be positive");
    SpectralKernel2D k;
    k.n1 = n1;
    k.n2 = n2;
    k.entries.resize(static_cast<std::size_t>(n1) * n2);
    for (int k1 = 0; k1 < n1; ++k1) {
        for (int k2 = 0; k2 < n2; ++k2) {
            const int freq = (axis == Axis::vertical) ? k1 : k2;
            const int len = (axis == Axis::vertical) ? n1 : n2;
            k.entries[static_cast<std::size_t>(k1) * n2 + k2] = entry(freq, len);
        }
    }
    return k;
}

inline Complex forward_diff_entry(int k, int n) {
    const double theta = 2.0 * std::numbers::pi * k / n;
    return {std::cos(theta) - 1.0, std::sin(theta)};
}

inline Complex backward_diff_entry(int k, int n) {
    const double theta = 2.0 * std::numbers::pi * k / n;
    return {1.0 - std::cos(theta), std::sin(theta)};
}

} // namespace detail

/// K_down: forward difference along rows (vertical axis).
inline SpectralKernel2D kernel_forward_diff_vertical(int n1, int n2) {
    return detail::make_kernel_2d(n1, n2, detail::Axis::vertical, detail::forward_diff_entry);
}

/// K_right: forward difference along columns (horizontal axis).
inline SpectralKernel2D kernel_forward_diff_horizontal(int n1, int n2) {
    return detail::make_kernel_2d(n1, n2, detail::Axis::horizontal, detail::forward_diff_entry);
}

/// K_up: backward difference along rows.
inline SpectralKernel2D kernel_backward_diff_vertical(int n1, int n2) {
    return detail::make_kernel_2d(n1, n2, detail::Axis::vertical, detail::backward_diff_entry);
}

/// K_left: backward difference along columns.
inline SpectralKernel2D kernel_backward_diff_horizontal(int n1, int n2) {
    return detail::make_kernel_2d(n1, n2, detail::Axis::horizontal, detail::backward_diff_entry);
}

/// Per-frequency pseudo-inverse of the row block [K_up K_left]: each output
/// entry is the conjugate of its input over |K_up|^2 + |K_left|^2, both zero
/// where the shared denominator falls under the guard.
inline std::pair<SpectralKernel2D, SpectralKernel2D> kernel_pinv_2d(const SpectralKernel2D& up,
                                                                    const SpectralKernel2D& left) {
    detail::require(up.n1 == left.n1 && up.n2 == left.n2, "kernel_pinv_2d: shape mismatch");
    SpectralKernel2D piv_up{up.n1, up.n2, std::vector<Complex>(up.entries.size())};
    SpectralKernel2D piv_left{up.n1, up.n2, std::vector<Complex>(up.entries.size())};
    double max_denom = 0.0;
    for (std::size_t i = 0; i < up.entries.size(); ++i)
        max_denom = std::max(max_denom, std::norm(up.entries[i]) + std::norm(left.entries[i]));
    const double eps_zero = kZeroDenominatorGuard * max_denom;
    for (std::size_t i = 0; i < up.entries.size(); ++i) {
        const double denom = std::norm(up.entries[i]) + std::norm(left.entries[i]);
        if (denom > eps_zero) {
            piv_up.entries[i] = std::conj(up.entries[i]) / denom;
            piv_left.entries[i] = std::conj(left.entries[i]) / denom;
        } else {
            piv_up.entries[i] = Complex(0.0, 0.0);
            piv_left.entries[i] = Complex(0.0, 0.0);
        }
    }
    return {std::move(piv_up), std::move(piv_left)};
}

} // namespace tvlam
