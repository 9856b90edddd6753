#pragma once

#include <algorithm>

#include <Eigen/Dense>

#include "tvlam/grid.hpp"
#include "tvlam/spectral.hpp"

namespace tvlam {

/// Periodic forward differences, direction-major output of size d*n.
/// Direction 0 runs along rows (vertical), direction 1 along columns.
inline void grad_into(const GridShape& s, std::span<const double> x, std::span<double> out) {
    detail::require(static_cast<long>(x.size()) == s.n(), "grad_into: input size mismatch");
    detail::require(static_cast<long>(out.size()) == s.d * s.n(), "grad_into: output size mismatch");
    const long n = s.n();
    if (s.d == 1) {
        const int n1 = s.n1;
        for (int i = 0; i + 1 < n1; ++i) out[i] = x[i + 1] - x[i];
        out[n1 - 1] = x[0] - x[n1 - 1];
        return;
    }
    const int n1 = s.n1, n2 = s.n2;
    double* vert = out.data();
    double* horz = out.data() + n;
    for (int r = 0; r < n1; ++r) {
        const int rn = (r + 1 == n1) ? 0 : r + 1;
        const double* row = x.data() + static_cast<long>(r) * n2;
        const double* next = x.data() + static_cast<long>(rn) * n2;
        double* vrow = vert + static_cast<long>(r) * n2;
        double* hrow = horz + static_cast<long>(r) * n2;
        for (int c = 0; c < n2; ++c) vrow[c] = next[c] - row[c];
        for (int c = 0; c + 1 < n2; ++c) hrow[c] = row[c + 1] - row[c];
        hrow[n2 - 1] = row[0] - row[n2 - 1];
    }
}

/// Periodic divergence, the negative adjoint of grad_into: sum of per-direction
/// backward differences. <grad x, z> = -<x, div z> holds to machine precision.
inline void div_into(const GridShape& s, std::span<const double> z, std::span<double> out) {
    detail::require(static_cast<long>(z.size()) == s.d * s.n(), "div_into: field size mismatch");
    detail::require(static_cast<long>(out.size()) == s.n(), "div_into: output size mismatch");
    const long n = s.n();
    if (s.d == 1) {
        const int n1 = s.n1;
        out[0] = z[0] - z[n1 - 1];
        for (int i = 1; i < n1; ++i) out[i] = z[i] - z[i - 1];
        return;
    }
    const int n1 = s.n1, n2 = s.n2;
    const double* vert = z.data();
    const double* horz = z.data() + n;
    for (int r = 0; r < n1; ++r) {
        const int rp = (r == 0) ? n1 - 1 : r - 1;
        const double* vrow = vert + static_cast<long>(r) * n2;
        const double* vprev = vert + static_cast<long>(rp) * n2;
        const double* hrow = horz + static_cast<long>(r) * n2;
        double* orow = out.data() + static_cast<long>(r) * n2;
        orow[0] = vrow[0] - vprev[0] + hrow[0] - hrow[n2 - 1];
        for (int c = 1; c < n2; ++c) orow[c] = vrow[c] - vprev[c] + hrow[c] - hrow[c - 1];
    }
}

template <GridSample G>
VectorField grad(const G& x) {
    const GridShape s = x.shape();
    std::vector<double> out(static_cast<std::size_t>(s.d * s.n()));
    grad_into(s, x.values(), out);
    return VectorField(s, std::move(out));
}

/// div z as a grid sample; the target type must match the field's base grid,
/// e.g. div<Image2D>(z) for a two-dimensional field.
template <GridSample G>
G div(const VectorField& z) {
    const GridShape s = z.base_shape();
    std::vector<double> out(static_cast<std::size_t>(s.n()));
    div_into(s, z.values(), out);
    return G(s, std::move(out));
}

/// Moore-Penrose pseudo-inverse of the divergence, applied through the
/// spectral pseudo-inverse kernels: the minimum-norm solution of
/// div z = y - mean(y). In 1D the output has zero mean; in 2D it lies in
/// the image of grad.
inline std::vector<double> div_pinv_values(const GridShape& s, std::span<const double> y) {
    detail::check_shape(s);
    detail::require(static_cast<long>(y.size()) == s.n(), "div_pinv_values: input size mismatch");
    if (s.d == 1) {
        const auto Y = dft_forward(s, y);
        const auto piv = kernel_pinv_1d(kernel_backward_diff(s.n1));
        std::vector<Complex> Z(Y.size());
        for (std::size_t i = 0; i < Y.size(); ++i) Z[i] = piv.entries[i] * Y[i];
        return dft_inverse_real(s, Z);
    }
    // The 2D pseudo-inverse kernels are separable in the axis frequencies and
    // the data are real, so work in the half spectrum from two 1D tables: one
    // real-to-complex transform, then per direction a multiplier pass over
    // reused buffers and an inverse straight into that direction's output
    // slot. The inverse-transform normalization is folded into the tables.
    const int n1 = s.n1, n2 = s.n2;
    const int h = n2 / 2 + 1;
    std::vector<Complex> ku(static_cast<std::size_t>(n1)), kl(static_cast<std::size_t>(h));
    std::vector<double> du(static_cast<std::size_t>(n1)), dl(static_cast<std::size_t>(h));
    const double inv_n = 1.0 / static_cast<double>(s.n());
    for (int k = 0; k < n1; ++k) {
        const Complex e = std::conj(detail::backward_diff_entry(k, n1));
        du[static_cast<std::size_t>(k)] = std::norm(e);
        ku[static_cast<std::size_t>(k)] = e * inv_n;
    }
    for (int k = 0; k < h; ++k) {
        const Complex e = std::conj(detail::backward_diff_entry(k, n2));
        dl[static_cast<std::size_t>(k)] = std::norm(e);
        kl[static_cast<std::size_t>(k)] = e * inv_n;
    }
    // |1 - e^{-i theta}|^2 peaks at the frequency nearest n/2, which the half
    // range always contains, so these maxima match the full-spectrum ones.
    const double eps_zero =
        kZeroDenominatorGuard *
        (*std::max_element(du.begin(), du.end()) + *std::max_element(dl.begin(), dl.end()));

    const auto nh = static_cast<std::size_t>(n1) * static_cast<std::size_t>(h);
    auto& Y = detail::spectral_scratch(0, nh);
    auto& Z = detail::spectral_scratch(1, nh);
    detail::FftPlanCache::instance().execute_r2c(s, y.data(), Y.data());

    const auto n = static_cast<std::size_t>(s.n());
    std::vector<double> out(2 * n);
    const auto emit = [&](bool vertical, double* dst) {
        for (int k1 = 0; k1 < n1; ++k1)
            for (int k2 = 0; k2 < h; ++k2) {
                const auto i = static_cast<std::size_t>(k1) * static_cast<std::size_t>(h) +
                               static_cast<std::size_t>(k2);
                const double den = du[static_cast<std::size_t>(k1)] + dl[static_cast<std::size_t>(k2)];
                const Complex numer = vertical ? ku[static_cast<std::size_t>(k1)]
                                               : kl[static_cast<std::size_t>(k2)];
                Z[i] = (den > eps_zero) ? numer / den * Y[i] : Complex(0.0, 0.0);
            }
        detail::FftPlanCache::instance().execute_c2r(s, Z.data(), dst);
    };
    emit(true, out.data());
    emit(false, out.data() + n);
    return out;
}

template <GridSample G>
VectorField div_pinv(const G& y) {
    const GridShape s = y.shape();
    return VectorField(s, div_pinv_values(s, y.values()));
}

/// div(div_pinv(y)): the orthogonal projector onto zero-mean signals,
/// so the result equals y - mean(y).
template <GridSample G>
G project_zero_mean(const G& y) {
    const GridShape s = y.shape();
    const auto z = div_pinv_values(s, y.values());
    std::vector<double> out(static_cast<std::size_t>(s.n()));
    div_into(s, z, out);
    return G(s, std::move(out));
}

enum class DenseOp { grad, div };

/// Explicit matrix of the operator, built by applying it to canonical basis
/// vectors: dn x n for grad, n x dn for div. Oracle support only; refuses
/// grids beyond the cap.
inline Eigen::MatrixXd materialize_dense(const GridShape& s, DenseOp which, long cap = 4096) {
    detail::check_shape(s);
    if (s.n() > cap) throw std::length_error("materialize_dense: grid exceeds dense cap");
    const long n = s.n();
    const long dn = s.d * n;
    const long rows = (which == DenseOp::grad) ? dn : n;
    const long cols = (which == DenseOp::grad) ? n : dn;
    Eigen::MatrixXd m(rows, cols);
    std::vector<double> basis(static_cast<std::size_t>(cols), 0.0);
    std::vector<double> col(static_cast<std::size_t>(rows));
    for (long j = 0; j < cols; ++j) {
        basis[static_cast<std::size_t>(j)] = 1.0;
        if (which == DenseOp::grad)
            grad_into(s, basis, col);
        else
            div_into(s, basis, col);
        for (long i = 0; i < rows; ++i) m(i, j) = col[static_cast<std::size_t>(i)];
        basis[static_cast<std::size_t>(j)] = 0.0;
    }
    return m;
}

} // namespace tvlam
