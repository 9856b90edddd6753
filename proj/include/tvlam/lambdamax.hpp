#pragma once

#include "tvlam/diffops.hpp"
#include "tvlam/grid.hpp"
#include "tvlam/tvsolve.hpp"

namespace tvlam {

/// Deviation threshold under which a denoised signal counts as constant:
/// tol_const = kConstTolFactor * (max(y) - min(y)). Shared by the threshold
/// verification and the bisection oracle so both use the same notion.
inline constexpr double kConstTolFactor = 1e-4;

/// The range term handles generic inputs; the magnitude floor keeps exactly
/// constant inputs classified as constant despite round-off in the solver
/// (whose iterates can drift from an exact constant by a few ulps).
inline double constancy_tolerance(std::span<const double> v, double factor = kConstTolFactor) {
    return factor * range_of(v) + 1e-12 * max_abs(v);
}

/// Parameters for the exact 2D solve of
///   lambda_max = min ||z||_inf  s.t.  div z = y - mean(y),
/// whose feasible set is div_pinv(y) + Ker[div].
struct ExactSolveConfig {
    long max_iterations = 50000;
    double feasibility_tolerance = 1e-8; // on ||div z - (y - mean)||_inf relative to ||y - mean||_inf
    double objective_tolerance = 1e-6;   // relative change of ||z||_inf over a 100-iteration window
    double step_scale = 0.99;

    void validate() const {
        detail::require(max_iterations >= 1, "ExactSolveConfig: max_iterations must be positive");
        detail::require(feasibility_tolerance > 0.0 && objective_tolerance > 0.0,
                        "ExactSolveConfig: tolerances must be positive");
        detail::require(step_scale > 0.0 && step_scale <= 1.0,
                        "ExactSolveConfig: step_scale must lie in (0, 1]");
    }
};

namespace detail {

// Shifts each direction of a field by its own midpoint. Per-direction
// constants lie in Ker[div], so this preserves feasibility of div z = b while
// minimizing ||z||_inf over those shifts.
inline void shift_direction_midpoints(const GridShape& s, std::span<double> z) {
    const long n = s.n();
    for (int k = 0; k < s.d; ++k) {
        auto dir = z.subspan(static_cast<std::size_t>(k) * n, static_cast<std::size_t>(n));
        auto [lo, hi] = std::minmax_element(dir.begin(), dir.end());
        const double mid = 0.5 * (*lo + *hi);
        for (auto& v : dir) v -= mid;
    }
}

} // namespace detail

/// Closed form in 1D: lambda_max = half the range of div_pinv(y). The
/// certificate is the midpoint-shifted pseudo-inverse field, which attains
/// the minimum of ||div_pinv(y) + zeta||_inf over Ker[div] = Span(1).
inline LambdaReport lambda_max_1d(const Signal1D& y) {
    LambdaReport report;
    report.kind = LambdaKind::exact_1d;
    const GridShape s = y.shape();
    if (range_of(y.values()) == 0.0) {
        report.certificate = VectorField::zero(s);
        return report;
    }
    auto z = div_pinv_values(s, y.values());
    report.lambda = half_range(z);
    detail::shift_direction_midpoints(s, z);

    const double ybar = mean(y.values());
    std::vector<double> divz(static_cast<std::size_t>(s.n()));
    div_into(s, z, divz);
    double resid = 0.0, scale = 0.0;
    for (long i = 0; i < s.n(); ++i) {
        const double b = y.values()[static_cast<std::size_t>(i)] - ybar;
        resid = std::max(resid, std::abs(divz[static_cast<std::size_t>(i)] - b));
        scale = std::max(scale, std::abs(b));
    }
    report.residual = resid / scale;
    report.certificate = VectorField(s, std::move(z));
    return report;
}

/// Upper bound in 2D: half the range over all 2n entries of div_pinv(y).
inline LambdaReport lambda_bnd_2d(const Image2D& y) {
    LambdaReport report;
    report.kind = LambdaKind::bound_2d;
    if (range_of(y.values()) == 0.0) return report;
    report.lambda = half_range(div_pinv_values(y.shape(), y.values()));
    return report;
}

/// Tighter bound from per-direction constant shifts (each direction's
/// backward difference annihilates constants, so these shifts stay in
/// Ker[div]): max over directions of the per-direction half-range.
inline LambdaReport lambda_bnd_2d_componentwise(const Image2D& y) {
    LambdaReport report;
    report.kind = LambdaKind::bound_2d_componentwise;
    if (range_of(y.values()) == 0.0) return report;
    const GridShape s = y.shape();
    const auto z = div_pinv_values(s, y.values());
    const auto span = std::span<const double>(z);
    const auto n = static_cast<std::size_t>(s.n());
    report.lambda = std::max(half_range(span.subspan(0, n)), half_range(span.subspan(n, n)));
    return report;
}

/// Exact lambda_max in 2D by a primal-dual solve of the constrained form
///   min ||z||_inf  s.t.  div z = y - mean(y),
/// dualizing the affine constraint and handling the l_inf objective through
/// its prox. The input is normalized by ||y - mean||_inf so the reported
/// value scales exactly with the input. Progress is tracked through
/// feasibility-restored copies of the iterate (restoration subtracts
/// div_pinv of the constraint residual, an element of the feasible set's
/// normal directions), so the reported value is always attained by the
/// returned certificate and can only improve on the componentwise bound
/// used as warm start.
inline LambdaReport lambda_max_exact_2d(const Image2D& y, const ExactSolveConfig& cfg = {}) {
    cfg.validate();
    LambdaReport report;
    report.kind = LambdaKind::exact_2d;
    const GridShape s = y.shape();
    const long n = s.n();
    const long dn = 2 * n;
    if (range_of(y.values()) == 0.0) {
        report.certificate = VectorField::zero(s);
        return report;
    }

    const double ybar = mean(y.values());
    std::vector<double> b(static_cast<std::size_t>(n));
    for (long i = 0; i < n; ++i) b[static_cast<std::size_t>(i)] = y.values()[static_cast<std::size_t>(i)] - ybar;
    const double scale = max_abs(b);
    for (auto& v : b) v /= scale;

    // Warm start: pseudo-inverse field shifted per direction, feasible with
    // value equal to the componentwise bound.
    std::vector<double> z = div_pinv_values(s, b);
    detail::shift_direction_midpoints(s, z);
    std::vector<double> best_z = z;
    double best_val = max_abs(best_z);
    double cert_residual = 0.0;
    {
        std::vector<double> divz(static_cast<std::size_t>(n));
        div_into(s, best_z, divz);
        for (long i = 0; i < n; ++i)
            cert_residual = std::max(cert_residual, std::abs(divz[static_cast<std::size_t>(i)] - b[static_cast<std::size_t>(i)]));
    }

    const double tau = cfg.step_scale / std::sqrt(8.0);
    const double sigma = cfg.step_scale / std::sqrt(8.0);
    std::vector<double> w(static_cast<std::size_t>(n), 0.0); // dual of the affine constraint
    std::vector<double> zbar = z;
    std::vector<double> gradw(static_cast<std::size_t>(dn));
    std::vector<double> divbuf(static_cast<std::size_t>(n));
    std::vector<double> scratch(static_cast<std::size_t>(dn));

    constexpr long kWindow = 100;
    constexpr long kCheckEvery = 25;
    std::vector<double> history(static_cast<std::size_t>(kWindow + 1), 0.0);

    long k = 0;
    bool converged = false;
    while (k < cfg.max_iterations && !converged) {
        ++k;
        div_into(s, zbar, divbuf);
        for (long i = 0; i < n; ++i)
            w[static_cast<std::size_t>(i)] += sigma * (divbuf[static_cast<std::size_t>(i)] - b[static_cast<std::size_t>(i)]);
        grad_into(s, w, gradw);
        for (long i = 0; i < dn; ++i)
            scratch[static_cast<std::size_t>(i)] = z[static_cast<std::size_t>(i)] + tau * gradw[static_cast<std::size_t>(i)];
        auto znew = prox_linf(scratch, tau);
        for (long i = 0; i < dn; ++i) {
            zbar[static_cast<std::size_t>(i)] = 2.0 * znew[static_cast<std::size_t>(i)] - z[static_cast<std::size_t>(i)];
            z[static_cast<std::size_t>(i)] = znew[static_cast<std::size_t>(i)];
        }
        history[static_cast<std::size_t>(k % (kWindow + 1))] = max_abs(z);

        if (k % kCheckEvery == 0 || k == cfg.max_iterations) {
            // Feasibility restoration: project the residual back through the
            // pseudo-inverse, then renormalize the per-direction midpoints.
            div_into(s, z, divbuf);
            for (long i = 0; i < n; ++i) divbuf[static_cast<std::size_t>(i)] -= b[static_cast<std::size_t>(i)];
            const auto correction = div_pinv_values(s, divbuf);
            std::vector<double> zfeas(static_cast<std::size_t>(dn));
            for (long i = 0; i < dn; ++i)
                zfeas[static_cast<std::size_t>(i)] = z[static_cast<std::size_t>(i)] - correction[static_cast<std::size_t>(i)];
            detail::shift_direction_midpoints(s, zfeas);
            const double val = max_abs(zfeas);
            if (val < best_val) {
                best_val = val;
                best_z = std::move(zfeas);
                div_into(s, best_z, divbuf);
                cert_residual = 0.0;
                for (long i = 0; i < n; ++i)
                    cert_residual = std::max(cert_residual,
                                             std::abs(divbuf[static_cast<std::size_t>(i)] - b[static_cast<std::size_t>(i)]));
            }

            if (k > kWindow) {
                const auto [lo, hi] = std::minmax_element(history.begin(), history.end());
                const bool stagnant = *hi - *lo <= cfg.objective_tolerance * std::max(*hi, 1e-300);
                if (stagnant && cert_residual <= cfg.feasibility_tolerance) converged = true;
            }
        }
    }

    report.lambda = scale * best_val;
    report.iterations = k;
    report.residual = cert_residual;
    report.converged = converged;
    for (auto& v : best_z) v *= scale;
    report.certificate = VectorField(s, std::move(best_z));
    return report;
}

/// Outcome of probing the threshold: the denoiser run slightly above the
/// candidate should return the constant mean signal, the run slightly below
/// should not.
struct ThresholdReport {
    bool constant_above = false;
    bool nonconstant_below = false;
    double sup_deviation_above = 0.0;
    double sup_deviation_below = 0.0;
};

/// Runs the denoiser at (1 +/- epsilon) * lambda_candidate and classifies
/// both solutions against the constancy tolerance. For a correct lambda_max
/// both flags come back true (a constant input leaves nonconstant_below
/// false since lambda_max is 0 there).
template <GridSample G>
ThresholdReport verify_threshold(const G& y, double lambda_candidate, double epsilon,
                                 const DenoiseConfig& denoise_cfg = {}) {
    detail::require(lambda_candidate > 0.0, "verify_threshold: lambda_candidate must be positive");
    detail::require(epsilon > 0.0 && epsilon < 1.0, "verify_threshold: epsilon must lie in (0, 1)");
    const double tol_const = constancy_tolerance(y.values());
    const double ybar = mean(y.values());

    const auto probe = [&](double lambda) {
        auto result = denoise(y, lambda, denoise_cfg);
        if (!result.trace.converged)
            throw std::runtime_error("verify_threshold: denoiser did not converge");
        double dev = 0.0;
        for (double xi : result.x.values()) dev = std::max(dev, std::abs(xi - ybar));
        return dev;
    };

    ThresholdReport report;
    report.sup_deviation_above = probe((1.0 + epsilon) * lambda_candidate);
    report.sup_deviation_below = probe((1.0 - epsilon) * lambda_candidate);
    report.constant_above = report.sup_deviation_above <= tol_const;
    report.nonconstant_below = report.sup_deviation_below > tol_const;
    return report;
}

} // namespace tvlam
