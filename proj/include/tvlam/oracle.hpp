#pragma once

#include <Eigen/Dense>
#include <Eigen/SVD>

#include "tvlam/diffops.hpp"
#include "tvlam/grid.hpp"
#include "tvlam/lambdamax.hpp"
#include "tvlam/tvsolve.hpp"

namespace tvlam::oracle {

/// Dense Moore-Penrose pseudo-inverse of the divergence, built from the
/// materialized matrix by SVD with the usual rank cutoff. Quadratic memory;
/// reference use only.
inline Eigen::MatrixXd dense_div_pinv(const GridShape& s, long max_elements = 4096) {
    const Eigen::MatrixXd D = materialize_dense(s, DenseOp::div, max_elements);
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(D, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const auto& sv = svd.singularValues();
    const double cutoff = std::numeric_limits<double>::epsilon() *
                          static_cast<double>(std::max(D.rows(), D.cols())) *
                          (sv.size() > 0 ? sv(0) : 0.0);
    Eigen::VectorXd inv = Eigen::VectorXd::Zero(sv.size());
    for (Eigen::Index i = 0; i < sv.size(); ++i)
        if (sv(i) > cutoff) inv(i) = 1.0 / sv(i);
    return svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose();
}

/// 1D pseudo-inverse without any transform: z_i = sum_{j<=i} (y_j - mean),
/// recentred to zero mean. The cumulative sums satisfy the backward
/// difference relation exactly; recentring picks the minimum-norm solution.
inline VectorField cumsum_div_pinv_1d(const Signal1D& y) {
    const long n = y.size();
    const double ybar = mean(y.values());
    std::vector<double> z(static_cast<std::size_t>(n));
    double acc = 0.0;
    for (long i = 0; i < n; ++i) {
        acc += y[i] - ybar;
        z[static_cast<std::size_t>(i)] = acc;
    }
    const double zbar = mean(z);
    for (auto& v : z) v -= zbar;
    return VectorField(y.shape(), std::move(z));
}

/// Locates lambda_max by bisection on the observable definition: the
/// smallest lambda at which the denoised signal collapses to the mean.
/// Deviation is measured with the same constancy tolerance as
/// verify_threshold. Throws if bracket_hi does not already yield a constant
/// solution. The default iteration budget is far above the denoiser's own
/// default because probes land arbitrarily close to the threshold, where the
/// iteration converges slowest.
template <GridSample G>
double lambda_max_bisect(const G& y, double bracket_hi, double tol_rel,
                         DenoiseConfig cfg = DenoiseConfig{.max_iterations = 400000}) {
    detail::require(bracket_hi > 0.0, "lambda_max_bisect: bracket_hi must be positive");
    detail::require(tol_rel > 0.0, "lambda_max_bisect: tol_rel must be positive");
    if (range_of(y.values()) == 0.0) return 0.0;
    // The bisection localizes the threshold no better than the lambda at which
    // the solution's deviation from the mean crosses the constancy cut, so the
    // cut must sit well below the generic factor; that in turn needs iterates
    // resolved well below the cut, hence the tighter change tolerance.
    cfg.relative_change_tolerance = std::min(cfg.relative_change_tolerance, 1e-12);
    const double tol_const = constancy_tolerance(y.values(), 1e-6);
    const double ybar = mean(y.values());
    const GridShape s = y.shape();
    cfg.validate(s.d);

    detail::DenoiseState state;
    state.x.assign(y.values().begin(), y.values().end());
    state.z.assign(static_cast<std::size_t>(s.d) * static_cast<std::size_t>(s.n()), 0.0);

    const auto deviation_at = [&](double lambda) {
        for (auto& v : state.z) v = std::clamp(v, -lambda, lambda);
        const auto trace = detail::denoise_core(s, y.values(), lambda, cfg, state);
        if (!trace.converged)
            throw std::runtime_error("lambda_max_bisect: denoiser did not converge");
        double dev = 0.0;
        for (double xi : state.x) dev = std::max(dev, std::abs(xi - ybar));
        return dev;
    };

    if (deviation_at(bracket_hi) > tol_const)
        throw std::runtime_error("lambda_max_bisect: solution at bracket_hi is not constant");

    double lo = 0.0;
    double hi = bracket_hi;
    while (hi - lo > tol_rel * bracket_hi) {
        const double mid = 0.5 * (lo + hi);
        if (deviation_at(mid) <= tol_const)
            hi = mid;
        else
            lo = mid;
    }
    return 0.5 * (lo + hi);
}

} // namespace tvlam::oracle
