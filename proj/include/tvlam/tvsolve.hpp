#pragma once

#include <optional>

#include "tvlam/diffops.hpp"
#include "tvlam/grid.hpp"

namespace tvlam {

/// Step and stopping parameters for the primal-dual denoiser. When tau/sigma
/// are not given they default to step_scale/sqrt(4d), which satisfies the
/// convergence condition tau*sigma*||grad||^2 <= 1 since ||grad||^2 <= 4d.
struct DenoiseConfig {
    long max_iterations = 20000;
    std::optional<double> tau;
    std::optional<double> sigma;
    double relative_change_tolerance = 1e-9;
    double over_relaxation = 1.0;
    double step_scale = 0.99;

    void validate(int d) const {
        detail::require(max_iterations >= 1, "DenoiseConfig: max_iterations must be positive");
        detail::require(relative_change_tolerance > 0.0, "DenoiseConfig: tolerance must be positive");
        detail::require(over_relaxation >= 0.0 && over_relaxation <= 1.0,
                        "DenoiseConfig: over_relaxation must lie in [0, 1]");
        detail::require(step_scale > 0.0 && step_scale <= 1.0,
                        "DenoiseConfig: step_scale must lie in (0, 1]");
        const double t = tau.value_or(default_step(d));
        const double s = sigma.value_or(default_step(d));
        detail::require(t > 0.0 && s > 0.0, "DenoiseConfig: steps must be positive");
        detail::require(t * s * 4.0 * d <= 1.0 + 1e-12,
                        "DenoiseConfig: tau*sigma*4d must not exceed 1");
    }

    [[nodiscard]] double default_step(int d) const { return step_scale / std::sqrt(4.0 * d); }
};

struct SolverTrace {
    long iterations = 0;
    double final_change = 0.0;  // last ||x_{k+1} - x_k||_inf / range(y)
    double grad_inf_norm = 0.0; // ||grad x*||_inf at the returned iterate
    bool converged = true;
};

/// Euclidean projection onto {u : sum |u_i| <= radius}, by exact sort-based
/// thresholding: if the input is outside the ball, soft-threshold by the
/// unique theta >= 0 with sum max(|v_i| - theta, 0) = radius.
inline std::vector<double> project_l1_ball(std::span<const double> v, double radius) {
    detail::require(radius > 0.0, "project_l1_ball: radius must be positive");
    double l1 = 0.0;
    for (double x : v) l1 += std::abs(x);
    std::vector<double> out(v.begin(), v.end());
    if (l1 <= radius) return out;
    std::vector<double> mags(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) mags[i] = std::abs(v[i]);
    std::sort(mags.begin(), mags.end(), std::greater<>());
    double cumulative = 0.0;
    double theta = 0.0;
    for (std::size_t j = 0; j < mags.size(); ++j) {
        cumulative += mags[j];
        const double candidate = (cumulative - radius) / static_cast<double>(j + 1);
        if (mags[j] - candidate > 0.0)
            theta = candidate;
        else
            break;
    }
    for (auto& x : out) {
        const double m = std::abs(x) - theta;
        x = (m > 0.0) ? ((x > 0.0) ? m : -m) : 0.0;
    }
    return out;
}

inline VectorField project_l1_ball(const VectorField& v, double radius) {
    return VectorField(v.base_shape(), project_l1_ball(v.values(), radius));
}

inline Signal1D project_l1_ball(const Signal1D& v, double radius) {
    return Signal1D(project_l1_ball(v.values(), radius));
}

/// Proximity operator of the l_inf norm with the given step, through the
/// Moreau identity: v - step * projection of v/step onto the unit l1 ball.
inline std::vector<double> prox_linf(std::span<const double> v, double step) {
    detail::require(step > 0.0, "prox_linf: step must be positive");
    std::vector<double> scaled(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) scaled[i] = v[i] / step;
    auto projected = project_l1_ball(scaled, 1.0);
    std::vector<double> out(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) out[i] = v[i] - step * projected[i];
    return out;
}

inline VectorField prox_linf(const VectorField& v, double step) {
    return VectorField(v.base_shape(), prox_linf(v.values(), step));
}

inline Signal1D prox_linf(const Signal1D& v, double step) {
    return Signal1D(prox_linf(v.values(), step));
}

namespace detail {

struct DenoiseState {
    std::vector<double> x; // primal iterate, size n
    std::vector<double> z; // dual iterate, size d*n, kept in [-lambda, lambda]
};

// Primal-dual iteration for 0.5*||y - x||^2 + lambda*||grad x||_1: the dual
// ascent step clips z entrywise to [-lambda, lambda], the primal step is the
// exact prox of the quadratic data term.
inline SolverTrace denoise_core(const GridShape& s, std::span<const double> y, double lambda,
                                const DenoiseConfig& cfg, DenoiseState& state) {
    cfg.validate(s.d);
    require(lambda >= 0.0, "denoise: lambda must be nonnegative");
    const long n = s.n();
    const long dn = s.d * n;
    require(static_cast<long>(state.x.size()) == n && static_cast<long>(state.z.size()) == dn,
            "denoise: warm-start state has wrong size");

    SolverTrace trace;
    std::vector<double> gradbuf(static_cast<std::size_t>(dn));
    if (lambda == 0.0) {
        state.x.assign(y.begin(), y.end());
        state.z.assign(static_cast<std::size_t>(dn), 0.0);
        grad_into(s, state.x, gradbuf);
        trace.grad_inf_norm = max_abs(gradbuf);
        return trace;
    }

    const double tau = cfg.tau.value_or(cfg.default_step(s.d));
    const double sigma = cfg.sigma.value_or(cfg.default_step(s.d));
    const double theta = cfg.over_relaxation;
    const double span = range_of(y);
    const double change_scale = (span > 0.0) ? span : 1.0;

    std::vector<double> xbar = state.x;
    std::vector<double> divbuf(static_cast<std::size_t>(n));
    trace.converged = false;
    for (long k = 1; k <= cfg.max_iterations; ++k) {
        grad_into(s, xbar, gradbuf);
        for (long i = 0; i < dn; ++i) {
            const double zi = state.z[i] + sigma * gradbuf[i];
            state.z[i] = std::clamp(zi, -lambda, lambda);
        }
        div_into(s, state.z, divbuf);
        double change = 0.0;
        for (long i = 0; i < n; ++i) {
            const double xn = (state.x[i] + tau * divbuf[i] + tau * y[i]) / (1.0 + tau);
            change = std::max(change, std::abs(xn - state.x[i]));
            xbar[i] = xn + theta * (xn - state.x[i]);
            state.x[i] = xn;
        }
        trace.iterations = k;
        trace.final_change = change / change_scale;
        if (trace.final_change <= cfg.relative_change_tolerance) {
            trace.converged = true;
            break;
        }
    }
    grad_into(s, state.x, gradbuf);
    trace.grad_inf_norm = max_abs(gradbuf);
    return trace;
}

} // namespace detail

template <GridSample G>
struct DenoiseResult {
    G x;
    VectorField dual; // certificate with ||z||_inf <= lambda and y - x = -div z
    SolverTrace trace;
};

/// Minimizer of 0.5*||y - x||^2 + lambda*||grad x||_1 (unique by strong
/// convexity). lambda = 0 returns y. On non-convergence the last iterate is
/// returned with the trace flagged.
template <GridSample G>
DenoiseResult<G> denoise(const G& y, double lambda, const DenoiseConfig& cfg = {}) {
    const GridShape s = y.shape();
    detail::DenoiseState state;
    state.x.assign(y.values().begin(), y.values().end());
    state.z.assign(static_cast<std::size_t>(s.d * s.n()), 0.0);
    SolverTrace trace = detail::denoise_core(s, y.values(), lambda, cfg, state);
    return DenoiseResult<G>{G(s, std::move(state.x)), VectorField(s, std::move(state.z)), trace};
}

struct SweepRow {
    double lambda = 0.0;
    double grad_inf_norm = 0.0;
    double deviation_from_mean = 0.0;
    long iterations = 0;
    bool converged = true;
};

struct SweepResult {
    std::vector<SweepRow> rows;
};

/// One denoise per lambda, warm-starting each run from the previous solution.
/// Lambdas must be strictly increasing and positive.
template <GridSample G>
SweepResult sweep(const G& y, std::span<const double> lambdas, const DenoiseConfig& cfg = {}) {
    const GridShape s = y.shape();
    detail::require(!lambdas.empty(), "sweep: empty lambda grid");
    for (std::size_t i = 0; i < lambdas.size(); ++i) {
        detail::require(lambdas[i] > 0.0, "sweep: lambdas must be positive");
        detail::require(i == 0 || lambdas[i] > lambdas[i - 1], "sweep: lambdas must be strictly increasing");
    }
    const double base_mean = mean(y);
    detail::DenoiseState state;
    state.x.assign(y.values().begin(), y.values().end());
    state.z.assign(static_cast<std::size_t>(s.d * s.n()), 0.0);

    SweepResult result;
    result.rows.reserve(lambdas.size());
    for (double lambda : lambdas) {
        for (auto& zi : state.z) zi = std::clamp(zi, -lambda, lambda);
        const SolverTrace trace = detail::denoise_core(s, y.values(), lambda, cfg, state);
        double deviation = 0.0;
        for (double xi : state.x) deviation = std::max(deviation, std::abs(xi - base_mean));
        result.rows.push_back(
            SweepRow{lambda, trace.grad_inf_norm, deviation, trace.iterations, trace.converged});
    }
    return result;
}

} // namespace tvlam
