#include <catch2/catch_amalgamated.hpp>

#include "test_support.hpp"
#include "tvlam/tvlam.hpp"

using Catch::Approx;
using namespace tvlam;

TEST_CASE("exact solve config validation") {
    ExactSolveConfig cfg;
    REQUIRE_NOTHROW(cfg.validate());
    cfg.step_scale = 1.2;
    REQUIRE_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg = ExactSolveConfig{};
    cfg.feasibility_tolerance = 0.0;
    REQUIRE_THROWS_AS(cfg.validate(), std::invalid_argument);
}

TEST_CASE("lambda_max_1d") {
    const auto flat = lambda_max_1d(Signal1D({3, 3, 3}));
    REQUIRE(flat.lambda == 0.0);
    REQUIRE(flat.kind == LambdaKind::exact_1d);
    REQUIRE(flat.certificate.has_value());
    REQUIRE(max_abs(flat.certificate->values()) == 0.0);
    REQUIRE(lambda_max_1d(Signal1D({7.0})).lambda == 0.0); // n = 1

    const auto r = lambda_max_1d(Signal1D({1, 2, 3, 2}));
    REQUIRE(r.lambda == Approx(0.5).margin(1e-12));
    REQUIRE(r.residual < 1e-12);
}

TEST_CASE("lambda_max_1d agrees with bisection") {
    auto gen = tvsupport::rng(41);
    const auto y = tvsupport::random_signal(gen, 256, 0.0, 1.0);
    const double exact = lambda_max_1d(y).lambda;
    const double bisected = oracle::lambda_max_bisect(y, 1.05 * exact, 1e-4);
    REQUIRE(bisected == Approx(exact).epsilon(1e-4));
}

TEST_CASE("lambda_bnd_2d") {
    REQUIRE(lambda_bnd_2d(Image2D(3, 3, std::vector<double>(9, 4.0))).lambda == 0.0);

    auto gen = tvsupport::rng(42);
    const auto y = tvsupport::random_image(gen, 3, 3);
    const auto bnd = lambda_bnd_2d(y);
    const auto exact = lambda_max_exact_2d(y);
    REQUIRE(exact.converged);
    REQUIRE(bnd.kind == LambdaKind::bound_2d);
    REQUIRE(bnd.lambda >= exact.lambda - 1e-6 * bnd.lambda);
}

TEST_CASE("degenerate 1xn image reduces to the 1D formula") {
    const std::vector<double> data{1, 2, 3, 2};
    const Signal1D sig(data);
    const Image2D row(1, 4, data);
    const Image2D col(4, 1, data);
    const double expect = lambda_max_1d(sig).lambda;
    REQUIRE(lambda_bnd_2d(row).lambda == Approx(expect).margin(1e-10));
    REQUIRE(lambda_bnd_2d(col).lambda == Approx(expect).margin(1e-10));

    const auto exact_row = lambda_max_exact_2d(row);
    REQUIRE(exact_row.converged);
    REQUIRE(exact_row.lambda == Approx(0.5).margin(1e-8));
    const auto exact_col = lambda_max_exact_2d(col);
    REQUIRE(exact_col.lambda == Approx(0.5).margin(1e-8));
}

TEST_CASE("componentwise bound sits between the exact value and the global bound") {
    REQUIRE(lambda_bnd_2d_componentwise(Image2D(2, 2, std::vector<double>(4, 1.0))).lambda == 0.0);

    auto gen = tvsupport::rng(43);
    for (int trial = 0; trial < 5; ++trial) {
        const auto y = tvsupport::random_image(gen, 4, 4);
        const double bnd = lambda_bnd_2d(y).lambda;
        const double cw = lambda_bnd_2d_componentwise(y).lambda;
        const auto exact = lambda_max_exact_2d(y);
        REQUIRE(exact.converged);
        REQUIRE(cw <= bnd + 1e-12);
        REQUIRE(cw >= exact.lambda - 1e-6);
    }
}

TEST_CASE("exact 2D solve") {
    const auto flat = lambda_max_exact_2d(Image2D(4, 4, std::vector<double>(16, 2.0)));
    REQUIRE(flat.lambda == 0.0);
    REQUIRE(flat.converged);
    REQUIRE(flat.certificate.has_value());
    REQUIRE(max_abs(flat.certificate->values()) == 0.0);

    const auto degenerate = lambda_max_exact_2d(Image2D(1, 4, {1, 2, 3, 2}));
    REQUIRE(degenerate.lambda == Approx(0.5).margin(1e-8));

    auto gen = tvsupport::rng(44);
    const auto y = tvsupport::random_image(gen, 4, 4);
    const auto r = lambda_max_exact_2d(y);
    REQUIRE(r.converged);
    REQUIRE(r.kind == LambdaKind::exact_2d);
    const double bisected = oracle::lambda_max_bisect(y, lambda_bnd_2d(y).lambda, 1e-4);
    REQUIRE(r.lambda == Approx(bisected).epsilon(1e-3));
}

TEST_CASE("certificate feasibility on every successful solve") {
    auto gen = tvsupport::rng(45);
    for (int trial = 0; trial < 5; ++trial) {
        const auto y = tvsupport::random_image(gen, 6, 7);
        ExactSolveConfig cfg;
        const auto r = lambda_max_exact_2d(y, cfg);
        REQUIRE(r.converged);
        REQUIRE(r.certificate.has_value());
        REQUIRE(r.residual <= cfg.feasibility_tolerance);

        // Recheck the reported residual from the certificate itself.
        const auto dz = div<Image2D>(*r.certificate);
        const double ybar = mean(y.values());
        double resid = 0.0, scale = 0.0;
        for (int i = 0; i < 42; ++i) {
            const double b = y.values()[i] - ybar;
            resid = std::max(resid, std::abs(dz.values()[i] - b));
            scale = std::max(scale, std::abs(b));
        }
        REQUIRE(resid <= cfg.feasibility_tolerance * scale * (1.0 + 1e-9));
        REQUIRE(max_abs(r.certificate->values()) == Approx(r.lambda).margin(1e-12 * r.lambda));
    }
}

TEST_CASE("ordering chain on random inputs") {
    auto gen = tvsupport::rng(46);
    for (int trial = 0; trial < 8; ++trial) {
        const auto y = tvsupport::random_image(gen, 8, 8, 0.0, 255.0);
        const double exact = lambda_max_exact_2d(y).lambda;
        const double cw = lambda_bnd_2d_componentwise(y).lambda;
        const double bnd = lambda_bnd_2d(y).lambda;
        REQUIRE(exact <= cw * (1.0 + 1e-6));
        REQUIRE(cw <= bnd * (1.0 + 1e-6));
        REQUIRE(exact > 0.0);
    }
}

TEST_CASE("scale equivariance and translation invariance") {
    auto gen = tvsupport::rng(47);
    const auto y = tvsupport::random_image(gen, 6, 6);
    const double alpha = -3.7;
    const double shift = 11.25;
    std::vector<double> scaled(y.values().begin(), y.values().end());
    std::vector<double> shifted(y.values().begin(), y.values().end());
    for (auto& v : scaled) v *= alpha;
    for (auto& v : shifted) v += shift;
    const Image2D ys(6, 6, std::move(scaled));
    const Image2D yt(6, 6, std::move(shifted));

    const double b0 = lambda_bnd_2d(y).lambda;
    REQUIRE(lambda_bnd_2d(ys).lambda == Approx(std::abs(alpha) * b0).epsilon(1e-8));
    REQUIRE(lambda_bnd_2d(yt).lambda == Approx(b0).margin(1e-10 * std::max(1.0, b0)));

    const double c0 = lambda_bnd_2d_componentwise(y).lambda;
    REQUIRE(lambda_bnd_2d_componentwise(ys).lambda == Approx(std::abs(alpha) * c0).epsilon(1e-8));
    REQUIRE(lambda_bnd_2d_componentwise(yt).lambda == Approx(c0).margin(1e-10 * std::max(1.0, c0)));

    const double e0 = lambda_max_exact_2d(y).lambda;
    REQUIRE(lambda_max_exact_2d(ys).lambda == Approx(std::abs(alpha) * e0).epsilon(1e-8));
    REQUIRE(lambda_max_exact_2d(yt).lambda == Approx(e0).margin(1e-10 * std::max(1.0, e0)));

    // 1D as well.
    const auto sig = tvsupport::random_signal(gen, 31);
    std::vector<double> sig_scaled(sig.values().begin(), sig.values().end());
    for (auto& v : sig_scaled) v *= alpha;
    REQUIRE(lambda_max_1d(Signal1D(std::move(sig_scaled))).lambda ==
            Approx(std::abs(alpha) * lambda_max_1d(sig).lambda).epsilon(1e-8));
}

TEST_CASE("1D consistency of all three 2D computations") {
    auto gen = tvsupport::rng(48);
    const auto sig = tvsupport::random_signal(gen, 12);
    const std::vector<double> data(sig.values().begin(), sig.values().end());
    const double expect = lambda_max_1d(sig).lambda;
    for (const auto [r, c] : {std::pair{1, 12}, {12, 1}}) {
        const Image2D img(r, c, data);
        REQUIRE(lambda_bnd_2d(img).lambda == Approx(expect).margin(1e-8));
        REQUIRE(lambda_bnd_2d_componentwise(img).lambda == Approx(expect).margin(1e-8));
        const auto exact = lambda_max_exact_2d(img);
        REQUIRE(exact.lambda == Approx(expect).margin(1e-8));
    }
}

TEST_CASE("verify_threshold validates its arguments") {
    const Signal1D y({1, 2, 3, 2});
    REQUIRE_THROWS_AS(verify_threshold(y, 0.0, 0.1), std::invalid_argument);
    REQUIRE_THROWS_AS(verify_threshold(y, 0.5, 0.0), std::invalid_argument);
    REQUIRE_THROWS_AS(verify_threshold(y, 0.5, 1.0), std::invalid_argument);
}

TEST_CASE("verify_threshold brackets the closed-form value") {
    const Signal1D y({1, 2, 3, 2});
    const auto report = verify_threshold(y, 0.5, 0.1);
    REQUIRE(report.constant_above);
    REQUIRE(report.nonconstant_below);
    REQUIRE(report.sup_deviation_above <= kConstTolFactor * 2.0);
    REQUIRE(report.sup_deviation_below > kConstTolFactor * 2.0);
}

TEST_CASE("verify_threshold on a constant input") {
    const Signal1D y({5, 5, 5, 5});
    const auto report = verify_threshold(y, 1.0, 0.1);
    REQUIRE(report.constant_above);
    REQUIRE_FALSE(report.nonconstant_below); // lambda_max = 0: constant on both sides
}

TEST_CASE("verify_threshold against the exact 2D solve") {
    auto gen = tvsupport::rng(49);
    const auto y = tvsupport::random_image(gen, 8, 8);
    const auto r = lambda_max_exact_2d(y);
    REQUIRE(r.converged);
    const auto report = verify_threshold(y, r.lambda, 0.05);
    REQUIRE(report.constant_above);
    REQUIRE(report.nonconstant_below);
}
