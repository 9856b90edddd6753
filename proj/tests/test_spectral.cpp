#include <catch2/catch_amalgamated.hpp>

#include "test_support.hpp"
#include "tvlam/tvlam.hpp"

using Catch::Approx;
using namespace tvlam;

namespace {

double cdist(Complex a, Complex b) { return std::abs(a - b); }

} // namespace

TEST_CASE("dft_forward known values") {
    const GridShape s{1, 4, 1};
    const auto constant = dft_forward(s, std::vector<double>{1, 1, 1, 1});
    REQUIRE(cdist(constant[0], {4, 0}) < 1e-14);
    REQUIRE(cdist(constant[1], {0, 0}) < 1e-14);
    REQUIRE(cdist(constant[2], {0, 0}) < 1e-14);
    REQUIRE(cdist(constant[3], {0, 0}) < 1e-14);

    const auto impulse = dft_forward(s, std::vector<double>{1, 0, 0, 0});
    for (const auto& v : impulse) REQUIRE(cdist(v, {1, 0}) < 1e-14);

    const auto sine = dft_forward(s, std::vector<double>{0, 1, 0, -1});
    REQUIRE(cdist(sine[0], {0, 0}) < 1e-14);
    REQUIRE(cdist(sine[1], {0, -2}) < 1e-14);
    REQUIRE(cdist(sine[2], {0, 0}) < 1e-14);
    REQUIRE(cdist(sine[3], {0, 2}) < 1e-14);
}

TEST_CASE("dft_inverse_real known values and round trip") {
    const GridShape s{1, 4, 1};
    const std::vector<Complex> constant{{4, 0}, {0, 0}, {0, 0}, {0, 0}};
    const auto ones = dft_inverse_real(s, constant);
    for (double v : ones) REQUIRE(v == Approx(1.0).margin(1e-14));

    const std::vector<Complex> sine{{0, 0}, {0, -2}, {0, 0}, {0, 2}};
    const auto x = dft_inverse_real(s, sine);
    const std::vector<double> expect{0, 1, 0, -1};
    for (int i = 0; i < 4; ++i) REQUIRE(x[i] == Approx(expect[i]).margin(1e-14));

    auto gen = tvsupport::rng(7);
    const GridShape s64{1, 64, 1};
    const auto y = tvsupport::random_vector(gen, 64);
    const auto back = dft_inverse_real(s64, dft_forward(s64, y));
    for (int i = 0; i < 64; ++i) REQUIRE(back[i] == Approx(y[i]).margin(1e-12));
}

TEST_CASE("2D transform is the tensor product of 1D transforms") {
    auto gen = tvsupport::rng(8);
    const GridShape s{2, 3, 5};
    const auto y = tvsupport::random_vector(gen, 15);
    const auto Y = dft_forward(s, y);
    // Direct evaluation of the double sum at a few frequencies.
    for (const auto [k1, k2] : {std::pair{0, 0}, {1, 2}, {2, 4}}) {
        Complex direct{0, 0};
        for (int j1 = 0; j1 < 3; ++j1)
            for (int j2 = 0; j2 < 5; ++j2) {
                const double angle = -2.0 * std::numbers::pi *
                                     (static_cast<double>(k1) * j1 / 3.0 + static_cast<double>(k2) * j2 / 5.0);
                direct += y[static_cast<std::size_t>(j1) * 5 + j2] *
                          Complex{std::cos(angle), std::sin(angle)};
            }
        REQUIRE(cdist(Y[static_cast<std::size_t>(k1) * 5 + k2], direct) < 1e-12);
    }

    const auto back = dft_inverse_real(s, Y);
    for (int i = 0; i < 15; ++i) REQUIRE(back[i] == Approx(y[i]).margin(1e-12));
}

TEST_CASE("parseval") {
    auto gen = tvsupport::rng(9);
    for (const GridShape s : {GridShape{1, 128, 1}, GridShape{2, 8, 16}}) {
        const auto y = tvsupport::random_vector(gen, s.n());
        const auto Y = dft_forward(s, y);
        double spatial = 0.0, spectrum = 0.0;
        for (double v : y) spatial += v * v;
        for (const auto& v : Y) spectrum += std::norm(v);
        REQUIRE(spectrum == Approx(static_cast<double>(s.n()) * spatial).epsilon(1e-12));
    }
}

TEST_CASE("forward difference kernel") {
    REQUIRE(cdist(kernel_forward_diff(1).entries[0], {0, 0}) == 0.0);
    const auto two = kernel_forward_diff(2);
    REQUIRE(cdist(two.entries[0], {0, 0}) < 1e-15);
    REQUIRE(cdist(two.entries[1], {-2, 0}) < 1e-15);
    REQUIRE(cdist(kernel_forward_diff(4).entries[1], {-1, 1}) < 1e-15);
}

TEST_CASE("backward difference kernel") {
    REQUIRE(cdist(kernel_backward_diff(1).entries[0], {0, 0}) == 0.0);
    REQUIRE(cdist(kernel_backward_diff(4).entries[1], {1, 1}) < 1e-15);
    const auto fwd = kernel_forward_diff(8);
    const auto bwd = kernel_backward_diff(8);
    for (int k = 0; k < 8; ++k)
        REQUIRE(cdist(bwd.entries[k], -std::conj(fwd.entries[k])) < 1e-15);
}

TEST_CASE("kernel conjugate symmetry") {
    for (const int n : {5, 8}) {
        const auto k = kernel_forward_diff(n);
        for (int i = 0; i < n; ++i)
            REQUIRE(cdist(k.entries[static_cast<std::size_t>(i)],
                          std::conj(k.entries[static_cast<std::size_t>((n - i) % n)])) < 1e-15);
    }
    const auto k2 = kernel_backward_diff_vertical(4, 6);
    for (int k1 = 0; k1 < 4; ++k1)
        for (int j = 0; j < 6; ++j)
            REQUIRE(cdist(k2.at(k1, j), std::conj(k2.at((4 - k1) % 4, (6 - j) % 6))) < 1e-15);
}

TEST_CASE("kernel application preserves realness before the real-part projection") {
    auto gen = tvsupport::rng(10);
    const GridShape s{1, 32, 1};
    const auto y = tvsupport::random_vector(gen, 32);
    const auto Y = dft_forward(s, y);
    const auto piv = kernel_pinv_1d(kernel_backward_diff(32));
    std::vector<Complex> Z(Y.size());
    for (std::size_t i = 0; i < Y.size(); ++i) Z[i] = piv.entries[i] * Y[i];
    const auto full = dft_inverse(s, Z);
    for (const auto& v : full) REQUIRE(std::abs(v.imag()) < 1e-10);
}

TEST_CASE("1D pseudo-inverse kernel") {
    const auto piv = kernel_pinv_1d(kernel_backward_diff(4));
    REQUIRE(cdist(piv.entries[0], {0, 0}) == 0.0);
    REQUIRE(cdist(piv.entries[1], {0.5, -0.5}) < 1e-15); // conj(1+i)/|1+i|^2

    const auto k = kernel_backward_diff(16);
    const auto p = kernel_pinv_1d(k);
    for (int i = 1; i < 16; ++i)
        REQUIRE(cdist(k.entries[static_cast<std::size_t>(i)] * p.entries[static_cast<std::size_t>(i)],
                      {1, 0}) < 1e-12);
}

TEST_CASE("2D pseudo-inverse kernels") {
    // A 4x1 grid makes the horizontal kernel vanish, reducing to the 1D formula.
    const auto [pu, pl] = kernel_pinv_2d(kernel_backward_diff_vertical(4, 1),
                                         kernel_backward_diff_horizontal(4, 1));
    REQUIRE(cdist(pu.at(0, 0), {0, 0}) == 0.0);
    REQUIRE(cdist(pl.at(0, 0), {0, 0}) == 0.0);
    REQUIRE(cdist(pu.at(1, 0), {0.5, -0.5}) < 1e-15);
    REQUIRE(cdist(pl.at(1, 0), {0, 0}) == 0.0);

    const auto up = kernel_backward_diff_vertical(8, 8);
    const auto left = kernel_backward_diff_horizontal(8, 8);
    const auto [piv_up, piv_left] = kernel_pinv_2d(up, left);
    for (int k1 = 0; k1 < 8; ++k1)
        for (int k2 = 0; k2 < 8; ++k2) {
            if (k1 == 0 && k2 == 0) continue;
            const Complex ident =
                up.at(k1, k2) * piv_up.at(k1, k2) + left.at(k1, k2) * piv_left.at(k1, k2);
            REQUIRE(cdist(ident, {1, 0}) < 1e-12);
        }

    REQUIRE_THROWS_AS(kernel_pinv_2d(kernel_backward_diff_vertical(4, 4),
                                     kernel_backward_diff_horizontal(4, 5)),
                      std::invalid_argument);
}

TEST_CASE("difference kernel denominators stay above the sine bound") {
    for (const auto [n1, n2] : {std::pair{8, 8}, {3, 7}, {16, 4}}) {
        const auto up = kernel_backward_diff_vertical(n1, n2);
        const auto left = kernel_backward_diff_horizontal(n1, n2);
        const double s = 2.0 * std::sin(std::numbers::pi / std::max(n1, n2));
        const double bound = s * s;
        for (const auto [k1, k2] : {std::pair{0, 1}, {1, 0}}) {
            const double denom = std::norm(up.at(k1, k2)) + std::norm(left.at(k1, k2));
            REQUIRE(denom >= bound - 1e-15);
        }
    }
}
