#pragma once

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace tvlam {

/// Dimensions of a periodic sampling grid. For d == 1 the grid is a circle of
/// n1 samples and n2 is fixed to 1; for d == 2 it is an n1 x n2 torus stored
/// row-major (n1 rows, n2 columns).
struct GridShape {
    int d = 1;
    int n1 = 1;
    int n2 = 1;

    [[nodiscard]] long n() const { return static_cast<long>(n1) * n2; }

    friend bool operator==(const GridShape&, const GridShape&) = default;
};

namespace detail {

inline void require(bool condition, const std::string& message) {
    if (!condition) throw std::invalid_argument(message);
}

inline void require_finite(std::span<const double> v, const char* what) {
    for (double x : v)
        if (!std::isfinite(x)) throw std::invalid_argument(std::string(what) + ": non-finite entry");
}

inline void check_shape(const GridShape& s) {
    require(s.d == 1 || s.d == 2, "GridShape: d must be 1 or 2");
    require(s.n1 >= 1 && s.n2 >= 1, "GridShape: extents must be positive");
    require(s.d == 2 || s.n2 == 1, "GridShape: n2 must be 1 when d == 1");
}

} // namespace detail

/// Real-valued periodic signal, n >= 1 samples. Immutable after construction.
class Signal1D {
public:
    explicit Signal1D(std::vector<double> values) : v_(std::move(values)) {
        detail::require(!v_.empty(), "Signal1D: length must be >= 1");
        detail::require_finite(v_, "Signal1D");
    }

    Signal1D(const GridShape& s, std::vector<double> values) : Signal1D(std::move(values)) {
        detail::require(s.d == 1 && s.n() == static_cast<long>(v_.size()),
                        "Signal1D: shape does not match storage");
    }

    [[nodiscard]] int size() const { return static_cast<int>(v_.size()); }
    [[nodiscard]] GridShape shape() const { return GridShape{1, size(), 1}; }
    [[nodiscard]] std::span<const double> values() const { return v_; }
    double operator[](int i) const { return v_[static_cast<std::size_t>(i)]; }

private:
    std::vector<double> v_;
};

/// Real-valued periodic image, row-major n1 x n2 storage. Immutable.
class Image2D {
public:
    Image2D(int rows, int cols, std::vector<double> values)
        : rows_(rows), cols_(cols), v_(std::move(values)) {
        detail::require(rows_ >= 1 && cols_ >= 1, "Image2D: extents must be positive");
        detail::require(static_cast<long>(v_.size()) == static_cast<long>(rows_) * cols_,
                        "Image2D: storage length does not match shape");
        detail::require_finite(v_, "Image2D");
    }

    Image2D(const GridShape& s, std::vector<double> values)
        : Image2D(s.n1, s.n2, std::move(values)) {
        detail::require(s.d == 2, "Image2D: shape must be two-dimensional");
    }

    [[nodiscard]] int rows() const { return rows_; }
    [[nodiscard]] int cols() const { return cols_; }
    [[nodiscard]] GridShape shape() const { return GridShape{2, rows_, cols_}; }
    [[nodiscard]] std::span<const double> values() const { return v_; }
    [[nodiscard]] double at(int r, int c) const {
        return v_[static_cast<std::size_t>(r) * cols_ + c];
    }

private:
    int rows_;
    int cols_;
    std::vector<double> v_;
};

/// Anything that carries a periodic grid of real samples (Signal1D, Image2D).
template <class T>
concept GridSample = requires(const T& g) {
    { g.shape() } -> std::convertible_to<GridShape>;
    { g.values() } -> std::convertible_to<std::span<const double>>;
    requires std::constructible_from<T, const GridShape&, std::vector<double>>;
};

/// Gradient-domain object: d arrays congruent with the base grid, stored
/// direction-major (vertical block first for d == 2). Immutable.
class VectorField {
public:
    VectorField(const GridShape& base, std::vector<double> flat)
        : base_(base), v_(std::move(flat)) {
        detail::check_shape(base_);
        detail::require(static_cast<long>(v_.size()) == base_.d * base_.n(),
                        "VectorField: storage length must be d*n");
        detail::require_finite(v_, "VectorField");
    }

    static VectorField zero(const GridShape& base) {
        detail::check_shape(base);
        return VectorField(base, std::vector<double>(static_cast<std::size_t>(base.d * base.n()), 0.0));
    }

    [[nodiscard]] GridShape base_shape() const { return base_; }
    [[nodiscard]] int directions() const { return base_.d; }
    [[nodiscard]] std::span<const double> values() const { return v_; }
    [[nodiscard]] std::span<const double> dir(int k) const {
        const auto n = static_cast<std::size_t>(base_.n());
        return std::span<const double>(v_).subspan(static_cast<std::size_t>(k) * n, n);
    }

private:
    GridShape base_;
    std::vector<double> v_;
};

inline double mean(std::span<const double> v) {
    detail::require(!v.empty(), "mean: empty input");
    double acc = 0.0;
    for (double x : v) acc += x;
    return acc / static_cast<double>(v.size());
}

double mean(const GridSample auto& g) { return mean(g.values()); }

/// (max - min) / 2 over all entries; the l_inf distance to the nearest
/// constant vector.
inline double half_range(std::span<const double> v) {
    detail::require(!v.empty(), "half_range: empty input");
    auto [lo, hi] = std::minmax_element(v.begin(), v.end());
    return 0.5 * (*hi - *lo);
}

inline double half_range(const VectorField& z) { return half_range(z.values()); }
inline double half_range(const Signal1D& s) { return half_range(s.values()); }

inline double range_of(std::span<const double> v) {
    detail::require(!v.empty(), "range_of: empty input");
    auto [lo, hi] = std::minmax_element(v.begin(), v.end());
    return *hi - *lo;
}

double range_of(const GridSample auto& g) { return range_of(g.values()); }

inline double max_abs(std::span<const double> v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
}

enum class LambdaKind { exact_1d, bound_2d, bound_2d_componentwise, exact_2d };

inline const char* to_string(LambdaKind k) {
    switch (k) {
        case LambdaKind::exact_1d: return "exact_1d";
        case LambdaKind::bound_2d: return "bound_2d";
        case LambdaKind::bound_2d_componentwise: return "bound_2d_componentwise";
        case LambdaKind::exact_2d: return "exact_2d";
    }
    return "unknown";
}

/// Outcome of a lambda_max / lambda_bnd computation. `certificate` carries the
/// minimizing (or bounding) vector field when one is available; `residual` is
/// the certificate's feasibility error relative to ||y - mean(y)||_inf.
struct LambdaReport {
    double lambda = 0.0;
    LambdaKind kind = LambdaKind::exact_1d;
    std::optional<VectorField> certificate;
    long iterations = 0;
    double residual = 0.0;
    bool converged = true;
};

} // namespace tvlam
