#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <stdexcept>

namespace wgstokes {

/// Fixed-capacity spatial vector. Only the first `dim` components are used;
/// unused trailing components stay zero so 2D and 3D share one code path.
struct Vec {
    std::array<double, 3> c{0.0, 0.0, 0.0};

    constexpr Vec() = default;
    constexpr Vec(double x, double y, double z = 0.0) : c{x, y, z} {}

    constexpr double& operator[](std::size_t i) { return c[i]; }
    constexpr double operator[](std::size_t i) const { return c[i]; }

    constexpr Vec& operator+=(const Vec& o) {
        for (std::size_t i = 0; i < 3; ++i) c[i] += o.c[i];
        return *this;
    }
    constexpr Vec& operator-=(const Vec& o) {
        for (std::size_t i = 0; i < 3; ++i) c[i] -= o.c[i];
        return *this;
    }
    constexpr Vec& operator*=(double s) {
        for (auto& v : c) v *= s;
        return *this;
    }
};

constexpr Vec operator+(Vec a, const Vec& b) { return a += b; }
constexpr Vec operator-(Vec a, const Vec& b) { return a -= b; }
constexpr Vec operator-(Vec a) { return a *= -1.0; }
constexpr Vec operator*(Vec a, double s) { return a *= s; }
constexpr Vec operator*(double s, Vec a) { return a *= s; }
constexpr Vec operator/(Vec a, double s) { return a *= (1.0 / s); }

constexpr double dot(const Vec& a, const Vec& b) {
    return a.c[0] * b.c[0] + a.c[1] * b.c[1] + a.c[2] * b.c[2];
}
inline double norm(const Vec& a) { return std::sqrt(dot(a, a)); }

constexpr Vec cross(const Vec& a, const Vec& b) {
    return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
}

/// Solves the dim x dim system M y = r (row-major M) by Gaussian elimination
/// with partial pivoting. Returns false when a pivot vanishes relative to `scale`.
inline bool solve_small(int dim, std::array<std::array<double, 3>, 3> m, Vec r, Vec& y,
                        double scale = 1.0) {
    for (int k = 0; k < dim; ++k) {
        int piv = k;
        for (int i = k + 1; i < dim; ++i)
            if (std::abs(m[i][k]) > std::abs(m[piv][k])) piv = i;
        if (std::abs(m[piv][k]) <= 1e-14 * scale) return false;
        std::swap(m[k], m[piv]);
        std::swap(r.c[k], r.c[piv]);
        for (int i = k + 1; i < dim; ++i) {
            const double f = m[i][k] / m[k][k];
            for (int j = k; j < dim; ++j) m[i][j] -= f * m[k][j];
            r[i] -= f * r[k];
        }
    }
    for (int i = dim - 1; i >= 0; --i) {
        double s = r[i];
        for (int j = i + 1; j < dim; ++j) s -= m[i][j] * y[j];
        y[i] = s / m[i][i];
    }
    for (int i = dim; i < 3; ++i) y[i] = 0.0;
    return true;
}

}  // namespace wgstokes
