#pragma once

#include <array>
#include <cmath>
#include <functional>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "expression.hpp"
#include "mesh.hpp"
#include "quadrature.hpp"
#include "wg.hpp"

namespace wgstokes {

/// Rows are the gradients of the velocity components: J[r] = grad u_r.
using GradientFunction = std::function<std::array<Vec, 3>(const Vec&)>;

struct IncompatibleBoundaryDataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Stokes problem with known solution: -mu Lap u + grad p = f, div u = 0,
/// u = g on the boundary.
struct ManufacturedProblem {
    std::string name;
    int dim = 2;
    double mu = 1.0;
    VectorFunction u;
    ScalarFunction p;
    VectorFunction f;
    VectorFunction g;  // boundary datum, normally u itself
    GradientFunction grad_u;
    bool f_from_finite_differences = false;
};

namespace detail {

inline std::array<Vec, 3> fd_gradient(const VectorFunction& u, int dim, const Vec& x, double h = 1e-6) {
    std::array<Vec, 3> j{};
    for (int c = 0; c < dim; ++c) {
        Vec xp = x, xm = x;
        xp[c] += h;
        xm[c] -= h;
        const Vec du = (u(xp) - u(xm)) / (2.0 * h);
        for (int r = 0; r < dim; ++r) j[r][c] = du[r];
    }
    return j;
}

/// -mu Lap u + grad p by central differences (second order in the step).
inline Vec fd_strong_form(const VectorFunction& u, const ScalarFunction& p, double mu, int dim,
                          const Vec& x, double h) {
    Vec lap, gp;
    const Vec u0 = u(x);
    for (int c = 0; c < dim; ++c) {
        Vec xp = x, xm = x;
        xp[c] += h;
        xm[c] -= h;
        lap += (u(xp) - 2.0 * u0 + u(xm)) / (h * h);
        gp[c] = (p(xp) - p(xm)) / (2.0 * h);
    }
    return -mu * lap + gp;
}

}  // namespace detail

/// Two-dimensional example on the unit square:
///   u = (-e^x (y cos y + sin y), e^x y sin y), p = 2 e^x sin y,
///   f = 2 (1 - mu) e^x (sin y, cos y).
inline ManufacturedProblem stokes2d_exp(double mu) {
    ManufacturedProblem pb;
    pb.name = "stokes2d_exp";
    pb.dim = 2;
    pb.mu = mu;
    pb.u = [](const Vec& x) {
        const double ex = std::exp(x[0]), y = x[1];
        return Vec{-ex * (y * std::cos(y) + std::sin(y)), ex * y * std::sin(y)};
    };
    pb.p = [](const Vec& x) { return 2.0 * std::exp(x[0]) * std::sin(x[1]); };
    pb.f = [mu](const Vec& x) {
        const double ex = std::exp(x[0]);
        return Vec{2.0 * (1.0 - mu) * ex * std::sin(x[1]), 2.0 * (1.0 - mu) * ex * std::cos(x[1])};
    };
    pb.g = pb.u;
    pb.grad_u = [](const Vec& x) {
        const double ex = std::exp(x[0]), y = x[1], s = std::sin(y), c = std::cos(y);
        std::array<Vec, 3> j{};
        j[0] = Vec{-ex * (y * c + s), -ex * (2.0 * c - y * s)};
        j[1] = Vec{ex * y * s, ex * (s + y * c)};
        return j;
    };
    return pb;
}

/// Three-dimensional example on the unit cube:
///   u = (2 sin(pi x), -pi y cos(pi x), -pi z cos(pi x)),
///   p = sin(pi x) cos(pi y) sin(pi z).
inline ManufacturedProblem stokes3d_trig(double mu) {
    using std::numbers::pi;
    ManufacturedProblem pb;
    pb.name = "stokes3d_trig";
    pb.dim = 3;
    pb.mu = mu;
    pb.u = [](const Vec& x) {
        const double c = std::cos(pi * x[0]);
        return Vec{2.0 * std::sin(pi * x[0]), -pi * x[1] * c, -pi * x[2] * c};
    };
    pb.p = [](const Vec& x) {
        return std::sin(pi * x[0]) * std::cos(pi * x[1]) * std::sin(pi * x[2]);
    };
    pb.f = [mu](const Vec& x) {
        const double sx = std::sin(pi * x[0]), cx = std::cos(pi * x[0]);
        const double sy = std::sin(pi * x[1]), cy = std::cos(pi * x[1]);
        const double sz = std::sin(pi * x[2]), cz = std::cos(pi * x[2]);
        return Vec{2.0 * mu * pi * pi * sx + pi * cx * cy * sz,
                   -mu * pi * pi * pi * x[1] * cx - pi * sy * sx * sz,
                   -mu * pi * pi * pi * x[2] * cx + pi * sx * cy * cz};
    };
    pb.g = pb.u;
    pb.grad_u = [](const Vec& x) {
        const double sx = std::sin(pi * x[0]), cx = std::cos(pi * x[0]);
        std::array<Vec, 3> j{};
        j[0] = Vec{2.0 * pi * cx, 0.0, 0.0};
        j[1] = Vec{pi * pi * x[1] * sx, -pi * cx, 0.0};
        j[2] = Vec{pi * pi * x[2] * sx, 0.0, -pi * cx};
        return j;
    };
    return pb;
}

/// Problem from expression strings. When `f` is absent it is derived from the
/// strong form by central differences (flagged in f_from_finite_differences).
inline ManufacturedProblem custom_problem(int dim, const std::vector<std::string>& u_expr,
                                          const std::string& p_expr,
                                          const std::optional<std::vector<std::string>>& f_expr,
                                          double mu) {
    if (dim != 2 && dim != 3) throw std::invalid_argument("custom problem: dim must be 2 or 3");
    if (static_cast<int>(u_expr.size()) != dim)
        throw std::invalid_argument("custom problem: u needs one expression per component");
    if (f_expr && static_cast<int>(f_expr->size()) != dim)
        throw std::invalid_argument("custom problem: f needs one expression per component");
    ManufacturedProblem pb;
    pb.name = "custom";
    pb.dim = dim;
    pb.mu = mu;
    std::vector<Expression> ue;
    for (const auto& s : u_expr) ue.emplace_back(s);
    const Expression pe(p_expr);
    pb.u = [ue, dim](const Vec& x) {
        Vec v;
        for (int r = 0; r < dim; ++r) v[r] = ue[r](x);
        return v;
    };
    pb.p = [pe](const Vec& x) { return pe(x); };
    pb.g = pb.u;
    pb.grad_u = [u = pb.u, dim](const Vec& x) { return detail::fd_gradient(u, dim, x); };
    if (f_expr) {
        std::vector<Expression> fe;
        for (const auto& s : *f_expr) fe.emplace_back(s);
        pb.f = [fe, dim](const Vec& x) {
            Vec v;
            for (int r = 0; r < dim; ++r) v[r] = fe[r](x);
            return v;
        };
    } else {
        pb.f = [u = pb.u, p = pb.p, mu, dim](const Vec& x) {
            return detail::fd_strong_form(u, p, mu, dim, x, 1e-4);
        };
        pb.f_from_finite_differences = true;
    }
    return pb;
}

/// Boundary flux of g, \int_{\partial\Omega} g . n, by a high-order facet rule.
inline double boundary_flux(const SimplicialMesh& mesh, const VectorFunction& g, int degree = 10) {
    const SimplexRule rule = simplex_rule(mesh.dim() - 1, degree);
    double s = 0.0;
    for (int f = 0; f < mesh.num_facets(); ++f) {
        const FacetRecord& rec = mesh.facet(f);
        if (!rec.boundary) continue;
        const auto fv = mesh.facet_coords(f);
        const Vec avg = integrate_simplex(std::span<const Vec>(fv.data(), mesh.dim()), 1.0, rule, g);
        s += rec.measure * dot(avg, rec.normal);
    }
    return s;
}

/// Throws IncompatibleBoundaryDataError if |\int g . n| > tol on the mesh boundary.
inline void check_compatibility(const SimplicialMesh& mesh, const ManufacturedProblem& pb, double tol = 1e-8) {
    const double flux = boundary_flux(mesh, pb.g);
    if (std::abs(flux) > tol)
        throw IncompatibleBoundaryDataError("boundary datum violates the compatibility condition: "
                                            "int g.n = " + std::to_string(flux));
}

}  // namespace wgstokes
