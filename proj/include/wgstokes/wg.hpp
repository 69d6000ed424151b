#pragma once

#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "mesh.hpp"
#include "quadrature.hpp"

namespace wgstokes {

using ScalarFunction = std::function<double(const Vec&)>;
using VectorFunction = std::function<Vec(const Vec&)>;

/// Lowest-order Raviart-Thomas field on one element, anchored at the
/// centroid: w(x) = a + b (x - x_K).
struct RT0Local {
    Vec a;
    double b = 0.0;

    Vec operator()(const Vec& x, const Vec& centroid) const { return a + b * (x - centroid); }
    /// Divergence is constant: d * b.
    double divergence(int dim) const { return dim * b; }
};

/// Piecewise RT0 field over a mesh (one RT0Local per element).
struct RT0Function {
    std::vector<RT0Local> coeffs;
};

/// Weak gradient of a vector field on one element: row r is the weak
/// gradient of component r.
using WeakGradient = std::array<RT0Local, 3>;

/// Discrete velocity: element-interior values, values on interior facets
/// (the unknowns) and values on boundary facets (known data).
struct WGField {
    int dim = 0;
    std::vector<Vec> interior;  // per element
    std::vector<Vec> facet;     // per interior facet
    std::vector<Vec> boundary;  // per boundary facet

    static WGField zeros(const SimplicialMesh& mesh) {
        WGField u;
        u.dim = mesh.dim();
        u.interior.assign(mesh.num_elements(), Vec{});
        u.facet.assign(mesh.num_interior_facets(), Vec{});
        u.boundary.assign(mesh.num_boundary_facets(), Vec{});
        return u;
    }

    /// Value on global facet f, whichever set it belongs to.
    const Vec& on_facet(const SimplicialMesh& mesh, int f) const {
        const int i = mesh.interior_facet_index(f);
        return i >= 0 ? facet[i] : boundary[mesh.boundary_facet_index(f)];
    }

    /// Facet values of element k in local facet order.
    std::array<Vec, 4> element_facet_values(const SimplicialMesh& mesh, int k) const {
        std::array<Vec, 4> v{};
        for (int i = 0; i <= mesh.dim(); ++i) v[i] = on_facet(mesh, mesh.element_facet(k, i));
        return v;
    }

    /// True when the field lies in V_h^0 (all boundary values zero).
    bool has_zero_boundary() const {
        for (const Vec& b : boundary)
            if (b[0] != 0.0 || b[1] != 0.0 || b[2] != 0.0) return false;
        return true;
    }
};

struct PressureField {
    std::vector<double> values;  // per element
};

inline Vec weak_gradient_interior_basis(const ElementGeometry& g, const Vec& x) {
    return -g.ck * (x - g.centroid);
}

inline RT0Local weak_gradient_interior_basis_rt0(const ElementGeometry& g) {
    return RT0Local{Vec{}, -g.ck};
}

inline RT0Local weak_gradient_facet_basis_rt0(const ElementGeometry& g, int i) {
    return RT0Local{(g.facet_measure[i] / g.measure) * g.facet_normal[i], g.ck / (g.dim + 1.0)};
}

/// Weak gradient of the facet basis function of local facet i.
inline Vec weak_gradient_facet_basis(const ElementGeometry& g, int i, const Vec& x) {
    if (i < 0 || i > g.dim) throw std::out_of_range("local facet index out of range");
    return weak_gradient_facet_basis_rt0(g, i)(x, g.centroid);
}

/// Weak gradient of a vector WG function restricted to one element, from its
/// interior value and the d+1 facet values (boundary data already substituted).
inline WeakGradient weak_gradient_field(const ElementGeometry& g, const Vec& interior,
                                        std::span<const Vec> facet_values) {
    WeakGradient rows{};
    const int d = g.dim;
    for (int r = 0; r < d; ++r) {
        Vec a;
        double mean = 0.0;
        for (int i = 0; i <= d; ++i) {
            a += (facet_values[i][r] * g.facet_measure[i] / g.measure) * g.facet_normal[i];
            mean += facet_values[i][r];
        }
        rows[r] = RT0Local{a, g.ck * (mean / (d + 1.0) - interior[r])};
    }
    return rows;
}

/// Piecewise-constant weak divergence: (1/|K|) sum_i |e_i| u_i . n_i.
inline double weak_divergence(const ElementGeometry& g, std::span<const Vec> facet_values) {
    double s = 0.0;
    for (int i = 0; i <= g.dim; ++i) s += g.facet_measure[i] * dot(facet_values[i], g.facet_normal[i]);
    return s / g.measure;
}

/// RT0 lifting of facet values: the unique a + b(x - x_K) whose normal
/// component on each facet equals the facet value's normal component.
/// Only the facet values enter; the interior value plays no role.
inline RT0Local lifting_apply(const ElementGeometry& g, std::span<const Vec> facet_values) {
    const int d = g.dim;
    RT0Local out;
    double flux = 0.0;
    for (int i = 0; i <= d; ++i) flux += g.facet_measure[i] * dot(facet_values[i], g.facet_normal[i]);
    out.b = flux / (d * g.measure);
    // a . n_i = v_i . n_i - b (x_{e_i} - x_K) . n_i for all i; the d+1 equations are
    // consistent, so solve the normal equations.
    std::array<std::array<double, 3>, 3> m{};
    Vec rhs;
    for (int i = 0; i <= d; ++i) {
        const Vec& n = g.facet_normal[i];
        const double r = dot(facet_values[i], n) - out.b * dot(g.facet_barycenter[i] - g.centroid, n);
        for (int p = 0; p < d; ++p) {
            for (int q = 0; q < d; ++q) m[p][q] += n[p] * n[q];
            rhs[p] += n[p] * r;
        }
    }
    if (!solve_small(d, m, rhs, out.a))
        throw std::logic_error("lifting_apply: singular local system (degenerate element)");
    return out;
}

enum class BoundaryProjection { barycenter, gauss2, gauss3 };

inline BoundaryProjection parse_boundary_projection(const std::string& s) {
    if (s == "barycenter") return BoundaryProjection::barycenter;
    if (s == "gauss2") return BoundaryProjection::gauss2;
    if (s == "gauss3") return BoundaryProjection::gauss3;
    throw std::invalid_argument("unknown boundary projection '" + s + "'");
}

inline std::string to_string(BoundaryProjection p) {
    switch (p) {
        case BoundaryProjection::barycenter: return "barycenter";
        case BoundaryProjection::gauss2: return "gauss2";
        case BoundaryProjection::gauss3: return "gauss3";
    }
    return "?";
}

/// Facet rule for the projection method: n-point collapsed Gauss per direction.
inline SimplexRule boundary_projection_rule(int facet_dim, BoundaryProjection method) {
    const int n = method == BoundaryProjection::gauss2 ? 2 : 3;
    // simplex_rule picks n = ceil((degree + s) / 2) points per direction.
    return simplex_rule(facet_dim, 2 * n - facet_dim);
}

/// Approximation of the facet average of g on the facet with the given vertices.
inline Vec project_boundary_datum(const VectorFunction& g, std::span<const Vec> facet_vertices,
                                  BoundaryProjection method) {
    if (method == BoundaryProjection::barycenter) {
        Vec b;
        for (const Vec& v : facet_vertices) b += v;
        return g(b / static_cast<double>(facet_vertices.size()));
    }
    const int s = static_cast<int>(facet_vertices.size()) - 1;
    const SimplexRule rule = boundary_projection_rule(s, method);
    return integrate_simplex(facet_vertices, 1.0, rule, g);
}

inline Vec project_boundary_datum(const VectorFunction& g, const SimplicialMesh& mesh, int f,
                                  BoundaryProjection method) {
    const auto fv = mesh.facet_coords(f);
    return project_boundary_datum(g, std::span<const Vec>(fv.data(), mesh.dim()), method);
}

/// Element average of u by a rule exact to the given degree.
inline Vec project_interior(const VectorFunction& u, const ElementGeometry& g, int degree = 2) {
    const SimplexRule rule = simplex_rule(g.dim, degree);
    return integrate_simplex(std::span<const Vec>(g.vertices.data(), g.dim + 1), 1.0, rule, u);
}

inline double project_interior(const ScalarFunction& p, const ElementGeometry& g, int degree = 2) {
    const SimplexRule rule = simplex_rule(g.dim, degree);
    return integrate_simplex(std::span<const Vec>(g.vertices.data(), g.dim + 1), 1.0, rule, p);
}

/// L2 projection Q_h u = {element averages, facet values}. Facet values use the
/// chosen boundary projection method on every facet.
inline WGField project_field(const SimplicialMesh& mesh, const VectorFunction& u,
                             BoundaryProjection method, int interior_degree = 4) {
    WGField out = WGField::zeros(mesh);
    for (int k = 0; k < mesh.num_elements(); ++k)
        out.interior[k] = project_interior(u, mesh.geometry(k), interior_degree);
    for (int f = 0; f < mesh.num_facets(); ++f) {
        const Vec val = project_boundary_datum(u, mesh, f, method);
        if (mesh.facet(f).boundary)
            out.boundary[mesh.boundary_facet_index(f)] = val;
        else
            out.facet[mesh.interior_facet_index(f)] = val;
    }
    return out;
}

/// Lifting of a whole WG field into the broken RT0 space.
inline RT0Function lifting_apply(const SimplicialMesh& mesh, const WGField& v) {
    RT0Function out;
    out.coeffs.reserve(mesh.num_elements());
    for (int k = 0; k < mesh.num_elements(); ++k) {
        const auto fv = v.element_facet_values(mesh, k);
        out.coeffs.push_back(lifting_apply(mesh.geometry(k), std::span<const Vec>(fv.data(), mesh.dim() + 1)));
    }
    return out;
}

}  // namespace wgstokes
