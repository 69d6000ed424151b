#pragma once

#include <array>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "mesh.hpp"
#include "problem.hpp"
#include "quadrature.hpp"
#include "sparse.hpp"
#include "wg.hpp"

namespace wgstokes {

/// Unknown numbering: interior velocity values (element-major, component
/// minor), then interior-facet velocity values (facet-major, component
/// minor), then one pressure per element. Boundary facet values are data.
struct DofMap {
    int dim = 0;
    int num_elements = 0;
    int num_interior_facets = 0;

    explicit DofMap(const SimplicialMesh& mesh)
        : dim(mesh.dim()), num_elements(mesh.num_elements()),
          num_interior_facets(mesh.num_interior_facets()) {}
    DofMap() = default;

    int num_interior_velocity() const { return dim * num_elements; }
    int num_velocity() const { return dim * (num_elements + num_interior_facets); }
    int num_pressure() const { return num_elements; }
    int num_total() const { return num_velocity() + num_pressure(); }

    int interior_dof(int k, int r) const { return k * dim + r; }
    int facet_dof(int interior_facet, int r) const { return dim * (num_elements + interior_facet) + r; }
    int pressure_dof(int k) const { return num_velocity() + k; }
};

/// Scalar Gram matrix of the weak-gradient basis {phi_interior, phi_facet_0..d}
/// on one element, integrated exactly:
///   (a1 + b1 (x-x_K), a2 + b2 (x-x_K))_K = |K| a1.a2 + b1 b2 m_K.
inline std::array<std::array<double, 5>, 5> local_gram(const ElementGeometry& g) {
    std::array<RT0Local, 5> basis{};
    basis[0] = weak_gradient_interior_basis_rt0(g);
    for (int i = 0; i <= g.dim; ++i) basis[i + 1] = weak_gradient_facet_basis_rt0(g, i);
    std::array<std::array<double, 5>, 5> m{};
    const int nb = g.dim + 2;
    for (int p = 0; p < nb; ++p)
        for (int q = p; q < nb; ++q) {
            m[p][q] = g.measure * dot(basis[p].a, basis[q].a) + basis[p].b * basis[q].b * g.moment;
            m[q][p] = m[p][q];
        }
    return m;
}

/// Global dof (or -1 for boundary data) of local basis function p (0 =
/// interior, 1+i = facet i) and component r on element k.
inline int local_to_global(const SimplicialMesh& mesh, const DofMap& dm, int k, int p, int r) {
    if (p == 0) return dm.interior_dof(k, r);
    const int fi = mesh.interior_facet_index(mesh.element_facet(k, p - 1));
    return fi < 0 ? -1 : dm.facet_dof(fi, r);
}

/// Stiffness matrix (grad_w u, grad_w v) on the unknown velocity values.
inline SparseMatrix assemble_A(const SimplicialMesh& mesh, const DofMap& dm) {
    const int d = mesh.dim(), nb = d + 2;
    std::vector<Triplet> t;
    t.reserve(static_cast<std::size_t>(mesh.num_elements()) * nb * nb * d);
    for (int k = 0; k < mesh.num_elements(); ++k) {
        const auto gram = local_gram(mesh.geometry(k));
        for (int r = 0; r < d; ++r)
            for (int p = 0; p < nb; ++p) {
                const int gp = local_to_global(mesh, dm, k, p, r);
                if (gp < 0) continue;
                for (int q = 0; q < nb; ++q) {
                    const int gq = local_to_global(mesh, dm, k, q, r);
                    if (gq >= 0) t.push_back({gp, gq, gram[p][q]});
                }
            }
    }
    return SparseMatrix::from_triplets(dm.num_velocity(), dm.num_velocity(), std::move(t));
}

inline SparseMatrix assemble_A(const SimplicialMesh& mesh) { return assemble_A(mesh, DofMap(mesh)); }

/// Discrete divergence: row K holds |e| n_{K,e} on the interior facets of K.
/// Interior velocity values do not enter.
inline SparseMatrix assemble_B(const SimplicialMesh& mesh, const DofMap& dm) {
    const int d = mesh.dim();
    std::vector<Triplet> t;
    t.reserve(static_cast<std::size_t>(mesh.num_elements()) * (d + 1) * d);
    for (int k = 0; k < mesh.num_elements(); ++k) {
        const ElementGeometry& g = mesh.geometry(k);
        for (int i = 0; i <= d; ++i) {
            const int fi = mesh.interior_facet_index(mesh.element_facet(k, i));
            if (fi < 0) continue;
            for (int r = 0; r < d; ++r)
                t.push_back({k, dm.facet_dof(fi, r), g.facet_measure[i] * g.facet_normal[i][r]});
        }
    }
    return SparseMatrix::from_triplets(dm.num_pressure(), dm.num_velocity(), std::move(t));
}

inline SparseMatrix assemble_B(const SimplicialMesh& mesh) { return assemble_B(mesh, DofMap(mesh)); }

/// Q_h^\partial g on every boundary facet (indexed by boundary facet index).
inline std::vector<Vec> boundary_values(const SimplicialMesh& mesh, const VectorFunction& g,
                                        BoundaryProjection method) {
    std::vector<Vec> out(mesh.num_boundary_facets());
    for (int f = 0; f < mesh.num_facets(); ++f) {
        const int b = mesh.boundary_facet_index(f);
        if (b >= 0) out[b] = project_boundary_datum(g, mesh, f, method);
    }
    return out;
}

/// Default polynomial degree of the element rule used for (f, Lambda_h v).
inline constexpr int kDefaultLoadDegree = 6;

/// Velocity right-hand side: (f, Lambda_h v)_K minus the boundary lifting
/// term mu (Q_h g grad_w phi_e, grad_w v)_K for boundary facets e.
inline std::vector<double> assemble_b1(const SimplicialMesh& mesh, const DofMap& dm, const VectorFunction& f,
                                       std::span<const Vec> bvals, double mu,
                                       int load_degree = kDefaultLoadDegree) {
    const int d = mesh.dim(), nb = d + 2;
    std::vector<double> b1(dm.num_velocity(), 0.0);
    const SimplexRule rule = simplex_rule(d, load_degree);
    for (int k = 0; k < mesh.num_elements(); ++k) {
        const ElementGeometry& g = mesh.geometry(k);
        const std::span<const Vec> verts(g.vertices.data(), d + 1);
        Vec f0;        // \int_K f
        double f1 = 0; // \int_K f . (x - x_K)
        for (std::size_t q = 0; q < rule.points.size(); ++q) {
            const Vec x = map_to_simplex(verts, rule.points[q]);
            const Vec fx = f(x);
            f0 += (rule.weights[q] * g.measure) * fx;
            f1 += rule.weights[q] * g.measure * dot(fx, x - g.centroid);
        }
        for (int i = 0; i <= d; ++i) {
            const int fi = mesh.interior_facet_index(mesh.element_facet(k, i));
            if (fi < 0) continue;
            for (int r = 0; r < d; ++r) {
                std::array<Vec, 4> fv{};
                fv[i][r] = 1.0;
                const RT0Local lift = lifting_apply(g, std::span<const Vec>(fv.data(), d + 1));
                b1[dm.facet_dof(fi, r)] += dot(lift.a, f0) + lift.b * f1;
            }
        }
        bool has_boundary = false;
        for (int i = 0; i <= d; ++i) has_boundary |= mesh.facet(mesh.element_facet(k, i)).boundary;
        if (!has_boundary) continue;
        const auto gram = local_gram(g);
        for (int i = 0; i <= d; ++i) {
            const int bi = mesh.boundary_facet_index(mesh.element_facet(k, i));
            if (bi < 0) continue;
            for (int p = 0; p < nb; ++p)
                for (int r = 0; r < d; ++r) {
                    const int gp = local_to_global(mesh, dm, k, p, r);
                    if (gp >= 0) b1[gp] -= mu * gram[p][i + 1] * bvals[bi][r];
                }
        }
    }
    return b1;
}

/// b2(K) = sum over boundary facets e of K of |e| (Q_h g|_e) . n_{K,e}.
inline std::vector<double> assemble_b2(const SimplicialMesh& mesh, std::span<const Vec> bvals) {
    std::vector<double> b2(mesh.num_elements(), 0.0);
    for (int k = 0; k < mesh.num_elements(); ++k) {
        const ElementGeometry& g = mesh.geometry(k);
        for (int i = 0; i <= mesh.dim(); ++i) {
            const int bi = mesh.boundary_facet_index(mesh.element_facet(k, i));
            if (bi >= 0) b2[k] += g.facet_measure[i] * dot(bvals[bi], g.facet_normal[i]);
        }
    }
    return b2;
}

/// alpha_h = sum_K b2(K): the discrete boundary flux defect.
inline double compute_alpha(std::span<const double> b2) {
    double s = 0.0;
    for (double v : b2) s += v;
    return s;
}

/// b2~(K) = b2(K) - alpha_h / N, which sums to zero.
inline std::vector<double> enforce_consistency(std::span<const double> b2, double alpha, int n) {
    std::vector<double> out(b2.begin(), b2.end());
    const double shift = alpha / n;
    for (double& v : out) v -= shift;
    return out;
}

/// Diagonal of the piecewise-constant pressure mass matrix: |K|.
inline std::vector<double> assemble_mass_pressure(const SimplicialMesh& mesh) {
    std::vector<double> m(mesh.num_elements());
    for (int k = 0; k < mesh.num_elements(); ++k) m[k] = mesh.geometry(k).measure;
    return m;
}

struct AssemblyOptions {
    BoundaryProjection qg = BoundaryProjection::barycenter;
    int load_degree = kDefaultLoadDegree;
    bool consistent = true;
    bool check_compatibility = true;
};

/// Rescaled saddle-point system
///   [ A  -B^T ] [ mu u ]   [ b1          ]
///   [ -B   0  ] [  p   ] = [ mu b2_tilde ]
/// (or mu b2 when consistency enforcement is off).
struct SaddleSystem {
    DofMap dofs;
    SparseMatrix A;
    SparseMatrix B;
    std::vector<double> b1;
    std::vector<double> b2;
    std::vector<double> b2_tilde;
    std::vector<double> mp;  // diagonal pressure mass matrix
    std::vector<Vec> boundary_values;
    double mu = 1.0;
    double alpha_h = 0.0;
    bool rescaled = true;
    bool consistent = true;

    int num_velocity() const { return dofs.num_velocity(); }
    int num_pressure() const { return dofs.num_pressure(); }
    int size() const { return dofs.num_total(); }

    /// Right-hand side of the rescaled system.
    std::vector<double> rhs() const {
        std::vector<double> r(b1);
        const auto& second = consistent ? b2_tilde : b2;
        for (double v : second) r.push_back(mu * v);
        return r;
    }

    /// y = [A -B^T; -B 0] x.
    void apply(std::span<const double> x, std::span<double> y) const {
        const int nu = num_velocity(), np = num_pressure();
        const auto xu = x.subspan(0, nu);
        const auto xp = x.subspan(nu, np);
        auto yu = y.subspan(0, nu);
        auto yp = y.subspan(nu, np);
        spmv(A, xu, yu);
        std::vector<double> btp(nu);
        spmv_transpose(B, xp, btp);
        for (int i = 0; i < nu; ++i) yu[i] -= btp[i];
        spmv(B, xu, yp);
        for (double& v : yp) v = -v;
    }

    std::vector<double> apply(std::span<const double> x) const {
        std::vector<double> y(x.size());
        apply(x, y);
        return y;
    }
};

inline SaddleSystem build_saddle_system(const SimplicialMesh& mesh, const ManufacturedProblem& pb,
                                        const AssemblyOptions& opt = {}) {
    if (pb.dim != mesh.dim()) throw std::invalid_argument("problem and mesh dimensions differ");
    if (!(pb.mu > 0.0)) throw std::invalid_argument("viscosity must be positive");
    if (opt.check_compatibility) check_compatibility(mesh, pb);
    SaddleSystem s;
    s.dofs = DofMap(mesh);
    s.mu = pb.mu;
    s.consistent = opt.consistent;
    s.A = assemble_A(mesh, s.dofs);
    s.B = assemble_B(mesh, s.dofs);
    s.boundary_values = boundary_values(mesh, pb.g, opt.qg);
    s.b1 = assemble_b1(mesh, s.dofs, pb.f, s.boundary_values, pb.mu, opt.load_degree);
    s.b2 = assemble_b2(mesh, s.boundary_values);
    s.alpha_h = compute_alpha(s.b2);
    s.b2_tilde = enforce_consistency(s.b2, s.alpha_h, mesh.num_elements());
    s.mp = assemble_mass_pressure(mesh);
    return s;
}

/// Scatters a velocity vector (unknowns only) plus boundary data into a WGField.
inline WGField velocity_field(const SimplicialMesh& mesh, const DofMap& dm, std::span<const double> xu,
                              std::span<const Vec> bvals, double scale = 1.0) {
    WGField u = WGField::zeros(mesh);
    const int d = mesh.dim();
    for (int k = 0; k < mesh.num_elements(); ++k)
        for (int r = 0; r < d; ++r) u.interior[k][r] = scale * xu[dm.interior_dof(k, r)];
    for (int f = 0; f < mesh.num_interior_facets(); ++f)
        for (int r = 0; r < d; ++r) u.facet[f][r] = scale * xu[dm.facet_dof(f, r)];
    for (std::size_t b = 0; b < bvals.size(); ++b) u.boundary[b] = bvals[b];
    return u;
}

/// Gathers the unknown velocity values of a WGField.
inline std::vector<double> velocity_vector(const DofMap& dm, const WGField& u) {
    std::vector<double> x(dm.num_velocity());
    for (int k = 0; k < dm.num_elements; ++k)
        for (int r = 0; r < dm.dim; ++r) x[dm.interior_dof(k, r)] = u.interior[k][r];
    for (int f = 0; f < dm.num_interior_facets; ++f)
        for (int r = 0; r < dm.dim; ++r) x[dm.facet_dof(f, r)] = u.facet[f][r];
    return x;
}

/// Writes A, B, b1, b2, b2_tilde, the rescaled rhs and diag(Mp) as Matrix
/// Market files `<prefix>_A.mtx` etc.
inline void export_system(const SaddleSystem& s, const std::string& prefix) {
    write_matrix_market(prefix + "_A.mtx", s.A);
    write_matrix_market(prefix + "_B.mtx", s.B);
    write_matrix_market(prefix + "_b1.mtx", std::span<const double>(s.b1));
    write_matrix_market(prefix + "_b2.mtx", std::span<const double>(s.b2));
    write_matrix_market(prefix + "_b2_tilde.mtx", std::span<const double>(s.b2_tilde));
    const auto r = s.rhs();
    write_matrix_market(prefix + "_rhs.mtx", std::span<const double>(r));
    write_matrix_market(prefix + "_Mp.mtx", std::span<const double>(s.mp));
}

}  // namespace wgstokes
