#pragma once

#include <algorithm>
#include <map>

#include <Eigen/Dense>

#include "wgstokes/assembly.hpp"
#include "wgstokes/quadrature.hpp"

namespace wgstokes::testing_oracle {

// Independent dense oracle: weak gradients are obtained by solving the
// defining relation against the RT0 basis {e_1, ..., e_d, x - x_K} with
// numerically integrated Gram matrices, then (grad_w phi_p, grad_w phi_q)_K
// is integrated by quadrature. Facets are located by vertex sets.
struct Oracle {
    Eigen::MatrixXd A, B;
};

inline Vec outward_normal(int dim, const std::vector<Vec>& fv, const Vec& inside) {
    Vec n;
    if (dim == 2) {
        const Vec t = fv[1] - fv[0];
        n = Vec{t[1], -t[0]};
    } else {
        n = cross(fv[1] - fv[0], fv[2] - fv[0]);
    }
    n = n / norm(n);
    return dot(n, fv[0] - inside) > 0 ? n : -n;
}

inline Oracle dense_oracle(const SimplicialMesh& mesh) {
    const int d = mesh.dim();
    std::map<std::vector<int>, int> interior_facet;
    for (int f = 0; f < mesh.num_facets(); ++f) {
        const FacetRecord& r = mesh.facet(f);
        if (r.boundary) continue;
        std::vector<int> key(r.vertices.begin(), r.vertices.begin() + d);
        interior_facet[key] = mesh.interior_facet_index(f);
    }
    const int nu = d * (mesh.num_elements() + mesh.num_interior_facets());
    Oracle o{Eigen::MatrixXd::Zero(nu, nu), Eigen::MatrixXd::Zero(mesh.num_elements(), nu)};
    const SimplexRule cell = simplex_rule(d, 2), face = simplex_rule(d - 1, 2);

    for (int k = 0; k < mesh.num_elements(); ++k) {
        std::vector<Vec> v(d + 1);
        for (int i = 0; i <= d; ++i) v[i] = mesh.vertices()[mesh.elements()[k][i]];
        Vec xc;
        for (const Vec& p : v) xc += p / (d + 1.0);
        const std::span<const Vec> verts(v.data(), d + 1);
        const double vol = std::abs(detail::signed_volume(d, verts));
        auto psi = [&](int j, const Vec& x) {
            if (j < d) {
                Vec e;
                e[j] = 1.0;
                return e;
            }
            return x - xc;
        };
        auto div_psi = [&](int j) { return j < d ? 0.0 : static_cast<double>(d); };
        Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(d + 1, d + 1);
        for (std::size_t q = 0; q < cell.points.size(); ++q) {
            const Vec x = map_to_simplex(verts, cell.points[q]);
            for (int a = 0; a <= d; ++a)
                for (int b = 0; b <= d; ++b) gram(a, b) += cell.weights[q] * vol * dot(psi(a, x), psi(b, x));
        }
        // Local scalar basis: 0 = interior, 1 + i = facet opposite vertex i.
        struct Facet {
            std::vector<Vec> fv;
            Vec n;
            double meas;
            int dof;  // interior facet index or -1
        };
        std::vector<Facet> facets;
        for (int i = 0; i <= d; ++i) {
            Facet f;
            std::vector<int> ids;
            for (int j = 0; j <= d; ++j)
                if (j != i) {
                    f.fv.push_back(v[j]);
                    ids.push_back(mesh.elements()[k][j]);
                }
            std::sort(ids.begin(), ids.end());
            f.n = outward_normal(d, f.fv, xc);
            f.meas = d == 2 ? norm(f.fv[1] - f.fv[0]) : 0.5 * norm(cross(f.fv[1] - f.fv[0], f.fv[2] - f.fv[0]));
            const auto it = interior_facet.find(ids);
            f.dof = it == interior_facet.end() ? -1 : it->second;
            facets.push_back(f);
        }
        std::vector<Eigen::VectorXd> coef(d + 2);
        for (int p = 0; p < d + 2; ++p) {
            Eigen::VectorXd rhs(d + 1);
            for (int j = 0; j <= d; ++j) {
                double r = p == 0 ? -div_psi(j) * vol : 0.0;
                if (p > 0) {
                    const Facet& f = facets[p - 1];
                    for (std::size_t q = 0; q < face.points.size(); ++q) {
                        const Vec x = map_to_simplex(std::span<const Vec>(f.fv.data(), d), face.points[q]);
                        r += face.weights[q] * f.meas * dot(psi(j, x), f.n);
                    }
                }
                rhs(j) = r;
            }
            coef[p] = gram.ldlt().solve(rhs);
        }
        auto wgrad = [&](int p, const Vec& x) {
            Vec w;
            for (int j = 0; j <= d; ++j) w += coef[p](j) * psi(j, x);
            return w;
        };
        auto dof = [&](int p, int r) {
            if (p == 0) return k * d + r;
            const int f = facets[p - 1].dof;
            return f < 0 ? -1 : d * (mesh.num_elements() + f) + r;
        };
        for (int p = 0; p < d + 2; ++p)
            for (int q = 0; q < d + 2; ++q) {
                double m = 0.0;
                for (std::size_t i = 0; i < cell.points.size(); ++i) {
                    const Vec x = map_to_simplex(verts, cell.points[i]);
                    m += cell.weights[i] * vol * dot(wgrad(p, x), wgrad(q, x));
                }
                for (int r = 0; r < d; ++r) {
                    const int gp = dof(p, r), gq = dof(q, r);
                    if (gp >= 0 && gq >= 0) o.A(gp, gq) += m;
                }
            }
        for (int i = 0; i <= d; ++i)
            for (int r = 0; r < d; ++r) {
                const int g = dof(i + 1, r);
                if (g >= 0) o.B(k, g) += facets[i].meas * facets[i].n[r];
            }
    }
    return o;
}


}  // namespace wgstokes::testing_oracle
