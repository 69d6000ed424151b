#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <queue>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "vec.hpp"

namespace wgstokes {

// Mesh validation errors. Each rejection reason has its own type so callers
// (and the CLI) can tell them apart.
struct MeshError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct DuplicateElementError : MeshError {
    using MeshError::MeshError;
};
struct InvertedElementError : MeshError {
    using MeshError::MeshError;
};
struct DegenerateElementError : MeshError {
    using MeshError::MeshError;
};
struct DisconnectedMeshError : MeshError {
    using MeshError::MeshError;
};
struct UnsupportedCellError : MeshError {
    using MeshError::MeshError;
};

using ElementVertices = std::array<int, 4>;  // d+1 entries used

struct FacetRecord {
    std::array<int, 3> vertices{-1, -1, -1};  // sorted, d entries used
    double measure = 0.0;
    Vec normal;                               // outward w.r.t. elements[0]
    Vec barycenter;
    bool boundary = true;
    std::array<int, 2> elements{-1, -1};      // elements[0] < elements[1]; -1 on boundary
};

/// Per-element quantities entering the weak Galerkin operators. Facet i is the
/// facet opposite local vertex i.
struct ElementGeometry {
    int dim = 0;
    std::array<Vec, 4> vertices{};
    Vec centroid;
    double measure = 0.0;
    double moment = 0.0;  // m_K = \int_K |x - x_K|^2
    double ck = 0.0;      // C_K = d |K| / m_K
    std::array<double, 4> facet_measure{};
    std::array<Vec, 4> facet_normal{};  // outward unit normals
    std::array<Vec, 4> facet_barycenter{};

    int nfacets() const { return dim + 1; }
};

namespace detail {

inline double factorial(int n) {
    double f = 1.0;
    for (int i = 2; i <= n; ++i) f *= i;
    return f;
}

inline double signed_volume(int dim, std::span<const Vec> v) {
    if (dim == 2) {
        const Vec a = v[1] - v[0], b = v[2] - v[0];
        return 0.5 * (a[0] * b[1] - a[1] * b[0]);
    }
    const Vec a = v[1] - v[0], b = v[2] - v[0], c = v[3] - v[0];
    return dot(a, cross(b, c)) / 6.0;
}

inline double facet_measure(int dim, std::span<const Vec> fv) {
    if (dim == 2) return norm(fv[1] - fv[0]);
    return 0.5 * norm(cross(fv[1] - fv[0], fv[2] - fv[0]));
}

/// Unit normal of the facet, oriented to point away from `inside`.
inline Vec facet_normal(int dim, std::span<const Vec> fv, const Vec& inside) {
    Vec n;
    if (dim == 2) {
        const Vec t = fv[1] - fv[0];
        n = Vec{t[1], -t[0]};
    } else {
        n = cross(fv[1] - fv[0], fv[2] - fv[0]);
    }
    n = n / norm(n);
    if (dot(n, fv[0] - inside) < 0.0) n = -n;
    return n;
}

inline double max_edge(int dim, std::span<const Vec> v) {
    double h = 0.0;
    for (int i = 0; i <= dim; ++i)
        for (int j = i + 1; j <= dim; ++j) h = std::max(h, norm(v[i] - v[j]));
    return h;
}

}  // namespace detail

/// Geometry of a single simplex given its d+1 vertices (positively or
/// negatively oriented). m_K uses the exact closed form
///   \int_K (x-x_K)(x-x_K)^T = |K| / ((d+1)(d+2)) \sum_i (x_i-x_K)(x_i-x_K)^T.
inline ElementGeometry compute_element_geometry(int dim, std::span<const Vec> verts) {
    if (dim != 2 && dim != 3) throw UnsupportedCellError("element dimension must be 2 or 3");
    if (static_cast<int>(verts.size()) != dim + 1)
        throw UnsupportedCellError("simplex needs dim+1 vertices");
    ElementGeometry g;
    g.dim = dim;
    for (int i = 0; i <= dim; ++i) g.vertices[i] = verts[i];
    for (int i = 0; i <= dim; ++i) g.centroid += verts[i];
    g.centroid = g.centroid / (dim + 1.0);
    g.measure = std::abs(detail::signed_volume(dim, verts));
    const double h = detail::max_edge(dim, verts);
    if (!(g.measure > 1e-14 * std::pow(h, dim)))
        throw DegenerateElementError("degenerate element (|K| ~ 0)");
    double s = 0.0;
    for (int i = 0; i <= dim; ++i) {
        const Vec r = verts[i] - g.centroid;
        s += dot(r, r);
    }
    g.moment = g.measure * s / ((dim + 1.0) * (dim + 2.0));
    g.ck = dim * g.measure / g.moment;
    for (int i = 0; i <= dim; ++i) {
        std::array<Vec, 3> fv{};
        int m = 0;
        for (int j = 0; j <= dim; ++j)
            if (j != i) fv[m++] = verts[j];
        const std::span<const Vec> fs(fv.data(), dim);
        g.facet_measure[i] = detail::facet_measure(dim, fs);
        g.facet_normal[i] = detail::facet_normal(dim, fs, g.centroid);
        Vec b;
        for (int j = 0; j < dim; ++j) b += fv[j];
        g.facet_barycenter[i] = b / static_cast<double>(dim);
    }
    return g;
}

/// Conforming simplicial mesh of a polygonal/polyhedral domain. Immutable
/// after construction; construction validates every structural invariant.
class SimplicialMesh {
public:
    SimplicialMesh() = default;

    /// Validates and indexes a mesh. Throws a MeshError subclass on
    /// unsupported dimension, out-of-range indices, duplicate, inverted or
    /// degenerate elements, non-manifold facets, or a disconnected mesh.
    SimplicialMesh(int dim, std::vector<Vec> vertices, std::vector<ElementVertices> elements)
        : dim_(dim), vertices_(std::move(vertices)), elements_(std::move(elements)) {
        build();
    }

    int dim() const { return dim_; }
    int num_vertices() const { return static_cast<int>(vertices_.size()); }
    int num_elements() const { return static_cast<int>(elements_.size()); }
    int num_facets() const { return static_cast<int>(facets_.size()); }
    int num_boundary_facets() const { return num_boundary_facets_; }
    int num_interior_facets() const { return num_facets() - num_boundary_facets_; }

    const std::vector<Vec>& vertices() const { return vertices_; }
    const std::vector<ElementVertices>& elements() const { return elements_; }
    const std::vector<FacetRecord>& facets() const { return facets_; }
    const FacetRecord& facet(int f) const { return facets_[f]; }

    /// Global facet index of local facet i (opposite local vertex i) of K.
    int element_facet(int k, int i) const { return elem_facets_[k][i]; }
    /// +1 if the stored facet normal is outward for K, -1 otherwise.
    double facet_sign(int k, int i) const {
        return facets_[elem_facets_[k][i]].elements[0] == k ? 1.0 : -1.0;
    }
    /// Index of an interior facet among interior facets, or -1 on the boundary.
    int interior_facet_index(int f) const { return interior_index_[f]; }
    /// Index of a boundary facet among boundary facets, or -1 if interior.
    int boundary_facet_index(int f) const { return boundary_index_[f]; }

    const ElementGeometry& geometry(int k) const { return geometry_[k]; }

    std::array<Vec, 4> element_coords(int k) const {
        std::array<Vec, 4> v{};
        for (int i = 0; i <= dim_; ++i) v[i] = vertices_[elements_[k][i]];
        return v;
    }
    std::array<Vec, 3> facet_coords(int f) const {
        std::array<Vec, 3> v{};
        for (int i = 0; i < dim_; ++i) v[i] = vertices_[facets_[f].vertices[i]];
        return v;
    }

private:
    void build();

    int dim_ = 0;
    std::vector<Vec> vertices_;
    std::vector<ElementVertices> elements_;
    std::vector<FacetRecord> facets_;
    std::vector<std::array<int, 4>> elem_facets_;
    std::vector<int> interior_index_;
    std::vector<int> boundary_index_;
    std::vector<ElementGeometry> geometry_;
    int num_boundary_facets_ = 0;
};

inline void SimplicialMesh::build() {
    if (dim_ != 2 && dim_ != 3) throw UnsupportedCellError("mesh dimension must be 2 or 3");
    if (elements_.empty()) throw MeshError("mesh has no elements");
    const int nv = num_vertices();
    const int nloc = dim_ + 1;

    {
        std::set<std::array<int, 4>> seen;
        for (std::size_t k = 0; k < elements_.size(); ++k) {
            auto key = elements_[k];
            for (int i = 0; i < nloc; ++i)
                if (key[i] < 0 || key[i] >= nv)
                    throw MeshError("element " + std::to_string(k) + " references vertex out of range");
            for (int i = nloc; i < 4; ++i) key[i] = -1;
            std::sort(key.begin(), key.begin() + nloc);
            for (int i = 1; i < nloc; ++i)
                if (key[i] == key[i - 1])
                    throw DegenerateElementError("element " + std::to_string(k) + " repeats a vertex");
            if (!seen.insert(key).second)
                throw DuplicateElementError("element " + std::to_string(k) + " is listed twice");
        }
    }

    double hmax = 0.0;
    for (std::size_t k = 0; k < elements_.size(); ++k) {
        const auto v = element_coords(static_cast<int>(k));
        hmax = std::max(hmax, detail::max_edge(dim_, std::span<const Vec>(v.data(), nloc)));
    }
    for (std::size_t k = 0; k < elements_.size(); ++k) {
        const auto v = element_coords(static_cast<int>(k));
        const double vol = detail::signed_volume(dim_, std::span<const Vec>(v.data(), nloc));
        if (std::abs(vol) < 1e-14 * std::pow(hmax, dim_))
            throw DegenerateElementError("element " + std::to_string(k) + " is degenerate");
        if (vol < 0.0)
            throw InvertedElementError("element " + std::to_string(k) + " has negative orientation");
    }

    std::map<std::array<int, 3>, int> facet_of;
    elem_facets_.assign(elements_.size(), {-1, -1, -1, -1});
    for (int k = 0; k < num_elements(); ++k) {
        for (int i = 0; i < nloc; ++i) {
            std::array<int, 3> key{-1, -1, -1};
            int m = 0;
            for (int j = 0; j < nloc; ++j)
                if (j != i) key[m++] = elements_[k][j];
            std::sort(key.begin(), key.begin() + dim_);
            auto [it, inserted] = facet_of.try_emplace(key, static_cast<int>(facets_.size()));
            if (inserted) {
                FacetRecord rec;
                rec.vertices = key;
                rec.elements = {k, -1};
                facets_.push_back(rec);
            } else {
                FacetRecord& rec = facets_[it->second];
                if (rec.elements[1] != -1)
                    throw MeshError("facet shared by more than two elements");
                rec.elements[1] = k;
            }
            elem_facets_[k][i] = it->second;
        }
    }

    geometry_.reserve(elements_.size());
    for (int k = 0; k < num_elements(); ++k) {
        const auto v = element_coords(k);
        geometry_.push_back(compute_element_geometry(dim_, std::span<const Vec>(v.data(), nloc)));
    }

    interior_index_.assign(facets_.size(), -1);
    boundary_index_.assign(facets_.size(), -1);
    int nint = 0, nbnd = 0;
    for (std::size_t f = 0; f < facets_.size(); ++f) {
        FacetRecord& rec = facets_[f];
        rec.boundary = rec.elements[1] == -1;
        const auto fv = facet_coords(static_cast<int>(f));
        const std::span<const Vec> fs(fv.data(), dim_);
        rec.measure = detail::facet_measure(dim_, fs);
        rec.normal = detail::facet_normal(dim_, fs, geometry_[rec.elements[0]].centroid);
        Vec b;
        for (int j = 0; j < dim_; ++j) b += fv[j];
        rec.barycenter = b / static_cast<double>(dim_);
        if (rec.boundary)
            boundary_index_[f] = nbnd++;
        else
            interior_index_[f] = nint++;
    }
    num_boundary_facets_ = nbnd;

    // Connectivity through interior facets.
    std::vector<char> visited(elements_.size(), 0);
    std::queue<int> todo;
    todo.push(0);
    visited[0] = 1;
    int reached = 1;
    while (!todo.empty()) {
        const int k = todo.front();
        todo.pop();
        for (int i = 0; i < nloc; ++i) {
            const auto& rec = facets_[elem_facets_[k][i]];
            if (rec.boundary) continue;
            const int other = rec.elements[0] == k ? rec.elements[1] : rec.elements[0];
            if (!visited[other]) {
                visited[other] = 1;
                ++reached;
                todo.push(other);
            }
        }
    }
    if (reached != num_elements())
        throw DisconnectedMeshError("mesh is not connected through interior facets (" +
                                    std::to_string(reached) + " of " +
                                    std::to_string(num_elements()) + " elements reachable)");
}

inline const ElementGeometry& element_geometry(const SimplicialMesh& mesh, int k) {
    if (k < 0 || k >= mesh.num_elements()) throw std::out_of_range("element index out of range");
    return mesh.geometry(k);
}

/// Unit square split into n x n squares, each cut along its (i,j)-(i+1,j+1) diagonal.
inline SimplicialMesh generate_structured_tri(int n) {
    if (n < 1) throw std::invalid_argument("generate_structured_tri: n must be >= 1");
    std::vector<Vec> v;
    v.reserve((n + 1) * (n + 1));
    for (int j = 0; j <= n; ++j)
        for (int i = 0; i <= n; ++i) v.push_back(Vec{double(i) / n, double(j) / n});
    auto id = [n](int i, int j) { return j * (n + 1) + i; };
    std::vector<ElementVertices> e;
    e.reserve(2 * n * n);
    for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i) {
            e.push_back({id(i, j), id(i + 1, j), id(i + 1, j + 1), -1});
            e.push_back({id(i, j), id(i + 1, j + 1), id(i, j + 1), -1});
        }
    return SimplicialMesh(2, std::move(v), std::move(e));
}

/// Unit cube split into n^3 subcubes, each split into 6 tetrahedra along
/// the main diagonal (Kuhn split), which is conforming across subcubes.
inline SimplicialMesh generate_structured_tet(int n) {
    if (n < 1) throw std::invalid_argument("generate_structured_tet: n must be >= 1");
    std::vector<Vec> v;
    v.reserve((n + 1) * (n + 1) * (n + 1));
    for (int k = 0; k <= n; ++k)
        for (int j = 0; j <= n; ++j)
            for (int i = 0; i <= n; ++i) v.push_back(Vec{double(i) / n, double(j) / n, double(k) / n});
    auto id = [n](int i, int j, int k) { return (k * (n + 1) + j) * (n + 1) + i; };
    static constexpr std::array<std::array<int, 3>, 6> perms{
        {{0, 1, 2}, {0, 2, 1}, {1, 0, 2}, {1, 2, 0}, {2, 0, 1}, {2, 1, 0}}};
    std::vector<ElementVertices> e;
    e.reserve(6 * n * n * n);
    for (int k = 0; k < n; ++k)
        for (int j = 0; j < n; ++j)
            for (int i = 0; i < n; ++i)
                for (const auto& p : perms) {
                    std::array<int, 3> c{i, j, k};
                    ElementVertices t{};
                    t[0] = id(c[0], c[1], c[2]);
                    for (int s = 0; s < 3; ++s) {
                        ++c[p[s]];
                        t[s + 1] = id(c[0], c[1], c[2]);
                    }
                    std::array<Vec, 4> x{v[t[0]], v[t[1]], v[t[2]], v[t[3]]};
                    if (detail::signed_volume(3, x) < 0.0) std::swap(t[2], t[3]);
                    e.push_back(t);
                }
    return SimplicialMesh(3, std::move(v), std::move(e));
}

struct MeshStats {
    double h = 0.0;                 // max element diameter
    int num_elements = 0;
    double quasi_uniformity = 1.0;  // max/min element diameter
};

inline MeshStats mesh_stats(const SimplicialMesh& mesh) {
    MeshStats s;
    s.num_elements = mesh.num_elements();
    double hmin = std::numeric_limits<double>::infinity();
    for (int k = 0; k < mesh.num_elements(); ++k) {
        const auto v = mesh.element_coords(k);
        const double d = detail::max_edge(mesh.dim(), std::span<const Vec>(v.data(), mesh.dim() + 1));
        s.h = std::max(s.h, d);
        hmin = std::min(hmin, d);
    }
    s.quasi_uniformity = s.h / hmin;
    return s;
}

/// Total measure of the meshed domain.
inline double domain_measure(const SimplicialMesh& mesh) {
    double s = 0.0;
    for (int k = 0; k < mesh.num_elements(); ++k) s += mesh.geometry(k).measure;
    return s;
}

}  // namespace wgstokes
