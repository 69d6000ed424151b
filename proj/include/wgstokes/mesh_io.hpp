#pragma once

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <unordered_map>

#include "mesh.hpp"

namespace wgstokes {

enum class MeshFormat { native, gmsh22 };

inline MeshFormat parse_mesh_format(const std::string& s) {
    if (s == "native" || s == "txt") return MeshFormat::native;
    if (s == "gmsh" || s == "msh" || s == "gmsh22") return MeshFormat::gmsh22;
    throw std::invalid_argument("unknown mesh format '" + s + "'");
}

/// Guesses the format from the file extension (.msh -> Gmsh, otherwise native).
inline MeshFormat mesh_format_for_path(const std::string& path) {
    return path.size() >= 4 && path.substr(path.size() - 4) == ".msh" ? MeshFormat::gmsh22
                                                                       : MeshFormat::native;
}

/// Native text format: `dim nv ne`, nv coordinate lines, ne lines of 1-based
/// vertex indices.
inline SimplicialMesh read_native_mesh(std::istream& in) {
    int dim = 0, nv = 0, ne = 0;
    if (!(in >> dim >> nv >> ne)) throw MeshError("native mesh: bad header");
    if (dim != 2 && dim != 3) throw UnsupportedCellError("native mesh: dim must be 2 or 3");
    if (nv < 0 || ne < 0) throw MeshError("native mesh: negative counts");
    std::vector<Vec> v(nv);
    for (int i = 0; i < nv; ++i)
        for (int c = 0; c < dim; ++c)
            if (!(in >> v[i][c])) throw MeshError("native mesh: truncated vertex list");
    std::vector<ElementVertices> e(ne, {-1, -1, -1, -1});
    for (int k = 0; k < ne; ++k)
        for (int c = 0; c <= dim; ++c) {
            if (!(in >> e[k][c])) throw MeshError("native mesh: truncated element list");
            e[k][c] -= 1;
        }
    return SimplicialMesh(dim, std::move(v), std::move(e));
}

inline void write_native_mesh(std::ostream& out, const SimplicialMesh& mesh) {
    const int d = mesh.dim();
    out << d << ' ' << mesh.num_vertices() << ' ' << mesh.num_elements() << '\n';
    char buf[64];
    for (const Vec& x : mesh.vertices()) {
        for (int c = 0; c < d; ++c) {
            std::snprintf(buf, sizeof buf, "%.17g", x[c]);
            out << (c ? " " : "") << buf;
        }
        out << '\n';
    }
    for (const auto& el : mesh.elements()) {
        for (int c = 0; c <= d; ++c) out << (c ? " " : "") << el[c] + 1;
        out << '\n';
    }
}

/// Gmsh MSH 2.2 ASCII, simplices only (element types 2 and 4).
inline SimplicialMesh read_gmsh22(std::istream& in) {
    std::string tok;
    std::unordered_map<long, int> node_index;
    std::vector<Vec> v;
    std::vector<ElementVertices> e;
    int dim = 0;
    bool have_nodes = false, have_elements = false;
    while (in >> tok) {
        if (tok == "$MeshFormat") {
            double version = 0;
            int file_type = 0, dsize = 0;
            in >> version >> file_type >> dsize;
            if (version < 2.0 || version >= 3.0) throw MeshError("gmsh: only MSH 2.x is supported");
            if (file_type != 0) throw MeshError("gmsh: binary files are not supported");
            in >> tok;  // $EndMeshFormat
        } else if (tok == "$Nodes") {
            long n = 0;
            in >> n;
            v.resize(n);
            for (long i = 0; i < n; ++i) {
                long id;
                Vec x;
                if (!(in >> id >> x[0] >> x[1] >> x[2])) throw MeshError("gmsh: truncated $Nodes");
                node_index[id] = static_cast<int>(i);
                v[i] = x;
            }
            in >> tok;
            have_nodes = true;
        } else if (tok == "$Elements") {
            long n = 0;
            in >> n;
            for (long i = 0; i < n; ++i) {
                long id;
                int type, ntags;
                if (!(in >> id >> type >> ntags)) throw MeshError("gmsh: truncated $Elements");
                for (int t = 0; t < ntags; ++t) {
                    long tag;
                    in >> tag;
                }
                int nn = 0, edim = 0;
                if (type == 2) {
                    nn = 3;
                    edim = 2;
                } else if (type == 4) {
                    nn = 4;
                    edim = 3;
                } else {
                    throw UnsupportedCellError("gmsh: unsupported element type " + std::to_string(type));
                }
                if (dim != 0 && dim != edim)
                    throw UnsupportedCellError("gmsh: mixed triangle/tetrahedron cells");
                dim = edim;
                ElementVertices el{-1, -1, -1, -1};
                for (int c = 0; c < nn; ++c) {
                    long node;
                    if (!(in >> node)) throw MeshError("gmsh: truncated element");
                    auto it = node_index.find(node);
                    if (it == node_index.end()) throw MeshError("gmsh: element references unknown node");
                    el[c] = it->second;
                }
                e.push_back(el);
            }
            in >> tok;
            have_elements = true;
        } else if (!tok.empty() && tok[0] == '$' && tok.rfind("$End", 0) != 0) {
            // Skip unknown sections such as $PhysicalNames.
            const std::string end = "$End" + tok.substr(1);
            while (in >> tok && tok != end) {
            }
        }
    }
    if (!have_nodes || !have_elements) throw MeshError("gmsh: missing $Nodes or $Elements");
    if (dim == 2)
        for (const Vec& x : v)
            if (x[2] != 0.0) throw MeshError("gmsh: 2D mesh must lie in the z = 0 plane");
    return SimplicialMesh(dim, std::move(v), std::move(e));
}

inline SimplicialMesh load_mesh(const std::string& path, MeshFormat format) {
    std::ifstream in(path);
    if (!in) throw MeshError("cannot open mesh file '" + path + "'");
    return format == MeshFormat::native ? read_native_mesh(in) : read_gmsh22(in);
}

inline SimplicialMesh load_mesh(const std::string& path) {
    return load_mesh(path, mesh_format_for_path(path));
}

inline void write_mesh(const std::string& path, const SimplicialMesh& mesh) {
    std::ofstream out(path);
    if (!out) throw MeshError("cannot write mesh file '" + path + "'");
    write_native_mesh(out, mesh);
}

}  // namespace wgstokes
