#pragma once

#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "krylov.hpp"
#include "mesh_io.hpp"
#include "report.hpp"
#include "verification.hpp"

namespace wgstokes {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct CustomProblemSpec {
    int dim = 2;
    std::vector<std::string> u;
    std::string p;
    std::optional<std::vector<std::string>> f;
};

/// Settings of one batch study. Defaults reproduce the reference setup:
/// tol 1e-9 (2D) / 1e-8 (3D), restart 30, maxit 1000, zero initial guess.
struct ExperimentConfig {
    std::string problem = "stokes2d_exp";
    std::optional<CustomProblemSpec> custom;
    std::vector<double> mu = {1.0, 1e-4};
    std::vector<int> levels;               // structured generator levels
    std::vector<std::string> mesh_files;   // used instead of levels when non-empty
    BoundaryProjection qg = BoundaryProjection::barycenter;
    KrylovMethod solver = KrylovMethod::minres;
    std::optional<PreconditionerKind> precond;
    std::optional<double> tol;
    int restart = 30;
    int maxit = 1000;
    InnerSolveConfig inner;
    int load_quad_degree = kDefaultLoadDegree;
    std::string out = "results";
    bool consistent = true;

    int dim() const {
        if (problem == "stokes2d_exp") return 2;
        if (problem == "stokes3d_trig") return 3;
        return custom ? custom->dim : 2;
    }

    double tolerance() const { return tol.value_or(dim() == 2 ? 1e-9 : 1e-8); }

    PreconditionerKind preconditioner() const { return precond.value_or(default_preconditioner(solver)); }

    std::vector<int> mesh_levels() const {
        if (!levels.empty()) return levels;
        return dim() == 2 ? std::vector<int>{4, 8, 16, 32} : std::vector<int>{2, 3, 4};
    }

    void validate() const {
        if (problem != "stokes2d_exp" && problem != "stokes3d_trig" && problem != "custom")
            throw ConfigError("unknown problem '" + problem + "'");
        if (problem == "custom") {
            if (!custom) throw ConfigError("problem 'custom' needs a 'custom' section");
            if (custom->dim != 2 && custom->dim != 3) throw ConfigError("custom.dim must be 2 or 3");
            if (static_cast<int>(custom->u.size()) != custom->dim)
                throw ConfigError("custom.u needs one expression per component");
            if (custom->f && static_cast<int>(custom->f->size()) != custom->dim)
                throw ConfigError("custom.f needs one expression per component");
        }
        if (mu.empty()) throw ConfigError("mu list is empty");
        for (double m : mu)
            if (!(m > 0.0)) throw ConfigError("mu must be positive");
        if (mesh_files.empty()) {
            if (mesh_levels().empty()) throw ConfigError("no mesh levels given");
            for (int l : mesh_levels())
                if (l < 1) throw ConfigError("mesh levels must be >= 1");
        }
        const double t = tolerance();
        if (!(t > 0.0 && t < 1.0)) throw ConfigError("tol must lie in (0, 1)");
        if (restart < 1) throw ConfigError("restart must be >= 1");
        if (maxit < 1) throw ConfigError("maxit must be >= 1");
        if (load_quad_degree < 0) throw ConfigError("load_quad_degree must be >= 0");
        if (solver == KrylovMethod::minres && preconditioner() == PreconditionerKind::block_lower_tri)
            throw ConfigError("minres needs a symmetric preconditioner (block_diag or none)");
        try {
            inner.validate();
        } catch (const std::invalid_argument& e) {
            throw ConfigError(e.what());
        }
    }

    SolverOptions solver_options() const {
        SolverOptions o;
        o.method = solver;
        o.precond = preconditioner();
        o.inner = inner;
        o.krylov.tol = tolerance();
        o.krylov.restart = restart;
        o.krylov.max_iterations = maxit;
        o.assembly.qg = qg;
        o.assembly.load_degree = load_quad_degree;
        o.assembly.consistent = consistent;
        return o;
    }

    ManufacturedProblem make_problem(double m) const {
        if (problem == "stokes2d_exp") return stokes2d_exp(m);
        if (problem == "stokes3d_trig") return stokes3d_trig(m);
        return custom_problem(custom->dim, custom->u, custom->p, custom->f, m);
    }
};

namespace detail {

template <class T>
T json_get(const nlohmann::json& j, const char* key) {
    try {
        return j.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
        throw ConfigError(std::string("config field '") + key + "' has the wrong type");
    }
}

inline void check_keys(const nlohmann::json& j, std::initializer_list<const char*> allowed, const std::string& where) {
    for (auto it = j.begin(); it != j.end(); ++it) {
        bool ok = false;
        for (const char* a : allowed) ok |= it.key() == a;
        if (!ok) throw ConfigError("unknown config field '" + where + it.key() + "'");
    }
}

}  // namespace detail

/// Parses the JSON schema documented in the README. Absent fields keep their
/// defaults; unknown fields are rejected.
inline ExperimentConfig parse_config(const nlohmann::json& j) {
    using detail::json_get;
    if (!j.is_object()) throw ConfigError("config must be a JSON object");
    detail::check_keys(j,
                       {"problem", "custom", "mu", "mesh", "qg", "solver", "precond", "tol", "restart", "maxit",
                        "inner", "load_quad_degree", "out", "consistent"},
                       "");
    ExperimentConfig c;
    try {
        if (j.contains("problem")) c.problem = json_get<std::string>(j, "problem");
        if (j.contains("custom")) {
            const auto& cj = j.at("custom");
            detail::check_keys(cj, {"dim", "u", "p", "f"}, "custom.");
            CustomProblemSpec cs;
            cs.dim = json_get<int>(cj, "dim");
            cs.u = json_get<std::vector<std::string>>(cj, "u");
            cs.p = json_get<std::string>(cj, "p");
            if (cj.contains("f")) cs.f = json_get<std::vector<std::string>>(cj, "f");
            c.custom = cs;
        }
        if (j.contains("mu")) {
            if (j.at("mu").is_number())
                c.mu = {json_get<double>(j, "mu")};
            else
                c.mu = json_get<std::vector<double>>(j, "mu");
        }
        if (j.contains("mesh")) {
            const auto& mj = j.at("mesh");
            detail::check_keys(mj, {"levels", "files"}, "mesh.");
            if (mj.contains("levels")) {
                c.levels = json_get<std::vector<int>>(mj, "levels");
                if (c.levels.empty()) throw ConfigError("mesh.levels is empty");
            }
            if (mj.contains("files")) {
                c.mesh_files = json_get<std::vector<std::string>>(mj, "files");
                if (c.mesh_files.empty()) throw ConfigError("mesh.files is empty");
            }
        }
        if (j.contains("qg")) c.qg = parse_boundary_projection(json_get<std::string>(j, "qg"));
        if (j.contains("solver")) c.solver = parse_krylov_method(json_get<std::string>(j, "solver"));
        if (j.contains("precond")) c.precond = parse_preconditioner(json_get<std::string>(j, "precond"));
        if (j.contains("tol")) c.tol = json_get<double>(j, "tol");
        if (j.contains("restart")) c.restart = json_get<int>(j, "restart");
        if (j.contains("maxit")) c.maxit = json_get<int>(j, "maxit");
        if (j.contains("inner")) {
            const auto& ij = j.at("inner");
            detail::check_keys(ij, {"method", "tol", "maxit", "droptol"}, "inner.");
            if (ij.contains("method")) c.inner.method = parse_inner_method(json_get<std::string>(ij, "method"));
            if (ij.contains("tol")) c.inner.rel_tol = json_get<double>(ij, "tol");
            if (ij.contains("maxit")) c.inner.max_iterations = json_get<int>(ij, "maxit");
            if (ij.contains("droptol")) c.inner.droptol = json_get<double>(ij, "droptol");
        }
        if (j.contains("load_quad_degree")) c.load_quad_degree = json_get<int>(j, "load_quad_degree");
        if (j.contains("out")) c.out = json_get<std::string>(j, "out");
        if (j.contains("consistent")) c.consistent = json_get<bool>(j, "consistent");
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    return c;
}

inline ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    return parse_config(j);
}

struct LabeledMesh {
    std::string label;
    SimplicialMesh mesh;
};

inline std::vector<LabeledMesh> build_meshes(const ExperimentConfig& c) {
    std::vector<LabeledMesh> out;
    if (!c.mesh_files.empty()) {
        for (std::size_t i = 0; i < c.mesh_files.size(); ++i) {
            SimplicialMesh m = load_mesh(c.mesh_files[i]);
            if (m.dim() != c.dim())
                throw ConfigError("mesh '" + c.mesh_files[i] + "' has the wrong dimension for the problem");
            out.push_back({"mesh" + std::to_string(i), std::move(m)});
        }
        return out;
    }
    for (int l : c.mesh_levels())
        out.push_back({"n" + std::to_string(l), c.dim() == 2 ? generate_structured_tri(l) : generate_structured_tet(l)});
    return out;
}

/// Files written and whether every solve met its stopping criterion.
struct RunOutcome {
    bool all_converged = true;
    std::vector<std::string> files;
    std::string summary;  // human-readable, for stdout
};

namespace detail {

inline std::string write_text(const std::string& dir, const std::string& name, const std::string& text,
                              RunOutcome& out) {
    std::filesystem::create_directories(dir);
    const std::string path = (std::filesystem::path(dir) / name).string();
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write '" + path + "'");
    f << text;
    out.files.push_back(path);
    return path;
}

inline std::string mu_tag(std::size_t i) { return "mu" + std::to_string(i); }

}  // namespace detail

inline RunOutcome run_convergence(const ExperimentConfig& c) {
    c.validate();
    const auto meshes = build_meshes(c);
    const SolverOptions opt = c.solver_options();
    std::vector<ConvergenceTable> tables;
    RunOutcome out;
    for (double m : c.mu) {
        const ManufacturedProblem pb = c.make_problem(m);
        ConvergenceTable t;
        t.mu = m;
        for (const auto& lm : meshes) {
            const SaddleSystem s = build_saddle_system(lm.mesh, pb, opt.assembly);
            const StokesSolution sol = solve_stokes(lm.mesh, s, opt);
            ConvergenceRow row;
            row.errors = compute_errors(lm.mesh, pb, sol, s.alpha_h);
            row.iterations = sol.report.iterations;
            row.converged = sol.report.converged;
            out.all_converged &= row.converged;
            t.rows.push_back(row);
        }
        fill_rates(t);
        tables.push_back(std::move(t));
    }
    detail::write_text(c.out, "convergence.csv", to_csv(convergence_csv_table(tables)), out);
    const std::string md = to_markdown(convergence_markdown_table(tables));
    detail::write_text(c.out, "convergence.md", md, out);
    out.summary = md;
    return out;
}

struct SolverStudyCell {
    double mu = 1.0;
    std::string label;
    int num_elements = 0;
    double h = 0.0;
    SolveReport report;
};

inline RunOutcome run_solver_study(const ExperimentConfig& c, std::vector<SolverStudyCell>* cells_out = nullptr) {
    c.validate();
    const auto meshes = build_meshes(c);
    const SolverOptions opt = c.solver_options();
    std::vector<SolverStudyCell> cells;
    RunOutcome out;
    for (double m : c.mu) {
        const ManufacturedProblem pb = c.make_problem(m);
        for (const auto& lm : meshes) {
            const SaddleSystem s = build_saddle_system(lm.mesh, pb, opt.assembly);
            SolverStudyCell cell{m, lm.label, lm.mesh.num_elements(), mesh_stats(lm.mesh).h, solve_system(s, opt).report};
            out.all_converged &= cell.report.converged;
            cells.push_back(std::move(cell));
        }
    }
    TextTable csv;
    csv.headers = {"mu", "mesh", "N", "h", "method", "precond", "iterations", "converged", "stagnated",
                   "final_relres", "inner_iterations"};
    for (const auto& x : cells)
        csv.rows.push_back({format_sci(x.mu), x.label, std::to_string(x.num_elements), format_sci(x.h),
                            to_string(c.solver), to_string(c.preconditioner()), std::to_string(x.report.iterations),
                            x.report.converged ? "true" : "false", x.report.stagnated ? "true" : "false",
                            format_sci(x.report.residual_history.back()), std::to_string(x.report.inner_iterations)});
    detail::write_text(c.out, "solver_study.csv", to_csv(csv), out);

    TextTable md;
    md.headers = {"μ \\ N"};
    for (const auto& lm : meshes) md.headers.push_back(std::to_string(lm.mesh.num_elements()));
    for (std::size_t i = 0; i < c.mu.size(); ++i) {
        std::vector<std::string> row = {format_mu(c.mu[i])};
        for (std::size_t k = 0; k < meshes.size(); ++k) {
            const auto& r = cells[i * meshes.size() + k].report;
            row.push_back(std::to_string(r.iterations) + (r.converged ? "" : "*"));
        }
        md.rows.push_back(row);
    }
    std::string text = to_markdown(md);
    if (!out.all_converged) text += "\n\\* not converged within maxit\n";
    detail::write_text(c.out, "solver_study.md", text, out);
    out.summary = text;
    for (const auto& x : cells)
        out.summary += summary_line(c.solver, c.preconditioner(), x.num_elements, x.h, x.mu, x.report) +
                       " time=" + format_sci(x.report.wall_time) + "s\n";
    if (cells_out) *cells_out = std::move(cells);
    return out;
}

inline RunOutcome run_spectral(const ExperimentConfig& c) {
    c.validate();
    const auto meshes = build_meshes(c);
    const SolverOptions opt = c.solver_options();
    RunOutcome out;
    TextTable summary;
    summary.headers = {"mu", "mesh", "N", "beta", "gamma_max", "zero_gamma", "zero_lambda", "unit_lambda",
                       "outside_intervals", "outside_intervals_except_unit", "quadratic_map_defect"};
    // Every system is checked against the guard before any eigensolve.
    for (const auto& lm : meshes) {
        const DofMap dm(lm.mesh);
        check_dense_guard(dm.num_total(), ("spectral report on mesh " + lm.label).c_str());
    }
    for (std::size_t i = 0; i < c.mu.size(); ++i) {
        const ManufacturedProblem pb = c.make_problem(c.mu[i]);
        for (const auto& lm : meshes) {
            const SaddleSystem s = build_saddle_system(lm.mesh, pb, opt.assembly);
            const SpectralReport sp = spectral_report(s);
            TextTable g;
            g.headers = {"index", "gamma"};
            for (std::size_t k = 0; k < sp.gammas.size(); ++k)
                g.rows.push_back({std::to_string(k), format_sci(sp.gammas[k])});
            detail::write_text(c.out, "spectral_gamma_" + lm.label + "_" + detail::mu_tag(i) + ".csv", to_csv(g), out);
            TextTable l;
            l.headers = {"index", "lambda", "in_interval_set"};
            for (std::size_t k = 0; k < sp.precond_eigs.size(); ++k)
                l.rows.push_back({std::to_string(k), format_sci(sp.precond_eigs[k]),
                                  sp.in_interval_set(sp.precond_eigs[k]) ? "true" : "false"});
            detail::write_text(c.out, "spectral_lambda_" + lm.label + "_" + detail::mu_tag(i) + ".csv", to_csv(l), out);
            summary.rows.push_back({format_sci(c.mu[i]), lm.label, std::to_string(lm.mesh.num_elements()),
                                    format_sci(sp.beta), format_sci(sp.gammas.back()), std::to_string(sp.num_zero_gamma),
                                    std::to_string(sp.num_zero_lambda), std::to_string(sp.num_unit_lambda),
                                    std::to_string(sp.interval_violations.size()),
                                    std::to_string(sp.interval_violations_excluding_unit.size()),
                                    format_sci(sp.quadratic_map_defect)});
        }
    }
    detail::write_text(c.out, "spectral_summary.csv", to_csv(summary), out);
    const std::string md = to_markdown(summary);
    detail::write_text(c.out, "spectral_summary.md", md, out);
    out.summary = md;
    return out;
}

inline RunOutcome run_inconsistency_demo(const ExperimentConfig& c) {
    c.validate();
    const auto meshes = build_meshes(c);
    const SolverOptions opt = c.solver_options();
    RunOutcome out;
    TextTable summary;
    summary.headers = {"mu", "mesh", "N", "alpha_h", "consistent_iterations", "consistent_converged",
                       "consistent_stagnated", "raw_iterations", "raw_converged", "raw_stagnated", "raw_final_relres"};
    for (std::size_t i = 0; i < c.mu.size(); ++i) {
        const ManufacturedProblem pb = c.make_problem(c.mu[i]);
        for (const auto& lm : meshes) {
            const InconsistencyDemo d = inconsistency_demo(lm.mesh, pb, opt);
            const std::string stem = "inconsistency_" + lm.label + "_" + detail::mu_tag(i);
            std::ostringstream a, b;
            write_history_csv(a, d.consistent);
            write_history_csv(b, d.raw);
            detail::write_text(c.out, stem + "_consistent.csv", a.str(), out);
            detail::write_text(c.out, stem + "_raw.csv", b.str(), out);
            out.all_converged &= d.consistent.converged;
            summary.rows.push_back({format_sci(c.mu[i]), lm.label, std::to_string(lm.mesh.num_elements()),
                                    format_sci(d.alpha_h), std::to_string(d.consistent.iterations),
                                    d.consistent.converged ? "true" : "false", d.consistent.stagnated ? "true" : "false",
                                    std::to_string(d.raw.iterations), d.raw.converged ? "true" : "false",
                                    d.raw.stagnated ? "true" : "false", format_sci(d.raw.residual_history.back())});
        }
    }
    detail::write_text(c.out, "inconsistency_summary.csv", to_csv(summary), out);
    out.summary = to_markdown(summary);
    return out;
}

/// Writes the assembled blocks of every (mu, mesh) pair as Matrix Market files.
inline RunOutcome run_export(const ExperimentConfig& c) {
    c.validate();
    const auto meshes = build_meshes(c);
    const SolverOptions opt = c.solver_options();
    RunOutcome out;
    std::filesystem::create_directories(c.out);
    for (std::size_t i = 0; i < c.mu.size(); ++i) {
        const ManufacturedProblem pb = c.make_problem(c.mu[i]);
        for (const auto& lm : meshes) {
            const SaddleSystem s = build_saddle_system(lm.mesh, pb, opt.assembly);
            const std::string prefix =
                (std::filesystem::path(c.out) / ("system_" + lm.label + "_" + detail::mu_tag(i))).string();
            export_system(s, prefix);
            for (const char* part : {"A", "B", "b1", "b2", "b2_tilde", "rhs", "Mp"})
                out.files.push_back(prefix + "_" + part + ".mtx");
            out.summary += prefix + ": n_u=" + std::to_string(s.num_velocity()) + " N=" +
                           std::to_string(s.num_pressure()) + " alpha_h=" + format_sci(s.alpha_h) + "\n";
        }
    }
    return out;
}

}  // namespace wgstokes
