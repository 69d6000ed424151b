// Batch experiment runner: convergence tables, solver studies, spectral
// checks, the inconsistency demo and Matrix Market export.
//
// Exit codes: 0 success, 1 a solve did not converge, 2 configuration error.

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "wgstokes/experiment.hpp"

namespace {

struct Overrides {
    std::string config;
    std::optional<std::string> out, problem, method, precond, qg;
    std::vector<double> mu;
    std::vector<int> levels;
    std::optional<double> tol;
    std::optional<int> restart;
    bool inconsistent = false;
};

void add_common(CLI::App* sub, Overrides& o) {
    sub->add_option("--config", o.config, "JSON experiment config");
    sub->add_option("--out", o.out, "output directory");
    sub->add_option("--problem", o.problem, "stokes2d_exp | stokes3d_trig | custom");
    sub->add_option("--mu", o.mu, "viscosities, comma separated")->delimiter(',');
    sub->add_option("--levels", o.levels, "structured mesh levels, comma separated")->delimiter(',');
    sub->add_option("--method", o.method, "minres | gmres");
    sub->add_option("--precond", o.precond, "block_diag | block_lower_tri | none");
    sub->add_option("--tol", o.tol, "relative residual tolerance");
    sub->add_option("--restart", o.restart, "GMRES restart length");
    sub->add_option("--qg", o.qg, "boundary projection: barycenter | gauss2 | gauss3");
    sub->add_flag("--inconsistent", o.inconsistent, "solve with the raw pressure right-hand side");
}

wgstokes::ExperimentConfig resolve(const Overrides& o) {
    using namespace wgstokes;
    ExperimentConfig c = o.config.empty() ? ExperimentConfig{} : load_config(o.config);
    try {
        if (o.out) c.out = *o.out;
        if (o.problem) c.problem = *o.problem;
        if (!o.mu.empty()) c.mu = o.mu;
        if (!o.levels.empty()) {
            c.levels = o.levels;
            c.mesh_files.clear();
        }
        if (o.method) c.solver = parse_krylov_method(*o.method);
        if (o.precond) c.precond = parse_preconditioner(*o.precond);
        if (o.tol) c.tol = *o.tol;
        if (o.restart) c.restart = *o.restart;
        if (o.qg) c.qg = parse_boundary_projection(*o.qg);
        if (o.inconsistent) c.consistent = false;
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    c.validate();
    if (c.problem == "custom" && !c.custom->f)
        std::fprintf(stderr, "warning: f is derived from u and p by finite differences; "
                             "expect an O(1e-8) forcing error\n");
    return c;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Weak Galerkin Stokes experiments"};
    app.require_subcommand(1);
    Overrides o;
    std::vector<std::pair<CLI::App*, wgstokes::RunOutcome (*)(const wgstokes::ExperimentConfig&)>> subs = {
        {app.add_subcommand("convergence", "velocity/pressure error table with rates"), wgstokes::run_convergence},
        {app.add_subcommand("solver-study", "iteration counts over mu and mesh levels"),
         [](const wgstokes::ExperimentConfig& c) { return wgstokes::run_solver_study(c); }},
        {app.add_subcommand("spectral", "dense eigenvalue checks on small meshes"), wgstokes::run_spectral},
        {app.add_subcommand("inconsistency", "raw vs consistent pressure right-hand side"),
         wgstokes::run_inconsistency_demo},
        {app.add_subcommand("export-system", "write the assembled system as Matrix Market"), wgstokes::run_export},
    };
    for (auto& s : subs) add_common(s.first, o);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try {
        const wgstokes::ExperimentConfig cfg = resolve(o);
        for (auto& [sub, run] : subs) {
            if (!sub->parsed()) continue;
            const wgstokes::RunOutcome r = run(cfg);
            std::cout << r.summary;
            for (const auto& f : r.files) std::cout << "wrote " << f << '\n';
            if (!r.all_converged) {
                std::cerr << "error: at least one solve did not converge\n";
                return 1;
            }
        }
    } catch (const wgstokes::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const wgstokes::DenseScaleError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const wgstokes::MeshError& e) {
        std::cerr << "mesh error: " << e.what() << '\n';
        return 2;
    } catch (const wgstokes::IncompatibleBoundaryDataError& e) {
        std::cerr << "problem error: " << e.what() << '\n';
        return 2;
    } catch (const wgstokes::ExpressionError& e) {
        std::cerr << "expression error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
