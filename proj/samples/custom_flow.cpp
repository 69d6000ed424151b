// A user-defined flow read from expressions, solved with GMRES on a mesh file
// or a generated mesh.

#include <cstdio>
#include <string>

#include "wgstokes/wgstokes.hpp"

int main(int argc, char** argv) {
    using namespace wgstokes;
    const SimplicialMesh mesh = argc > 1 ? load_mesh(argv[1]) : generate_structured_tri(8);

    // Rotational flow with a smooth pressure; f is left out and derived by finite differences.
    const ManufacturedProblem pb = custom_problem(
        2, {"sin(pi*x)*sin(pi*x)*sin(2*pi*y)", "-sin(2*pi*x)*sin(pi*y)*sin(pi*y)"}, "x*y - 0.25", std::nullopt, 0.1);

    SolverOptions opt;
    opt.method = KrylovMethod::gmres;
    opt.krylov.restart = 20;
    const StokesSolution sol = solve_stokes(mesh, pb, opt);
    const ErrorReport e = compute_errors(mesh, pb, sol, 0.0);
    std::printf("N=%d h=%.4f iterations=%d converged=%s\n", mesh.num_elements(), e.h, sol.report.iterations,
                sol.report.converged ? "yes" : "no");
    std::printf("velocity L2 error %.4e, pressure L2 error %.4e\n", e.l2_velocity, e.pressure_error);
    return sol.report.converged ? 0 : 1;
}
