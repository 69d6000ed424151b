// Solves the 2D exponential test problem on a structured mesh and prints the
// errors, iteration count and residual history.

#include <cstdio>
#include <cstdlib>
#include <iostream>

#include "wgstokes/wgstokes.hpp"

int main(int argc, char** argv) {
    const int n = argc > 1 ? std::atoi(argv[1]) : 16;
    const double mu = argc > 2 ? std::atof(argv[2]) : 1.0;

    const wgstokes::SimplicialMesh mesh = wgstokes::generate_structured_tri(n);
    const wgstokes::ManufacturedProblem pb = wgstokes::stokes2d_exp(mu);

    wgstokes::SolverOptions opt;  // MINRES with the block diagonal preconditioner
    const wgstokes::SaddleSystem s = wgstokes::build_saddle_system(mesh, pb, opt.assembly);
    const wgstokes::StokesSolution sol = wgstokes::solve_stokes(mesh, s, opt);
    const wgstokes::ErrorReport e = wgstokes::compute_errors(mesh, pb, sol, s.alpha_h);

    std::cout << wgstokes::summary_line(sol.method, sol.precond, mesh.num_elements(), e.h, mu, sol.report) << '\n';
    std::printf("velocity L2 error   %.6e\n", e.l2_velocity);
    std::printf("Q_h u - u_h error   %.6e\n", e.superconv);
    std::printf("pressure L2 error   %.6e\n", e.pressure_error);
    std::printf("alpha_h             %.6e\n", s.alpha_h);
    wgstokes::write_history_csv(std::cout, sol.report);
}
