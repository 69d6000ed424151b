#pragma once

#include <string>
#include <vector>

namespace wgstokes {

enum class SolveStatus { converged, max_iterations, indefinite, breakdown };

inline std::string to_string(SolveStatus s) {
    switch (s) {
        case SolveStatus::converged: return "converged";
        case SolveStatus::max_iterations: return "max_iterations";
        case SolveStatus::indefinite: return "indefinite";
        case SolveStatus::breakdown: return "breakdown";
    }
    return "?";
}

/// Outcome of an iterative solve. residual_history[k] is the relative
/// residual ||b - A x_k|| / ||b|| after k iterations (entry 0 is the initial
/// guess), so its length is iterations + 1.
struct SolveReport {
    int iterations = 0;
    bool converged = false;
    bool stagnated = false;
    SolveStatus status = SolveStatus::max_iterations;
    std::vector<double> residual_history;
    /// Residual in the preconditioner-induced norm, normalized by its initial
    /// value (MINRES: ||r||_{P^{-1}}; PCG: sqrt(r^T M^{-1} r)). Empty for GMRES.
    std::vector<double> precond_residual_history;
    double wall_time = 0.0;       // seconds
    long inner_iterations = 0;    // total inner PCG iterations (0 for direct inner solves)
    int inner_solves = 0;
};

}  // namespace wgstokes
