#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "assembly.hpp"
#include "dense.hpp"
#include "krylov.hpp"
#include "problem.hpp"

namespace wgstokes {

inline constexpr int kErrorQuadDegree = 4;

struct ErrorReport {
    double l2_velocity = 0.0;     // ||u - u_h^o||
    double superconv = 0.0;       // ||Q_h^o u - u_h^o||
    double grad_error = 0.0;      // ||grad u - grad_w u_h||, broken
    double pressure_error = 0.0;  // ||p - p_h||, both mean-free
    double h = 0.0;
    int num_elements = 0;
    double mu = 1.0;
    double alpha_h = 0.0;
};

/// Error norms of a discrete solution against the exact one, integrated
/// elementwise with a degree-4 rule.
inline ErrorReport compute_errors(const SimplicialMesh& mesh, const ManufacturedProblem& pb, const WGField& u_h,
                                  const PressureField& p_h, int degree = kErrorQuadDegree) {
    const int d = mesh.dim();
    const SimplexRule rule = simplex_rule(d, degree);
    ErrorReport e;
    e.h = mesh_stats(mesh).h;
    e.num_elements = mesh.num_elements();
    e.mu = pb.mu;

    double p_int = 0.0, ph_int = 0.0, vol = 0.0;
    for (int k = 0; k < mesh.num_elements(); ++k) {
        const ElementGeometry& g = mesh.geometry(k);
        const std::span<const Vec> verts(g.vertices.data(), d + 1);
        p_int += integrate_simplex(verts, g.measure, rule, pb.p);
        ph_int += p_h.values[k] * g.measure;
        vol += g.measure;
    }
    const double p_mean = p_int / vol, ph_mean = ph_int / vol;

    double eu = 0.0, es = 0.0, eg = 0.0, ep = 0.0;
    for (int k = 0; k < mesh.num_elements(); ++k) {
        const ElementGeometry& g = mesh.geometry(k);
        const std::span<const Vec> verts(g.vertices.data(), d + 1);
        const Vec uk = u_h.interior[k];
        const auto fv = u_h.element_facet_values(mesh, k);
        const WeakGradient wg = weak_gradient_field(g, uk, std::span<const Vec>(fv.data(), d + 1));
        const double pk = p_h.values[k] - ph_mean;
        Vec qu;
        for (std::size_t q = 0; q < rule.points.size(); ++q) {
            const Vec x = map_to_simplex(verts, rule.points[q]);
            const double w = rule.weights[q] * g.measure;
            const Vec ux = pb.u(x);
            qu += (rule.weights[q]) * ux;
            eu += w * dot(ux - uk, ux - uk);
            const auto j = pb.grad_u(x);
            for (int r = 0; r < d; ++r) {
                const Vec diff = j[r] - wg[r](x, g.centroid);
                eg += w * dot(diff, diff);
            }
            const double dp = (pb.p(x) - p_mean) - pk;
            ep += w * dp * dp;
        }
        es += g.measure * dot(qu - uk, qu - uk);
    }
    e.l2_velocity = std::sqrt(eu);
    e.superconv = std::sqrt(es);
    e.grad_error = std::sqrt(eg);
    e.pressure_error = std::sqrt(ep);
    return e;
}

inline ErrorReport compute_errors(const SimplicialMesh& mesh, const ManufacturedProblem& pb,
                                  const StokesSolution& sol, double alpha_h = 0.0) {
    ErrorReport e = compute_errors(mesh, pb, sol.velocity, sol.pressure);
    e.alpha_h = alpha_h;
    return e;
}

/// log(e1/e2) / log(h1/h2) between consecutive rows.
inline double convergence_rate(double e1, double e2, double h1, double h2) {
    return std::log(e1 / e2) / std::log(h1 / h2);
}

struct ConvergenceRow {
    ErrorReport errors;
    int iterations = 0;
    bool converged = false;
    // Rates against the previous row; NaN on the first row.
    double rate_l2 = std::numeric_limits<double>::quiet_NaN();
    double rate_superconv = std::numeric_limits<double>::quiet_NaN();
    double rate_grad = std::numeric_limits<double>::quiet_NaN();
    double rate_pressure = std::numeric_limits<double>::quiet_NaN();
};

struct ConvergenceTable {
    double mu = 1.0;
    std::vector<ConvergenceRow> rows;

    bool all_converged() const {
        return std::all_of(rows.begin(), rows.end(), [](const ConvergenceRow& r) { return r.converged; });
    }
};

inline void fill_rates(ConvergenceTable& t) {
    for (std::size_t i = 1; i < t.rows.size(); ++i) {
        const ErrorReport& a = t.rows[i - 1].errors;
        const ErrorReport& b = t.rows[i].errors;
        auto& r = t.rows[i];
        r.rate_l2 = convergence_rate(a.l2_velocity, b.l2_velocity, a.h, b.h);
        r.rate_superconv = convergence_rate(a.superconv, b.superconv, a.h, b.h);
        r.rate_grad = convergence_rate(a.grad_error, b.grad_error, a.h, b.h);
        r.rate_pressure = convergence_rate(a.pressure_error, b.pressure_error, a.h, b.h);
    }
}

/// Solves on each mesh and tabulates errors and rates. A row whose solve did
/// not converge is kept and marked.
inline ConvergenceTable convergence_study(const ManufacturedProblem& pb, std::span<const SimplicialMesh> meshes,
                                          const SolverOptions& opt) {
    if (meshes.size() < 2) throw std::invalid_argument("a convergence study needs at least two meshes");
    ConvergenceTable t;
    t.mu = pb.mu;
    for (const SimplicialMesh& mesh : meshes) {
        const SaddleSystem s = build_saddle_system(mesh, pb, opt.assembly);
        const StokesSolution sol = solve_stokes(mesh, s, opt);
        ConvergenceRow row;
        row.errors = compute_errors(mesh, pb, sol, s.alpha_h);
        row.iterations = sol.report.iterations;
        row.converged = sol.report.converged;
        t.rows.push_back(row);
    }
    fill_rates(t);
    return t;
}

struct SpectralReport {
    int dim = 2;
    std::vector<double> gammas;          // eigenvalues of S q = gamma Mp q, ascending
    double beta = 0.0;                   // sqrt(gamma_2)
    std::vector<double> precond_eigs;    // eigenvalues of P_d^{-1} [A -B^T; -B 0], ascending
    double lambda_min_A = 0.0;
    double lambda_max_Mp = 0.0;
    int num_zero_gamma = 0;              // |gamma| < 1e-10
    int num_zero_lambda = 0;             // |lambda| < 1e-8
    int num_unit_lambda = 0;             // |lambda - 1| < 1e-8
    // Preconditioned eigenvalues outside the three-interval set (margin 1e-8).
    std::vector<double> interval_violations;
    // The same check with lambda = 1 admitted as a fourth point.
    std::vector<double> interval_violations_excluding_unit;
    // max over lambda of min over gamma of |lambda - (1 +- sqrt(1 + 4 gamma))/2|
    double quadratic_map_defect = 0.0;
    bool gamma_upper_bound_ok = true;    // all gamma <= d + 1e-8

    /// Endpoints of the negative and positive intervals.
    double neg_lo() const { return 0.5 * (1.0 - std::sqrt(1.0 + 4.0 * dim)); }
    double neg_hi() const { return 0.5 * (1.0 - std::sqrt(1.0 + 4.0 * beta * beta)); }
    double pos_lo() const { return 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * beta * beta)); }
    double pos_hi() const { return 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * dim)); }

    bool in_interval_set(double lambda, double margin = 1e-8) const {
        if (std::abs(lambda) <= margin) return true;
        if (lambda >= neg_lo() - margin && lambda <= neg_hi() + margin) return true;
        return lambda >= pos_lo() - margin && lambda <= pos_hi() + margin;
    }
};

/// Brute-force spectra of the Schur complement and the block-diagonally
/// preconditioned saddle operator. Dense; limited to kDenseGuard unknowns.
inline SpectralReport spectral_report(const SaddleSystem& s) {
    const int nu = s.num_velocity(), np = s.num_pressure();
    check_dense_guard(nu + np, "spectral_report");
    SpectralReport rep;
    rep.dim = s.dofs.dim;

    const Eigen::MatrixXd a = to_dense(s.A);
    const Eigen::MatrixXd b = to_dense(s.B);
    Eigen::LLT<Eigen::MatrixXd> llt(a);
    if (llt.info() != Eigen::Success) throw NotPositiveDefiniteError("spectral_report: A is not SPD");
    const Eigen::MatrixXd l = llt.matrixL();
    // C = B L^{-T}, so S = B A^{-1} B^T = C C^T.
    const Eigen::MatrixXd c = l.triangularView<Eigen::Lower>().solve(b.transpose()).transpose();
    const Eigen::VectorXd mp = Eigen::Map<const Eigen::VectorXd>(s.mp.data(), np);
    const Eigen::VectorXd mp_isqrt = mp.cwiseSqrt().cwiseInverse();
    // Mp^{-1/2} C: its Gram matrix gives the Mp-generalized Schur spectrum.
    const Eigen::MatrixXd cs = mp_isqrt.asDiagonal() * c;
    Eigen::MatrixXd shat = cs * cs.transpose();
    shat = 0.5 * (shat + shat.transpose());
    rep.gammas = dense_eig_sym(shat);
    if (rep.gammas.size() < 2) throw std::invalid_argument("spectral_report: need at least two elements");
    rep.beta = std::sqrt(std::max(rep.gammas[1], 0.0));

    // Symmetric similarity of P_d^{-1} calA: [I, -Cs^T; -Cs, 0].
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(nu + np, nu + np);
    m.topLeftCorner(nu, nu).setIdentity();
    m.topRightCorner(nu, np) = -cs.transpose();
    m.bottomLeftCorner(np, nu) = -cs;
    rep.precond_eigs = dense_eig_sym(m);

    const auto aeig = dense_eig_sym(a);
    rep.lambda_min_A = aeig.front();
    rep.lambda_max_Mp = mp.maxCoeff();

    for (double g : rep.gammas) {
        if (std::abs(g) < 1e-10) ++rep.num_zero_gamma;
        if (g > rep.dim + 1e-8) rep.gamma_upper_bound_ok = false;
    }
    for (double lam : rep.precond_eigs) {
        if (std::abs(lam) < 1e-8) ++rep.num_zero_lambda;
        const bool unit = std::abs(lam - 1.0) < 1e-8;
        if (unit) ++rep.num_unit_lambda;
        if (!rep.in_interval_set(lam)) {
            rep.interval_violations.push_back(lam);
            if (!unit) rep.interval_violations_excluding_unit.push_back(lam);
        }
        double best = std::numeric_limits<double>::infinity();
        for (double g : rep.gammas) {
            const double root = std::sqrt(std::max(1.0 + 4.0 * g, 0.0));
            best = std::min({best, std::abs(lam - 0.5 * (1.0 + root)), std::abs(lam - 0.5 * (1.0 - root))});
        }
        rep.quadratic_map_defect = std::max(rep.quadratic_map_defect, best);
    }
    return rep;
}

enum class BoundKind { minres, gmres };

struct BoundCheck {
    bool passed = true;
    double worst_margin = std::numeric_limits<double>::infinity();  // min(bound - measured)
    int worst_iteration = -1;
    int checked = 0;
};

/// rho = (sqrt(d) - beta) / (sqrt(d) + beta).
inline double bound_rate(const SpectralReport& sp) {
    const double sd = std::sqrt(static_cast<double>(sp.dim));
    return (sd - sp.beta) / (sd + sp.beta);
}

/// MINRES: history[2k+1] <= 2 rho^k for every odd index.
/// GMRES: history[k] <= 2 (1 + d + sqrt(d lambda_max(Mp) / lambda_min(A))) rho^{k-2} for k >= 2.
inline BoundCheck residual_bound_check(std::span<const double> history, const SpectralReport& sp, BoundKind which) {
    BoundCheck out;
    const double rho = bound_rate(sp);
    const int n = static_cast<int>(history.size());
    auto visit = [&](int k, double bound) {
        const double margin = bound - history[k];
        ++out.checked;
        if (margin < out.worst_margin) {
            out.worst_margin = margin;
            out.worst_iteration = k;
        }
        if (margin < 0.0) out.passed = false;
    };
    if (which == BoundKind::minres) {
        for (int k = 0; 2 * k + 1 < n; ++k) visit(2 * k + 1, 2.0 * std::pow(rho, k));
    } else {
        const double d = sp.dim;
        const double c = 2.0 * (1.0 + d + std::sqrt(d * sp.lambda_max_Mp / sp.lambda_min_A));
        for (int k = 2; k < n; ++k) visit(k, c * std::pow(rho, k - 2));
    }
    return out;
}

inline BoundCheck residual_bound_check(const SolveReport& r, const SpectralReport& sp, BoundKind which) {
    const auto& h = (which == BoundKind::minres && !r.precond_residual_history.empty()) ? r.precond_residual_history
                                                                                         : r.residual_history;
    return residual_bound_check(std::span<const double>(h), sp, which);
}

struct InconsistencyDemo {
    SolveReport consistent;
    SolveReport raw;
    double alpha_h = 0.0;
};

/// Solves the same system with b2_tilde and with the raw b2.
inline InconsistencyDemo inconsistency_demo(const SimplicialMesh& mesh, const ManufacturedProblem& pb,
                                            const SolverOptions& opt) {
    AssemblyOptions ao = opt.assembly;
    ao.check_compatibility = false;
    ao.consistent = true;
    SaddleSystem s = build_saddle_system(mesh, pb, ao);
    InconsistencyDemo demo;
    demo.alpha_h = s.alpha_h;
    demo.consistent = solve_system(s, opt).report;
    s.consistent = false;
    demo.raw = solve_system(s, opt).report;
    return demo;
}

/// min_x ||rhs - calA x|| / ||rhs|| for the rescaled system. The kernel of the
/// symmetric operator is spanned by (0, 1_p), so the floor is the rhs
/// component along it: mu |sum b2| / (sqrt(N) ||rhs||).
inline double least_squares_floor(const SaddleSystem& s) {
    const auto r = s.rhs();
    double sum = 0.0;
    for (int k = 0; k < s.num_pressure(); ++k) sum += r[s.num_velocity() + k];
    return std::abs(sum) / std::sqrt(static_cast<double>(s.num_pressure())) / norm2(r);
}

}  // namespace wgstokes
