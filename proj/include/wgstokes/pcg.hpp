#pragma once

#include <chrono>
#include <cmath>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "dense.hpp"
#include "ichol.hpp"
#include "solve_report.hpp"
#include "sparse.hpp"

namespace wgstokes {

enum class InnerMethod { automatic, pcg, dense_cholesky };

inline InnerMethod parse_inner_method(const std::string& s) {
    if (s == "auto") return InnerMethod::automatic;
    if (s == "pcg") return InnerMethod::pcg;
    if (s == "dense_cholesky") return InnerMethod::dense_cholesky;
    throw std::invalid_argument("unknown inner solve method '" + s + "'");
}

/// How the velocity block A is inverted inside the saddle-point
/// preconditioners. `automatic` picks dense Cholesky up to kDenseGuard
/// unknowns and IC-preconditioned CG beyond.
struct InnerSolveConfig {
    InnerMethod method = InnerMethod::automatic;
    double rel_tol = 1e-10;
    int max_iterations = 500;
    double droptol = 1e-3;

    void validate() const {
        if (!(rel_tol > 0.0 && rel_tol < 1.0))
            throw std::invalid_argument("inner solve tolerance must lie in (0, 1)");
        if (max_iterations < 1) throw std::invalid_argument("inner solve max iterations must be >= 1");
        if (droptol < 0.0) throw std::invalid_argument("ichol drop tolerance must be >= 0");
    }
};

struct PcgConfig {
    double rel_tol = 1e-10;
    int max_iterations = 500;
};

struct PcgResult {
    std::vector<double> x;
    SolveReport report;
};

/// Preconditioned conjugate gradients from a zero initial guess. `precond`
/// is a callable (r, z) -> void computing z = M^{-1} r. Stops when the
/// recurrence residual satisfies ||r|| <= rel_tol ||b||.
template <class Precond>
PcgResult pcg(const SparseMatrix& a, std::span<const double> b, Precond&& precond, const PcgConfig& cfg) {
    if (a.rows() != a.cols() || static_cast<int>(b.size()) != a.rows())
        throw std::invalid_argument("pcg: dimension mismatch");
    const auto t0 = std::chrono::steady_clock::now();
    const std::size_t n = b.size();
    PcgResult res;
    res.x.assign(n, 0.0);
    SolveReport& rep = res.report;
    const double bnorm = norm2(b);
    rep.residual_history.push_back(bnorm > 0.0 ? 1.0 : 0.0);
    if (bnorm == 0.0) {
        rep.converged = true;
        rep.status = SolveStatus::converged;
        rep.precond_residual_history.push_back(0.0);
        return res;
    }
    std::vector<double> r(b.begin(), b.end()), z(n), p(n), ap(n);
    precond(std::span<const double>(r), std::span<double>(z));
    double rz = dot(r, z);
    const double rz0 = rz;
    rep.precond_residual_history.push_back(1.0);
    p = z;
    rep.status = SolveStatus::max_iterations;
    for (int k = 1; k <= cfg.max_iterations; ++k) {
        spmv(a, p, ap);
        const double pap = dot(p, ap);
        if (!(pap > 0.0)) {
            rep.status = SolveStatus::indefinite;
            break;
        }
        const double alpha = rz / pap;
        axpy(alpha, p, res.x);
        axpy(-alpha, ap, r);
        rep.iterations = k;
        const double rel = norm2(r) / bnorm;
        rep.residual_history.push_back(rel);
        precond(std::span<const double>(r), std::span<double>(z));
        const double rz_new = dot(r, z);
        rep.precond_residual_history.push_back(std::sqrt(std::max(rz_new, 0.0) / rz0));
        if (rel <= cfg.rel_tol) {
            rep.converged = true;
            rep.status = SolveStatus::converged;
            break;
        }
        const double beta = rz_new / rz;
        rz = rz_new;
        for (std::size_t i = 0; i < n; ++i) p[i] = z[i] + beta * p[i];
    }
    rep.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return res;
}

inline PcgResult pcg(const SparseMatrix& a, std::span<const double> b, const PcgConfig& cfg) {
    return pcg(a, b, [](std::span<const double> r, std::span<double> z) {
        std::copy(r.begin(), r.end(), z.begin());
    }, cfg);
}

inline PcgResult pcg(const SparseMatrix& a, std::span<const double> b, const ICholFactor& m,
                     const PcgConfig& cfg) {
    return pcg(a, b, [&m](std::span<const double> r, std::span<double> z) { m.apply(r, z); }, cfg);
}

struct InnerSolveError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Approximate A^{-1} used inside the block preconditioners. Not thread-safe
/// for concurrent calls on one instance (it accumulates statistics).
class InnerSolver {
public:
    InnerSolver(const SparseMatrix& a, const InnerSolveConfig& cfg) : a_(&a), cfg_(cfg) {
        cfg_.validate();
        const bool dense = cfg.method == InnerMethod::dense_cholesky ||
                           (cfg.method == InnerMethod::automatic && a.rows() <= kDenseGuard);
        if (dense)
            chol_ = std::make_unique<DenseCholesky>(a);
        else
            ic_ = ichol_threshold(a, cfg.droptol);
    }

    bool is_direct() const { return chol_ != nullptr; }

    /// x = A^{-1} r (approximately for the PCG path).
    void solve(std::span<const double> r, std::span<double> x) {
        ++solves_;
        if (chol_) {
            chol_->solve(r, x);
            return;
        }
        PcgResult res = pcg(*a_, r, *ic_, PcgConfig{cfg_.rel_tol, cfg_.max_iterations});
        iterations_ += res.report.iterations;
        if (!res.report.converged)
            throw InnerSolveError("inner PCG failed: " + to_string(res.report.status) + " after " +
                                  std::to_string(res.report.iterations) + " iterations");
        std::copy(res.x.begin(), res.x.end(), x.begin());
    }

    long iterations() const { return iterations_; }
    int solves() const { return solves_; }

private:
    const SparseMatrix* a_;
    InnerSolveConfig cfg_;
    std::unique_ptr<DenseCholesky> chol_;
    std::optional<ICholFactor> ic_;
    long iterations_ = 0;
    int solves_ = 0;
};

}  // namespace wgstokes
