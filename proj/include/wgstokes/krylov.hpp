#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <optional>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "assembly.hpp"
#include "pcg.hpp"
#include "solve_report.hpp"

namespace wgstokes {

enum class PreconditionerKind { block_diag, block_lower_tri, none };

inline PreconditionerKind parse_preconditioner(const std::string& s) {
    if (s == "block_diag") return PreconditionerKind::block_diag;
    if (s == "block_lower_tri") return PreconditionerKind::block_lower_tri;
    if (s == "none") return PreconditionerKind::none;
    throw std::invalid_argument("unknown preconditioner '" + s + "'");
}

inline std::string to_string(PreconditionerKind k) {
    switch (k) {
        case PreconditionerKind::block_diag: return "block_diag";
        case PreconditionerKind::block_lower_tri: return "block_lower_tri";
        case PreconditionerKind::none: return "none";
    }
    return "?";
}

enum class KrylovMethod { minres, gmres };

inline KrylovMethod parse_krylov_method(const std::string& s) {
    if (s == "minres") return KrylovMethod::minres;
    if (s == "gmres") return KrylovMethod::gmres;
    throw std::invalid_argument("unknown solver '" + s + "'");
}

inline std::string to_string(KrylovMethod m) { return m == KrylovMethod::minres ? "minres" : "gmres"; }

inline PreconditionerKind default_preconditioner(KrylovMethod m) {
    return m == KrylovMethod::minres ? PreconditionerKind::block_diag : PreconditionerKind::block_lower_tri;
}

struct PreconditionerSpec {
    PreconditionerKind kind = PreconditionerKind::block_diag;
    InnerSolveConfig inner;
};

/// (A^{-1} r_u, Mp^{-1} r_p).
inline void apply_Pd_inverse(const SaddleSystem& s, InnerSolver& inner, std::span<const double> r,
                             std::span<double> z) {
    const int nu = s.num_velocity(), np = s.num_pressure();
    inner.solve(r.subspan(0, nu), z.subspan(0, nu));
    for (int k = 0; k < np; ++k) z[nu + k] = r[nu + k] / s.mp[k];
}

inline std::vector<double> apply_Pd_inverse(const SaddleSystem& s, InnerSolver& inner, std::span<const double> r) {
    std::vector<double> z(r.size());
    apply_Pd_inverse(s, inner, r, z);
    return z;
}

/// Forward substitution with [A 0; -B -Mp]: x_u = A^{-1} r_u,
/// x_p = -Mp^{-1}(r_p + B x_u).
inline void apply_Pt_inverse(const SaddleSystem& s, InnerSolver& inner, std::span<const double> r,
                             std::span<double> z) {
    const int nu = s.num_velocity(), np = s.num_pressure();
    auto zu = z.subspan(0, nu);
    inner.solve(r.subspan(0, nu), zu);
    std::vector<double> bx(np);
    spmv(s.B, std::span<const double>(zu.data(), zu.size()), bx);
    for (int k = 0; k < np; ++k) z[nu + k] = -(r[nu + k] + bx[k]) / s.mp[k];
}

inline std::vector<double> apply_Pt_inverse(const SaddleSystem& s, InnerSolver& inner, std::span<const double> r) {
    std::vector<double> z(r.size());
    apply_Pt_inverse(s, inner, r, z);
    return z;
}

/// The preconditioner of a saddle system as a callable z = P^{-1} r.
class SaddlePreconditioner {
public:
    SaddlePreconditioner(const SaddleSystem& s, const PreconditionerSpec& spec) : s_(&s), kind_(spec.kind) {
        if (kind_ != PreconditionerKind::none) inner_.emplace(s.A, spec.inner);
    }

    PreconditionerKind kind() const { return kind_; }

    void operator()(std::span<const double> r, std::span<double> z) {
        switch (kind_) {
            case PreconditionerKind::block_diag: apply_Pd_inverse(*s_, *inner_, r, z); break;
            case PreconditionerKind::block_lower_tri: apply_Pt_inverse(*s_, *inner_, r, z); break;
            case PreconditionerKind::none: std::copy(r.begin(), r.end(), z.begin()); break;
        }
    }

    long inner_iterations() const { return inner_ ? inner_->iterations() : 0; }
    int inner_solves() const { return inner_ ? inner_->solves() : 0; }

private:
    const SaddleSystem* s_;
    PreconditionerKind kind_;
    std::optional<InnerSolver> inner_;
};

struct KrylovConfig {
    double tol = 1e-9;
    int max_iterations = 1000;
    int restart = 30;
    int stagnation_window = 50;
    double stagnation_factor = 100.0;

    void validate() const {
        if (!(tol > 0.0 && tol < 1.0)) throw std::invalid_argument("tolerance must lie in (0, 1)");
        if (max_iterations < 1) throw std::invalid_argument("max iterations must be >= 1");
        if (restart < 1) throw std::invalid_argument("restart must be >= 1");
    }
};

struct KrylovResult {
    std::vector<double> x;
    SolveReport report;
};

namespace detail {

/// Residual plateau: at least `window` iterations, still far above tol,
/// and less than 10% reduction over the last window.
inline bool stagnating(const std::vector<double>& h, const KrylovConfig& cfg) {
    const std::size_t w = static_cast<std::size_t>(cfg.stagnation_window);
    if (h.size() <= w) return false;
    const double now = h.back();
    return now > cfg.stagnation_factor * cfg.tol && now > 0.9 * h[h.size() - 1 - w];
}

inline double true_relres(const SaddleSystem& s, std::span<const double> b, std::span<const double> x,
                          double bnorm, std::vector<double>& work) {
    s.apply(x, work);
    double r2 = 0.0;
    for (std::size_t i = 0; i < work.size(); ++i) r2 += (b[i] - work[i]) * (b[i] - work[i]);
    return std::sqrt(r2) / bnorm;
}

}  // namespace detail

/// Preconditioned MINRES (Lanczos in the P inner product) from a zero initial
/// guess, stopping on the true relative residual. P must be SPD, so only
/// block_diag and none are accepted.
inline KrylovResult minres(const SaddleSystem& s, std::span<const double> b, SaddlePreconditioner& prec,
                           const KrylovConfig& cfg = {}) {
    cfg.validate();
    if (prec.kind() == PreconditionerKind::block_lower_tri)
        throw std::invalid_argument("MINRES needs a symmetric positive definite preconditioner");
    const auto t0 = std::chrono::steady_clock::now();
    const std::size_t n = b.size();
    KrylovResult res;
    res.x.assign(n, 0.0);
    SolveReport& rep = res.report;
    const double bnorm = norm2(b);
    auto finish = [&] {
        rep.iterations = static_cast<int>(rep.residual_history.size()) - 1;
        rep.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        rep.inner_iterations = prec.inner_iterations();
        rep.inner_solves = prec.inner_solves();
        return res;
    };
    if (bnorm == 0.0) {
        rep.residual_history = {0.0};
        rep.precond_residual_history = {0.0};
        rep.converged = true;
        rep.status = SolveStatus::converged;
        return finish();
    }
    rep.residual_history = {1.0};
    rep.precond_residual_history = {1.0};

    std::vector<double> v_old(n, 0.0), v(b.begin(), b.end()), v_new(n);
    std::vector<double> w_old(n, 0.0), w(n, 0.0), w_new(n);
    std::vector<double> z(n), z_new(n), az(n), work(n);
    prec(v, z);
    double gamma = dot(z, v);
    if (!(gamma > 0.0)) {
        rep.status = SolveStatus::breakdown;
        return finish();
    }
    gamma = std::sqrt(gamma);
    const double eta0 = gamma;
    double gamma_old = 1.0, eta = gamma;
    double s_old = 0.0, s_cur = 0.0, c_old = 1.0, c_cur = 1.0;

    for (int it = 1; it <= cfg.max_iterations; ++it) {
        for (double& e : z) e /= gamma;
        s.apply(z, az);
        const double delta = dot(az, z);
        for (std::size_t i = 0; i < n; ++i)
            v_new[i] = az[i] - (delta / gamma) * v[i] - (gamma / gamma_old) * v_old[i];
        prec(v_new, z_new);
        const double g2 = dot(z_new, v_new);
        if (g2 < 0.0) {
            rep.status = SolveStatus::breakdown;
            break;
        }
        const double gamma_new = std::sqrt(g2);
        const double a0 = c_cur * delta - c_old * s_cur * gamma;
        const double a1 = std::sqrt(a0 * a0 + gamma_new * gamma_new);
        const double a2 = s_cur * delta + c_old * c_cur * gamma;
        const double a3 = s_old * gamma;
        if (a1 == 0.0) {
            rep.status = SolveStatus::breakdown;
            break;
        }
        const double c_new = a0 / a1, s_new = gamma_new / a1;
        for (std::size_t i = 0; i < n; ++i) w_new[i] = (z[i] - a3 * w_old[i] - a2 * w[i]) / a1;
        axpy(c_new * eta, w_new, res.x);
        eta = -s_new * eta;

        const double rr = detail::true_relres(s, b, res.x, bnorm, work);
        rep.residual_history.push_back(rr);
        rep.precond_residual_history.push_back(std::abs(eta) / eta0);
        if (detail::stagnating(rep.residual_history, cfg)) rep.stagnated = true;
        if (rr <= cfg.tol) {
            rep.converged = true;
            rep.status = SolveStatus::converged;
            break;
        }
        if (gamma_new == 0.0) {
            // Invariant subspace reached without meeting tol (inconsistent data).
            rep.status = SolveStatus::breakdown;
            break;
        }
        std::swap(v_old, v);
        std::swap(v, v_new);
        std::swap(w_old, w);
        std::swap(w, w_new);
        std::swap(z, z_new);
        gamma_old = gamma;
        gamma = gamma_new;
        c_old = c_cur;
        c_cur = c_new;
        s_old = s_cur;
        s_cur = s_new;
    }
    return finish();
}

/// Right-preconditioned restarted GMRES from a zero initial guess. The
/// preconditioned directions Z = P^{-1} V are stored, so an inexact inner
/// solve does not corrupt the update. The true residual is evaluated every
/// iteration; precond_residual_history holds the least-squares estimate.
inline KrylovResult gmres_restart(const SaddleSystem& s, std::span<const double> b, SaddlePreconditioner& prec,
                                  const KrylovConfig& cfg = {}) {
    cfg.validate();
    const auto t0 = std::chrono::steady_clock::now();
    const std::size_t n = b.size();
    const int m = cfg.restart;
    KrylovResult res;
    res.x.assign(n, 0.0);
    SolveReport& rep = res.report;
    const double bnorm = norm2(b);
    auto finish = [&] {
        rep.iterations = static_cast<int>(rep.residual_history.size()) - 1;
        rep.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        rep.inner_iterations = prec.inner_iterations();
        rep.inner_solves = prec.inner_solves();
        return res;
    };
    if (bnorm == 0.0) {
        rep.residual_history = {0.0};
        rep.precond_residual_history = {0.0};
        rep.converged = true;
        rep.status = SolveStatus::converged;
        return finish();
    }
    rep.residual_history = {1.0};
    rep.precond_residual_history = {1.0};

    std::vector<std::vector<double>> V(m + 1, std::vector<double>(n)), Z(m, std::vector<double>(n));
    std::vector<std::vector<double>> H(m + 1, std::vector<double>(m, 0.0));
    std::vector<double> cs(m), sn(m), g(m + 1), y(m), r(b.begin(), b.end()), w(n), xt(n), work(n);
    int total = 0;
    bool done = false;

    while (!done && total < cfg.max_iterations) {
        const double beta = norm2(r);
        for (std::size_t i = 0; i < n; ++i) V[0][i] = r[i] / beta;
        std::fill(g.begin(), g.end(), 0.0);
        g[0] = beta;
        int j = 0;
        bool lucky = false;
        for (; j < m && total < cfg.max_iterations; ++j) {
            prec(V[j], Z[j]);
            s.apply(Z[j], w);
            const double wnorm0 = norm2(w);
            for (int i = 0; i <= j; ++i) {
                H[i][j] = dot(w, V[i]);
                axpy(-H[i][j], V[i], w);
            }
            // One reorthogonalization pass keeps the basis orthogonal near stagnation.
            for (int i = 0; i <= j; ++i) {
                const double c = dot(w, V[i]);
                H[i][j] += c;
                axpy(-c, V[i], w);
            }
            H[j + 1][j] = norm2(w);
            lucky = H[j + 1][j] <= 1e-14 * wnorm0;
            if (!lucky)
                for (std::size_t i = 0; i < n; ++i) V[j + 1][i] = w[i] / H[j + 1][j];
            for (int i = 0; i < j; ++i) {
                const double t = cs[i] * H[i][j] + sn[i] * H[i + 1][j];
                H[i + 1][j] = -sn[i] * H[i][j] + cs[i] * H[i + 1][j];
                H[i][j] = t;
            }
            const double den = std::hypot(H[j][j], H[j + 1][j]);
            cs[j] = den == 0.0 ? 1.0 : H[j][j] / den;
            sn[j] = den == 0.0 ? 0.0 : H[j + 1][j] / den;
            H[j][j] = den;
            H[j + 1][j] = 0.0;
            g[j + 1] = -sn[j] * g[j];
            g[j] = cs[j] * g[j];
            ++total;

            // Candidate iterate x + Z y for the true residual.
            for (int i = j; i >= 0; --i) {
                double t = g[i];
                for (int k = i + 1; k <= j; ++k) t -= H[i][k] * y[k];
                y[i] = H[i][i] == 0.0 ? 0.0 : t / H[i][i];
            }
            xt = res.x;
            for (int i = 0; i <= j; ++i) axpy(y[i], Z[i], xt);
            const double rr = detail::true_relres(s, b, xt, bnorm, work);
            rep.residual_history.push_back(rr);
            rep.precond_residual_history.push_back(std::abs(g[j + 1]) / bnorm);
            if (detail::stagnating(rep.residual_history, cfg)) rep.stagnated = true;
            if (rr <= cfg.tol) {
                rep.converged = true;
                rep.status = SolveStatus::converged;
                done = true;
                ++j;
                break;
            }
            if (lucky) {
                rep.status = SolveStatus::breakdown;
                done = true;
                ++j;
                break;
            }
        }
        res.x = xt;
        s.apply(res.x, work);
        for (std::size_t i = 0; i < n; ++i) r[i] = b[i] - work[i];
    }
    return finish();
}

/// Discrete solution with the velocity unscaled by 1/mu and pressure
/// normalized to zero |K|-weighted mean.
struct StokesSolution {
    WGField velocity;
    PressureField pressure;
    SolveReport report;
    KrylovMethod method = KrylovMethod::minres;
    PreconditionerKind precond = PreconditionerKind::block_diag;
};

inline void normalize_pressure(std::span<double> p, std::span<const double> mp) {
    double num = 0.0, den = 0.0;
    for (std::size_t k = 0; k < p.size(); ++k) {
        num += p[k] * mp[k];
        den += mp[k];
    }
    const double mean = num / den;
    for (double& v : p) v -= mean;
}

inline StokesSolution make_solution(const SimplicialMesh& mesh, const SaddleSystem& s, const KrylovResult& kr) {
    StokesSolution sol;
    const int nu = s.num_velocity();
    const std::span<const double> x(kr.x);
    sol.velocity = velocity_field(mesh, s.dofs, x.subspan(0, nu), s.boundary_values, 1.0 / s.mu);
    sol.pressure.values.assign(kr.x.begin() + nu, kr.x.end());
    normalize_pressure(sol.pressure.values, s.mp);
    sol.report = kr.report;
    return sol;
}

struct SolverOptions {
    KrylovMethod method = KrylovMethod::minres;
    std::optional<PreconditionerKind> precond;  // defaults by method
    InnerSolveConfig inner;
    KrylovConfig krylov;
    AssemblyOptions assembly;

    PreconditionerKind preconditioner() const { return precond.value_or(default_preconditioner(method)); }
};

inline KrylovResult solve_system(const SaddleSystem& s, const SolverOptions& opt) {
    SaddlePreconditioner prec(s, PreconditionerSpec{opt.preconditioner(), opt.inner});
    const auto b = s.rhs();
    return opt.method == KrylovMethod::minres ? minres(s, b, prec, opt.krylov)
                                              : gmres_restart(s, b, prec, opt.krylov);
}

inline StokesSolution solve_stokes(const SimplicialMesh& mesh, const SaddleSystem& s, const SolverOptions& opt) {
    StokesSolution sol = make_solution(mesh, s, solve_system(s, opt));
    sol.method = opt.method;
    sol.precond = opt.preconditioner();
    return sol;
}

inline StokesSolution solve_stokes(const SimplicialMesh& mesh, const ManufacturedProblem& pb,
                                   const SolverOptions& opt = {}) {
    return solve_stokes(mesh, build_saddle_system(mesh, pb, opt.assembly), opt);
}

inline std::string format_sci(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6e", v);
    return buf;
}

/// CSV with header `iteration,relres`.
inline void write_history_csv(std::ostream& out, const SolveReport& r) {
    out << "iteration,relres\n";
    for (std::size_t k = 0; k < r.residual_history.size(); ++k)
        out << k << ',' << format_sci(r.residual_history[k]) << '\n';
}

inline std::string summary_line(KrylovMethod m, PreconditionerKind p, int num_elements, double h, double mu,
                                const SolveReport& r) {
    return "method=" + to_string(m) + " precond=" + to_string(p) + " N=" + std::to_string(num_elements) +
           " h=" + format_sci(h) + " mu=" + format_sci(mu) + " iters=" + std::to_string(r.iterations) +
           " converged=" + (r.converged ? "true" : "false");
}

}  // namespace wgstokes
