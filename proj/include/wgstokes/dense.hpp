#pragma once

#include <Eigen/Dense>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "sparse.hpp"

namespace wgstokes {

/// Largest dense problem the verification helpers accept.
inline constexpr int kDenseGuard = 2000;

struct DenseScaleError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct NotPositiveDefiniteError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

inline Eigen::MatrixXd to_dense(const SparseMatrix& a) {
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(a.rows(), a.cols());
    for (int r = 0; r < a.rows(); ++r)
        for (int p = a.row_ptr()[r]; p < a.row_ptr()[r + 1]; ++p) m(r, a.col_idx()[p]) = a.values()[p];
    return m;
}

inline void check_dense_guard(Eigen::Index n, const char* what) {
    if (n > kDenseGuard)
        throw DenseScaleError(std::string(what) + ": dimension " + std::to_string(n) +
                              " exceeds the dense verification guard of " +
                              std::to_string(kDenseGuard));
}

/// Ascending eigenvalues of a symmetric matrix (Householder tridiagonalization
/// plus implicit QR, via Eigen).
inline std::vector<double> dense_eig_sym(const Eigen::MatrixXd& a) {
    check_dense_guard(a.rows(), "dense_eig_sym");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a, Eigen::EigenvaluesOnly);
    if (es.info() != Eigen::Success) throw std::runtime_error("dense_eig_sym: no convergence");
    const auto& ev = es.eigenvalues();
    return {ev.data(), ev.data() + ev.size()};
}

/// Ascending eigenvalues of A q = lambda B q with B SPD, via the Cholesky
/// transform L^{-1} A L^{-T} where B = L L^T.
inline std::vector<double> dense_geig_sym(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
    check_dense_guard(a.rows(), "dense_geig_sym");
    if (a.rows() != b.rows() || a.cols() != b.cols() || a.rows() != a.cols())
        throw std::invalid_argument("dense_geig_sym: dimension mismatch");
    Eigen::LLT<Eigen::MatrixXd> llt(b);
    if (llt.info() != Eigen::Success) throw NotPositiveDefiniteError("dense_geig_sym: B is not SPD");
    const Eigen::MatrixXd l = llt.matrixL();
    Eigen::MatrixXd c = l.triangularView<Eigen::Lower>().solve(a);
    c = l.triangularView<Eigen::Lower>().solve(c.transpose()).transpose();
    c = 0.5 * (c + c.transpose());
    return dense_eig_sym(c);
}

/// Dense Cholesky factorization of a sparse SPD matrix, used as the exact
/// inner solver on small problems.
class DenseCholesky {
public:
    explicit DenseCholesky(const SparseMatrix& a) : llt_(to_dense(a)) {
        if (llt_.info() != Eigen::Success) throw NotPositiveDefiniteError("DenseCholesky: matrix is not SPD");
    }

    void solve(std::span<const double> b, std::span<double> x) const {
        Eigen::Map<const Eigen::VectorXd> bb(b.data(), static_cast<Eigen::Index>(b.size()));
        Eigen::Map<Eigen::VectorXd> xx(x.data(), static_cast<Eigen::Index>(x.size()));
        xx = llt_.solve(bb);
    }

    Eigen::MatrixXd matrix_l() const { return llt_.matrixL(); }

private:
    Eigen::LLT<Eigen::MatrixXd> llt_;
};

}  // namespace wgstokes
