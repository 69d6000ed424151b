#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "wgstokes/assembly.hpp"
#include "wgstokes/dense.hpp"
#include "wgstokes/ichol.hpp"
#include "wgstokes/pcg.hpp"
#include "wgstokes/sparse.hpp"

using namespace wgstokes;

namespace {

SparseMatrix random_sparse(int rows, int cols, double density, unsigned seed) {
    std::mt19937 rng(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0), coin(0.0, 1.0);
    std::vector<Triplet> t;
    for (int i = 0; i < rows; ++i)
        for (int j = 0; j < cols; ++j)
            if (coin(rng) < density) t.push_back({i, j, u(rng)});
    return SparseMatrix::from_triplets(rows, cols, std::move(t));
}

SparseMatrix tridiag(int n) {
    std::vector<Triplet> t;
    for (int i = 0; i < n; ++i) {
        t.push_back({i, i, 2.0});
        if (i > 0) t.push_back({i, i - 1, -1.0});
        if (i + 1 < n) t.push_back({i, i + 1, -1.0});
    }
    return SparseMatrix::from_triplets(n, n, std::move(t));
}

std::vector<double> random_vector(int n, unsigned seed) {
    std::mt19937 rng(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::vector<double> v(n);
    for (double& x : v) x = u(rng);
    return v;
}

}  // namespace

TEST(SparseMatrix, TripletsSumDuplicatesAndDropZeros) {
    const SparseMatrix a = SparseMatrix::from_triplets(2, 3, {{0, 2, 1.0}, {0, 0, 2.0}, {0, 2, 3.0}, {1, 1, 1.0},
                                                              {1, 1, -1.0}});
    EXPECT_EQ(a.nnz(), 2u);
    EXPECT_EQ(a.at(0, 2), 4.0);
    EXPECT_EQ(a.at(0, 0), 2.0);
    EXPECT_EQ(a.at(1, 1), 0.0);
    EXPECT_EQ(a.col_idx(), (std::vector<int>{0, 2}));
    EXPECT_THROW(SparseMatrix::from_triplets(2, 2, {{2, 0, 1.0}}), std::out_of_range);
}

TEST(Spmv, IdentityAndColumns) {
    const auto x = random_vector(7, 1);
    EXPECT_EQ(spmv(SparseMatrix::identity(7), x), x);
    const SparseMatrix a = random_sparse(5, 7, 0.5, 2);
    const Eigen::MatrixXd d = to_dense(a);
    for (int j = 0; j < 7; ++j) {
        std::vector<double> e(7, 0.0);
        e[j] = 1.0;
        const auto col = spmv(a, e);
        for (int i = 0; i < 5; ++i) EXPECT_EQ(col[i], d(i, j));
    }
}

TEST(Spmv, MatchesDenseOracle) {
    const SparseMatrix a = random_sparse(20, 20, 0.3, 3);
    const Eigen::MatrixXd d = to_dense(a);
    const auto x = random_vector(20, 4);
    const auto y = spmv(a, x);
    const auto yt = spmv_transpose(a, x);
    const Eigen::VectorXd xe = Eigen::Map<const Eigen::VectorXd>(x.data(), 20);
    const Eigen::VectorXd ye = d * xe, yte = d.transpose() * xe;
    for (int i = 0; i < 20; ++i) {
        EXPECT_NEAR(y[i], ye[i], 1e-13);
        EXPECT_NEAR(yt[i], yte[i], 1e-13);
    }
    const auto at = a.transpose();
    EXPECT_EQ(spmv(at, x), yt);
}

TEST(Spmv, DimensionMismatchAndDeterminism) {
    const SparseMatrix a = random_sparse(6, 4, 0.5, 5);
    EXPECT_THROW(spmv(a, random_vector(5, 1)), std::invalid_argument);
    EXPECT_THROW(spmv_transpose(a, random_vector(4, 1)), std::invalid_argument);
    const auto x = random_vector(4, 6);
    EXPECT_EQ(spmv(a, x), spmv(a, x));
}

TEST(MatrixMarket, RoundTrip) {
    const SparseMatrix a = random_sparse(9, 6, 0.4, 7);
    std::stringstream ss;
    write_matrix_market(ss, a);
    const SparseMatrix b = read_matrix_market(ss);
    EXPECT_EQ(b.rows(), 9);
    EXPECT_EQ(b.cols(), 6);
    EXPECT_EQ(b.col_idx(), a.col_idx());
    EXPECT_EQ(b.values(), a.values());
}

TEST(MatrixMarket, ReadsSymmetricStorage) {
    std::stringstream ss("%%MatrixMarket matrix coordinate real symmetric\n3 3 4\n1 1 2\n2 1 -1\n2 2 2\n3 3 1\n");
    const SparseMatrix a = read_matrix_market(ss);
    EXPECT_EQ(a.at(0, 1), -1.0);
    EXPECT_EQ(a.at(1, 0), -1.0);
    EXPECT_TRUE(a.is_symmetric());
}

TEST(IChol, DiagonalMatrix) {
    const SparseMatrix a = SparseMatrix::from_triplets(3, 3, {{0, 0, 4.0}, {1, 1, 9.0}, {2, 2, 2.0}});
    const ICholFactor f = ichol_threshold(a, 1e-3);
    EXPECT_EQ(f.shift, 0.0);
    EXPECT_NEAR(f.lower.at(0, 0), 2.0, 1e-15);
    EXPECT_NEAR(f.lower.at(1, 1), 3.0, 1e-15);
    EXPECT_NEAR(f.lower.at(2, 2), std::sqrt(2.0), 1e-15);
}

TEST(IChol, TridiagonalMatchesDenseCholesky) {
    const SparseMatrix a = tridiag(10);
    const ICholFactor f = ichol_threshold(a, 0.0);
    const Eigen::MatrixXd l = DenseCholesky(a).matrix_l();
    const Eigen::MatrixXd li = to_dense(f.lower);
    EXPECT_LT((l - li).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(IChol, RejectsNonSymmetricInput) {
    const SparseMatrix a = SparseMatrix::from_triplets(2, 2, {{0, 0, 1.0}, {0, 1, 0.5}, {1, 1, 1.0}});
    EXPECT_THROW(ichol_threshold(a, 1e-3), std::invalid_argument);
}

TEST(IChol, ShiftsOnBreakdown) {
    // Symmetric with positive diagonal but indefinite: the plain factorization breaks down.
    const SparseMatrix a = SparseMatrix::from_triplets(2, 2, {{0, 0, 1.0}, {0, 1, 2.0}, {1, 0, 2.0}, {1, 1, 1.0}});
    const ICholFactor f = ichol_threshold(a, 0.0);
    EXPECT_GT(f.shift, 0.0);
    EXPECT_GT(f.attempts, 1);
    for (int i = 0; i < 2; ++i) EXPECT_GT(f.lower.at(i, i), 0.0);
}

TEST(Pcg, TrivialCases) {
    const SparseMatrix a = tridiag(5);
    const std::vector<double> zero(5, 0.0);
    const PcgResult r0 = pcg(a, zero, PcgConfig{});
    EXPECT_EQ(r0.report.iterations, 0);
    EXPECT_EQ(r0.x, zero);
    const auto b = random_vector(5, 8);
    const PcgResult ri = pcg(SparseMatrix::identity(5), b, PcgConfig{});
    EXPECT_EQ(ri.report.iterations, 1);
    EXPECT_TRUE(ri.report.converged);
}

TEST(Pcg, DetectsIndefiniteMatrix) {
    const SparseMatrix a = SparseMatrix::from_triplets(2, 2, {{0, 0, 1.0}, {1, 1, -1.0}});
    const PcgResult r = pcg(a, std::vector<double>{0.0, 1.0}, PcgConfig{});
    EXPECT_EQ(r.report.status, SolveStatus::indefinite);
    EXPECT_FALSE(r.report.converged);
}

class PcgOnWgLaplacian : public ::testing::Test {
protected:
    SparseMatrix a = assemble_A(generate_structured_tri(8));
    std::vector<double> b = random_vector(a.rows(), 9);
};

TEST_F(PcgOnWgLaplacian, ReachesToleranceAndTrueResidualMatches) {
    const ICholFactor ic = ichol_threshold(a, 1e-3);
    const PcgResult r = pcg(a, b, ic, PcgConfig{1e-10, 500});
    ASSERT_TRUE(r.report.converged);
    auto ax = spmv(a, r.x);
    double res = 0.0;
    for (std::size_t i = 0; i < b.size(); ++i) res += (b[i] - ax[i]) * (b[i] - ax[i]);
    const double true_rel = std::sqrt(res) / norm2(b);
    EXPECT_LE(true_rel, 1e-10 * (1.0 + 1e-6));
    EXPECT_NEAR(true_rel, r.report.residual_history.back(), 1e-8 * r.report.residual_history.back() + 1e-16);
    EXPECT_EQ(static_cast<int>(r.report.residual_history.size()), r.report.iterations + 1);
}

TEST_F(PcgOnWgLaplacian, IncompleteCholeskyReducesIterations) {
    const SparseMatrix a4 = assemble_A(generate_structured_tri(4));
    const auto b4 = random_vector(a4.rows(), 10);
    const int plain = pcg(a4, b4, PcgConfig{1e-10, 2000}).report.iterations;
    const int ic = pcg(a4, b4, ichol_threshold(a4, 1e-3), PcgConfig{1e-10, 2000}).report.iterations;
    EXPECT_LT(ic, plain);
}

TEST_F(PcgOnWgLaplacian, PreconditionedResidualNormIsNonincreasing) {
    const PcgResult r = pcg(a, b, ichol_threshold(a, 1e-3), PcgConfig{1e-10, 500});
    const auto& h = r.report.precond_residual_history;
    int increases = 0;
    for (std::size_t k = 1; k < h.size(); ++k)
        if (h[k] > h[k - 1] * (1.0 + 1e-12)) ++increases;
    EXPECT_EQ(increases, 0);
}

TEST(InnerSolver, DenseAndIterativeAgree) {
    const SparseMatrix a = assemble_A(generate_structured_tri(6));
    const auto b = random_vector(a.rows(), 11);
    InnerSolver dense(a, InnerSolveConfig{InnerMethod::dense_cholesky});
    InnerSolver it(a, InnerSolveConfig{InnerMethod::pcg, 1e-12, 500, 1e-3});
    std::vector<double> x1(b.size()), x2(b.size());
    dense.solve(b, x1);
    it.solve(b, x2);
    EXPECT_TRUE(dense.is_direct());
    EXPECT_FALSE(it.is_direct());
    EXPECT_GT(it.iterations(), 0);
    for (std::size_t i = 0; i < b.size(); ++i) EXPECT_NEAR(x1[i], x2[i], 1e-8);
}

TEST(InnerSolver, ConfigValidation) {
    EXPECT_THROW(InnerSolveConfig({InnerMethod::pcg, 1.5}).validate(), std::invalid_argument);
    EXPECT_THROW(InnerSolveConfig({InnerMethod::pcg, 1e-8, 0}).validate(), std::invalid_argument);
    EXPECT_EQ(parse_inner_method("auto"), InnerMethod::automatic);
    EXPECT_THROW(parse_inner_method("lu"), std::invalid_argument);
}

TEST(DenseEig, Examples) {
    Eigen::MatrixXd d = Eigen::Vector3d(3, 1, 2).asDiagonal();
    EXPECT_EQ(dense_eig_sym(d), (std::vector<double>{1, 2, 3}));
    const auto g = dense_geig_sym(Eigen::MatrixXd::Identity(4, 4), 2.0 * Eigen::MatrixXd::Identity(4, 4));
    for (double x : g) EXPECT_NEAR(x, 0.5, 1e-15);
    EXPECT_THROW(dense_geig_sym(Eigen::MatrixXd::Identity(2, 2), -Eigen::MatrixXd::Identity(2, 2)),
                 NotPositiveDefiniteError);
}

TEST(DenseEig, TraceIdentity) {
    std::mt19937 rng(12);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    Eigen::MatrixXd a(10, 10);
    for (int i = 0; i < 10; ++i)
        for (int j = 0; j < 10; ++j) a(i, j) = u(rng);
    a = 0.5 * (a + a.transpose()).eval();
    const auto ev = dense_eig_sym(a);
    double s = 0.0;
    for (double x : ev) s += x;
    EXPECT_NEAR(s, a.trace(), 1e-11);
    EXPECT_TRUE(std::is_sorted(ev.begin(), ev.end()));
}

TEST(DenseEig, ScaleGuard) {
    EXPECT_THROW(check_dense_guard(kDenseGuard + 1, "test"), DenseScaleError);
    EXPECT_NO_THROW(check_dense_guard(kDenseGuard, "test"));
}
