#include <gtest/gtest.h>

#include <random>

#include "wgstokes/expression.hpp"
#include "wgstokes/problem.hpp"

using namespace wgstokes;

TEST(Expression, ArithmeticAndFunctions) {
    const Vec p{0.5, 2.0, -1.0};
    EXPECT_DOUBLE_EQ(Expression("1 + 2*3")(p), 7.0);
    EXPECT_DOUBLE_EQ(Expression("-x^2")(p), -0.25);
    EXPECT_DOUBLE_EQ(Expression("2^3^2")(p), 512.0);
    EXPECT_DOUBLE_EQ(Expression("(x + y) / z")(p), -2.5);
    EXPECT_DOUBLE_EQ(Expression("exp(x) * sin(y) + cos(pi*z)")(p), std::exp(0.5) * std::sin(2.0) - 1.0);
    EXPECT_DOUBLE_EQ(Expression("sqrt(y*8)")(p), 4.0);
    EXPECT_DOUBLE_EQ(Expression("1e-3 * 2.5E2")(p), 0.25);
}

TEST(Expression, RejectsMalformedInput) {
    for (const char* bad : {"", "1 +", "sin(x", "foo(x)", "x y", "2 * * 3", "w + 1", ")"})
        EXPECT_THROW(Expression{bad}, ExpressionError) << bad;
}

class BuiltinForcing : public ::testing::TestWithParam<int> {};

TEST_P(BuiltinForcing, MatchesStrongFormByFiniteDifferences) {
    const int dim = GetParam();
    std::mt19937 rng(21);
    std::uniform_real_distribution<double> u(0.05, 0.95);
    for (double mu : {1.0, 1e-4, 3.7}) {
        const ManufacturedProblem pb = dim == 2 ? stokes2d_exp(mu) : stokes3d_trig(mu);
        EXPECT_FALSE(pb.f_from_finite_differences);
        for (int t = 0; t < 20; ++t) {
            Vec x;
            for (int c = 0; c < dim; ++c) x[c] = u(rng);
            const Vec fd = detail::fd_strong_form(pb.u, pb.p, mu, dim, x, 1e-3);
            EXPECT_NEAR(norm(pb.f(x) - fd), 0.0, 1e-4 * (1.0 + norm(fd)));
            // Divergence-free and analytic Jacobian.
            const auto j = pb.grad_u(x);
            const auto jfd = detail::fd_gradient(pb.u, dim, x, 1e-5);
            double div = 0.0;
            for (int r = 0; r < dim; ++r) {
                div += j[r][r];
                EXPECT_NEAR(norm(j[r] - jfd[r]), 0.0, 1e-8);
            }
            EXPECT_NEAR(div, 0.0, 1e-12);
        }
    }
}

INSTANTIATE_TEST_SUITE_P(Dims, BuiltinForcing, ::testing::Values(2, 3));

TEST(BuiltinProblems, SatisfyCompatibility) {
    EXPECT_NO_THROW(check_compatibility(generate_structured_tri(4), stokes2d_exp(1.0)));
    EXPECT_NO_THROW(check_compatibility(generate_structured_tet(2), stokes3d_trig(1.0)));
}

TEST(CustomProblem, DerivesForcingWhenAbsent) {
    const ManufacturedProblem a = custom_problem(2, {"-exp(x)*(y*cos(y)+sin(y))", "exp(x)*y*sin(y)"},
                                                 "2*exp(x)*sin(y)", std::nullopt, 0.5);
    const ManufacturedProblem b = stokes2d_exp(0.5);
    EXPECT_TRUE(a.f_from_finite_differences);
    for (const Vec& x : {Vec{0.3, 0.4}, Vec{0.9, 0.1}}) {
        EXPECT_NEAR(norm(a.u(x) - b.u(x)), 0.0, 1e-14);
        EXPECT_NEAR(norm(a.f(x) - b.f(x)), 0.0, 1e-5);
    }
}

TEST(CustomProblem, UsesGivenForcing) {
    const ManufacturedProblem a = custom_problem(2, {"0", "0"}, "x", std::vector<std::string>{"1", "0"}, 1.0);
    EXPECT_FALSE(a.f_from_finite_differences);
    EXPECT_DOUBLE_EQ(a.f(Vec{0.2, 0.3})[0], 1.0);
}

TEST(CustomProblem, ValidatesShape) {
    EXPECT_THROW(custom_problem(2, {"x"}, "0", std::nullopt, 1.0), std::invalid_argument);
    EXPECT_THROW(custom_problem(4, {"x", "y", "z", "x"}, "0", std::nullopt, 1.0), std::invalid_argument);
}

TEST(Compatibility, RejectsNetOutflow) {
    const ManufacturedProblem pb = custom_problem(2, {"x", "0"}, "0", std::vector<std::string>{"0", "0"}, 1.0);
    EXPECT_NEAR(boundary_flux(generate_structured_tri(3), pb.g), 1.0, 1e-12);
    EXPECT_THROW(check_compatibility(generate_structured_tri(3), pb), IncompatibleBoundaryDataError);
}
