#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "wgstokes/quadrature.hpp"

using namespace wgstokes;

namespace {

double fact(int n) { return std::tgamma(n + 1.0); }

// Dirichlet integral over the reference s-simplex, divided by its volume 1/s!.
double simplex_monomial_mean(int s, int a, int b, int c) {
    const int e[3] = {a, b, c};
    double num = 1.0;
    int total = 0;
    for (int i = 0; i < s; ++i) {
        num *= fact(e[i]);
        total += e[i];
    }
    return num / fact(total + s) * fact(s);
}

}  // namespace

TEST(GaussLegendre, WeightsSumToOne) {
    for (int n = 1; n <= 12; ++n) {
        const LineRule r = gauss_legendre01(n);
        EXPECT_NEAR(std::accumulate(r.weights.begin(), r.weights.end(), 0.0), 1.0, 1e-14);
    }
}

TEST(GaussLegendre, ExactForDegree2nMinus1) {
    for (int n = 1; n <= 8; ++n) {
        const LineRule r = gauss_legendre01(n);
        for (int k = 0; k <= 2 * n - 1; ++k) {
            double s = 0.0;
            for (int q = 0; q < n; ++q) s += r.weights[q] * std::pow(r.nodes[q], k);
            EXPECT_NEAR(s, 1.0 / (k + 1), 1e-14) << "n=" << n << " k=" << k;
        }
    }
}

TEST(GaussLegendre, RejectsZeroPoints) { EXPECT_THROW(gauss_legendre01(0), std::invalid_argument); }

class SimplexRuleExactness : public ::testing::TestWithParam<std::pair<int, int>> {};

TEST_P(SimplexRuleExactness, IntegratesMonomialsExactly) {
    const auto [s, degree] = GetParam();
    const SimplexRule rule = simplex_rule(s, degree);
    for (int a = 0; a <= degree; ++a)
        for (int b = 0; b <= (s >= 2 ? degree - a : 0); ++b)
            for (int c = 0; c <= (s >= 3 ? degree - a - b : 0); ++c) {
                double q = 0.0;
                for (std::size_t i = 0; i < rule.points.size(); ++i) {
                    const Vec& x = rule.points[i];
                    q += rule.weights[i] * std::pow(x[0], a) * std::pow(x[1], b) * std::pow(x[2], c);
                }
                EXPECT_NEAR(q, simplex_monomial_mean(s, a, b, c), 1e-13)
                    << "s=" << s << " exponents " << a << b << c;
            }
}

INSTANTIATE_TEST_SUITE_P(Degrees, SimplexRuleExactness,
                         ::testing::Values(std::pair{1, 0}, std::pair{1, 3}, std::pair{1, 7}, std::pair{2, 1},
                                           std::pair{2, 2}, std::pair{2, 4}, std::pair{2, 9}, std::pair{3, 2},
                                           std::pair{3, 4}, std::pair{3, 6}));

TEST(SimplexRule, PointRuleForVertices) {
    const SimplexRule r = simplex_rule(0, 5);
    ASSERT_EQ(r.points.size(), 1u);
    EXPECT_DOUBLE_EQ(r.weights[0], 1.0);
}

TEST(SimplexRule, RejectsBadArguments) {
    EXPECT_THROW(simplex_rule(4, 2), std::invalid_argument);
    EXPECT_THROW(simplex_rule(2, -1), std::invalid_argument);
}

TEST(IntegrateSimplex, PhysicalTriangleArea) {
    const Vec v[3] = {{1, 1}, {3, 1}, {1, 2}};
    const double area = 1.0;
    const double q = integrate_simplex(std::span<const Vec>(v, 3), area, simplex_rule(2, 2),
                                       [](const Vec& x) { return x[0] * x[1]; });
    // \int over the triangle of x y: exact by hand, 1/3 * (sum of vertex-pair products) formula
    // for degree 2: |K|/12 * (sum_i x_i y_i + (sum x)(sum y))
    const double sx = 5, sy = 4, sxy = 1 + 3 + 2;
    EXPECT_NEAR(q, area / 12.0 * (sxy + sx * sy), 1e-14);
}
