#pragma once

#include <cmath>
#include <numbers>
#include <span>
#include <stdexcept>
#include <vector>

#include "vec.hpp"

namespace wgstokes {

/// Gauss-Legendre rule with n points on [0, 1]; weights sum to 1.
struct LineRule {
    std::vector<double> nodes;
    std::vector<double> weights;
};

inline LineRule gauss_legendre01(int n) {
    if (n < 1) throw std::invalid_argument("gauss_legendre01: n must be >= 1");
    LineRule rule;
    rule.nodes.resize(n);
    rule.weights.resize(n);
    for (int i = 0; i < n; ++i) {
        // Newton iteration on P_n from the Chebyshev-like initial guess.
        double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
        double dp = 1.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = x;
            for (int k = 2; k <= n; ++k) {
                const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            dp = n * (x * p1 - p0) / (x * x - 1.0);
            const double dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-16) break;
        }
        rule.nodes[i] = 0.5 * (1.0 - x);
        rule.weights[i] = 1.0 / ((1.0 - x * x) * dp * dp);  // 2/((1-x^2)P'^2) scaled by 1/2
    }
    return rule;
}

/// Quadrature rule on the reference s-simplex {xi >= 0, sum xi <= 1}.
/// Weights are normalized to sum to 1, so that the integral over a physical
/// simplex K is |K| * sum_q w_q f(x_q).
struct SimplexRule {
    int dim = 0;
    int degree = 0;
    std::vector<Vec> points;  // reference coordinates
    std::vector<double> weights;
};

/// Collapsed (Duffy) tensor Gauss rule exact for polynomials of total degree
/// `degree` on the s-simplex, s in {0, 1, 2, 3}.
inline SimplexRule simplex_rule(int s, int degree) {
    if (s < 0 || s > 3) throw std::invalid_argument("simplex_rule: dimension must be 0..3");
    if (degree < 0) throw std::invalid_argument("simplex_rule: degree must be >= 0");
    SimplexRule rule;
    rule.dim = s;
    rule.degree = degree;
    if (s == 0) {
        rule.points.push_back(Vec{});
        rule.weights.push_back(1.0);
        return rule;
    }
    // In the collapsed coordinate the Jacobian adds s-1 powers of (1 - xi_1).
    const int n = std::max(1, (degree + s) / 2 + ((degree + s) % 2));
    const LineRule g = gauss_legendre01(n);
    double total = 0.0;
    if (s == 1) {
        for (int i = 0; i < n; ++i) {
            rule.points.push_back(Vec{g.nodes[i], 0.0});
            rule.weights.push_back(g.weights[i]);
        }
    } else if (s == 2) {
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) {
                const double a = g.nodes[i], b = g.nodes[j];
                rule.points.push_back(Vec{a, (1.0 - a) * b});
                rule.weights.push_back(g.weights[i] * g.weights[j] * (1.0 - a));
            }
    } else {
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                for (int k = 0; k < n; ++k) {
                    const double a = g.nodes[i], b = g.nodes[j], c = g.nodes[k];
                    rule.points.push_back(Vec{a, (1.0 - a) * b, (1.0 - a) * (1.0 - b) * c});
                    rule.weights.push_back(g.weights[i] * g.weights[j] * g.weights[k] *
                                           (1.0 - a) * (1.0 - a) * (1.0 - b));
                }
    }
    for (double w : rule.weights) total += w;
    for (double& w : rule.weights) w /= total;
    return rule;
}

/// Maps a reference point to the physical simplex spanned by `verts`
/// (s+1 vertices): x = v0 + sum_k xi_k (v_k - v0).
inline Vec map_to_simplex(std::span<const Vec> verts, const Vec& xi) {
    Vec x = verts[0];
    for (std::size_t k = 1; k < verts.size(); ++k) x += xi[k - 1] * (verts[k] - verts[0]);
    return x;
}

/// Integrates f over the simplex with the given vertices; `measure` is its
/// s-dimensional measure. F may return double or Vec.
template <class F>
auto integrate_simplex(std::span<const Vec> verts, double measure, const SimplexRule& rule, F&& f) {
    using R = decltype(f(verts[0]));
    R acc{};
    for (std::size_t q = 0; q < rule.points.size(); ++q) {
        const R v = f(map_to_simplex(verts, rule.points[q]));
        acc = acc + v * rule.weights[q];
    }
    return acc * measure;
}

}  // namespace wgstokes
