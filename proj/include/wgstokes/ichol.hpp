#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <queue>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "sparse.hpp"

namespace wgstokes {

struct ICholBreakdownError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Incomplete Cholesky factor: A + shift*I ~ L L^T. L is stored by rows with
/// the diagonal entry last in each row.
struct ICholFactor {
    SparseMatrix lower;
    double shift = 0.0;
    int attempts = 1;

    void operator()(std::span<const double> r, std::span<double> z) const { apply(r, z); }

    /// z = (L L^T)^{-1} r.
    void apply(std::span<const double> r, std::span<double> z) const {
        const int n = lower.rows();
        const auto& rp = lower.row_ptr();
        const auto& ci = lower.col_idx();
        const auto& v = lower.values();
        std::copy(r.begin(), r.end(), z.begin());
        for (int i = 0; i < n; ++i) {
            double s = z[i];
            const int end = rp[i + 1] - 1;
            for (int p = rp[i]; p < end; ++p) s -= v[p] * z[ci[p]];
            z[i] = s / v[end];
        }
        for (int i = n - 1; i >= 0; --i) {
            const int end = rp[i + 1] - 1;
            z[i] /= v[end];
            const double zi = z[i];
            for (int p = rp[i]; p < end; ++p) z[ci[p]] -= v[p] * zi;
        }
    }
};

namespace detail {

/// One threshold IC attempt on A + sigma I. Returns false on a nonpositive pivot.
inline bool ichol_attempt(const SparseMatrix& a, double droptol, double sigma,
                          std::span<const double> rownorm, SparseMatrix& out) {
    const int n = a.rows();
    std::vector<std::vector<std::pair<int, double>>> cols(n);
    std::vector<int> rp(n + 1, 0);
    std::vector<int> ci;
    std::vector<double> vals;
    std::vector<double> diag(n, 0.0);
    std::vector<double> w(n, 0.0);
    std::vector<char> marked(n, 0);
    std::priority_queue<int, std::vector<int>, std::greater<>> heap;
    std::vector<std::pair<int, double>> lrow;

    for (int i = 0; i < n; ++i) {
        double d = sigma;
        for (int p = a.row_ptr()[i]; p < a.row_ptr()[i + 1]; ++p) {
            const int c = a.col_idx()[p];
            if (c < i) {
                w[c] = a.values()[p];
                marked[c] = 1;
                heap.push(c);
            } else if (c == i) {
                d += a.values()[p];
            }
        }
        lrow.clear();
        while (!heap.empty()) {
            const int k = heap.top();
            heap.pop();
            const double lik = w[k] / diag[k];
            w[k] = 0.0;
            marked[k] = 0;
            if (std::abs(lik) < droptol * rownorm[i]) continue;
            lrow.emplace_back(k, lik);
            for (const auto& [j, ljk] : cols[k]) {
                if (!marked[j]) {
                    marked[j] = 1;
                    heap.push(j);
                }
                w[j] -= lik * ljk;
            }
            d -= lik * lik;
        }
        if (!(d > 0.0) || !std::isfinite(d)) return false;
        diag[i] = std::sqrt(d);
        std::sort(lrow.begin(), lrow.end());
        for (const auto& [k, lik] : lrow) {
            cols[k].emplace_back(i, lik);
            ci.push_back(k);
            vals.push_back(lik);
        }
        ci.push_back(i);
        vals.push_back(diag[i]);
        rp[i + 1] = static_cast<int>(ci.size());
    }
    out = SparseMatrix(n, n, std::move(rp), std::move(ci), std::move(vals));
    return true;
}

}  // namespace detail

/// Threshold incomplete Cholesky. Row-wise (up-looking) elimination; an
/// entry l_ij is dropped when |l_ij| < droptol * ||A(i,:)||_2. On a
/// nonpositive pivot the factorization restarts on A + sigma I with
/// sigma <- max(2 sigma, 1e-3 mean(diag A)), at most 20 times.
inline ICholFactor ichol_threshold(const SparseMatrix& a, double droptol) {
    if (a.rows() != a.cols()) throw std::invalid_argument("ichol_threshold: matrix must be square");
    if (droptol < 0.0) throw std::invalid_argument("ichol_threshold: droptol must be >= 0");
    const int n = a.rows();
    double amax = 0.0;
    for (double v : a.values()) amax = std::max(amax, std::abs(v));
    const SparseMatrix at = a.transpose();
    for (int r = 0; r < n; ++r)
        for (int p = a.row_ptr()[r]; p < a.row_ptr()[r + 1]; ++p)
            if (std::abs(a.values()[p] - at.at(r, a.col_idx()[p])) > 1e-12 * amax)
                throw std::invalid_argument("ichol_threshold: matrix is not symmetric");

    const std::vector<double> d = a.diagonal();
    double mean_diag = 0.0;
    for (double x : d) {
        if (!(x > 0.0)) throw std::invalid_argument("ichol_threshold: nonpositive diagonal entry");
        mean_diag += x;
    }
    mean_diag /= std::max(n, 1);

    std::vector<double> rownorm(n, 0.0);
    for (int r = 0; r < n; ++r) {
        double s = 0.0;
        for (int p = a.row_ptr()[r]; p < a.row_ptr()[r + 1]; ++p) s += a.values()[p] * a.values()[p];
        rownorm[r] = std::sqrt(s);
    }

    ICholFactor f;
    double sigma = 0.0;
    for (int attempt = 0; attempt <= 20; ++attempt) {
        if (detail::ichol_attempt(a, droptol, sigma, rownorm, f.lower)) {
            f.shift = sigma;
            f.attempts = attempt + 1;
            return f;
        }
        sigma = std::max(2.0 * sigma, 1e-3 * mean_diag);
    }
    throw ICholBreakdownError("ichol_threshold: breakdown after 20 shifted attempts");
}

}  // namespace wgstokes
