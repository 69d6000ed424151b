#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace wgstokes {

struct Triplet {
    int row;
    int col;
    double value;
};

/// Compressed sparse row matrix of doubles. Column indices are sorted and
/// unique within each row; no explicit zeros are stored.
class SparseMatrix {
public:
    SparseMatrix() = default;

    SparseMatrix(int rows, int cols, std::vector<int> row_ptr, std::vector<int> col_idx,
                 std::vector<double> values)
        : rows_(rows), cols_(cols), row_ptr_(std::move(row_ptr)), col_idx_(std::move(col_idx)),
          values_(std::move(values)) {}

    /// Builds from triplets; duplicates are summed in insertion order so the
    /// result is deterministic, and entries that sum to zero are dropped.
    static SparseMatrix from_triplets(int rows, int cols, std::vector<Triplet> t) {
        for (const auto& e : t)
            if (e.row < 0 || e.row >= rows || e.col < 0 || e.col >= cols)
                throw std::out_of_range("triplet index out of range");
        std::stable_sort(t.begin(), t.end(), [](const Triplet& a, const Triplet& b) {
            return a.row != b.row ? a.row < b.row : a.col < b.col;
        });
        std::vector<int> rp(rows + 1, 0);
        std::vector<int> ci;
        std::vector<double> v;
        ci.reserve(t.size());
        v.reserve(t.size());
        std::size_t i = 0;
        while (i < t.size()) {
            const int r = t[i].row, c = t[i].col;
            double s = 0.0;
            while (i < t.size() && t[i].row == r && t[i].col == c) s += t[i++].value;
            if (s != 0.0) {
                ci.push_back(c);
                v.push_back(s);
                ++rp[r + 1];
            }
        }
        std::partial_sum(rp.begin(), rp.end(), rp.begin());
        return SparseMatrix(rows, cols, std::move(rp), std::move(ci), std::move(v));
    }

    static SparseMatrix identity(int n) {
        std::vector<int> rp(n + 1), ci(n);
        std::iota(rp.begin(), rp.end(), 0);
        std::iota(ci.begin(), ci.end(), 0);
        return SparseMatrix(n, n, std::move(rp), std::move(ci), std::vector<double>(n, 1.0));
    }

    int rows() const { return rows_; }
    int cols() const { return cols_; }
    std::size_t nnz() const { return values_.size(); }
    const std::vector<int>& row_ptr() const { return row_ptr_; }
    const std::vector<int>& col_idx() const { return col_idx_; }
    const std::vector<double>& values() const { return values_; }

    double at(int r, int c) const {
        const auto b = col_idx_.begin() + row_ptr_[r], e = col_idx_.begin() + row_ptr_[r + 1];
        const auto it = std::lower_bound(b, e, c);
        return (it != e && *it == c) ? values_[it - col_idx_.begin()] : 0.0;
    }

    std::vector<double> diagonal() const {
        std::vector<double> d(std::min(rows_, cols_), 0.0);
        for (int r = 0; r < static_cast<int>(d.size()); ++r) d[r] = at(r, r);
        return d;
    }

    SparseMatrix transpose() const {
        std::vector<int> rp(cols_ + 1, 0);
        for (int c : col_idx_) ++rp[c + 1];
        std::partial_sum(rp.begin(), rp.end(), rp.begin());
        std::vector<int> ci(nnz()), pos(rp.begin(), rp.end() - 1);
        std::vector<double> v(nnz());
        for (int r = 0; r < rows_; ++r)
            for (int p = row_ptr_[r]; p < row_ptr_[r + 1]; ++p) {
                const int q = pos[col_idx_[p]]++;
                ci[q] = r;
                v[q] = values_[p];
            }
        return SparseMatrix(cols_, rows_, std::move(rp), std::move(ci), std::move(v));
    }

    bool is_symmetric() const {
        if (rows_ != cols_) return false;
        const SparseMatrix t = transpose();
        return t.row_ptr_ == row_ptr_ && t.col_idx_ == col_idx_ && t.values_ == values_;
    }

private:
    int rows_ = 0;
    int cols_ = 0;
    std::vector<int> row_ptr_{0};
    std::vector<int> col_idx_;
    std::vector<double> values_;
};

/// y = A x (overwrites y).
inline void spmv(const SparseMatrix& a, std::span<const double> x, std::span<double> y) {
    if (static_cast<int>(x.size()) != a.cols() || static_cast<int>(y.size()) != a.rows())
        throw std::invalid_argument("spmv: dimension mismatch");
    const auto& rp = a.row_ptr();
    const auto& ci = a.col_idx();
    const auto& v = a.values();
    for (int r = 0; r < a.rows(); ++r) {
        double s = 0.0;
        for (int p = rp[r]; p < rp[r + 1]; ++p) s += v[p] * x[ci[p]];
        y[r] = s;
    }
}

inline std::vector<double> spmv(const SparseMatrix& a, std::span<const double> x) {
    std::vector<double> y(a.rows());
    spmv(a, x, y);
    return y;
}

/// y = A^T x (overwrites y).
inline void spmv_transpose(const SparseMatrix& a, std::span<const double> x, std::span<double> y) {
    if (static_cast<int>(x.size()) != a.rows() || static_cast<int>(y.size()) != a.cols())
        throw std::invalid_argument("spmv_transpose: dimension mismatch");
    std::fill(y.begin(), y.end(), 0.0);
    const auto& rp = a.row_ptr();
    const auto& ci = a.col_idx();
    const auto& v = a.values();
    for (int r = 0; r < a.rows(); ++r) {
        const double xr = x[r];
        for (int p = rp[r]; p < rp[r + 1]; ++p) y[ci[p]] += v[p] * xr;
    }
}

inline std::vector<double> spmv_transpose(const SparseMatrix& a, std::span<const double> x) {
    std::vector<double> y(a.cols());
    spmv_transpose(a, x, y);
    return y;
}

// Small BLAS-1 helpers shared by the iterative solvers.
inline double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}
inline double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }
inline void axpy(double alpha, std::span<const double> x, std::span<double> y) {
    for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

// Matrix Market I/O.

inline void write_matrix_market(std::ostream& out, const SparseMatrix& a) {
    out << "%%MatrixMarket matrix coordinate real general\n";
    out << a.rows() << ' ' << a.cols() << ' ' << a.nnz() << '\n';
    char buf[64];
    for (int r = 0; r < a.rows(); ++r)
        for (int p = a.row_ptr()[r]; p < a.row_ptr()[r + 1]; ++p) {
            std::snprintf(buf, sizeof buf, "%.17g", a.values()[p]);
            out << r + 1 << ' ' << a.col_idx()[p] + 1 << ' ' << buf << '\n';
        }
}

inline void write_matrix_market(std::ostream& out, std::span<const double> v) {
    out << "%%MatrixMarket matrix array real general\n";
    out << v.size() << " 1\n";
    char buf[64];
    for (double x : v) {
        std::snprintf(buf, sizeof buf, "%.17g", x);
        out << buf << '\n';
    }
}

inline void write_matrix_market(const std::string& path, const SparseMatrix& a) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write '" + path + "'");
    write_matrix_market(out, a);
}

inline void write_matrix_market(const std::string& path, std::span<const double> v) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write '" + path + "'");
    write_matrix_market(out, v);
}

/// Reads a coordinate-format Matrix Market file (general or symmetric, real
/// or integer or pattern).
inline SparseMatrix read_matrix_market(std::istream& in) {
    std::string line;
    if (!std::getline(in, line) || line.rfind("%%MatrixMarket", 0) != 0)
        throw std::runtime_error("matrix market: missing banner");
    std::istringstream banner(line);
    std::string mm, obj, fmt, field, sym;
    banner >> mm >> obj >> fmt >> field >> sym;
    if (obj != "matrix" || fmt != "coordinate")
        throw std::runtime_error("matrix market: only coordinate matrices are supported");
    if (field == "complex") throw std::runtime_error("matrix market: complex not supported");
    const bool pattern = field == "pattern";
    const bool symmetric = sym == "symmetric";
    while (std::getline(in, line) && (line.empty() || line[0] == '%')) {
    }
    std::istringstream hdr(line);
    int rows = 0, cols = 0;
    long nz = 0;
    if (!(hdr >> rows >> cols >> nz)) throw std::runtime_error("matrix market: bad size line");
    std::vector<Triplet> t;
    t.reserve(symmetric ? 2 * nz : nz);
    for (long k = 0; k < nz; ++k) {
        int r, c;
        double v = 1.0;
        if (!(in >> r >> c)) throw std::runtime_error("matrix market: truncated entries");
        if (!pattern && !(in >> v)) throw std::runtime_error("matrix market: truncated entries");
        t.push_back({r - 1, c - 1, v});
        if (symmetric && r != c) t.push_back({c - 1, r - 1, v});
    }
    return SparseMatrix::from_triplets(rows, cols, std::move(t));
}

inline SparseMatrix read_matrix_market(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open '" + path + "'");
    return read_matrix_market(in);
}

}  // namespace wgstokes
