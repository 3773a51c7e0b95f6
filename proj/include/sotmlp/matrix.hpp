#pragma once

#include <cstddef>
#include <vector>

#include "sotmlp/errors.hpp"

namespace sotmlp {

// Dense row-major matrix of doubles. Small on purpose: the codebase needs
// matvecs, outer products and element access, nothing more.
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), data(r * c, fill) {}

    double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }

    const double* row(std::size_t r) const { return data.data() + r * cols; }
    double* row(std::size_t r) { return data.data() + r * cols; }

    bool same_shape(const Matrix& o) const { return rows == o.rows && cols == o.cols; }
};

// y = M x
inline void matvec(const Matrix& m, const std::vector<double>& x, std::vector<double>& y) {
    if (x.size() != m.cols)
        throw DimensionError("matvec: vector length " + std::to_string(x.size()) +
                             " does not match matrix cols " + std::to_string(m.cols));
    y.assign(m.rows, 0.0);
    for (std::size_t r = 0; r < m.rows; ++r) {
        const double* w = m.row(r);
        double acc = 0.0;
        for (std::size_t c = 0; c < m.cols; ++c)
            acc += w[c] * x[c];
        y[r] = acc;
    }
}

// y = M^T x
inline void matvec_transposed(const Matrix& m, const std::vector<double>& x, std::vector<double>& y) {
    if (x.size() != m.rows)
        throw DimensionError("matvec_transposed: vector length mismatch");
    y.assign(m.cols, 0.0);
    for (std::size_t r = 0; r < m.rows; ++r) {
        const double* w = m.row(r);
        const double xr = x[r];
        for (std::size_t c = 0; c < m.cols; ++c)
            y[c] += w[c] * xr;
    }
}

// M += scale * a b^T
inline void add_outer(Matrix& m, const std::vector<double>& a, const std::vector<double>& b,
                      double scale = 1.0) {
    if (a.size() != m.rows || b.size() != m.cols)
        throw DimensionError("add_outer: shape mismatch");
    for (std::size_t r = 0; r < m.rows; ++r) {
        double* w = m.row(r);
        const double ar = scale * a[r];
        for (std::size_t c = 0; c < m.cols; ++c)
            w[c] += ar * b[c];
    }
}

} // namespace sotmlp
