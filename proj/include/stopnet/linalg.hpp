#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "stopnet/errors.hpp"

namespace stopnet {

using Vec = std::vector<double>;

// Dense row-major matrix. Small enough here (widths of a few dozen) that a
// plain vector with hand-written loops beats pulling in a linear-algebra
// dependency, and it keeps the reverse-mode pass transparent.
struct Mat {
    std::size_t rows = 0;
    std::size_t cols = 0;
    Vec a;

    Mat() = default;
    Mat(std::size_t r, std::size_t c) : rows(r), cols(c), a(r * c, 0.0) {}

    double& operator()(std::size_t i, std::size_t j) { return a[i * cols + j]; }
    double operator()(std::size_t i, std::size_t j) const { return a[i * cols + j]; }

    static Mat identity(std::size_t n) {
        Mat m(n, n);
        for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
        return m;
    }
};

// y = W x
inline Vec matvec(const Mat& w, const Vec& x) {
    if (x.size() != w.cols) throw config_error("matvec: dimension mismatch");
    Vec y(w.rows, 0.0);
    for (std::size_t i = 0; i < w.rows; ++i) {
        const double* row = w.a.data() + i * w.cols;
        double s = 0.0;
        for (std::size_t j = 0; j < w.cols; ++j) s += row[j] * x[j];
        y[i] = s;
    }
    return y;
}

// y = W^T x
inline Vec matvec_t(const Mat& w, const Vec& x) {
    if (x.size() != w.rows) throw config_error("matvec_t: dimension mismatch");
    Vec y(w.cols, 0.0);
    for (std::size_t i = 0; i < w.rows; ++i) {
        const double* row = w.a.data() + i * w.cols;
        const double xi = x[i];
        for (std::size_t j = 0; j < w.cols; ++j) y[j] += row[j] * xi;
    }
    return y;
}

// W += u v^T (outer-product accumulate, the gradient workhorse)
inline void add_outer(Mat& w, const Vec& u, const Vec& v) {
    for (std::size_t i = 0; i < w.rows; ++i) {
        double* row = w.a.data() + i * w.cols;
        const double ui = u[i];
        for (std::size_t j = 0; j < w.cols; ++j) row[j] += ui * v[j];
    }
}

inline void axpy(double alpha, const Vec& x, Vec& y) {
    for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

inline double dot(const Vec& x, const Vec& y) {
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) s += x[i] * y[i];
    return s;
}

inline double norm2(const Vec& x) { return std::sqrt(dot(x, x)); }

inline double dist2(const Vec& x, const Vec& y) {
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double d = x[i] - y[i];
        s += d * d;
    }
    return std::sqrt(s);
}

inline bool all_finite(const Vec& x) {
    for (double v : x)
        if (!std::isfinite(v)) return false;
    return true;
}

// Largest singular value estimate by power iteration on W^T W. Converges from
// below; for the matrices here 20-100 iterations reach machine precision.
inline double operator_norm(const Mat& w, int iterations = 100) {
    if (w.rows == 0 || w.cols == 0) return 0.0;
    Vec v(w.cols, 1.0 / std::sqrt(static_cast<double>(w.cols)));
    double sigma = 0.0;
    for (int it = 0; it < iterations; ++it) {
        Vec u = matvec(w, v);
        Vec z = matvec_t(w, u);
        const double zn = norm2(z);
        if (zn == 0.0) return 0.0;
        for (double& e : z) e /= zn;
        v = z;
        sigma = std::sqrt(zn);
    }
    return sigma;
}

}  // namespace stopnet
