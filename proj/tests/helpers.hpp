#pragma once

#include <cmath>
#include <random>

#include "todarsk/triangle.hpp"

namespace testutil {

using todarsk::Matrix;
using todarsk::Triangle;
using todarsk::Vector;

inline std::mt19937_64& rng() {
    static std::mt19937_64 gen(20240611);
    return gen;
}

inline double uniform(double a, double b) { return std::uniform_real_distribution<double>(a, b)(rng()); }

inline Triangle random_triangle(int n, double lo = -1.0, double hi = 1.0) {
    Triangle x(n);
    for (double& v : x.flat()) v = uniform(lo, hi);
    return x;
}

inline Vector random_vector(int n, double lo, double hi) {
    Vector v(n);
    for (int i = 0; i < n; ++i) v(i) = uniform(lo, hi);
    return v;
}

/// Entries of lambda spaced at least `gap` apart, in [-span, span].
inline Vector random_separated(int n, double gap, double span = 2.0) {
    for (;;) {
        Vector v = random_vector(n, -span, span);
        bool ok = true;
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < i; ++j) ok = ok && std::abs(v(i) - v(j)) >= gap;
        if (ok) return v;
    }
}

/// Determinant by Laplace expansion along the first row.
inline double cofactor_det(const Matrix& a) {
    const auto n = a.rows();
    if (n == 0) return 1.0;
    if (n == 1) return a(0, 0);
    double s = 0.0;
    for (Eigen::Index j = 0; j < n; ++j) {
        Matrix sub(n - 1, n - 1);
        for (Eigen::Index r = 1; r < n; ++r)
            for (Eigen::Index c = 0, cc = 0; c < n; ++c)
                if (c != j) sub(r - 1, cc++) = a(r, c);
        s += ((j % 2 == 0) ? 1.0 : -1.0) * a(0, j) * cofactor_det(sub);
    }
    return s;
}

inline double max_abs(const Matrix& a) { return a.cwiseAbs().maxCoeff(); }

}  // namespace testutil
