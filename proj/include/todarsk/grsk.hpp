#pragma once

// Continuous-time geometric RSK: the path operators P_i and P^r_i, the maps
// Pi (started from the singular point) and Pi^xi (inserting a path into a
// given triangle), the matrix path b(t) and a Monte Carlo evaluation of minors
// as integrals over non-intersecting down-right paths.
//
// All integrals  int_0^t e^{g(s)} ds  are cumulative trapezoid sums kept in
// the log domain, so paths of any size are handled without overflow.

#include <cstdint>
#include <functional>
#include <vector>

#include "todarsk/triangle.hpp"

namespace todarsk {

/// Piecewise-linear path t -> R^n sampled on a strictly increasing grid with
/// grid(0) = 0.
class SampledPath {
public:
    SampledPath() = default;
    /// Validates the grid, finiteness, and eta(0) = 0.
    SampledPath(Vector grid, Matrix values);

    /// Output of P_i: the value at grid point 0 is log-singular (+-inf) and is
    /// not checked. Later grid points must be finite.
    static SampledPath singular_start(Vector grid, Matrix values);
    /// No checks at all (shifted paths, paths carrying a nonzero start).
    static SampledPath unchecked(Vector grid, Matrix values);

    static SampledPath uniform_grid(double t_end, int steps, int n);  ///< the zero path
    /// eta(t) = t * lambda on a uniform grid.
    static SampledPath linear(const SpectralVector& lambda, double t_end, int steps);
    static SampledPath from_function(const Vector& grid, int n, const std::function<Vector(double)>& fn);

    int n() const { return static_cast<int>(values_.cols()); }
    int points() const { return static_cast<int>(grid_.size()); }
    const Vector& grid() const { return grid_; }
    const Matrix& values() const { return values_; }
    Matrix& values() { return values_; }
    double t(int k) const { return grid_(k); }
    /// eta_i at grid index k (i is 1-based).
    double operator()(int k, int i) const { return values_(k, i - 1); }
    Vector coordinate(int i) const { return values_.col(i - 1); }
    bool singular() const { return singular_; }

    /// Linear interpolation; t must lie in [0, grid end].
    Vector at(double t) const;
    /// Restriction to [0, t], with t appended as the final grid point when it
    /// is not already one.
    SampledPath truncated(double t) const;

private:
    struct Raw {};
    SampledPath(Vector grid, Matrix values, bool singular, Raw)
        : grid_(std::move(grid)), values_(std::move(values)), singular_(singular) {}
    Vector grid_;
    Matrix values_;  ///< (K+1) x n
    bool singular_ = false;
};

/// Triangle-valued path on a grid.
struct TrianglePath {
    Vector grid;
    std::vector<Triangle> states;

    int points() const { return static_cast<int>(grid.size()); }
    const Triangle& back() const { return states.back(); }
    /// Index of the grid point nearest to t.
    int index_of(double t) const;
    const Triangle& at(double t) const { return states[static_cast<std::size_t>(index_of(t))]; }
};

/// log int_0^{t_k} e^{g(s)} ds for every grid index k (trapezoid rule with
/// streaming log-sum-exp). Entry 0 is -inf. When g(0) is not finite the
/// integrand is treated as s^a phi(s) with integer a >= 0 read off the first
/// grid points; phi is then interpolated linearly and s^a integrated exactly.
Vector log_cumulative_integral(const Vector& grid, const Vector& g);

/// log(e^a + e^b) without overflow; handles -inf arguments.
double log_add_exp(double a, double b);

/// (P_i eta)(t) = eta(t) + log(int_0^t e^{eta_{i+1} - eta_i}) (e_i - e_{i+1}).
SampledPath p_op(const SampledPath& eta, int i);
/// As p_op with log(e^{-r} + int ...). r = +inf reproduces p_op.
SampledPath p_op_r(const SampledPath& eta, int i, double r);

/// X(t) = Pi eta (t) at every grid point t > 0 (grid index 0 is dropped).
TrianglePath pi_n(const SampledPath& eta);

/// mu_m and r^m_k of a triangle xi.
struct InsertionOffsets {
    Vector mu;        ///< mu(m-1) = mu_m
    RaggedParams r;   ///< r[m-1](k-1) = r^m_k for 2 <= k <= m; entry k = 1 is unused (0)

    double r_at(int m, int k) const { return r[static_cast<std::size_t>(m - 1)](k - 1); }
};
InsertionOffsets insertion_offsets(const Triangle& xi);

/// Pi^xi eta on the full grid (X(0) = xi) by the nested row recursion.
TrianglePath pi_xi(const SampledPath& eta, const Triangle& xi);
/// Same map assembled from compositions of P^r_i operators.
TrianglePath pi_xi_composed(const SampledPath& eta, const Triangle& xi);

/// b(t) for every grid point; b(0) = I.
std::vector<Matrix> b_path_all(const SampledPath& eta);
/// b(t) at a single time (t need not be a grid point).
PositiveUpper b_path(const SampledPath& eta, double t);

struct MonteCarloEstimate {
    double value = 0.0;
    double std_error = 0.0;
    long samples = 0;
};

/// Monte Carlo estimate of Delta^m_k(b(t)) as an integral over k-tuples of
/// non-intersecting down-right paths. Requires k <= m <= eta.n(), k <= 2,
/// m <= 4, samples >= 10^4. Batches draw from independently seeded generators.
MonteCarloEstimate kmg_minor_oracle(const SampledPath& eta, double t, int m, int k, long samples,
                                    std::uint64_t seed = 1);

/// CSV: header t,eta_1,...,eta_n.
void write_path_csv(std::ostream& os, const SampledPath& eta);
SampledPath read_path_csv(std::istream& is);
/// CSV: header t,x_1_1,x_2_1,x_2_2,... in row-major triangle order.
void write_triangle_path_csv(std::ostream& os, const TrianglePath& path);

}  // namespace todarsk
