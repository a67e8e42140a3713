#pragma once

// Small dense linear algebra: solid minors, Gauss (LDU) decomposition,
// eigenvalues, matrix exponentials and the structured matrices eps_lambda and
// the longest-element representative w0bar.
//
// Indices that name mathematical objects (the minor Delta^m_k, the generators
// e_i / f_i) are 1-based, matching the usual notation. Raw matrix access is
// Eigen's 0-based indexing.

#include <complex>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "todarsk/errors.hpp"

namespace todarsk {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Drifts, eigenvalues and constants of motion.
using SpectralVector = Eigen::VectorXd;

/// Default relative floor below which a leading principal minor counts as zero.
inline constexpr double kDefaultPivotFloor = 1e-13;

/// Upper-triangular matrix with every solid minor Delta^m_k strictly positive.
class PositiveUpper {
public:
    /// Validates the invariants; throws DomainError when b is not in the cell.
    explicit PositiveUpper(Matrix b);

    /// Skips validation. Only for producers that guarantee membership by
    /// construction (products of positive bidiagonal factors).
    static PositiveUpper trusted(Matrix b);

    int n() const { return static_cast<int>(b_.rows()); }
    const Matrix& matrix() const { return b_; }
    double operator()(int row, int col) const { return b_(row, col); }

private:
    struct TrustedTag {};
    PositiveUpper(Matrix b, TrustedTag) : b_(std::move(b)) {}
    Matrix b_;
};

/// Lower-triangular matrix with unit diagonal.
class LowerUnitriangular {
public:
    explicit LowerUnitriangular(Matrix l);
    static LowerUnitriangular identity(int n) { return LowerUnitriangular(Matrix::Identity(n, n)); }

    int n() const { return static_cast<int>(l_.rows()); }
    const Matrix& matrix() const { return l_; }
    double operator()(int row, int col) const { return l_(row, col); }

    /// Exact inverse by forward substitution (stays unit lower triangular).
    LowerUnitriangular inverse() const;

private:
    Matrix l_;
};

struct GaussLDU {
    LowerUnitriangular L;
    Vector D;  ///< diagonal of D
    Matrix U;  ///< unit upper triangular

    Matrix recompose() const { return L.matrix() * D.asDiagonal() * U; }
    /// The upper factor R = D U of the two-factor form A = L R.
    Matrix r_part() const { return D.asDiagonal() * U; }
};

/// Delta^m_k(b): determinant of rows 1..k and columns m-k+1..m.
/// Returns 1 for k = 0. Requires 0 <= k <= m <= n (RangeError otherwise).
double minor(const Matrix& b, int m, int k);

/// Unpivoted Gauss decomposition A = L D U.
///
/// A leading principal minor is treated as vanishing when its modulus falls
/// below pivot_floor times the product of the norms of its (full) rows. In that case FactorizationBlowUp is thrown carrying
/// the order of the offending minor.
GaussLDU gauss_ldu(const Matrix& a, double pivot_floor = kDefaultPivotFloor);

/// Leading principal minors det A[1..k,1..k], k = 1..n, with the same relative
/// scale used by gauss_ldu. Entry k-1 holds minor k divided by the
/// product of the norms of rows 1..k.
Vector relative_leading_minors(const Matrix& a);

/// All eigenvalues with algebraic multiplicity, sorted by (real, imag).
std::vector<std::complex<double>> eigenvalues(const Matrix& m);

/// e^{tA} by scaling and squaring around a degree-13 Pade approximant.
/// Throws OverflowError when the result is not finite.
Matrix matrix_exp(const Matrix& a, double t = 1.0);

/// eps_lambda: lambda on the diagonal, ones on the superdiagonal.
Matrix epsilon_matrix(const SpectralVector& lambda);

/// Chevalley generators of gl_n (1-based i).
Matrix generator_e(int n, int i);
Matrix generator_f(int n, int i);

/// sbar_i = (I - e_i)(I + f_i)(I - e_i).
Matrix sbar(int n, int i);

/// w0bar from the reduced word 1 21 321 ... (n-1 ... 1).
Matrix w0_bar(int n);

/// Strictly lower triangular part.
Matrix strictly_lower(const Matrix& a);

/// Reading/writing {"n": int, "rows": [[...], ...]}.
nlohmann::json matrix_to_json(const Matrix& a);
Matrix matrix_from_json(const nlohmann::json& j);

}  // namespace todarsk
