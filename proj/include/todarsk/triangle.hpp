#pragma once

// Triangles x^m_i (1 <= i <= m <= n) in log coordinates and the structured
// maps between triangles, totally positive upper-triangular matrices and
// tridiagonal Lax matrices:
//
//   f      : P -> T        x^m_1 + ... + x^m_k = log Delta^m_k(b)
//   f^{-1} : T -> P        b = E_1(w^1) ... E_n(w^n)
//   h      : T -> (N_-)>0  L = L_1(u^1) ... L_{n-1}(u^{n-1})
//   g_lam  : T -> Lax      q_i = exp(x^n_{i+1} - x^n_i), p from a row recursion

#include <span>
#include <vector>

#include <nlohmann/json.hpp>

#include "todarsk/matrixcore.hpp"

namespace todarsk {

/// Entries beyond this magnitude are rejected before exponentiation.
inline constexpr double kMaxTriangleEntry = 700.0;

class Triangle {
public:
    Triangle() = default;
    explicit Triangle(int n);  ///< all-zero triangle

    static Triangle zeros(int n) { return Triangle(n); }
    /// rows[m-1] lists x^m_1 ... x^m_m.
    static Triangle from_rows(const std::vector<std::vector<double>>& rows);
    static Triangle from_flat(int n, std::span<const double> flat);

    int n() const { return n_; }
    std::size_t size() const { return data_.size(); }

    /// x^m_i with 1 <= i <= m <= n.
    double& operator()(int m, int i) { return data_[offset(m) + static_cast<std::size_t>(i - 1)]; }
    double operator()(int m, int i) const { return data_[offset(m) + static_cast<std::size_t>(i - 1)]; }

    std::span<double> row(int m) { return {data_.data() + offset(m), static_cast<std::size_t>(m)}; }
    std::span<const double> row(int m) const { return {data_.data() + offset(m), static_cast<std::size_t>(m)}; }
    Vector row_vector(int m) const;
    Vector bottom_row() const { return row_vector(n_); }
    double row_sum(int m) const;

    /// Row-major flat view: x^1_1, x^2_1, x^2_2, x^3_1, ...
    std::span<const double> flat() const { return data_; }
    std::span<double> flat() { return data_; }
    std::vector<std::vector<double>> to_rows() const;

    double max_abs() const;
    double max_abs_diff(const Triangle& other) const;
    bool all_finite() const;

    Triangle& operator+=(const Triangle& other);
    Triangle& operator*=(double s);
    friend Triangle operator+(Triangle a, const Triangle& b) { return a += b; }
    friend Triangle operator-(Triangle a, const Triangle& b) {
        for (std::size_t k = 0; k < a.data_.size(); ++k) a.data_[k] -= b.data_[k];
        return a;
    }
    friend Triangle operator*(double s, Triangle a) { return a *= s; }

    static std::size_t offset(int m) { return static_cast<std::size_t>((m - 1) * m / 2); }

private:
    int n_ = 0;
    std::vector<double> data_;
};

/// Throws OverflowError when an entry exceeds kMaxTriangleEntry or is not finite.
void check_entry_range(const Triangle& x);

/// Ragged parameter arrays: params[m-1] holds the m-th vector.
using RaggedParams = std::vector<Vector>;

/// Tridiagonal Hessenberg Lax matrix: p on the diagonal, 1 above, -q below.
struct LaxMatrix {
    Vector p;
    Vector q;

    int n() const { return static_cast<int>(p.size()); }
    Matrix to_matrix() const;
    /// Reads p and q off a tridiagonal matrix (superdiagonal is assumed 1).
    static LaxMatrix from_matrix(const Matrix& m);
};

struct UParameters {
    RaggedParams u;  ///< u[m-1] has m entries, u^m_i = exp(x^{m+1}_{i+1} - x^m_i)
    Vector d;        ///< D_ii = exp(x^n_i)
};

PositiveUpper f_inv(const Triangle& x);
Triangle f_map(const PositiveUpper& b);
/// As above for a raw matrix; throws DomainError when b is not in the cell.
Triangle f_map(const Matrix& b);

/// w^m of the bidiagonal factorization b = E_1(w^1) ... E_n(w^n).
RaggedParams w_params(const Triangle& x);

UParameters u_params(const Triangle& x);

/// L_m(u) = l_m(u_m) ... l_1(u_1) embedded in dimension n.
Matrix lower_factor(int n, const Vector& u);
/// L = L_1(u^1) ... L_{n-1}(u^{n-1}).
LowerUnitriangular lower_from_params(int n, const RaggedParams& u);
/// Inverse of lower_from_params by reading ratios of bottom-row entries and
/// peeling one factor at a time.
RaggedParams params_from_lower(const LowerUnitriangular& l);

LowerUnitriangular h_map(const Triangle& x);

/// The p^m rows of the g_lambda recursion (p^1_1 = lambda_1); p[m-1] has m entries.
RaggedParams g_lambda_rows(const Triangle& x, const SpectralVector& lambda);
LaxMatrix g_lambda(const Triangle& x, const SpectralVector& lambda);

nlohmann::json triangle_to_json(const Triangle& x);
Triangle triangle_from_json(const nlohmann::json& j);

}  // namespace todarsk
