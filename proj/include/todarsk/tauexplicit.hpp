#pragma once

// Closed-form solution of the linear flow started at the identity:
// b(t) = e^{t eps_lambda} entry by entry as divided differences of z -> e^{tz},
// the tau functions (corner minors of b) in determinant and Hankel form, and
// the lambda = 0 formulas.

#include <ostream>
#include <vector>

#include "todarsk/matrixcore.hpp"
#include "todarsk/report.hpp"

namespace todarsk {

/// Finite sums  sum_r (sum_k c_{r,k} t^k) e^{mu_r t}.
class ExpPolynomial {
public:
    struct Term {
        double rate = 0.0;
        std::vector<double> coeffs;  ///< coeffs[k] multiplies t^k
    };

    ExpPolynomial() = default;
    static ExpPolynomial constant(double c);
    /// c t^k e^{rate t}
    static ExpPolynomial monomial(double rate, int power = 0, double c = 1.0);

    const std::vector<Term>& terms() const { return terms_; }
    bool is_zero() const { return terms_.empty(); }

    double operator()(double t) const;
    ExpPolynomial derivative(int order = 1) const;

    ExpPolynomial& operator+=(const ExpPolynomial& other);
    ExpPolynomial& operator*=(double s);
    friend ExpPolynomial operator+(ExpPolynomial a, const ExpPolynomial& b) { return a += b; }
    friend ExpPolynomial operator-(ExpPolynomial a, ExpPolynomial b) { return a += (b *= -1.0); }
    friend ExpPolynomial operator*(double s, ExpPolynomial a) { return a *= s; }
    friend ExpPolynomial operator*(const ExpPolynomial& a, const ExpPolynomial& b);

    /// Rates closer than this (relative to max(1,|rate|)) are merged.
    static constexpr double kRateTolerance = 1e-12;

private:
    void add_term(double rate, const std::vector<double>& coeffs);
    void canonicalize();
    std::vector<Term> terms_;
};

/// Nodes closer than this are treated as one repeated node in exact forms.
inline constexpr double kNodeClusterTolerance = 1e-9;

/// b_ij(t) (1-based, i <= j): divided difference of z -> e^{tz} over
/// lambda_i..lambda_j. Stable for repeated and nearly repeated nodes.
double b_explicit(const SpectralVector& lambda, double t, int i, int j);
/// Full upper-triangular matrix of b_explicit values.
Matrix b_explicit_matrix(const SpectralVector& lambda, double t);
/// b_ij as an exact exponential polynomial (residues at clustered nodes).
/// Nodes that are distinct but close lose accuracy like 1/gap^(j-i); use
/// b_explicit for values.
ExpPolynomial b_exp_polynomial(const SpectralVector& lambda, int i, int j);

/// Bordered Vandermonde determinant over its Vandermonde product. Throws
/// DegenerateNodes when two of lambda_i..lambda_j coincide.
double b_det_form(const SpectralVector& lambda, double t, int i, int j);

/// sum_k prod_{l != k} (lambda_k - lambda_l)^{-1}; zero for distinct nodes (n >= 2).
double residue_sum(const SpectralVector& lambda);

/// tau_k: the k x k top-right minor of b(t).
double tau_k(const SpectralVector& lambda, double t, int k);
ExpPolynomial tau_k_exp(const SpectralVector& lambda, int k);
/// Hankel determinant in the derivatives of tau_1 = b_1n.
double tau_hankel(const SpectralVector& lambda, double t, int k);
/// lambda = 0 closed form; tau_n = 1.
double tau_zero_lambda(int n, double t, int k);

struct TauTable {
    Vector grid;
    Matrix tau;  ///< tau(r, k-1) = tau_k(grid(r))
};
TauTable tau_table(const SpectralVector& lambda, const Vector& grid);

/// x^n_k = log tau_k - log tau_{k-1}.
Vector bottom_row_from_tau(const SpectralVector& lambda, double t);

/// (log tau_k)'' + tau_{k+1} tau_{k-1} / tau_k^2 over k and the grid, from exact
/// derivatives; residuals are relative to max(1, |tau_{k+1} tau_{k-1} / tau_k^2|).
CheckReport toda_log_second_derivative_check(const SpectralVector& lambda, const Vector& t_grid,
                                             double tolerance = 1e-8);

/// CSV: t,tau_1..tau_n.
void write_tau_csv(std::ostream& os, const TauTable& table);
/// CSV: t,x_1..x_n.
void write_solution_rows_csv(std::ostream& os, const SpectralVector& lambda, const Vector& grid);

}  // namespace todarsk
