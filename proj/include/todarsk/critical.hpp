#pragma once

// The convex potential F_lambda on triangles with a fixed bottom row, its
// minimizer X*_lambda(x), the value function u_lambda(x) = F_lambda(X*), its
// gradient flow, and the geometric Bender-Knuth involutions.

#include <optional>

#include "todarsk/grsk.hpp"
#include "todarsk/report.hpp"

namespace todarsk {

/// l^m_i, r^m_i and the balance lambda_m + l^m_i - lambda_{m+1} - r^m_i,
/// each stored as ragged rows indexed [m-1](i-1) for 1 <= i <= m < n.
struct CriticalResidual {
    RaggedParams l;
    RaggedParams r;
    RaggedParams residual;

    double max_abs() const;
};

CriticalResidual critical_residual(const Triangle& x, const SpectralVector& lambda);
/// max |lambda_m + l^m_i - lambda_{m+1} - r^m_i| (0 for n = 1).
double critical_residual_norm(const Triangle& x, const SpectralVector& lambda);

/// (n-1, n-3, ..., 1-n).
Vector rho_vector(int n);

/// Sum of the arrow weights e^{a-b}.
double F_potential(const Triangle& x);
/// F plus sum_m lambda_m (sum x^{m-1} - sum x^m).
double F_lambda(const Triangle& x, const SpectralVector& lambda);
/// Gradient of F_lambda with respect to the interior entries (rows 1..n-1), as a
/// triangle whose bottom row is zero.
Triangle F_lambda_interior_gradient(const Triangle& x, const SpectralVector& lambda);

struct CriticalOptions {
    int max_iterations = 200;
    double gradient_tolerance = 1e-12;
};

/// Minimizer of F_lambda over triangles with bottom row x (damped Newton with
/// analytic Hessian). An optional warm start supplies the interior rows.
Triangle critical_point(const Vector& x, const SpectralVector& lambda,
                        const std::optional<Triangle>& warm_start = std::nullopt, const CriticalOptions& opts = {});

double u_lambda(const Vector& x, const SpectralVector& lambda);
/// Partial derivatives of F_lambda in the bottom-row entries at X*_lambda(x).
Vector grad_u(const Vector& x, const SpectralVector& lambda);
/// Same, evaluated at a triangle already known to be critical.
Vector grad_u_at(const Triangle& critical, const SpectralVector& lambda);

/// RK4 integration of xdot = -grad u_lambda(x). Returns the bottom rows on the
/// grid 0, dt, ..., t_end as rows of a matrix.
struct GradientFlowPath {
    Vector grid;
    Matrix rows;  ///< (K+1) x n
};
GradientFlowPath gradient_flow(const Vector& x0, const SpectralVector& lambda, double t_end, double dt);

/// F(X) against <rho^n, xdot^n> with xdot from the RSK-type field.
CheckReport givental_identity_check(const Triangle& x, const SpectralVector& lambda, double tolerance = 1e-8);

/// b^m_i: x^m_i -> x^m_i + log(l^m_i / r^m_i).
Triangle bender_knuth(const Triangle& x, int m, int i);

/// X*_lambda(-N rho^n).
Triangle singular_limit_offsets(double scale, const SpectralVector& lambda);

}  // namespace todarsk
