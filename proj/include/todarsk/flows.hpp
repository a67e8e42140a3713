#pragma once

// Deterministic dynamics: the triangle flows (the RSK-type field and the local
// field), the linear flow b -> e^{t eps_lambda} b and its conjugate on
// triangles, the Toda Lax flow (ODE and factorization solution) and Kostant's
// normal form M = L^{-1} eps_lambda L.

#include <optional>
#include <ostream>

#include "todarsk/grsk.hpp"
#include "todarsk/report.hpp"

namespace todarsk {

struct FlowConfig {
    double dt = 1e-3;
    double t_end = 1.0;
    double blowup_guard = kDefaultPivotFloor;

    void validate() const;
    int steps() const;  ///< number of RK4 steps; the last one is shortened to land on t_end
};

enum class TriangleField { rsk, local };

/// Tangent of the RSK-type flow: rows resolved top-down through the recursion.
Triangle vf_dyn_rsk(const Triangle& x, const SpectralVector& lambda);
/// Tangent of the local flow.
Triangle vf_dyn(const Triangle& x, const SpectralVector& lambda);
Triangle vector_field(const Triangle& x, const SpectralVector& lambda, TriangleField field);

Triangle rk4_step(const Triangle& x, const SpectralVector& lambda, double dt, TriangleField field);

/// RK4 trajectory on the grid 0, dt, 2dt, ..., t_end. Throws OverflowError
/// (carrying the time) when an entry leaves the exp-safe range.
TrianglePath integrate_triangle(const Triangle& x0, const SpectralVector& lambda, const FlowConfig& cfg,
                                TriangleField field = TriangleField::rsk);

/// One step of size dt against two of size dt/2 (sup norm).
double richardson_defect(const Triangle& x, const SpectralVector& lambda, double dt, TriangleField field);

/// R^lambda_t b = e^{t eps_lambda} b.
PositiveUpper r_flow(const PositiveUpper& b, const SpectralVector& lambda, double t);
/// S^lambda_t = f o R^lambda_t o f^{-1}.
Triangle s_flow(const Triangle& x, const SpectralVector& lambda, double t);

/// Strictly lower part of M.
Matrix lower_projection(const Matrix& m);
/// [M, Pi_-(M)] for a dense matrix.
Matrix lax_commutator(const Matrix& m);

/// Toda tangent: qdot_i = (p_{i+1} - p_i) q_i, pdot_1 = -q_1, pdot_n = q_{n-1},
/// pdot_i = q_{i-1} - q_i, which equals [M, Pi_-(M)].
LaxMatrix toda_lax_rhs(const LaxMatrix& m);
/// The interior momentum equation written as pdot_i = q_{i+1} - q_i. Kept only
/// so the verification report can show how far it is from the commutator.
LaxMatrix toda_lax_rhs_printed(const LaxMatrix& m);

struct LaxPath {
    Vector grid;
    std::vector<LaxMatrix> states;
};
LaxPath integrate_lax(const LaxMatrix& m0, const FlowConfig& cfg);

struct FactorizationState {
    LowerUnitriangular n_part = LowerUnitriangular::identity(1);
    Matrix r_part;
    LaxMatrix m0;
};

struct TodaSolution {
    LaxMatrix m;
    FactorizationState state;
};

/// M(t) = n(t)^{-1} M0 n(t) with e^{t M0} = n(t) r(t). Throws
/// FactorizationBlowUp (carrying t) when a leading minor of e^{t M0} vanishes.
TodaSolution toda_flow_factorized(const LaxMatrix& m0, double t, double pivot_floor = kDefaultPivotFloor);

/// First grid time in (0, t_end] at which the factorization fails, refined by
/// bisection to `resolution`; nullopt when the flow exists on [0, t_end].
std::optional<double> toda_blowup_time(const LaxMatrix& m0, double t_end, double dt,
                                       double pivot_floor = kDefaultPivotFloor, double resolution = 1e-10);

/// Unique unit lower-triangular L with eps_lambda L = L M. Throws SpectrumError
/// when the system is inconsistent (spectrum of M differs from lambda).
LowerUnitriangular kostant_L(const LaxMatrix& m, const SpectralVector& lambda, double tolerance = 1e-8);

struct LrEvolutionReport {
    CheckReport l_equation;  ///< Ldot = L Q
    CheckReport r_equation;  ///< Rdot = P R
};
/// Five-point differences of L = h(X) and R = DU from the Gauss decomposition of
/// f^{-1}(X) w0bar along a uniformly sampled trajectory, against L Q and P R
/// with Q = Pi_-(M), P = M - Q, M = g_lambda(X).
LrEvolutionReport lr_evolution_check(const TrianglePath& traj, const SpectralVector& lambda,
                                     double tolerance = -1.0);

/// CSV: header t,p_1..p_n,q_1..q_{n-1}.
void write_lax_path_csv(std::ostream& os, const LaxPath& path);

}  // namespace todarsk
