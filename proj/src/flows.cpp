#include "todarsk/flows.hpp"

#include <algorithm>
#include <cmath>

namespace todarsk {

void FlowConfig::validate() const {
    if (!(dt > 0.0) || !std::isfinite(dt)) throw RangeError("FlowConfig: dt must be positive");
    if (!(t_end >= 0.0) || !std::isfinite(t_end)) throw RangeError("FlowConfig: t_end must be non-negative");
    if (!(blowup_guard > 0.0)) throw RangeError("FlowConfig: blowup_guard must be positive");
}

int FlowConfig::steps() const { return static_cast<int>(std::ceil(t_end / dt - 1e-9)); }

// ---------------------------------------------------------------------------
// Triangle fields

Triangle vf_dyn_rsk(const Triangle& x, const SpectralVector& lambda) {
    const RaggedParams rows = g_lambda_rows(x, lambda);
    Triangle v(x.n());
    for (int m = 1; m <= x.n(); ++m)
        for (int i = 1; i <= m; ++i) v(m, i) = rows[static_cast<std::size_t>(m - 1)](i - 1);
    return v;
}

Triangle vf_dyn(const Triangle& x, const SpectralVector& lambda) {
    check_entry_range(x);
    const int n = x.n();
    if (lambda.size() != n) throw RangeError("vf_dyn: lambda must have length n");
    Triangle v(n);
    v(1, 1) = lambda(0);
    for (int m = 2; m <= n; ++m) {
        const double lm = lambda(m - 1);
        v(m, 1) = lm + std::exp(x(m - 1, 1) - x(m, 1));
        for (int i = 2; i < m; ++i)
            v(m, i) = lm + std::exp(x(m - 1, i) - x(m, i)) - std::exp(x(m, i) - x(m - 1, i - 1));
        v(m, m) = lm - std::exp(x(m, m) - x(m - 1, m - 1));
    }
    return v;
}

Triangle vector_field(const Triangle& x, const SpectralVector& lambda, TriangleField field) {
    return field == TriangleField::rsk ? vf_dyn_rsk(x, lambda) : vf_dyn(x, lambda);
}

Triangle rk4_step(const Triangle& x, const SpectralVector& lambda, double dt, TriangleField field) {
    const Triangle k1 = vector_field(x, lambda, field);
    const Triangle k2 = vector_field(x + (dt / 2) * k1, lambda, field);
    const Triangle k3 = vector_field(x + (dt / 2) * k2, lambda, field);
    const Triangle k4 = vector_field(x + dt * k3, lambda, field);
    return x + (dt / 6) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

TrianglePath integrate_triangle(const Triangle& x0, const SpectralVector& lambda, const FlowConfig& cfg,
                                TriangleField field) {
    cfg.validate();
    const int steps = cfg.steps();
    TrianglePath path;
    path.grid.resize(steps + 1);
    path.grid(0) = 0.0;
    path.states.reserve(static_cast<std::size_t>(steps + 1));
    path.states.push_back(x0);
    Triangle x = x0;
    for (int s = 1; s <= steps; ++s) {
        const double t_prev = path.grid(s - 1);
        const double t = std::min(cfg.t_end, s * cfg.dt);
        try {
            x = rk4_step(x, lambda, t - t_prev, field);
            check_entry_range(x);
        } catch (const OverflowError&) {
            throw OverflowError("triangle flow left the exp-safe range", t);
        }
        path.grid(s) = t;
        path.states.push_back(x);
    }
    return path;
}

double richardson_defect(const Triangle& x, const SpectralVector& lambda, double dt, TriangleField field) {
    const Triangle one = rk4_step(x, lambda, dt, field);
    const Triangle two = rk4_step(rk4_step(x, lambda, dt / 2, field), lambda, dt / 2, field);
    return one.max_abs_diff(two);
}

PositiveUpper r_flow(const PositiveUpper& b, const SpectralVector& lambda, double t) {
    if (t < 0.0) throw RangeError("r_flow: t must be non-negative");
    if (lambda.size() != b.n()) throw RangeError("r_flow: lambda must have length n");
    Matrix out = matrix_exp(epsilon_matrix(lambda), t) * b.matrix();
    return PositiveUpper::trusted(std::move(out));
}

Triangle s_flow(const Triangle& x, const SpectralVector& lambda, double t) {
    return f_map(r_flow(f_inv(x), lambda, t));
}

// ---------------------------------------------------------------------------
// Toda

Matrix lower_projection(const Matrix& m) { return strictly_lower(m); }

Matrix lax_commutator(const Matrix& m) {
    const Matrix q = lower_projection(m);
    return m * q - q * m;
}

LaxMatrix toda_lax_rhs(const LaxMatrix& m) {
    const int n = m.n();
    LaxMatrix d{Vector::Zero(n), Vector::Zero(std::max(n - 1, 0))};
    for (int i = 0; i + 1 < n; ++i) d.q(i) = (m.p(i + 1) - m.p(i)) * m.q(i);
    for (int i = 0; i < n; ++i) {
        const double below = (i >= 1) ? m.q(i - 1) : 0.0;
        const double here = (i + 1 < n) ? m.q(i) : 0.0;
        d.p(i) = below - here;
    }
    return d;
}

LaxMatrix toda_lax_rhs_printed(const LaxMatrix& m) {
    LaxMatrix d = toda_lax_rhs(m);
    const int n = m.n();
    for (int i = 1; i + 1 < n; ++i) d.p(i) = (i + 1 < n - 1 ? m.q(i + 1) : 0.0) - m.q(i);
    return d;
}

namespace {

Vector pack(const LaxMatrix& m) {
    Vector v(m.p.size() + m.q.size());
    v << m.p, m.q;
    return v;
}

LaxMatrix unpack(const Vector& v, int n) { return LaxMatrix{v.head(n), v.tail(n - 1)}; }

}  // namespace

LaxPath integrate_lax(const LaxMatrix& m0, const FlowConfig& cfg) {
    cfg.validate();
    const int n = m0.n();
    const int steps = cfg.steps();
    auto rhs = [n](const Vector& v) { return pack(toda_lax_rhs(unpack(v, n))); };
    LaxPath path;
    path.grid.resize(steps + 1);
    path.grid(0) = 0.0;
    path.states.push_back(m0);
    Vector v = pack(m0);
    for (int s = 1; s <= steps; ++s) {
        const double t = std::min(cfg.t_end, s * cfg.dt);
        const double h = t - path.grid(s - 1);
        const Vector k1 = rhs(v);
        const Vector k2 = rhs(v + h / 2 * k1);
        const Vector k3 = rhs(v + h / 2 * k2);
        const Vector k4 = rhs(v + h * k3);
        v += h / 6 * (k1 + 2 * k2 + 2 * k3 + k4);
        if (!v.allFinite()) throw OverflowError("Toda trajectory diverged", t);
        path.grid(s) = t;
        path.states.push_back(unpack(v, n));
    }
    return path;
}

TodaSolution toda_flow_factorized(const LaxMatrix& m0, double t, double pivot_floor) {
    const Matrix mm = m0.to_matrix();
    const Matrix e = matrix_exp(mm, t);
    GaussLDU ldu = [&] {
        try {
            return gauss_ldu(e, pivot_floor);
        } catch (const FactorizationBlowUp& err) {
            throw FactorizationBlowUp(err.minor_index(), err.minor_value(), t);
        }
    }();
    const Matrix n_inv = ldu.L.inverse().matrix();
    const Matrix mt = n_inv * mm * ldu.L.matrix();
    TodaSolution sol{LaxMatrix::from_matrix(mt), FactorizationState{ldu.L, ldu.r_part(), m0}};
    return sol;
}

std::optional<double> toda_blowup_time(const LaxMatrix& m0, double t_end, double dt, double pivot_floor,
                                       double resolution) {
    if (!(dt > 0.0)) throw RangeError("toda_blowup_time: dt must be positive");
    // All leading minors start at 1; the factorization is lost once one of
    // them reaches the floor or has crossed zero between samples.
    const Matrix mm = m0.to_matrix();
    auto fails = [&](double t) { return relative_leading_minors(matrix_exp(mm, t)).minCoeff() <= pivot_floor; };
    double good = 0.0;
    for (double t = dt; t <= t_end + 1e-12; t += dt) {
        if (fails(t)) {
            double lo = good, hi = t;
            while (hi - lo > resolution) {
                const double mid = 0.5 * (lo + hi);
                (fails(mid) ? hi : lo) = mid;
            }
            return hi;
        }
        good = t;
    }
    return std::nullopt;
}

LowerUnitriangular kostant_L(const LaxMatrix& m, const SpectralVector& lambda, double tolerance) {
    const int n = m.n();
    if (lambda.size() != n) throw RangeError("kostant_L: lambda must have length n");
    if (n == 1) {
        if (std::abs(m.p(0) - lambda(0)) > tolerance * std::max(1.0, std::abs(lambda(0))))
            throw SpectrumError("kostant_L: spectrum of M differs from lambda");
        return LowerUnitriangular::identity(1);
    }
    const Matrix mm = m.to_matrix();
    const Matrix eps = epsilon_matrix(lambda);

    // Unknowns: L(i, j) for i > j, numbered column by column.
    std::vector<std::pair<int, int>> unknowns;
    for (int j = 0; j < n; ++j)
        for (int i = j + 1; i < n; ++i) unknowns.emplace_back(i, j);
    const int count = static_cast<int>(unknowns.size());

    // Residual E(L) = eps L - L M is affine in the unknowns; column u of A is
    // E(I + E_u) - E(I).
    auto residual = [&](const Matrix& l) { return Matrix(eps * l - l * mm); };
    const Matrix base = residual(Matrix::Identity(n, n));
    Matrix a(n * n, count);
    for (int u = 0; u < count; ++u) {
        Matrix unit = Matrix::Zero(n, n);
        unit(unknowns[u].first, unknowns[u].second) = 1.0;
        const Matrix col = eps * unit - unit * mm;
        a.col(u) = Eigen::Map<const Vector>(col.data(), n * n);
    }
    const Vector rhs = -Eigen::Map<const Vector>(base.data(), n * n);
    const Vector sol = a.completeOrthogonalDecomposition().solve(rhs);

    Matrix l = Matrix::Identity(n, n);
    for (int u = 0; u < count; ++u) l(unknowns[u].first, unknowns[u].second) = sol(u);
    const double scale = std::max(1.0, mm.cwiseAbs().maxCoeff()) * std::max(1.0, l.cwiseAbs().maxCoeff());
    const double res = residual(l).cwiseAbs().maxCoeff();
    if (!(res <= tolerance * scale))
        throw SpectrumError("kostant_L: eps_lambda L = L M has no solution (residual " + std::to_string(res) +
                            "); the spectrum of M differs from lambda");
    return LowerUnitriangular(std::move(l));
}

LrEvolutionReport lr_evolution_check(const TrianglePath& traj, const SpectralVector& lambda, double tolerance) {
    const int points = traj.points();
    if (points < 5) throw RangeError("lr_evolution_check: need at least five samples");
    const int n = traj.states.front().n();
    const Matrix w0 = w0_bar(n);
    std::vector<Matrix> ls, rs;
    for (const Triangle& x : traj.states) {
        ls.push_back(h_map(x).matrix());
        rs.push_back(gauss_ldu(f_inv(x).matrix() * w0).r_part());
    }
    // Five-point central differences on the (uniform) grid.
    double dt_max = 0.0;
    double worst_l = 0.0, worst_r = 0.0;
    for (int k = 2; k + 2 < points; ++k) {
        const double h = (traj.grid(k + 2) - traj.grid(k - 2)) / 4;
        dt_max = std::max(dt_max, h);
        const Matrix m = g_lambda(traj.states[k], lambda).to_matrix();
        const Matrix q = lower_projection(m);
        const Matrix p = m - q;
        auto rate = [&](const std::vector<Matrix>& f) {
            return Matrix((f[k - 2] - 8 * f[k - 1] + 8 * f[k + 1] - f[k + 2]) / (12 * h));
        };
        worst_l = std::max(worst_l, (rate(ls) - ls[k] * q).cwiseAbs().maxCoeff());
        worst_r = std::max(worst_r, (rate(rs) - p * rs[k]).cwiseAbs().maxCoeff());
    }
    const double tol = tolerance > 0.0 ? tolerance : 1e-6 + 10.0 * dt_max * dt_max;
    return {CheckReport::make("Ldot = L Q", worst_l, tol), CheckReport::make("Rdot = P R", worst_r, tol)};
}

void write_lax_path_csv(std::ostream& os, const LaxPath& path) {
    if (path.states.empty()) return;
    const int n = path.states.front().n();
    os << "t";
    for (int i = 1; i <= n; ++i) os << ",p_" << i;
    for (int i = 1; i < n; ++i) os << ",q_" << i;
    os << '\n';
    os.precision(17);
    for (std::size_t k = 0; k < path.states.size(); ++k) {
        os << path.grid(static_cast<Eigen::Index>(k));
        for (int i = 0; i < n; ++i) os << ',' << path.states[k].p(i);
        for (int i = 0; i + 1 < n; ++i) os << ',' << path.states[k].q(i);
        os << '\n';
    }
}

}  // namespace todarsk
