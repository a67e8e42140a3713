#include "todarsk/critical.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Cholesky>

#include "todarsk/flows.hpp"

namespace todarsk {

namespace {

// One arrow a -> b of the triangle diagram, weight e^{x_a - x_b}; indices into
// Triangle::flat().
struct Arrow {
    std::size_t from;
    std::size_t to;
};

std::size_t idx(int m, int i) { return Triangle::offset(m) + static_cast<std::size_t>(i - 1); }

std::vector<Arrow> arrows(int n) {
    std::vector<Arrow> out;
    for (int m = 1; m < n; ++m)
        for (int i = 1; i <= m; ++i) {
            out.push_back({idx(m + 1, i + 1), idx(m, i)});
            out.push_back({idx(m, i), idx(m + 1, i)});
        }
    return out;
}

double raw_F_lambda(const Triangle& x, const SpectralVector& lambda, const std::vector<Arrow>& arr) {
    const auto v = x.flat();
    double s = 0.0;
    for (const Arrow& a : arr) s += std::exp(v[a.from] - v[a.to]);
    double prev = 0.0;
    for (int m = 1; m <= x.n(); ++m) {
        const double cur = x.row_sum(m);
        s += lambda(m - 1) * (prev - cur);
        prev = cur;
    }
    return s;
}

// Gradient and Hessian in the interior unknowns (flat indices below
// offset(n)); also returns the largest arrow weight for scaling.
double gradient_hessian(const Triangle& x, const SpectralVector& lambda, const std::vector<Arrow>& arr, Vector& g,
                        Matrix* h) {
    const int n = x.n();
    const auto unknowns = static_cast<Eigen::Index>(Triangle::offset(n));
    const auto v = x.flat();
    g = Vector::Zero(unknowns);
    if (h) *h = Matrix::Zero(unknowns, unknowns);
    double biggest = 0.0;
    for (const Arrow& a : arr) {
        const double w = std::exp(v[a.from] - v[a.to]);
        biggest = std::max(biggest, w);
        const auto i = static_cast<Eigen::Index>(a.from), j = static_cast<Eigen::Index>(a.to);
        const bool fi = i < unknowns, fj = j < unknowns;
        if (fi) g(i) += w;
        if (fj) g(j) -= w;
        if (h) {
            if (fi) (*h)(i, i) += w;
            if (fj) (*h)(j, j) += w;
            if (fi && fj) {
                (*h)(i, j) -= w;
                (*h)(j, i) -= w;
            }
        }
    }
    for (int m = 1; m < n; ++m)
        for (int i = 1; i <= m; ++i) g(static_cast<Eigen::Index>(idx(m, i))) += lambda(m) - lambda(m - 1);
    return biggest;
}

void check_lambda(int n, const SpectralVector& lambda) {
    if (lambda.size() != n) throw RangeError("lambda must have length n");
}

}  // namespace

double CriticalResidual::max_abs() const {
    double s = 0.0;
    for (const Vector& row : residual)
        if (row.size() > 0) s = std::max(s, row.cwiseAbs().maxCoeff());
    return s;
}

CriticalResidual critical_residual(const Triangle& x, const SpectralVector& lambda) {
    check_entry_range(x);
    const int n = x.n();
    check_lambda(n, lambda);
    CriticalResidual out;
    for (int m = 1; m < n; ++m) {
        Vector l(m), r(m), res(m);
        for (int i = 1; i <= m; ++i) {
            l(i - 1) = std::exp(x(m + 1, i + 1) - x(m, i)) + (i < m ? std::exp(x(m - 1, i) - x(m, i)) : 0.0);
            r(i - 1) = std::exp(x(m, i) - x(m + 1, i)) + (i > 1 ? std::exp(x(m, i) - x(m - 1, i - 1)) : 0.0);
            res(i - 1) = lambda(m - 1) + l(i - 1) - lambda(m) - r(i - 1);
        }
        out.l.push_back(std::move(l));
        out.r.push_back(std::move(r));
        out.residual.push_back(std::move(res));
    }
    return out;
}

double critical_residual_norm(const Triangle& x, const SpectralVector& lambda) {
    return critical_residual(x, lambda).max_abs();
}

Vector rho_vector(int n) {
    Vector rho(n);
    for (int i = 0; i < n; ++i) rho(i) = n - 1 - 2.0 * i;
    return rho;
}

double F_potential(const Triangle& x) {
    check_entry_range(x);
    const auto v = x.flat();
    double s = 0.0;
    for (const Arrow& a : arrows(x.n())) s += std::exp(v[a.from] - v[a.to]);
    return s;
}

double F_lambda(const Triangle& x, const SpectralVector& lambda) {
    check_entry_range(x);
    check_lambda(x.n(), lambda);
    return raw_F_lambda(x, lambda, arrows(x.n()));
}

Triangle F_lambda_interior_gradient(const Triangle& x, const SpectralVector& lambda) {
    check_entry_range(x);
    check_lambda(x.n(), lambda);
    Vector g;
    gradient_hessian(x, lambda, arrows(x.n()), g, nullptr);
    Triangle out(x.n());
    for (Eigen::Index k = 0; k < g.size(); ++k) out.flat()[static_cast<std::size_t>(k)] = g(k);
    return out;
}

Triangle critical_point(const Vector& x, const SpectralVector& lambda, const std::optional<Triangle>& warm_start,
                        const CriticalOptions& opts) {
    const int n = static_cast<int>(x.size());
    if (n < 1) throw RangeError("critical_point: empty bottom row");
    check_lambda(n, lambda);
    if (!x.allFinite() || x.cwiseAbs().maxCoeff() > kMaxTriangleEntry)
        throw OverflowError("critical_point: bottom row outside the exp-safe range");

    Triangle cur(n);
    for (int i = 1; i <= n; ++i) cur(n, i) = x(i - 1);
    if (warm_start && warm_start->n() == n) {
        for (int m = 1; m < n; ++m)
            for (int i = 1; i <= m; ++i) cur(m, i) = (*warm_start)(m, i);
    } else {
        for (int m = n - 1; m >= 1; --m)
            for (int i = 1; i <= m; ++i) cur(m, i) = 0.5 * (cur(m + 1, i) + cur(m + 1, i + 1));
    }
    if (n == 1) return cur;

    const std::vector<Arrow> arr = arrows(n);
    const auto unknowns = static_cast<Eigen::Index>(Triangle::offset(n));
    Vector g;
    Matrix h;
    double f = raw_F_lambda(cur, lambda, arr);
    for (int iter = 0; iter < opts.max_iterations; ++iter) {
        const double scale = gradient_hessian(cur, lambda, arr, g, &h);
        const double gnorm = g.cwiseAbs().maxCoeff();
        if (gnorm <= opts.gradient_tolerance * std::max(1.0, scale)) return cur;

        Eigen::LLT<Matrix> llt(h);
        Vector step = llt.info() == Eigen::Success ? Vector(llt.solve(-g)) : Vector(-g);
        const double slope = g.dot(step);

        // Accept a trial point when F drops (Armijo) or, once F can no longer
        // resolve the decrease, when the gradient at least halves.
        double alpha = 1.0;
        bool moved = false;
        for (int k = 0; k < 60 && !moved; ++k, alpha *= 0.5) {
            Triangle trial = cur;
            for (Eigen::Index j = 0; j < unknowns; ++j) trial.flat()[static_cast<std::size_t>(j)] += alpha * step(j);
            const double ft = raw_F_lambda(trial, lambda, arr);
            if (!std::isfinite(ft)) continue;
            bool accept = ft < f && ft <= f + 1e-4 * alpha * slope;
            if (!accept) {
                Vector gt;
                gradient_hessian(trial, lambda, arr, gt, nullptr);
                accept = gt.cwiseAbs().maxCoeff() <= 0.5 * gnorm;
            }
            if (accept) {
                cur = std::move(trial);
                f = ft;
                moved = true;
            }
        }
        if (!moved) {
            if (gnorm <= 1e-9 * std::max(1.0, scale)) return cur;
            throw ConvergenceError("critical_point: line search stalled with gradient " + std::to_string(gnorm));
        }
    }
    gradient_hessian(cur, lambda, arr, g, nullptr);
    if (g.cwiseAbs().maxCoeff() <= 1e-9) return cur;
    throw ConvergenceError("critical_point: Newton did not converge");
}

double u_lambda(const Vector& x, const SpectralVector& lambda) { return F_lambda(critical_point(x, lambda), lambda); }

Vector grad_u_at(const Triangle& c, const SpectralVector& lambda) {
    const int n = c.n();
    check_lambda(n, lambda);
    Vector g(n);
    for (int j = 1; j <= n; ++j) {
        double s = -lambda(n - 1);
        if (j >= 2) s += std::exp(c(n, j) - c(n - 1, j - 1));
        if (j <= n - 1) s -= std::exp(c(n - 1, j) - c(n, j));
        g(j - 1) = s;
    }
    return g;
}

Vector grad_u(const Vector& x, const SpectralVector& lambda) { return grad_u_at(critical_point(x, lambda), lambda); }

GradientFlowPath gradient_flow(const Vector& x0, const SpectralVector& lambda, double t_end, double dt) {
    FlowConfig cfg;
    cfg.dt = dt;
    cfg.t_end = t_end;
    cfg.validate();
    const int steps = cfg.steps();
    const int n = static_cast<int>(x0.size());
    GradientFlowPath path{Vector(steps + 1), Matrix(steps + 1, n)};
    path.grid(0) = 0.0;
    path.rows.row(0) = x0.transpose();
    Vector x = x0;
    std::optional<Triangle> warm;
    auto rate = [&](const Vector& y) {
        Triangle c = critical_point(y, lambda, warm);
        warm = c;
        return Vector(-grad_u_at(c, lambda));
    };
    for (int s = 1; s <= steps; ++s) {
        const double t = std::min(t_end, s * dt);
        const double h = t - path.grid(s - 1);
        const Vector k1 = rate(x);
        const Vector k2 = rate(x + h / 2 * k1);
        const Vector k3 = rate(x + h / 2 * k2);
        const Vector k4 = rate(x + h * k3);
        x += h / 6 * (k1 + 2 * k2 + 2 * k3 + k4);
        path.grid(s) = t;
        path.rows.row(s) = x.transpose();
    }
    return path;
}

CheckReport givental_identity_check(const Triangle& x, const SpectralVector& lambda, double tolerance) {
    const double f = F_potential(x);
    const Vector rate = vf_dyn_rsk(x, lambda).bottom_row();
    const double pairing = rho_vector(x.n()).dot(rate);
    return CheckReport::make("F(X) = <rho, xdot^n>", std::abs(f - pairing), tolerance * std::max(1.0, std::abs(f)));
}

Triangle bender_knuth(const Triangle& x, int m, int i) {
    const int n = x.n();
    if (!(1 <= i && i <= m && m < n)) throw RangeError("bender_knuth: need 1 <= i <= m < n");
    const CriticalResidual cr = critical_residual(x, SpectralVector::Zero(n));
    Triangle out = x;
    out(m, i) += std::log(cr.l[static_cast<std::size_t>(m - 1)](i - 1) / cr.r[static_cast<std::size_t>(m - 1)](i - 1));
    return out;
}

Triangle singular_limit_offsets(double scale, const SpectralVector& lambda) {
    if (!(scale > 0.0)) throw RangeError("singular_limit_offsets: scale must be positive");
    return critical_point(-scale * rho_vector(static_cast<int>(lambda.size())), lambda);
}

}  // namespace todarsk
