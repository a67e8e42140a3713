#include "todarsk/stochastic.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <ostream>

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/special_functions/bessel.hpp>
#include <boost/math/special_functions/bessel_prime.hpp>

#include "todarsk/critical.hpp"
#include "todarsk/flows.hpp"

namespace todarsk {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
// Integrand values below peak * e^{-37} (about 1e-16) are dropped from windows.
constexpr double kWindowDrop = 37.0;

double normal(std::mt19937_64& rng) {
    std::normal_distribution<double> nd(0.0, 1.0);
    return nd(rng);
}

// ---------------------------------------------------------------------------
// Trapezoid rule on a lattice centred at `center`, in one or two dimensions,
// with the box grown until every face sits below the drop level and the step
// halved until two successive sums agree.

struct LatticeSum {
    double log_value = kNegInf;
    bool converged = false;
};

using LatticeKey = std::array<long, 2>;

LatticeSum lattice_trapezoid(const std::function<double(const Vector&)>& logf, const Vector& center, Vector h,
                             double tol, int max_levels = 7) {
    const int d = static_cast<int>(center.size());
    std::map<LatticeKey, double> cache;
    std::array<long, 2> lo{-8, d > 1 ? -8 : 0};
    std::array<long, 2> hi{8, d > 1 ? 8 : 0};
    constexpr long kMaxSide = 400000;

    auto value = [&](long a, long b) {
        const LatticeKey key{a, b};
        auto it = cache.find(key);
        if (it != cache.end()) return it->second;
        Vector y = center;
        y(0) += static_cast<double>(a) * h(0);
        if (d > 1) y(1) += static_cast<double>(b) * h(1);
        double f = logf(y);
        if (std::isnan(f)) f = kNegInf;
        cache.emplace(key, f);
        return f;
    };

    double prev = std::numeric_limits<double>::quiet_NaN();
    for (int level = 0; level < max_levels; ++level) {
        double fmax = kNegInf;
        for (int grow = 0;; ++grow) {
            fmax = kNegInf;
            for (long a = lo[0]; a <= hi[0]; ++a)
                for (long b = lo[1]; b <= hi[1]; ++b) fmax = std::max(fmax, value(a, b));
            if (!std::isfinite(fmax)) throw NumericalError("whittaker quadrature: integrand vanishes on the window");
            bool grown = false;
            for (int dim = 0; dim < d; ++dim) {
                for (int side = 0; side < 2; ++side) {
                    const long edge = side == 0 ? lo[dim] : hi[dim];
                    double face = kNegInf;
                    const int other = 1 - dim;
                    for (long k = lo[other]; k <= hi[other]; ++k)
                        face = std::max(face, dim == 0 ? value(edge, k) : value(k, edge));
                    if (face > fmax - kWindowDrop) {
                        const long by = std::max(2L, (hi[dim] - lo[dim]) / 4);
                        (side == 0 ? lo[dim] : hi[dim]) += side == 0 ? -by : by;
                        grown = true;
                    }
                }
                if (hi[dim] - lo[dim] > kMaxSide) throw NumericalError("whittaker quadrature: window does not close");
            }
            if (!grown) break;
        }
        double sum = 0.0;
        for (long a = lo[0]; a <= hi[0]; ++a)
            for (long b = lo[1]; b <= hi[1]; ++b) sum += std::exp(value(a, b) - fmax);
        const double log_t = fmax + std::log(sum) + h.array().log().sum();
        if (level > 0 && std::abs(std::expm1(log_t - prev)) < tol) return {log_t, true};
        prev = log_t;

        std::map<LatticeKey, double> refined;
        for (const auto& [key, f] : cache) refined.emplace(LatticeKey{2 * key[0], 2 * key[1]}, f);
        cache.swap(refined);
        h /= 2.0;
        for (int dim = 0; dim < d; ++dim) {
            lo[dim] *= 2;
            hi[dim] *= 2;
        }
    }
    return {prev, false};
}

// -F_lambda restricted to the arrows between row n-1 (y) and row n (x), plus
// the lambda_n term, divided by eps.
double top_layer_log_weight(const Vector& y, const Vector& x, double lambda_n, double eps) {
    const int k = static_cast<int>(y.size());
    double s = 0.0;
    for (int i = 0; i < k; ++i) s += std::exp(x(i + 1) - y(i)) + std::exp(y(i) - x(i));
    s += lambda_n * (y.sum() - x.sum());
    return -s / eps;
}

double log_psi(const Vector& x, const Vector& lambda, double eps, bool& accurate);

double log_psi_integrand(const Vector& y, const Vector& x, const Vector& lambda, double eps, bool& accurate) {
    const int n = static_cast<int>(x.size());
    return top_layer_log_weight(y, x, lambda(n - 1), eps) + log_psi(y, lambda.head(n - 1), eps, accurate);
}

double log_psi(const Vector& x, const Vector& lambda, double eps, bool& accurate) {
    const int n = static_cast<int>(x.size());
    if (n == 1) return lambda(0) * x(0) / eps;

    const Triangle crit = critical_point(x, lambda);
    const Vector center = crit.row_vector(n - 1);
    auto logf = [&](const Vector& y) { return log_psi_integrand(y, x, lambda, eps, accurate); };

    Vector h(n - 1);
    const double f0 = logf(center);
    constexpr double probe = 1e-2;
    for (int i = 0; i < n - 1; ++i) {
        Vector yp = center, ym = center;
        yp(i) += probe;
        ym(i) -= probe;
        const double curv = -(logf(yp) - 2.0 * f0 + logf(ym)) / (probe * probe);
        h(i) = 0.5 / std::sqrt(std::max(curv, 1e-6));
    }
    const double tol = n == 2 ? 1e-13 : 1e-9;
    const LatticeSum sum = lattice_trapezoid(logf, center, h, tol);
    if (!sum.converged) accurate = false;
    return sum.log_value;
}

void check_whittaker_args(const Vector& x, const SpectralVector& lambda, double eps) {
    if (x.size() != lambda.size()) throw RangeError("whittaker: x and lambda differ in length");
    if (x.size() < 1 || x.size() > 3) throw RangeError("whittaker: quadrature is implemented for n <= 3");
    if (!(eps > 0.0)) throw DomainError("whittaker: eps must be positive");
    if (!x.allFinite() || !lambda.allFinite()) throw DomainError("whittaker: non-finite input");
}

// Interior entries of a triangle (rows 1..n-1) as a flat vector, and back.
Vector interior_of(const Triangle& t) {
    const int n = t.n();
    Vector v(n * (n - 1) / 2);
    int k = 0;
    for (int m = 1; m < n; ++m)
        for (int i = 1; i <= m; ++i) v(k++) = t(m, i);
    return v;
}

void set_interior(Triangle& t, const Vector& v) {
    int k = 0;
    for (int m = 1; m < t.n(); ++m)
        for (int i = 1; i <= m; ++i) t(m, i) = v(k++);
}

}  // namespace

// ---------------------------------------------------------------------------

int SdeConfig::steps() const { return std::max(1, static_cast<int>(std::ceil(t_end / dt - 1e-9))); }

void SdeConfig::validate() const {
    if (lambda.size() < 1) throw RangeError("SdeConfig: lambda must be non-empty");
    if (!(eps >= 0.0) || !std::isfinite(eps)) throw DomainError("SdeConfig: eps must be finite and >= 0");
    if (!(dt > 0.0) || !std::isfinite(dt)) throw DomainError("SdeConfig: dt must be positive");
    if (!(t_end > 0.0) || !std::isfinite(t_end)) throw DomainError("SdeConfig: t_end must be positive");
    if (replicas < 1) throw RangeError("SdeConfig: replicas must be >= 1");
    if (!lambda.allFinite()) throw DomainError("SdeConfig: non-finite lambda");
}

std::mt19937_64 replica_rng(std::uint64_t seed, std::uint64_t index, std::uint64_t stream) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(index),
                      static_cast<std::uint32_t>(index >> 32)};
    return std::mt19937_64(seq);
}

SampledPath sample_brownian(const SdeConfig& cfg, std::mt19937_64& rng) {
    cfg.validate();
    const int n = cfg.n();
    const int steps = cfg.steps();
    const double h = cfg.t_end / steps;
    const double scale = std::sqrt(cfg.eps * h);
    Vector grid = Vector::LinSpaced(steps + 1, 0.0, cfg.t_end);
    Matrix values(steps + 1, n);
    values.row(0).setZero();
    for (int k = 1; k <= steps; ++k)
        for (int i = 0; i < n; ++i) values(k, i) = values(k - 1, i) + scale * normal(rng) + cfg.lambda(i) * h;
    return SampledPath(std::move(grid), std::move(values));
}

Triangle em_step_rsk(const Triangle& x, const SpectralVector& lambda, double eps, const Vector& dW, double dt) {
    const int n = x.n();
    if (lambda.size() != n || dW.size() != n) throw RangeError("em_step_rsk: size mismatch");
    const double s = std::sqrt(eps);
    Triangle out = x;
    Vector prev(1);
    prev(0) = s * dW(0) + lambda(0) * dt;
    out(1, 1) += prev(0);
    for (int m = 2; m <= n; ++m) {
        Vector cur(m);
        for (int i = 1; i < m; ++i) {
            double drift = std::exp(x(m, i + 1) - x(m - 1, i));
            if (i > 1) drift -= std::exp(x(m, i) - x(m - 1, i - 1));
            cur(i - 1) = prev(i - 1) + drift * dt;
        }
        cur(m - 1) = s * dW(m - 1) + (lambda(m - 1) - std::exp(x(m, m) - x(m - 1, m - 1))) * dt;
        for (int i = 1; i <= m; ++i) out(m, i) += cur(i - 1);
        prev = std::move(cur);
    }
    return out;
}

Triangle em_step_warren(const Triangle& x, const SpectralVector& lambda, double eps, const Triangle& dW, double dt) {
    if (dW.n() != x.n() || lambda.size() != x.n()) throw RangeError("em_step_warren: size mismatch");
    Triangle out = x + dt * vf_dyn(x, lambda);
    out += std::sqrt(eps) * dW;
    return out;
}

Triangle simulate_triangle_sde(const Triangle& x0, const SdeConfig& cfg, SdeKind kind, std::mt19937_64& rng) {
    cfg.validate();
    const int n = x0.n();
    if (cfg.n() != n) throw RangeError("simulate_triangle_sde: lambda length differs from n");
    const int steps = cfg.steps();
    const double h = cfg.t_end / steps;
    const double sh = std::sqrt(h);
    Triangle x = x0;
    Vector dw(n);
    Triangle dW(n);
    for (int k = 0; k < steps; ++k) {
        if (kind == SdeKind::rsk) {
            for (int i = 0; i < n; ++i) dw(i) = sh * normal(rng);
            x = em_step_rsk(x, cfg.lambda, cfg.eps, dw, h);
        } else {
            for (double& v : dW.flat()) v = sh * normal(rng);
            x = em_step_warren(x, cfg.lambda, cfg.eps, dW, h);
        }
        if (!x.all_finite()) throw OverflowError("simulate_triangle_sde: state left double range", k * h);
    }
    return x;
}

// ---------------------------------------------------------------------------
// Whittaker functions

WhittakerEval whittaker_eval(const Vector& x, const SpectralVector& lambda, double eps) {
    check_whittaker_args(x, lambda, eps);
    WhittakerEval out;
    out.x = x;
    out.lambda = lambda;
    out.eps = eps;
    bool accurate = true;
    out.log_value = log_psi(x, lambda, eps, accurate);
    out.value = std::exp(out.log_value);
    out.accurate = accurate;
    if (!accurate) out.warning = "trapezoid refinement did not reach its tolerance";
    if (!std::isfinite(out.value)) {
        if (!out.warning.empty()) out.warning += "; ";
        out.warning += "value outside double range, use log_value";
    }
    return out;
}

Vector whittaker_grad_log(const Vector& x, const SpectralVector& lambda, double eps, double h) {
    check_whittaker_args(x, lambda, eps);
    const int n = static_cast<int>(x.size());
    Vector g(n);
    bool accurate = true;
    for (int i = 0; i < n; ++i) {
        Vector xp = x, xm = x;
        xp(i) += h;
        xm(i) -= h;
        g(i) = (log_psi(xp, lambda, eps, accurate) - log_psi(xm, lambda, eps, accurate)) / (2.0 * h);
    }
    return g;
}

double hamiltonian_ratio(const Vector& x, const SpectralVector& lambda, double eps, double h) {
    check_whittaker_args(x, lambda, eps);
    const int n = static_cast<int>(x.size());
    bool accurate = true;
    const double l0 = log_psi(x, lambda, eps, accurate);
    double lap = 0.0;
    for (int i = 0; i < n; ++i) {
        Vector xp = x, xm = x;
        xp(i) += h;
        xm(i) -= h;
        lap += (std::exp(log_psi(xp, lambda, eps, accurate) - l0) - 2.0 +
                std::exp(log_psi(xm, lambda, eps, accurate) - l0)) /
               (h * h);
    }
    double potential = 0.0;
    for (int i = 0; i + 1 < n; ++i) potential += std::exp(x(i + 1) - x(i));
    return -eps * lap + 2.0 / eps * potential;
}

WhittakerDrift2::WhittakerDrift2(const SpectralVector& lambda, double eps) {
    if (lambda.size() != 2) throw RangeError("WhittakerDrift2: n must be 2");
    if (!(eps > 0.0)) throw DomainError("WhittakerDrift2: eps must be positive");
    eps_ = eps;
    mean_part_ = (lambda(0) + lambda(1)) / (2.0 * eps);
    order_ = std::abs(lambda(0) - lambda(1)) / eps;
    step_ = 1e-3;
    z_lo_ = -30.0;
    z_hi_ = 2.0 * std::log(250.0 * eps);
    const auto count = static_cast<std::size_t>(std::ceil((z_hi_ - z_lo_) / step_)) + 1;
    table_.resize(count);
    for (std::size_t k = 0; k < count; ++k) table_[k] = ratio_direct(z_lo_ + static_cast<double>(k) * step_);
}

double WhittakerDrift2::ratio_direct(double z) const {
    const double w = 2.0 / eps_ * std::exp(z / 2.0);
    const double nu = order_;
    if (w > 500.0) {
        // log K ~ -w - log(w)/2 + log(1 + a1/w + a2/w^2)
        const double mu = 4.0 * nu * nu;
        const double a1 = (mu - 1.0) / 8.0;
        const double a2 = (mu - 1.0) * (mu - 9.0) / 128.0;
        const double series = 1.0 + a1 / w + a2 / (w * w);
        const double dlog = -1.0 - 0.5 / w + (-a1 / (w * w) - 2.0 * a2 / (w * w * w)) / series;
        return 0.5 * w * dlog;
    }
    if (w < 1e-8) {
        if (nu > 0.0) return -0.5 * nu;
        constexpr double euler_gamma = 0.57721566490153286;
        return -0.5 / (-std::log(w / 2.0) - euler_gamma);
    }
    const double k = boost::math::cyl_bessel_k(nu, w);
    const double kp = boost::math::cyl_bessel_k_prime(nu, w);
    return 0.5 * w * kp / k;
}

double WhittakerDrift2::ratio(double z) const {
    const double pos = (z - z_lo_) / step_;
    if (!(pos >= 0.0) || pos >= static_cast<double>(table_.size() - 1)) return ratio_direct(z);
    const auto k = static_cast<std::size_t>(pos);
    const double frac = pos - static_cast<double>(k);
    return (1.0 - frac) * table_[k] + frac * table_[k + 1];
}

Vector WhittakerDrift2::grad_log(const Vector& x) const {
    const double r = ratio(x(1) - x(0));
    Vector g(2);
    g << mean_part_ - r, mean_part_ + r;
    return g;
}

// ---------------------------------------------------------------------------
// Sigma_lambda sampling

std::vector<Triangle> sample_sigma_lambda(const Vector& x, const SpectralVector& lambda, double eps, long count,
                                          std::mt19937_64& rng) {
    const int n = static_cast<int>(x.size());
    if (lambda.size() != n) throw RangeError("sample_sigma_lambda: x and lambda differ in length");
    if (n < 1 || n > 3) throw RangeError("sample_sigma_lambda: implemented for n <= 3");
    if (!(eps > 0.0)) throw DomainError("sample_sigma_lambda: eps must be positive");
    if (count < 0) throw RangeError("sample_sigma_lambda: negative count");

    std::vector<Triangle> out;
    out.reserve(static_cast<std::size_t>(count));
    Triangle base(n);
    for (int i = 1; i <= n; ++i) base(n, i) = x(i - 1);
    std::uniform_real_distribution<double> unif(0.0, 1.0);

    if (n == 1) {
        out.assign(static_cast<std::size_t>(count), base);
        return out;
    }

    const Triangle crit = critical_point(x, lambda);

    if (n == 2) {
        auto logf = [&](double y) {
            return -(std::exp(x(1) - y) + std::exp(y - x(0)) + lambda(1) * (y - x(0) - x(1)) - lambda(0) * y) / eps;
        };
        const double y0 = crit(1, 1);
        const double sigma = std::sqrt(eps / (std::exp(x(1) - y0) + std::exp(y0 - x(0))));
        const double f0 = logf(y0);
        double a = y0, b = y0;
        while (logf(a) > f0 - 40.0) a -= sigma;
        while (logf(b) > f0 - 40.0) b += sigma;
        const double h = sigma / 50.0;
        const int cells = static_cast<int>(std::ceil((b - a) / h));
        std::vector<double> dens(static_cast<std::size_t>(cells) + 1), cdf(static_cast<std::size_t>(cells) + 1, 0.0);
        for (int k = 0; k <= cells; ++k) dens[static_cast<std::size_t>(k)] = std::exp(logf(a + k * h) - f0);
        for (int k = 1; k <= cells; ++k)
            cdf[static_cast<std::size_t>(k)] =
                cdf[static_cast<std::size_t>(k - 1)] +
                0.5 * h * (dens[static_cast<std::size_t>(k - 1)] + dens[static_cast<std::size_t>(k)]);
        const double total = cdf.back();
        for (long s = 0; s < count; ++s) {
            const double target = unif(rng) * total;
            auto it = std::upper_bound(cdf.begin(), cdf.end(), target);
            const auto k = static_cast<std::size_t>(std::clamp<long>(it - cdf.begin() - 1, 0, cells - 1));
            const double d0 = dens[k], d1 = dens[k + 1];
            const double rem = target - cdf[k];
            double tau;
            const double slope = (d1 - d0) / h;
            if (std::abs(slope) * h < 1e-12 * std::max(d0, 1e-300)) {
                tau = rem / d0;
            } else {
                tau = (-d0 + std::sqrt(std::max(0.0, d0 * d0 + 2.0 * slope * rem))) / slope;
            }
            Triangle t = base;
            t(1, 1) = a + static_cast<double>(k) * h + std::clamp(tau, 0.0, h);
            out.push_back(std::move(t));
        }
        return out;
    }

    // n == 3: Gaussian proposal from the Hessian of F_lambda/eps at the critical point.
    const Vector center = interior_of(crit);
    const int d = static_cast<int>(center.size());
    const double f_star = F_lambda(crit, lambda);
    auto grad_at = [&](const Vector& v) {
        Triangle t = crit;
        set_interior(t, v);
        return interior_of(F_lambda_interior_gradient(t, lambda));
    };
    Matrix hess(d, d);
    constexpr double delta = 1e-5;
    for (int j = 0; j < d; ++j) {
        Vector vp = center, vm = center;
        vp(j) += delta;
        vm(j) -= delta;
        hess.col(j) = (grad_at(vp) - grad_at(vm)) / (2.0 * delta);
    }
    hess = 0.5 * (hess + hess.transpose());
    constexpr double inflate = 1.3;
    const Eigen::LLT<Matrix> llt(hess / (eps * inflate * inflate));
    if (llt.info() != Eigen::Success) throw NumericalError("sample_sigma_lambda: Hessian is not positive definite");
    // proposal y = center + U^{-1} z with U^T U = precision
    const Matrix upper = llt.matrixU();

    auto propose = [&](Vector& v, double& log_w) {
        Vector z(d);
        for (int i = 0; i < d; ++i) z(i) = normal(rng);
        v = center + upper.triangularView<Eigen::Upper>().solve(z);
        Triangle t = crit;
        set_interior(t, v);
        log_w = -(F_lambda(t, lambda) - f_star) / eps + 0.5 * z.squaredNorm();
        if (std::isnan(log_w)) log_w = kNegInf;
    };

    double log_bound = 0.0;
    Vector v(d);
    double lw = 0.0;
    for (int k = 0; k < 4000; ++k) {
        propose(v, lw);
        log_bound = std::max(log_bound, lw);
    }
    long attempts = 0;
    while (static_cast<long>(out.size()) < count) {
        propose(v, lw);
        ++attempts;
        if (lw > log_bound) log_bound = lw;
        if (std::log(unif(rng)) < lw - log_bound) {
            Triangle t = crit;
            set_interior(t, v);
            out.push_back(std::move(t));
        }
        if (attempts >= 10000 && static_cast<double>(out.size()) < 1e-3 * static_cast<double>(attempts))
            throw EfficiencyError("sample_sigma_lambda: rejection acceptance rate below 1e-3");
    }
    return out;
}

// ---------------------------------------------------------------------------
// Two-sample statistics

double kolmogorov_survival(double t) {
    if (!(t > 0.0)) return 1.0;
    constexpr double pi = 3.14159265358979323846;
    if (t < 1.18) {
        double s = 0.0;
        for (int k = 1; k <= 20; ++k) {
            const double j = 2.0 * k - 1.0;
            s += std::exp(-j * j * pi * pi / (8.0 * t * t));
        }
        return std::clamp(1.0 - std::sqrt(2.0 * pi) / t * s, 0.0, 1.0);
    }
    double s = 0.0;
    for (int k = 1; k <= 100; ++k) {
        const double term = std::exp(-2.0 * k * k * t * t);
        s += (k % 2 == 1 ? 2.0 : -2.0) * term;
        if (term < 1e-300) break;
    }
    return std::clamp(s, 0.0, 1.0);
}

KsResult ks_two_sample(std::vector<double> a, std::vector<double> b) {
    if (a.empty() || b.empty()) throw RangeError("ks_two_sample: empty sample");
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
    std::size_t i = 0, j = 0;
    double d = 0.0;
    while (i < a.size() && j < b.size()) {
        const double v = std::min(a[i], b[j]);
        while (i < a.size() && a[i] == v) ++i;
        while (j < b.size() && b[j] == v) ++j;
        d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
    }
    const double ne = std::sqrt(na * nb / (na + nb));
    return {d, kolmogorov_survival((ne + 0.12 + 0.11 / ne) * d)};
}

double chi_squared_p_value(double statistic, int dof) {
    if (dof < 1) throw RangeError("chi_squared_p_value: dof must be >= 1");
    if (!(statistic >= 0.0)) throw DomainError("chi_squared_p_value: statistic must be >= 0");
    return boost::math::cdf(boost::math::complement(boost::math::chi_squared(dof), statistic));
}

double SimulationReport::min_p() const {
    return p_value.empty() ? 1.0 : *std::min_element(p_value.begin(), p_value.end());
}

nlohmann::json to_json(const SimulationReport& r) {
    return {{"test", r.test},
            {"n", r.n},
            {"eps", r.eps},
            {"lambda", std::vector<double>(r.lambda.data(), r.lambda.data() + r.lambda.size())},
            {"replicas", r.replicas},
            {"seed", r.seed},
            {"ks_stat", r.ks_stat},
            {"p_value", r.p_value},
            {"alpha", r.alpha},
            {"pass", r.pass}};
}

namespace {

void require_replicas(const SdeConfig& cfg) {
    if (cfg.replicas < kMinKsReplicas)
        throw RangeError("two-sample test needs at least " + std::to_string(kMinKsReplicas) + " replicas");
}

SimulationReport compare_rows(std::string name, const SdeConfig& cfg, const std::vector<Vector>& first,
                              const std::vector<Vector>& second) {
    SimulationReport rep;
    rep.test = std::move(name);
    rep.n = cfg.n();
    rep.eps = cfg.eps;
    rep.lambda = cfg.lambda;
    rep.replicas = cfg.replicas;
    rep.seed = cfg.seed;
    for (int i = 0; i < rep.n; ++i) {
        std::vector<double> a, b;
        a.reserve(first.size());
        b.reserve(second.size());
        for (const auto& v : first) a.push_back(v(i));
        for (const auto& v : second) b.push_back(v(i));
        const KsResult ks = ks_two_sample(std::move(a), std::move(b));
        rep.ks_stat.push_back(ks.statistic);
        rep.p_value.push_back(ks.p_value);
    }
    rep.pass = rep.min_p() > rep.alpha;
    return rep;
}

}  // namespace

SimulationReport generator_test(const SdeConfig& cfg, double t0, double drift_scale) {
    cfg.validate();
    require_replicas(cfg);
    if (cfg.n() != 2) throw RangeError("generator_test: implemented for n = 2");
    if (!(cfg.eps > 0.0)) throw DomainError("generator_test: eps must be positive");
    if (!(t0 > 0.0 && t0 < cfg.t_end)) throw RangeError("generator_test: need 0 < t0 < t_end");

    const WhittakerDrift2 drift(cfg.lambda, cfg.eps);
    SdeConfig start_cfg = cfg;
    start_cfg.t_end = t0;
    const int steps = std::max(1, static_cast<int>(std::lround((cfg.t_end - t0) / cfg.dt)));
    const double h = (cfg.t_end - t0) / steps;
    const double noise = std::sqrt(cfg.eps * h);

    std::vector<Vector> from_paths, from_sde;
    from_paths.reserve(static_cast<std::size_t>(cfg.replicas));
    from_sde.reserve(static_cast<std::size_t>(cfg.replicas));
    for (long r = 0; r < cfg.replicas; ++r) {
        auto rng_a = replica_rng(cfg.seed, static_cast<std::uint64_t>(r), 0);
        from_paths.push_back(pi_n(sample_brownian(cfg, rng_a)).back().bottom_row());

        auto rng_b = replica_rng(cfg.seed, static_cast<std::uint64_t>(r), 1);
        Vector x = pi_n(sample_brownian(start_cfg, rng_b)).back().bottom_row();
        auto rng_c = replica_rng(cfg.seed, static_cast<std::uint64_t>(r), 2);
        for (int k = 0; k < steps; ++k) {
            const Vector g = drift.grad_log(x);
            for (int i = 0; i < 2; ++i) x(i) += noise * normal(rng_c) + drift_scale * cfg.eps * g(i) * h;
        }
        if (!x.allFinite()) throw OverflowError("generator_test: diffusion left double range", cfg.t_end);
        from_sde.push_back(std::move(x));
    }
    return compare_rows(drift_scale == 1.0 ? "generator" : "generator_scaled_drift", cfg, from_paths, from_sde);
}

SimulationReport dynamics_comparison_test(const SdeConfig& cfg, const Vector& x) {
    cfg.validate();
    require_replicas(cfg);
    if (x.size() != cfg.n()) throw RangeError("dynamics_comparison_test: x and lambda differ in length");
    auto rng_init = replica_rng(cfg.seed, 0, 10);
    const auto starts_rsk = sample_sigma_lambda(x, cfg.lambda, cfg.eps, cfg.replicas, rng_init);
    const auto starts_warren = sample_sigma_lambda(x, cfg.lambda, cfg.eps, cfg.replicas, rng_init);
    std::vector<Vector> rsk, warren;
    for (long r = 0; r < cfg.replicas; ++r) {
        auto rng_r = replica_rng(cfg.seed, static_cast<std::uint64_t>(r), 11);
        rsk.push_back(simulate_triangle_sde(starts_rsk[static_cast<std::size_t>(r)], cfg, SdeKind::rsk, rng_r)
                          .bottom_row());
        auto rng_w = replica_rng(cfg.seed, static_cast<std::uint64_t>(r), 12);
        warren.push_back(
            simulate_triangle_sde(starts_warren[static_cast<std::size_t>(r)], cfg, SdeKind::warren, rng_w)
                .bottom_row());
    }
    return compare_rows("rsk_vs_warren", cfg, rsk, warren);
}

SimulationReport rsk_sde_path_test(const SdeConfig& cfg, const Triangle& xi) {
    cfg.validate();
    require_replicas(cfg);
    if (xi.n() != cfg.n()) throw RangeError("rsk_sde_path_test: xi and lambda differ in size");
    std::vector<Vector> sde, paths;
    for (long r = 0; r < cfg.replicas; ++r) {
        auto rng_s = replica_rng(cfg.seed, static_cast<std::uint64_t>(r), 20);
        sde.push_back(simulate_triangle_sde(xi, cfg, SdeKind::rsk, rng_s).bottom_row());
        auto rng_p = replica_rng(cfg.seed, static_cast<std::uint64_t>(r), 21);
        paths.push_back(pi_xi(sample_brownian(cfg, rng_p), xi).back().bottom_row());
    }
    return compare_rows("rsk_sde_vs_pi_xi", cfg, sde, paths);
}

void write_samples_csv(std::ostream& os, const std::vector<Triangle>& samples) {
    if (samples.empty()) return;
    const int n = samples.front().n();
    bool first = true;
    for (int m = 1; m <= n; ++m)
        for (int i = 1; i <= m; ++i) {
            os << (first ? "" : ",") << "x_" << m << "_" << i;
            first = false;
        }
    os << "\n";
    os.precision(17);
    for (const auto& t : samples) {
        first = true;
        for (double v : t.flat()) {
            os << (first ? "" : ",") << v;
            first = false;
        }
        os << "\n";
    }
}

}  // namespace todarsk
