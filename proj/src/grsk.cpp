#include "todarsk/grsk.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <ostream>
#include <random>
#include <sstream>

namespace todarsk {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void check_grid(const Vector& grid) {
    if (grid.size() < 2) throw DomainError("SampledPath: grid needs at least two points");
    if (grid(0) != 0.0) throw DomainError("SampledPath: grid must start at t = 0");
    for (Eigen::Index k = 1; k < grid.size(); ++k)
        if (!(grid(k) > grid(k - 1))) throw DomainError("SampledPath: grid must be strictly increasing");
}

// Value of a piecewise-linear coordinate at time s.
double interp(const Vector& grid, const Matrix& values, int col, double s) {
    const double* begin = grid.data();
    const double* end = begin + grid.size();
    const double* it = std::upper_bound(begin, end, s);
    if (it == begin) return values(0, col);
    if (it == end) return values(grid.size() - 1, col);
    const auto k = static_cast<Eigen::Index>(it - begin);
    const double w = (s - grid(k - 1)) / (grid(k) - grid(k - 1));
    return (1.0 - w) * values(k - 1, col) + w * values(k, col);
}

// Adds L(t) (e_i - e_{i+1}) with L = log(e^{-r} + int_0^t e^{eta_{i+1} - eta_i}).
Matrix apply_p(const SampledPath& eta, int i, double r) {
    if (i < 1 || i >= eta.n()) throw RangeError("P_i: need 1 <= i < n");
    const Vector g = eta.coordinate(i + 1) - eta.coordinate(i);
    const Vector log_int = log_cumulative_integral(eta.grid(), g);
    Matrix out = eta.values();
    for (int k = 0; k < eta.points(); ++k) {
        const double l = log_add_exp(-r, log_int(k));
        out(k, i - 1) += l;
        out(k, i) -= l;
    }
    return out;
}

Triangle triangle_from_rows_at(const std::vector<Matrix>& rows_paths, int k, int n) {
    Triangle x(n);
    for (int m = 1; m <= n; ++m)
        for (int i = 1; i <= m; ++i) x(m, i) = rows_paths[static_cast<std::size_t>(m - 1)](k, i - 1);
    return x;
}

}  // namespace

// ---------------------------------------------------------------------------
// SampledPath

SampledPath::SampledPath(Vector grid, Matrix values) : grid_(std::move(grid)), values_(std::move(values)) {
    check_grid(grid_);
    if (values_.rows() != grid_.size() || values_.cols() < 1)
        throw DomainError("SampledPath: values must have one row per grid point");
    if (!values_.allFinite()) throw DomainError("SampledPath: non-finite value");
    if (values_.row(0).cwiseAbs().maxCoeff() != 0.0) throw DomainError("SampledPath: eta(0) must be 0");
}

SampledPath SampledPath::singular_start(Vector grid, Matrix values) {
    check_grid(grid);
    if (!values.bottomRows(values.rows() - 1).allFinite())
        throw DomainError("SampledPath: non-finite value at t > 0");
    return SampledPath(std::move(grid), std::move(values), true, Raw{});
}

SampledPath SampledPath::unchecked(Vector grid, Matrix values) {
    return SampledPath(std::move(grid), std::move(values), false, Raw{});
}

SampledPath SampledPath::uniform_grid(double t_end, int steps, int n) {
    if (!(t_end > 0.0) || steps < 1) throw RangeError("uniform_grid: need t_end > 0 and steps >= 1");
    Vector grid = Vector::LinSpaced(steps + 1, 0.0, t_end);
    return SampledPath(std::move(grid), Matrix::Zero(steps + 1, n));
}

SampledPath SampledPath::linear(const SpectralVector& lambda, double t_end, int steps) {
    SampledPath p = uniform_grid(t_end, steps, static_cast<int>(lambda.size()));
    p.values_ = p.grid_ * lambda.transpose();
    return p;
}

SampledPath SampledPath::from_function(const Vector& grid, int n, const std::function<Vector(double)>& fn) {
    Matrix values(grid.size(), n);
    for (Eigen::Index k = 0; k < grid.size(); ++k) values.row(k) = fn(grid(k)).transpose();
    return SampledPath(grid, std::move(values));
}

Vector SampledPath::at(double t) const {
    Vector v(n());
    for (int c = 0; c < n(); ++c) v(c) = interp(grid_, values_, c, t);
    return v;
}

SampledPath SampledPath::truncated(double t) const {
    if (t < 0.0 || t > grid_(grid_.size() - 1) * (1.0 + 1e-12))
        throw RangeError("SampledPath: time outside the sampled range");
    const double tol = 1e-12 * std::max(1.0, std::abs(t));
    int keep = 0;
    while (keep < points() && grid_(keep) < t - tol) ++keep;
    const bool on_grid = keep < points() && std::abs(grid_(keep) - t) <= tol;
    const int total = keep + 1;
    Vector g(total);
    Matrix v(total, n());
    g.head(keep) = grid_.head(keep);
    v.topRows(keep) = values_.topRows(keep);
    g(keep) = on_grid ? grid_(keep) : t;
    v.row(keep) = on_grid ? Vector(values_.row(keep).transpose()) : at(t);
    return SampledPath(std::move(g), std::move(v), singular_, Raw{});
}

int TrianglePath::index_of(double t) const {
    const double* begin = grid.data();
    const double* end = begin + grid.size();
    const double* it = std::lower_bound(begin, end, t);
    if (it == end) return points() - 1;
    if (it == begin) return 0;
    return (t - *(it - 1) <= *it - t) ? static_cast<int>(it - begin - 1) : static_cast<int>(it - begin);
}

// ---------------------------------------------------------------------------
// Quadrature

double log_add_exp(double a, double b) {
    if (a == -kInf) return b;
    if (b == -kInf) return a;
    const double hi = std::max(a, b);
    return hi + std::log1p(std::exp(std::min(a, b) - hi));
}

Vector log_cumulative_integral(const Vector& grid, const Vector& g) {
    const Eigen::Index n = grid.size();
    if (g.size() != n) throw RangeError("log_cumulative_integral: size mismatch");
    Vector out(n);
    out(0) = -kInf;
    if (n < 2) return out;

    if (std::isfinite(g(0)) || n < 3) {
        for (Eigen::Index k = 1; k < n; ++k) {
            const double seg = std::log(0.5 * (grid(k) - grid(k - 1))) + log_add_exp(g(k - 1), g(k));
            out(k) = log_add_exp(out(k - 1), seg);
        }
        return out;
    }

    // Log-singular start: e^{g(s)} ~ s^a phi(s) with integer a >= 0 and phi
    // smooth. The power is read off the first two grid points, phi is
    // interpolated linearly and s^a is integrated exactly on every cell.
    const double a_est = (g(2) - g(1)) / std::log(grid(2) / grid(1));
    if (!(a_est > -0.5)) throw NumericalError("log_cumulative_integral: integrand is not integrable at 0");
    const int a = static_cast<int>(std::lround(a_est));
    Vector log_phi(n);
    for (Eigen::Index k = 1; k < n; ++k) log_phi(k) = g(k) - a * std::log(grid(k));
    log_phi(0) = log_phi(1) - (log_phi(2) - log_phi(1)) * grid(1) / (grid(2) - grid(1));

    // Binomial coefficients C(a, j).
    std::vector<double> binom(static_cast<std::size_t>(a + 1), 1.0);
    for (int j = 1; j <= a; ++j) binom[j] = binom[j - 1] * (a - j + 1) / j;
    for (Eigen::Index k = 1; k < n; ++k) {
        const double c = grid(k - 1);
        const double h = grid(k) - c;
        // int_0^h (c+u)^a (1-u/h) du and int_0^h (c+u)^a (u/h) du, term by term.
        double w_left = 0.0, w_right = 0.0, hp = h;
        for (int j = 0; j <= a; ++j) {
            const double base = binom[j] * std::pow(c, a - j) * hp;
            w_left += base / ((j + 1.0) * (j + 2.0));
            w_right += base / (j + 2.0);
            hp *= h;
        }
        const double seg = log_add_exp(log_phi(k - 1) + std::log(w_left), log_phi(k) + std::log(w_right));
        out(k) = log_add_exp(out(k - 1), seg);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Operators

SampledPath p_op(const SampledPath& eta, int i) {
    return SampledPath::singular_start(eta.grid(), apply_p(eta, i, kInf));
}

SampledPath p_op_r(const SampledPath& eta, int i, double r) {
    if (r == kInf) return p_op(eta, i);
    return SampledPath::unchecked(eta.grid(), apply_p(eta, i, r));
}

TrianglePath pi_n(const SampledPath& eta) {
    const int n = eta.n();
    std::vector<Matrix> rows;
    rows.push_back(eta.values().leftCols(1));
    SampledPath cur = eta;
    for (int m = 2; m <= n; ++m) {
        for (int i = m - 1; i >= 1; --i) cur = p_op(cur, i);
        rows.push_back(cur.values().leftCols(m));
    }
    TrianglePath out;
    out.grid = eta.grid().tail(eta.points() - 1);
    for (int k = 1; k < eta.points(); ++k) out.states.push_back(triangle_from_rows_at(rows, k, n));
    return out;
}

InsertionOffsets insertion_offsets(const Triangle& xi) {
    const int n = xi.n();
    InsertionOffsets off;
    off.mu.resize(n);
    off.mu(0) = xi(1, 1);
    for (int m = 2; m <= n; ++m) off.mu(m - 1) = xi.row_sum(m) - xi.row_sum(m - 1);
    off.r.push_back(Vector::Zero(1));
    for (int m = 2; m <= n; ++m) {
        Vector rm = Vector::Zero(m);
        double prev = 0.0, cur = 0.0;
        for (int k = 2; k <= m; ++k) {
            prev += xi(m - 1, k - 1);
            cur += xi(m, k - 1);
            rm(k - 1) = prev - cur;
        }
        off.r.push_back(std::move(rm));
    }
    return off;
}

TrianglePath pi_xi(const SampledPath& eta, const Triangle& xi) {
    const int n = xi.n();
    if (eta.n() != n) throw RangeError("pi_xi: path and triangle dimensions differ");
    const InsertionOffsets off = insertion_offsets(xi);
    const Vector& grid = eta.grid();
    const int points = eta.points();

    // rows[m-1].col(i-1) is the path x^m_i.
    std::vector<Matrix> rows;
    rows.push_back((eta.coordinate(1).array() + off.mu(0)).matrix());
    for (int m = 2; m <= n; ++m) {
        const Matrix& above = rows.back();
        Matrix row(points, m);
        Vector y = eta.coordinate(m).array() + off.mu(m - 1);
        for (int k = m; k >= 2; --k) {
            const Vector log_int = log_cumulative_integral(grid, y - above.col(k - 2));
            Vector a(points);
            for (int s = 0; s < points; ++s) a(s) = log_add_exp(-off.r_at(m, k), log_int(s));
            row.col(k - 1) = y - a;
            y = above.col(k - 2) + a;
        }
        row.col(0) = y;
        rows.push_back(std::move(row));
    }
    TrianglePath out;
    out.grid = grid;
    for (int k = 0; k < points; ++k) out.states.push_back(triangle_from_rows_at(rows, k, n));
    return out;
}

TrianglePath pi_xi_composed(const SampledPath& eta, const Triangle& xi) {
    const int n = xi.n();
    if (eta.n() != n) throw RangeError("pi_xi: path and triangle dimensions differ");
    const InsertionOffsets off = insertion_offsets(xi);
    Matrix shifted = eta.values();
    shifted.rowwise() += off.mu.transpose();
    SampledPath cur = SampledPath::unchecked(eta.grid(), std::move(shifted));
    std::vector<Matrix> rows;
    rows.push_back(cur.values().leftCols(1));
    for (int m = 2; m <= n; ++m) {
        for (int i = m - 1; i >= 1; --i) cur = p_op_r(cur, i, off.r_at(m, i + 1));
        rows.push_back(cur.values().leftCols(m));
    }
    TrianglePath out;
    out.grid = eta.grid();
    for (int k = 0; k < eta.points(); ++k) out.states.push_back(triangle_from_rows_at(rows, k, n));
    return out;
}

// ---------------------------------------------------------------------------
// b(t)

std::vector<Matrix> b_path_all(const SampledPath& eta) {
    const int n = eta.n();
    const int points = eta.points();
    // log_b[i][j] holds the path log b_{ij}, 0-based, j >= i.
    std::vector<std::vector<Vector>> log_b(static_cast<std::size_t>(n), std::vector<Vector>(static_cast<std::size_t>(n)));
    for (int i = 0; i < n; ++i) log_b[i][i] = eta.values().col(i);
    for (int d = 1; d < n; ++d)
        for (int i = 0; i + d < n; ++i) {
            const int j = i + d;
            const Vector eta_i = eta.values().col(i);
            log_b[i][j] = eta_i + log_cumulative_integral(eta.grid(), log_b[i + 1][j] - eta_i);
        }
    std::vector<Matrix> out(static_cast<std::size_t>(points), Matrix::Zero(n, n));
    for (int k = 0; k < points; ++k)
        for (int i = 0; i < n; ++i)
            for (int j = i; j < n; ++j) out[k](i, j) = std::exp(log_b[i][j](k));
    return out;
}

PositiveUpper b_path(const SampledPath& eta, double t) {
    if (t == 0.0) return PositiveUpper::trusted(Matrix::Identity(eta.n(), eta.n()));
    const SampledPath cut = eta.truncated(t);
    Matrix b = b_path_all(cut).back();
    if (!b.allFinite()) throw OverflowError("b_path: entries overflow", t);
    return PositiveUpper::trusted(std::move(b));
}

// ---------------------------------------------------------------------------
// Non-intersecting paths

MonteCarloEstimate kmg_minor_oracle(const SampledPath& eta, double t, int m, int k, long samples,
                                    std::uint64_t seed) {
    if (k < 1 || k > m || m > eta.n()) throw RangeError("kmg_minor_oracle: need 1 <= k <= m <= n");
    if (k > 2 || m > 4) throw RangeError("kmg_minor_oracle: only k <= 2 and m <= 4 are supported");
    if (samples < 10000) throw RangeError("kmg_minor_oracle: need at least 10^4 samples");
    if (!(t > 0.0)) throw RangeError("kmg_minor_oracle: need t > 0");

    const int jumps = m - k;
    double volume = 1.0;  // |Omega_{ij}(t)| = t^{j-i}/(j-i)!
    for (int d = 1; d <= jumps; ++d) volume *= t / d;
    const double total_volume = std::pow(volume, k);

    const Vector& grid = eta.grid();
    const Matrix& values = eta.values();
    auto eta_at = [&](int level, double s) { return interp(grid, values, level - 1, s); };

    constexpr long kBatch = 10000;
    double sum = 0.0, sum_sq = 0.0;
    long done = 0;
    std::vector<std::vector<double>> times(static_cast<std::size_t>(k), std::vector<double>(static_cast<std::size_t>(jumps)));
    for (long batch = 0; done < samples; ++batch) {
        std::seed_seq seq{static_cast<std::uint64_t>(seed), static_cast<std::uint64_t>(batch)};
        std::mt19937_64 rng(seq);
        std::uniform_real_distribution<double> unif(0.0, t);
        const long count = std::min(kBatch, samples - done);
        for (long s = 0; s < count; ++s) {
            double energy = 0.0;
            for (int l = 1; l <= k; ++l) {
                auto& u = times[static_cast<std::size_t>(l - 1)];
                for (double& v : u) v = unif(rng);
                std::sort(u.begin(), u.end());
                const int j = m - k + l;  // start level
                const int i = l;          // end level
                // level h is occupied on [s_h, s_{h-1}], with s_h = u[j-1-h].
                if (jumps == 0) {
                    energy += eta_at(i, t);
                } else {
                    energy += eta_at(j, u[0]);
                    for (int h = j - 1; h > i; --h) energy += eta_at(h, u[j - h]) - eta_at(h, u[j - 1 - h]);
                    energy += eta_at(i, t) - eta_at(i, u[j - 1 - i]);
                }
            }
            bool ordered = true;
            auto level_at = [&](int l, double tau) {
                const auto& u = times[static_cast<std::size_t>(l - 1)];
                return (m - k + l) - static_cast<int>(std::upper_bound(u.begin(), u.end(), tau) - u.begin());
            };
            for (int l = 1; l <= k && ordered; ++l)
                for (double tau : times[static_cast<std::size_t>(l - 1)])
                    for (int a = 1; a < k && ordered; ++a)
                        if (level_at(a, tau) >= level_at(a + 1, tau)) ordered = false;
            const double w = ordered ? total_volume * std::exp(energy) : 0.0;
            sum += w;
            sum_sq += w * w;
        }
        done += count;
    }
    MonteCarloEstimate est;
    est.samples = done;
    est.value = sum / static_cast<double>(done);
    const double var = std::max(0.0, sum_sq / static_cast<double>(done) - est.value * est.value);
    est.std_error = std::sqrt(var / static_cast<double>(done));
    return est;
}

// ---------------------------------------------------------------------------
// CSV

void write_path_csv(std::ostream& os, const SampledPath& eta) {
    os << "t";
    for (int i = 1; i <= eta.n(); ++i) os << ",eta_" << i;
    os << '\n';
    os.precision(17);
    for (int k = 0; k < eta.points(); ++k) {
        os << eta.t(k);
        for (int i = 1; i <= eta.n(); ++i) os << ',' << eta(k, i);
        os << '\n';
    }
}

SampledPath read_path_csv(std::istream& is) {
    std::string line;
    if (!std::getline(is, line)) throw DomainError("path CSV: missing header");
    const int n = static_cast<int>(std::count(line.begin(), line.end(), ','));
    if (n < 1 || line.rfind("t,", 0) != 0) throw DomainError("path CSV: header must be t,eta_1,...,eta_n");
    std::vector<double> ts;
    std::vector<std::vector<double>> rows;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string cell;
        std::vector<double> row;
        while (std::getline(ss, cell, ',')) row.push_back(std::stod(cell));
        if (static_cast<int>(row.size()) != n + 1) throw DomainError("path CSV: wrong number of columns");
        ts.push_back(row[0]);
        rows.emplace_back(row.begin() + 1, row.end());
    }
    Vector grid(static_cast<Eigen::Index>(ts.size()));
    Matrix values(static_cast<Eigen::Index>(ts.size()), n);
    for (std::size_t k = 0; k < ts.size(); ++k) {
        grid(static_cast<Eigen::Index>(k)) = ts[k];
        for (int i = 0; i < n; ++i) values(static_cast<Eigen::Index>(k), i) = rows[k][static_cast<std::size_t>(i)];
    }
    return SampledPath(std::move(grid), std::move(values));
}

void write_triangle_path_csv(std::ostream& os, const TrianglePath& path) {
    if (path.states.empty()) return;
    const int n = path.states.front().n();
    os << "t";
    for (int m = 1; m <= n; ++m)
        for (int i = 1; i <= m; ++i) os << ",x_" << m << '_' << i;
    os << '\n';
    os.precision(17);
    for (int k = 0; k < path.points(); ++k) {
        os << path.grid(k);
        for (double v : path.states[static_cast<std::size_t>(k)].flat()) os << ',' << v;
        os << '\n';
    }
}

}  // namespace todarsk
