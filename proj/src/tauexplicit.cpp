#include "todarsk/tauexplicit.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include <Eigen/LU>

namespace todarsk {

// ---------------------------------------------------------------------------
// ExpPolynomial

ExpPolynomial ExpPolynomial::constant(double c) { return monomial(0.0, 0, c); }

ExpPolynomial ExpPolynomial::monomial(double rate, int power, double c) {
    if (power < 0) throw RangeError("ExpPolynomial: negative power");
    ExpPolynomial p;
    if (c == 0.0) return p;
    std::vector<double> coeffs(static_cast<std::size_t>(power + 1), 0.0);
    coeffs.back() = c;
    p.terms_.push_back({rate, std::move(coeffs)});
    return p;
}

double ExpPolynomial::operator()(double t) const {
    double s = 0.0;
    for (const Term& term : terms_) {
        double poly = 0.0;
        for (auto it = term.coeffs.rbegin(); it != term.coeffs.rend(); ++it) poly = poly * t + *it;
        s += poly * std::exp(term.rate * t);
    }
    return s;
}

ExpPolynomial ExpPolynomial::derivative(int order) const {
    if (order < 0) throw RangeError("ExpPolynomial: negative derivative order");
    ExpPolynomial out = *this;
    for (int d = 0; d < order; ++d) {
        for (Term& term : out.terms_) {
            // (p' + rate p) e^{rate t}
            std::vector<double> next(term.coeffs.size(), 0.0);
            for (std::size_t k = 0; k < term.coeffs.size(); ++k) {
                next[k] += term.rate * term.coeffs[k];
                if (k >= 1) next[k - 1] += static_cast<double>(k) * term.coeffs[k];
            }
            term.coeffs = std::move(next);
        }
        out.canonicalize();
    }
    return out;
}

void ExpPolynomial::add_term(double rate, const std::vector<double>& coeffs) { terms_.push_back({rate, coeffs}); }

void ExpPolynomial::canonicalize() {
    std::sort(terms_.begin(), terms_.end(), [](const Term& a, const Term& b) { return a.rate < b.rate; });
    std::vector<Term> merged;
    for (Term& term : terms_) {
        if (!merged.empty() &&
            std::abs(merged.back().rate - term.rate) <= kRateTolerance * std::max(1.0, std::abs(term.rate))) {
            auto& dst = merged.back().coeffs;
            if (dst.size() < term.coeffs.size()) dst.resize(term.coeffs.size(), 0.0);
            for (std::size_t k = 0; k < term.coeffs.size(); ++k) dst[k] += term.coeffs[k];
        } else {
            merged.push_back(std::move(term));
        }
    }
    terms_.clear();
    for (Term& term : merged) {
        while (!term.coeffs.empty() && term.coeffs.back() == 0.0) term.coeffs.pop_back();
        if (!term.coeffs.empty()) terms_.push_back(std::move(term));
    }
}

ExpPolynomial& ExpPolynomial::operator+=(const ExpPolynomial& other) {
    for (const Term& term : other.terms_) add_term(term.rate, term.coeffs);
    canonicalize();
    return *this;
}

ExpPolynomial& ExpPolynomial::operator*=(double s) {
    if (s == 0.0) {
        terms_.clear();
        return *this;
    }
    for (Term& term : terms_)
        for (double& c : term.coeffs) c *= s;
    return *this;
}

ExpPolynomial operator*(const ExpPolynomial& a, const ExpPolynomial& b) {
    ExpPolynomial out;
    for (const auto& x : a.terms_)
        for (const auto& y : b.terms_) {
            std::vector<double> conv(x.coeffs.size() + y.coeffs.size() - 1, 0.0);
            for (std::size_t i = 0; i < x.coeffs.size(); ++i)
                for (std::size_t j = 0; j < y.coeffs.size(); ++j) conv[i + j] += x.coeffs[i] * y.coeffs[j];
            out.add_term(x.rate + y.rate, conv);
        }
    out.canonicalize();
    return out;
}

// ---------------------------------------------------------------------------
// b(t)

namespace {

void check_indices(const SpectralVector& lambda, int i, int j) {
    const int n = static_cast<int>(lambda.size());
    if (!(1 <= i && i <= j && j <= n)) throw RangeError("b_explicit: need 1 <= i <= j <= n");
}

std::vector<double> sorted_nodes(const SpectralVector& lambda, int i, int j) {
    std::vector<double> z(lambda.data() + (i - 1), lambda.data() + j);
    std::sort(z.begin(), z.end());
    return z;
}

// Divided difference of e^{tz} over z[a..b] by its Taylor series about the
// mean: e^{ct} sum_{r >= k} t^r / r! h_{r-k}(z - c), k = b - a. With
// t * spread <= 1 the s-th term is below t^k / (k! s!), so 40 terms suffice.
double taylor_dd(const std::vector<double>& z, int a, int b, double t) {
    const int k = b - a;
    double c = 0.0;
    for (int l = a; l <= b; ++l) c += z[static_cast<std::size_t>(l)];
    c /= (k + 1);
    constexpr int kMaxTerms = 40;
    std::vector<double> h(kMaxTerms + 1, 0.0);
    h[0] = 1.0;
    for (int l = a; l <= b; ++l) {
        const double d = z[static_cast<std::size_t>(l)] - c;
        for (int s = 1; s <= kMaxTerms; ++s) h[s] += d * h[s - 1];
    }
    double coef = 1.0;  // t^r / r!
    for (int r = 1; r <= k; ++r) coef *= t / r;
    double sum = 0.0;
    for (int s = 0; s <= kMaxTerms; ++s) {
        const double term = coef * h[s];
        sum += term;
        coef *= t / (k + s + 1);
    }
    return std::exp(c * t) * sum;
}

}  // namespace

double b_explicit(const SpectralVector& lambda, double t, int i, int j) {
    check_indices(lambda, i, j);
    const std::vector<double> z = sorted_nodes(lambda, i, j);
    const int count = static_cast<int>(z.size());
    // table[a][len] = divided difference over z[a .. a+len]; split at the
    // extremes so every division is by the widest gap of its range.
    std::vector<std::vector<double>> table(static_cast<std::size_t>(count));
    for (int len = 0; len < count; ++len)
        for (int a = 0; a + len < count; ++a) {
            const int b = a + len;
            double v;
            const double spread = z[static_cast<std::size_t>(b)] - z[static_cast<std::size_t>(a)];
            if (len == 0) v = std::exp(z[static_cast<std::size_t>(a)] * t);
            else if (std::abs(t) * spread <= 1.0) v = taylor_dd(z, a, b, t);
            else v = (table[static_cast<std::size_t>(a + 1)][static_cast<std::size_t>(len - 1)] -
                      table[static_cast<std::size_t>(a)][static_cast<std::size_t>(len - 1)]) / spread;
            table[static_cast<std::size_t>(a)].push_back(v);
        }
    return table[0][static_cast<std::size_t>(count - 1)];
}

Matrix b_explicit_matrix(const SpectralVector& lambda, double t) {
    const int n = static_cast<int>(lambda.size());
    Matrix b = Matrix::Zero(n, n);
    for (int i = 1; i <= n; ++i)
        for (int j = i; j <= n; ++j) b(i - 1, j - 1) = b_explicit(lambda, t, i, j);
    return b;
}

ExpPolynomial b_exp_polynomial(const SpectralVector& lambda, int i, int j) {
    check_indices(lambda, i, j);
    const std::vector<double> z = sorted_nodes(lambda, i, j);
    struct Cluster {
        double node;
        int mult;
    };
    std::vector<Cluster> clusters;
    for (std::size_t a = 0; a < z.size();) {
        std::size_t b = a;
        double sum = 0.0;
        while (b < z.size() && z[b] - z[a] <= kNodeClusterTolerance * std::max(1.0, std::abs(z[a]))) sum += z[b++];
        clusters.push_back({sum / static_cast<double>(b - a), static_cast<int>(b - a)});
        a = b;
    }
    ExpPolynomial out;
    for (std::size_t c = 0; c < clusters.size(); ++c) {
        const int m = clusters[c].mult;
        const double mu = clusters[c].node;
        // Taylor coefficients at mu of prod_{other} (z - nu)^{-mult}, to order m-1.
        std::vector<double> g(static_cast<std::size_t>(m), 0.0);
        g[0] = 1.0;
        for (std::size_t o = 0; o < clusters.size(); ++o) {
            if (o == c) continue;
            const double d = mu - clusters[o].node;
            const int p = clusters[o].mult;
            std::vector<double> factor(static_cast<std::size_t>(m));
            double binom = 1.0;  // C(p+s-1, s)
            for (int s = 0; s < m; ++s) {
                if (s > 0) binom *= static_cast<double>(p + s - 1) / s;
                factor[static_cast<std::size_t>(s)] = ((s % 2) ? -1.0 : 1.0) * binom * std::pow(d, -(p + s));
            }
            std::vector<double> next(static_cast<std::size_t>(m), 0.0);
            for (int a = 0; a < m; ++a)
                for (int b = 0; a + b < m; ++b)
                    next[static_cast<std::size_t>(a + b)] += g[static_cast<std::size_t>(a)] * factor[static_cast<std::size_t>(b)];
            g = std::move(next);
        }
        // Residue: e^{mu t} sum_r t^r / r! g_{m-1-r}.
        double fact = 1.0;
        for (int r = 0; r < m; ++r) {
            if (r > 0) fact *= r;
            out += ExpPolynomial::monomial(mu, r, g[static_cast<std::size_t>(m - 1 - r)] / fact);
        }
    }
    return out;
}

double b_det_form(const SpectralVector& lambda, double t, int i, int j) {
    check_indices(lambda, i, j);
    if (i == j) throw RangeError("b_det_form: need i < j");
    const int size = j - i + 1;
    double vandermonde = 1.0;
    for (int k = i; k <= j; ++k)
        for (int l = k + 1; l <= j; ++l) {
            const double gap = lambda(k - 1) - lambda(l - 1);
            if (std::abs(gap) <= 1e-12 * std::max(1.0, std::abs(lambda(k - 1))))
                throw DegenerateNodes("b_det_form: lambda_" + std::to_string(k) + " and lambda_" + std::to_string(l) +
                                      " coincide; use b_explicit");
            vandermonde *= gap;
        }
    Matrix m(size, size);
    for (int r = 0; r < size; ++r) {
        const double x = lambda(i - 1 + r);
        m(r, 0) = std::exp(x * t);
        for (int c = 1; c < size; ++c) m(r, c) = std::pow(x, size - 1 - c);
    }
    return m.partialPivLu().determinant() / vandermonde;
}

double residue_sum(const SpectralVector& lambda) {
    const int n = static_cast<int>(lambda.size());
    double s = 0.0;
    for (int k = 0; k < n; ++k) {
        double p = 1.0;
        for (int l = 0; l < n; ++l)
            if (l != k) p *= lambda(k) - lambda(l);
        s += 1.0 / p;
    }
    return s;
}

// ---------------------------------------------------------------------------
// tau functions

namespace {

void check_k(const SpectralVector& lambda, int k) {
    if (!(1 <= k && k <= lambda.size())) throw RangeError("tau: need 1 <= k <= n");
}

ExpPolynomial det_exp(const std::vector<std::vector<ExpPolynomial>>& a, std::vector<int>& rows, int col) {
    const int size = static_cast<int>(a.size());
    if (col == size) return ExpPolynomial::constant(1.0);
    ExpPolynomial out;
    int sign = 1;
    for (std::size_t r = 0; r < rows.size(); ++r) {
        const int row = rows[r];
        const ExpPolynomial& entry = a[static_cast<std::size_t>(row)][static_cast<std::size_t>(col)];
        if (!entry.is_zero()) {
            std::vector<int> rest = rows;
            rest.erase(rest.begin() + static_cast<long>(r));
            ExpPolynomial sub = det_exp(a, rest, col + 1);
            out += static_cast<double>(sign) * (entry * sub);
        }
        sign = -sign;
    }
    return out;
}

}  // namespace

double tau_k(const SpectralVector& lambda, double t, int k) {
    check_k(lambda, k);
    const int n = static_cast<int>(lambda.size());
    return minor(b_explicit_matrix(lambda, t), n, k);
}

ExpPolynomial tau_k_exp(const SpectralVector& lambda, int k) {
    check_k(lambda, k);
    const int n = static_cast<int>(lambda.size());
    std::vector<std::vector<ExpPolynomial>> a(static_cast<std::size_t>(k),
                                               std::vector<ExpPolynomial>(static_cast<std::size_t>(k)));
    for (int r = 1; r <= k; ++r)
        for (int c = 1; c <= k; ++c) {
            const int col = n - k + c;
            if (r <= col) a[static_cast<std::size_t>(r - 1)][static_cast<std::size_t>(c - 1)] = b_exp_polynomial(lambda, r, col);
        }
    std::vector<int> rows(static_cast<std::size_t>(k));
    for (int r = 0; r < k; ++r) rows[static_cast<std::size_t>(r)] = r;
    return det_exp(a, rows, 0);
}

double tau_hankel(const SpectralVector& lambda, double t, int k) {
    check_k(lambda, k);
    const int n = static_cast<int>(lambda.size());
    ExpPolynomial d = b_exp_polynomial(lambda, 1, n);
    std::vector<double> derivs;
    for (int s = 0; s <= 2 * k - 2; ++s) {
        derivs.push_back(d(t));
        d = d.derivative();
    }
    Matrix h(k, k);
    for (int r = 0; r < k; ++r)
        for (int c = 0; c < k; ++c) h(r, c) = derivs[static_cast<std::size_t>(k - 1 - c + r)];
    return h.partialPivLu().determinant();
}

double tau_zero_lambda(int n, double t, int k) {
    if (!(1 <= k && k <= n)) throw RangeError("tau_zero_lambda: need 1 <= k <= n");
    double log_c = 0.0;
    for (int a = 1; a <= k - 1; ++a) log_c += std::lgamma(a + 1.0);
    for (int a = n - k; a <= n - 1; ++a) log_c -= std::lgamma(a + 1.0);
    return std::exp(log_c) * std::pow(t, k * (n - k));
}

TauTable tau_table(const SpectralVector& lambda, const Vector& grid) {
    const int n = static_cast<int>(lambda.size());
    TauTable table{grid, Matrix(grid.size(), n)};
    for (Eigen::Index r = 0; r < grid.size(); ++r) {
        const Matrix b = b_explicit_matrix(lambda, grid(r));
        for (int k = 1; k <= n; ++k) table.tau(r, k - 1) = minor(b, n, k);
    }
    return table;
}

Vector bottom_row_from_tau(const SpectralVector& lambda, double t) {
    const int n = static_cast<int>(lambda.size());
    const Matrix b = b_explicit_matrix(lambda, t);
    Vector x(n);
    double prev = 0.0;
    for (int k = 1; k <= n; ++k) {
        const double tau = minor(b, n, k);
        if (!(tau > 0.0)) throw DomainError("bottom_row_from_tau: tau_" + std::to_string(k) + " is not positive");
        const double cur = std::log(tau);
        x(k - 1) = cur - prev;
        prev = cur;
    }
    return x;
}

CheckReport toda_log_second_derivative_check(const SpectralVector& lambda, const Vector& t_grid, double tolerance) {
    const int n = static_cast<int>(lambda.size());
    std::vector<ExpPolynomial> tau(static_cast<std::size_t>(n + 2));
    tau[0] = ExpPolynomial::constant(1.0);
    for (int k = 1; k <= n; ++k) tau[static_cast<std::size_t>(k)] = tau_k_exp(lambda, k);
    double worst = 0.0;
    for (int k = 1; k <= n; ++k) {
        const ExpPolynomial& f = tau[static_cast<std::size_t>(k)];
        const ExpPolynomial f1 = f.derivative(), f2 = f.derivative(2);
        for (Eigen::Index r = 0; r < t_grid.size(); ++r) {
            const double t = t_grid(r);
            const double v = f(t);
            const double lhs = (f2(t) * v - f1(t) * f1(t)) / (v * v);
            const double rhs = -tau[static_cast<std::size_t>(k + 1)](t) * tau[static_cast<std::size_t>(k - 1)](t) / (v * v);
            worst = std::max(worst, std::abs(lhs - rhs) / std::max(1.0, std::abs(rhs)));
        }
    }
    return CheckReport::make("(log tau_k)'' = -tau_{k+1} tau_{k-1} / tau_k^2", worst, tolerance);
}

void write_tau_csv(std::ostream& os, const TauTable& table) {
    const auto n = table.tau.cols();
    os << "t";
    for (Eigen::Index k = 1; k <= n; ++k) os << ",tau_" << k;
    os << '\n';
    os.precision(17);
    for (Eigen::Index r = 0; r < table.grid.size(); ++r) {
        os << table.grid(r);
        for (Eigen::Index k = 0; k < n; ++k) os << ',' << table.tau(r, k) + 0.0;
        os << '\n';
    }
}

void write_solution_rows_csv(std::ostream& os, const SpectralVector& lambda, const Vector& grid) {
    const auto n = lambda.size();
    os << "t";
    for (Eigen::Index k = 1; k <= n; ++k) os << ",x_" << k;
    os << '\n';
    os.precision(17);
    for (Eigen::Index r = 0; r < grid.size(); ++r) {
        const Vector x = bottom_row_from_tau(lambda, grid(r));
        os << grid(r);
        for (Eigen::Index k = 0; k < n; ++k) os << ',' << x(k);
        os << '\n';
    }
}

}  // namespace todarsk
