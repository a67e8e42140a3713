#include "todarsk/triangle.hpp"

#include <algorithm>
#include <cmath>

namespace todarsk {

// ---------------------------------------------------------------------------
// Triangle

Triangle::Triangle(int n) : n_(n), data_(static_cast<std::size_t>(n * (n + 1) / 2), 0.0) {
    if (n < 1) throw RangeError("Triangle: n must be positive");
}

Triangle Triangle::from_rows(const std::vector<std::vector<double>>& rows) {
    const int n = static_cast<int>(rows.size());
    Triangle x(n);
    for (int m = 1; m <= n; ++m) {
        if (static_cast<int>(rows[m - 1].size()) != m)
            throw DomainError("Triangle: row " + std::to_string(m) + " must have " + std::to_string(m) + " entries");
        std::copy(rows[m - 1].begin(), rows[m - 1].end(), x.row(m).begin());
    }
    return x;
}

Triangle Triangle::from_flat(int n, std::span<const double> flat) {
    Triangle x(n);
    if (flat.size() != x.size()) throw DomainError("Triangle: flat data has wrong length");
    std::copy(flat.begin(), flat.end(), x.data_.begin());
    return x;
}

Vector Triangle::row_vector(int m) const {
    const auto r = row(m);
    Vector v(m);
    for (int i = 0; i < m; ++i) v(i) = r[static_cast<std::size_t>(i)];
    return v;
}

double Triangle::row_sum(int m) const {
    double s = 0.0;
    for (double v : row(m)) s += v;
    return s;
}

std::vector<std::vector<double>> Triangle::to_rows() const {
    std::vector<std::vector<double>> rows;
    rows.reserve(static_cast<std::size_t>(n_));
    for (int m = 1; m <= n_; ++m) rows.emplace_back(row(m).begin(), row(m).end());
    return rows;
}

double Triangle::max_abs() const {
    double s = 0.0;
    for (double v : data_) s = std::max(s, std::abs(v));
    return s;
}

double Triangle::max_abs_diff(const Triangle& other) const {
    if (other.n_ != n_) throw RangeError("Triangle: size mismatch");
    double s = 0.0;
    for (std::size_t k = 0; k < data_.size(); ++k) s = std::max(s, std::abs(data_[k] - other.data_[k]));
    return s;
}

bool Triangle::all_finite() const {
    return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

Triangle& Triangle::operator+=(const Triangle& other) {
    if (other.n_ != n_) throw RangeError("Triangle: size mismatch");
    for (std::size_t k = 0; k < data_.size(); ++k) data_[k] += other.data_[k];
    return *this;
}

Triangle& Triangle::operator*=(double s) {
    for (double& v : data_) v *= s;
    return *this;
}

void check_entry_range(const Triangle& x) {
    for (double v : x.flat())
        if (!(std::abs(v) <= kMaxTriangleEntry))
            throw OverflowError("triangle entry " + std::to_string(v) + " exceeds the exp-safe range");
}

// ---------------------------------------------------------------------------
// Lax matrices

Matrix LaxMatrix::to_matrix() const {
    const int n = this->n();
    Matrix m = Matrix::Zero(n, n);
    for (int i = 0; i < n; ++i) {
        m(i, i) = p(i);
        if (i + 1 < n) {
            m(i, i + 1) = 1.0;
            m(i + 1, i) = -q(i);
        }
    }
    return m;
}

LaxMatrix LaxMatrix::from_matrix(const Matrix& m) {
    const int n = static_cast<int>(m.rows());
    LaxMatrix lax{m.diagonal(), Vector(std::max(n - 1, 0))};
    for (int i = 0; i + 1 < n; ++i) lax.q(i) = -m(i + 1, i);
    return lax;
}

// ---------------------------------------------------------------------------
// f and its inverse

RaggedParams w_params(const Triangle& x) {
    check_entry_range(x);
    const int n = x.n();
    RaggedParams w;
    for (int m = 1; m <= n; ++m) {
        Vector wm(n - m + 1);
        wm(0) = std::exp(x(m, 1));
        for (int i = 2; i <= n - m + 1; ++i) wm(i - 1) = std::exp(x(m + i - 1, i) - x(m + i - 2, i - 1));
        w.push_back(std::move(wm));
    }
    return w;
}

PositiveUpper f_inv(const Triangle& x) {
    const int n = x.n();
    const RaggedParams w = w_params(x);
    Matrix b = Matrix::Identity(n, n);
    for (int m = 1; m <= n; ++m) {
        // E_m(w^m) = diag(I_{m-1}, eps^{n-m+1}(w^m)); right-multiplying only
        // touches columns m-1 .. n-1.
        Matrix e = Matrix::Identity(n, n);
        for (int i = 0; i < n - m + 1; ++i) {
            e(m - 1 + i, m - 1 + i) = w[m - 1](i);
            if (m + i < n) e(m - 1 + i, m + i) = 1.0;
        }
        b = b * e;
    }
    if (!b.allFinite()) throw OverflowError("f_inv: matrix entries overflow");
    return PositiveUpper::trusted(std::move(b));
}

Triangle f_map(const Matrix& b) {
    if (b.rows() != b.cols() || b.rows() < 1) throw DomainError("f_map: matrix must be square");
    const int n = static_cast<int>(b.rows());
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < i; ++j)
            if (b(i, j) != 0.0) throw DomainError("f_map: matrix is not upper triangular");
    Triangle x(n);
    for (int m = 1; m <= n; ++m) {
        double prev_log = 0.0;
        for (int k = 1; k <= m; ++k) {
            const double d = minor(b, m, k);
            if (!(d > 0.0))
                throw DomainError("f_map: minor Delta^" + std::to_string(m) + "_" + std::to_string(k) +
                                  " is not positive; matrix is outside the totally positive cell");
            const double cur_log = std::log(d);
            x(m, k) = cur_log - prev_log;
            prev_log = cur_log;
        }
    }
    return x;
}

Triangle f_map(const PositiveUpper& b) { return f_map(b.matrix()); }

// ---------------------------------------------------------------------------
// u-parameters, h

UParameters u_params(const Triangle& x) {
    check_entry_range(x);
    const int n = x.n();
    UParameters out;
    for (int m = 1; m < n; ++m) {
        Vector um(m);
        for (int i = 1; i <= m; ++i) um(i - 1) = std::exp(x(m + 1, i + 1) - x(m, i));
        out.u.push_back(std::move(um));
    }
    out.d = x.bottom_row().array().exp();
    return out;
}

Matrix lower_factor(int n, const Vector& u) {
    const int m = static_cast<int>(u.size());
    if (m >= n) throw RangeError("lower_factor: need m < n");
    // l_m(u_m) l_{m-1}(u_{m-1}) ... l_1(u_1), applied right to left.
    Matrix l = Matrix::Identity(n, n);
    for (int i = m; i >= 1; --i) {
        // right-multiplying by I + a f_i adds a * column (i+1) to column i.
        l.col(i - 1) += u(i - 1) * l.col(i);
    }
    return l;
}

LowerUnitriangular lower_from_params(int n, const RaggedParams& u) {
    Matrix l = Matrix::Identity(n, n);
    for (const Vector& um : u) l = l * lower_factor(n, um);
    return LowerUnitriangular(std::move(l));
}

RaggedParams params_from_lower(const LowerUnitriangular& l) {
    const int n = l.n();
    RaggedParams u(static_cast<std::size_t>(std::max(n - 1, 0)));
    Matrix c = l.matrix();
    for (int s = n; s >= 2; --s) {
        // The bottom row of the s x s product only sees the last block,
        // so C(s, j) = u_j u_{j+1} ... u_{s-1}.
        Vector us(s - 1);
        for (int j = 1; j <= s - 1; ++j) us(j - 1) = c(s - 1, j - 1) / c(s - 1, j);
        // Peel the factor: C <- C * L_{s-1}(u)^{-1} = C * l_1(-u_1) ... l_{s-1}(-u_{s-1}).
        for (int i = 1; i <= s - 1; ++i) c.col(i - 1) -= us(i - 1) * c.col(i);
        u[static_cast<std::size_t>(s - 2)] = std::move(us);
        c = c.topLeftCorner(s - 1, s - 1).eval();
    }
    return u;
}

LowerUnitriangular h_map(const Triangle& x) { return lower_from_params(x.n(), u_params(x).u); }

// ---------------------------------------------------------------------------
// g_lambda

RaggedParams g_lambda_rows(const Triangle& x, const SpectralVector& lambda) {
    check_entry_range(x);
    const int n = x.n();
    if (lambda.size() != n) throw RangeError("g_lambda: lambda must have length n");
    RaggedParams p;
    p.push_back(Vector::Constant(1, lambda(0)));
    for (int m = 2; m <= n; ++m) {
        const Vector& prev = p.back();
        Vector pm(m);
        pm(0) = prev(0) + std::exp(x(m, 2) - x(m - 1, 1));
        for (int i = 2; i < m; ++i)
            pm(i - 1) = prev(i - 1) + std::exp(x(m, i + 1) - x(m - 1, i)) - std::exp(x(m, i) - x(m - 1, i - 1));
        pm(m - 1) = lambda(m - 1) - std::exp(x(m, m) - x(m - 1, m - 1));
        p.push_back(std::move(pm));
    }
    return p;
}

LaxMatrix g_lambda(const Triangle& x, const SpectralVector& lambda) {
    const int n = x.n();
    RaggedParams rows = g_lambda_rows(x, lambda);
    LaxMatrix lax{std::move(rows.back()), Vector(n - 1)};
    for (int i = 1; i < n; ++i) lax.q(i - 1) = std::exp(x(n, i + 1) - x(n, i));
    return lax;
}

// ---------------------------------------------------------------------------

nlohmann::json triangle_to_json(const Triangle& x) { return {{"n", x.n()}, {"rows", x.to_rows()}}; }

Triangle triangle_from_json(const nlohmann::json& j) {
    const int n = j.at("n").get<int>();
    auto rows = j.at("rows").get<std::vector<std::vector<double>>>();
    if (static_cast<int>(rows.size()) != n) throw DomainError("triangle JSON: row count differs from n");
    return Triangle::from_rows(rows);
}

}  // namespace todarsk
