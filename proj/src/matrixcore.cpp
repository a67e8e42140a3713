#include "todarsk/matrixcore.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

namespace todarsk {

namespace {

bool all_finite(const Matrix& a) { return a.allFinite(); }

// Sum of log norms of the first k rows. It bounds every k x k minor taken
// from those rows, the leading one included.
double log_hadamard_bound(const Matrix& a, int k) {
    double s = 0.0;
    for (int i = 0; i < k; ++i) {
        const double norm = a.row(i).norm();
        if (norm == 0.0) return -std::numeric_limits<double>::infinity();
        s += std::log(norm);
    }
    return s;
}

}  // namespace

// ---------------------------------------------------------------------------
// Strong matrix types

PositiveUpper::PositiveUpper(Matrix b) : b_(std::move(b)) {
    if (b_.rows() != b_.cols() || b_.rows() < 1) throw DomainError("PositiveUpper: matrix must be square, n >= 1");
    if (!all_finite(b_)) throw DomainError("PositiveUpper: non-finite entry");
    const int n = this->n();
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < i; ++j)
            if (b_(i, j) != 0.0) throw DomainError("PositiveUpper: entry below the diagonal is not zero");
    for (int m = 1; m <= n; ++m)
        for (int k = 1; k <= m; ++k)
            if (!(minor(b_, m, k) > 0.0))
                throw DomainError("PositiveUpper: minor Delta^" + std::to_string(m) + "_" + std::to_string(k) +
                                  " is not positive");
}

PositiveUpper PositiveUpper::trusted(Matrix b) { return PositiveUpper(std::move(b), TrustedTag{}); }

LowerUnitriangular::LowerUnitriangular(Matrix l) : l_(std::move(l)) {
    if (l_.rows() != l_.cols() || l_.rows() < 1) throw DomainError("LowerUnitriangular: matrix must be square");
    const int n = this->n();
    const double scale = std::max(1.0, l_.cwiseAbs().maxCoeff());
    for (int i = 0; i < n; ++i) {
        if (std::abs(l_(i, i) - 1.0) > 1e-12) throw DomainError("LowerUnitriangular: diagonal entry differs from 1");
        l_(i, i) = 1.0;
        for (int j = i + 1; j < n; ++j) {
            if (std::abs(l_(i, j)) > 1e-12 * scale)
                throw DomainError("LowerUnitriangular: entry above the diagonal is not zero");
            l_(i, j) = 0.0;
        }
    }
}

LowerUnitriangular LowerUnitriangular::inverse() const {
    const int n = this->n();
    Matrix inv = Matrix::Identity(n, n);
    for (int j = 0; j < n; ++j)
        for (int i = j + 1; i < n; ++i) {
            double s = 0.0;
            for (int k = j; k < i; ++k) s += l_(i, k) * inv(k, j);
            inv(i, j) = -s;
        }
    return LowerUnitriangular(std::move(inv));
}

// ---------------------------------------------------------------------------

double minor(const Matrix& b, int m, int k) {
    const int n = static_cast<int>(b.rows());
    if (b.rows() != b.cols()) throw RangeError("minor: matrix must be square");
    if (k < 0 || m < k || m > n)
        throw RangeError("minor: need 0 <= k <= m <= n, got m=" + std::to_string(m) + " k=" + std::to_string(k));
    if (k == 0) return 1.0;
    if (k == 1) return b(0, m - 1);
    return b.block(0, m - k, k, k).partialPivLu().determinant();
}

GaussLDU gauss_ldu(const Matrix& a, double pivot_floor) {
    if (a.rows() != a.cols() || a.rows() < 1) throw RangeError("gauss_ldu: matrix must be square");
    const int n = static_cast<int>(a.rows());
    Matrix work = a;
    Matrix l = Matrix::Identity(n, n);
    double log_minor = 0.0;
    for (int k = 0; k < n; ++k) {
        const double pivot = work(k, k);
        const double log_bound = log_hadamard_bound(a, k + 1);
        log_minor += std::log(std::abs(pivot));
        if (pivot == 0.0 || !std::isfinite(log_bound) || log_minor - log_bound < std::log(pivot_floor)) {
            double minor_value = 0.0;
            if (pivot != 0.0) minor_value = a.topLeftCorner(k + 1, k + 1).partialPivLu().determinant();
            throw FactorizationBlowUp(k + 1, minor_value);
        }
        for (int i = k + 1; i < n; ++i) {
            const double mult = work(i, k) / pivot;
            l(i, k) = mult;
            work(i, k) = 0.0;
            work.row(i).tail(n - k - 1) -= mult * work.row(k).tail(n - k - 1);
        }
    }
    Vector d = work.diagonal();
    Matrix u = work.triangularView<Eigen::Upper>();
    for (int i = 0; i < n; ++i) {
        u.row(i) /= d(i);
        u(i, i) = 1.0;
    }
    return GaussLDU{LowerUnitriangular(std::move(l)), std::move(d), std::move(u)};
}

Vector relative_leading_minors(const Matrix& a) {
    const int n = static_cast<int>(a.rows());
    Vector out(n);
    for (int k = 1; k <= n; ++k) {
        const double det = a.topLeftCorner(k, k).partialPivLu().determinant();
        const double log_bound = log_hadamard_bound(a, k);
        out(k - 1) = std::isfinite(log_bound) ? det / std::exp(log_bound) : 0.0;
    }
    return out;
}

std::vector<std::complex<double>> eigenvalues(const Matrix& m) {
    if (m.rows() != m.cols()) throw RangeError("eigenvalues: matrix must be square");
    Eigen::EigenSolver<Matrix> solver(m, /*computeEigenvectors=*/false);
    if (solver.info() != Eigen::Success) throw NumericalError("eigenvalues: QR iteration did not converge");
    std::vector<std::complex<double>> ev(solver.eigenvalues().data(),
                                         solver.eigenvalues().data() + solver.eigenvalues().size());
    std::sort(ev.begin(), ev.end(), [](const auto& x, const auto& y) {
        return x.real() != y.real() ? x.real() < y.real() : x.imag() < y.imag();
    });
    return ev;
}

Matrix matrix_exp(const Matrix& a_in, double t) {
    if (a_in.rows() != a_in.cols()) throw RangeError("matrix_exp: matrix must be square");
    const int n = static_cast<int>(a_in.rows());
    Matrix a = t * a_in;
    if (!a.allFinite()) throw OverflowError("matrix_exp: non-finite input");
    if (a.isZero(0.0)) return Matrix::Identity(n, n);

    // Higham (2005) degree-13 coefficients and threshold.
    static constexpr std::array<double, 14> b = {
        64764752532480000.0, 32382376266240000.0, 7771770303897600.0, 1187353796428800.0, 129060195264000.0,
        10559470521600.0,    670442572800.0,      33522128640.0,      1323241920.0,       40840800.0,
        960960.0,            16380.0,             182.0,              1.0};
    constexpr double theta13 = 5.371920351148152;

    const double norm1 = a.cwiseAbs().colwise().sum().maxCoeff();
    int squarings = 0;
    if (norm1 > theta13) squarings = static_cast<int>(std::ceil(std::log2(norm1 / theta13)));
    if (squarings > 0) a /= std::ldexp(1.0, squarings);

    const Matrix id = Matrix::Identity(n, n);
    const Matrix a2 = a * a;
    const Matrix a4 = a2 * a2;
    const Matrix a6 = a4 * a2;
    const Matrix u_inner = a6 * (b[13] * a6 + b[11] * a4 + b[9] * a2) + b[7] * a6 + b[5] * a4 + b[3] * a2 + b[1] * id;
    const Matrix u = a * u_inner;
    const Matrix v = a6 * (b[12] * a6 + b[10] * a4 + b[8] * a2) + b[6] * a6 + b[4] * a4 + b[2] * a2 + b[0] * id;
    Matrix r = (v - u).partialPivLu().solve(v + u);
    for (int s = 0; s < squarings; ++s) r = r * r;
    if (!r.allFinite()) throw OverflowError("matrix_exp: result overflows double precision");
    return r;
}

Matrix epsilon_matrix(const SpectralVector& lambda) {
    const int n = static_cast<int>(lambda.size());
    Matrix e = Matrix::Zero(n, n);
    for (int i = 0; i < n; ++i) {
        e(i, i) = lambda(i);
        if (i + 1 < n) e(i, i + 1) = 1.0;
    }
    return e;
}

Matrix generator_e(int n, int i) {
    if (i < 1 || i >= n) throw RangeError("generator_e: need 1 <= i < n");
    Matrix e = Matrix::Zero(n, n);
    e(i - 1, i) = 1.0;
    return e;
}

Matrix generator_f(int n, int i) {
    if (i < 1 || i >= n) throw RangeError("generator_f: need 1 <= i < n");
    Matrix f = Matrix::Zero(n, n);
    f(i, i - 1) = 1.0;
    return f;
}

Matrix sbar(int n, int i) {
    const Matrix id = Matrix::Identity(n, n);
    const Matrix em = id - generator_e(n, i);
    return em * (id + generator_f(n, i)) * em;
}

Matrix w0_bar(int n) {
    if (n < 1) throw RangeError("w0_bar: n must be positive");
    Matrix w = Matrix::Identity(n, n);
    for (int block = 1; block < n; ++block)
        for (int i = block; i >= 1; --i) w = w * sbar(n, i);
    return w;
}

Matrix strictly_lower(const Matrix& a) {
    Matrix out = a.triangularView<Eigen::StrictlyLower>();
    return out;
}

nlohmann::json matrix_to_json(const Matrix& a) {
    nlohmann::json rows = nlohmann::json::array();
    for (int i = 0; i < a.rows(); ++i) {
        nlohmann::json row = nlohmann::json::array();
        for (int j = 0; j < a.cols(); ++j) row.push_back(a(i, j));
        rows.push_back(std::move(row));
    }
    return {{"n", a.rows()}, {"rows", std::move(rows)}};
}

Matrix matrix_from_json(const nlohmann::json& j) {
    const int n = j.at("n").get<int>();
    const auto& rows = j.at("rows");
    if (n < 1 || static_cast<int>(rows.size()) != n) throw DomainError("matrix JSON: row count differs from n");
    Matrix a(n, n);
    for (int i = 0; i < n; ++i) {
        if (static_cast<int>(rows[i].size()) != n) throw DomainError("matrix JSON: row length differs from n");
        for (int k = 0; k < n; ++k) a(i, k) = rows[i][k].get<double>();
    }
    return a;
}

}  // namespace todarsk
