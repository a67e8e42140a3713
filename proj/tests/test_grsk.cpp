#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sstream>

#include "helpers.hpp"
#include "todarsk/grsk.hpp"

using namespace todarsk;
using testutil::max_abs;

namespace {

// eta_i(t) = a_i t + b_i sin(c_i t) + d_i (1 - cos(e_i t)), with its derivative.
struct SmoothPath {
    Vector a, b, c, d, e;
    explicit SmoothPath(int n)
        : a(testutil::random_vector(n, -1, 1)),
          b(testutil::random_vector(n, -0.5, 0.5)),
          c(testutil::random_vector(n, 0.5, 3)),
          d(testutil::random_vector(n, -0.5, 0.5)),
          e(testutil::random_vector(n, 0.5, 3)) {}
    Vector value(double t) const {
        return (a * t + b.cwiseProduct((c * t).array().sin().matrix()) +
                d.cwiseProduct((1.0 - (e * t).array().cos()).matrix()));
    }
    Vector rate(double t) const {
        return a + b.cwiseProduct(c).cwiseProduct((c * t).array().cos().matrix()) +
               d.cwiseProduct(e).cwiseProduct((e * t).array().sin().matrix());
    }
    SampledPath sample(double t_end, int steps) const {
        const Vector grid = Vector::LinSpaced(steps + 1, 0.0, t_end);
        return SampledPath::from_function(grid, static_cast<int>(a.size()), [&](double t) { return value(t); });
    }
};

double max_diff_after_start(const SampledPath& x, const SampledPath& y) {
    return max_abs(x.values().bottomRows(x.points() - 1) - y.values().bottomRows(y.points() - 1));
}

// RK4 for b' = eps(eta'(t)) b, b(0) = b0.
Matrix rk4_b(const SmoothPath& p, const Matrix& b0, double t_end, int steps) {
    const double h = t_end / steps;
    Matrix b = b0;
    auto rhs = [&](double t, const Matrix& m) { return Matrix(epsilon_matrix(p.rate(t)) * m); };
    for (int s = 0; s < steps; ++s) {
        const double t = s * h;
        const Matrix k1 = rhs(t, b);
        const Matrix k2 = rhs(t + h / 2, b + h / 2 * k1);
        const Matrix k3 = rhs(t + h / 2, b + h / 2 * k2);
        const Matrix k4 = rhs(t + h, b + h * k3);
        b += h / 6 * (k1 + 2 * k2 + 2 * k3 + k4);
    }
    return b;
}

}  // namespace

TEST_CASE("sampled paths validate their invariants") {
    Vector grid(3);
    grid << 0, 0.5, 1;
    Matrix v = Matrix::Zero(3, 2);
    v(0, 0) = 0.1;
    CHECK_THROWS_AS(SampledPath(grid, v), DomainError);
    v(0, 0) = 0.0;
    grid(2) = 0.5;
    CHECK_THROWS_AS(SampledPath(grid, v), DomainError);
    grid(2) = 1.0;
    const SampledPath p(grid, v);
    CHECK(p.at(0.25)(0) == 0.0);
    const SampledPath lin = SampledPath::linear(Vector::Constant(2, 2.0), 1.0, 4);
    CHECK(lin.at(0.3)(1) == doctest::Approx(0.6));
    const SampledPath cut = lin.truncated(0.6);
    CHECK(cut.grid()(cut.points() - 1) == doctest::Approx(0.6));
    CHECK(cut.values()(cut.points() - 1, 0) == doctest::Approx(1.2));
}

TEST_CASE("log-domain cumulative trapezoid") {
    const Vector grid = Vector::LinSpaced(101, 0.0, 1.0);
    const Vector li = log_cumulative_integral(grid, Vector::Zero(101));
    CHECK(std::isinf(li(0)));
    CHECK(std::exp(li(100)) == doctest::Approx(1.0).epsilon(1e-14));
    // Huge exponents do not overflow.
    const Vector big = log_cumulative_integral(grid, Vector::Constant(101, 1000.0));
    CHECK(big(100) == doctest::Approx(1000.0).epsilon(1e-14));
    CHECK(log_add_exp(-std::numeric_limits<double>::infinity(), 2.0) == 2.0);
}

TEST_CASE("P_1 on simple paths") {
    const SampledPath zero = SampledPath::uniform_grid(2.0, 2000, 2);
    const SampledPath out = p_op(zero, 1);
    for (int k = 1; k < out.points(); k += 100) {
        CHECK(out(k, 1) == doctest::Approx(std::log(out.t(k))).epsilon(1e-12));
        CHECK(out(k, 2) == doctest::Approx(-std::log(out.t(k))).epsilon(1e-12));
    }

    for (double lam : {0.5, 1.0}) {
        const SampledPath eta = SampledPath::linear((Vector(2) << lam, -lam).finished(), 2.0, 20000);
        const SampledPath p = p_op(eta, 1);
        double err = 0;
        for (int k = 1; k < p.points(); ++k) {
            const double t = p.t(k);
            err = std::max(err, std::abs(p(k, 1) - std::log(std::sinh(lam * t) / lam)));
            err = std::max(err, std::abs(p(k, 2) + std::log(std::sinh(lam * t) / lam)));
        }
        CHECK(err < 1e-7);
    }
}

TEST_CASE("P_i converges at second order under grid refinement") {
    const SmoothPath sp(3);
    double prev = 0.0;
    std::vector<double> diffs;
    for (int steps : {200, 400, 800, 1600}) {
        const SampledPath eta = sp.sample(1.0, steps);
        const double v = p_op(eta, 2).values()(steps, 1);
        if (steps > 200) diffs.push_back(std::abs(v - prev));
        prev = v;
    }
    CHECK(diffs[1] / diffs[2] == doctest::Approx(4.0).epsilon(0.05));
    CHECK(diffs[0] / diffs[1] == doctest::Approx(4.0).epsilon(0.05));
}

TEST_CASE("P_i keeps the sum of the two coordinates it touches") {
    for (int rep = 0; rep < 5; ++rep) {
        const SampledPath eta = SmoothPath(4).sample(1.0, 500);
        for (int i = 1; i < 4; ++i) {
            const SampledPath p = p_op(eta, i);
            double err = 0.0;
            for (int k = 1; k < eta.points(); ++k) {
                err = std::max(err, std::abs(p(k, i) + p(k, i + 1) - eta(k, i) - eta(k, i + 1)));
                for (int j = 1; j <= 4; ++j)
                    if (j != i && j != i + 1) CHECK(p(k, j) == eta(k, j));
            }
            CHECK(err < 1e-13);
        }
    }
}

TEST_CASE("P^r_i") {
    const SampledPath zero = SampledPath::uniform_grid(2.0, 200, 2);
    const SampledPath p = p_op_r(zero, 1, 0.0);
    for (int k = 0; k < p.points(); ++k) {
        CHECK(p(k, 1) == doctest::Approx(std::log1p(p.t(k))).epsilon(1e-13));
        CHECK(p(k, 2) == doctest::Approx(-std::log1p(p.t(k))).epsilon(1e-13));
    }
    const SampledPath eta = SmoothPath(3).sample(1.0, 300);
    const SampledPath q = p_op_r(eta, 2, 0.8);
    CHECK(q(0, 2) == doctest::Approx(-0.8));
    CHECK(q(0, 3) == doctest::Approx(0.8));
    const SampledPath inf = p_op_r(eta, 2, std::numeric_limits<double>::infinity());
    CHECK(max_diff_after_start(inf, p_op(eta, 2)) == 0.0);
    // Large r approaches P_i away from t = 0.
    const SampledPath large = p_op_r(eta, 2, 40.0);
    CHECK(max_diff_after_start(large, p_op(eta, 2)) < 1e-12);
}

TEST_CASE("braid relation P1 P2 P1 = P2 P1 P2") {
    for (int rep = 0; rep < 10; ++rep) {
        const SampledPath eta = SmoothPath(3).sample(1.0, 20000);
        const SampledPath lhs = p_op(p_op(p_op(eta, 1), 2), 1);
        const SampledPath rhs = p_op(p_op(p_op(eta, 2), 1), 2);
        CHECK(max_diff_after_start(lhs, rhs) < 1e-8);
    }
}

TEST_CASE("Pi from the zero path") {
    const SampledPath zero2 = SampledPath::uniform_grid(1.0, 1000, 2);
    const TrianglePath x2 = pi_n(zero2);
    CHECK(x2.grid(0) == doctest::Approx(1e-3));
    CHECK(std::abs(x2.back()(2, 1)) < 1e-12);
    CHECK(x2.at(0.5)(2, 1) == doctest::Approx(std::log(0.5)).epsilon(1e-12));

    const SampledPath zero3 = SampledPath::uniform_grid(2.0, 2000, 3);
    const TrianglePath x3 = pi_n(zero3);
    for (double t : {0.5, 1.0, 2.0}) {
        const Triangle& x = x3.at(t);
        CHECK(x(3, 1) == doctest::Approx(std::log(t * t / 2)).epsilon(1e-6));
        // tau_2 = t^2/2 as well for n = 3 and lambda = 0.
        CHECK(x(3, 1) + x(3, 2) == doctest::Approx(std::log(t * t / 2)).epsilon(1e-6));
        CHECK(std::abs(x(3, 1) + x(3, 2) + x(3, 3)) < 1e-12);
    }
}

TEST_CASE("Pi agrees with f(b(t)) and keeps row sums") {
    for (int n = 2; n <= 4; ++n)
        for (int rep = 0; rep < 3; ++rep) {
            const SmoothPath sp(n);
            const SampledPath eta = sp.sample(1.0, 20000);
            const TrianglePath x = pi_n(eta);
            const std::vector<Matrix> bs = b_path_all(eta);
            for (int k : {2000, 10000, 20000}) {
                const Triangle fb = f_map(bs[static_cast<std::size_t>(k)]);
                CHECK(fb.max_abs_diff(x.states[static_cast<std::size_t>(k - 1)]) < 1e-8);
                for (int m = 1; m <= n; ++m) {
                    double s = 0.0;
                    for (int i = 1; i <= m; ++i) s += eta(k, i);
                    CHECK(std::abs(x.states[static_cast<std::size_t>(k - 1)].row_sum(m) - s) < 1e-12);
                }
            }
        }
}

TEST_CASE("insertion offsets") {
    const Triangle xi = Triangle::from_rows({{1}, {2, 3}, {4, 5, 7}});
    const InsertionOffsets off = insertion_offsets(xi);
    CHECK(off.mu(0) == 1);
    CHECK(off.mu(1) == 4);
    CHECK(off.mu(2) == 11);
    CHECK(off.r_at(2, 2) == 1 - 2);
    CHECK(off.r_at(3, 2) == 2 - 4);
    CHECK(off.r_at(3, 3) == (2 + 3) - (4 + 5));
}

TEST_CASE("Pi^xi from the zero triangle") {
    const SampledPath zero = SampledPath::uniform_grid(2.0, 2000, 2);
    const TrianglePath x = pi_xi(zero, Triangle(2));
    for (int k = 0; k < x.points(); k += 50) {
        CHECK(std::abs(x.states[k](1, 1)) < 1e-15);
        CHECK(x.states[k](2, 1) == doctest::Approx(std::log1p(x.grid(k))).epsilon(1e-13));
        CHECK(x.states[k](2, 2) == doctest::Approx(-std::log1p(x.grid(k))).epsilon(1e-13));
    }
}

TEST_CASE("Pi^xi starts at xi and matches the operator composition") {
    for (int n = 1; n <= 4; ++n)
        for (int rep = 0; rep < 5; ++rep) {
            const Triangle xi = testutil::random_triangle(n, -2, 2);
            const SampledPath eta = SmoothPath(n).sample(1.0, 400);
            const TrianglePath x = pi_xi(eta, xi);
            CHECK(x.states.front().max_abs_diff(xi) < 1e-13);
            const TrianglePath y = pi_xi_composed(eta, xi);
            for (int k = 0; k < x.points(); ++k) CHECK(x.states[k].max_abs_diff(y.states[k]) < 1e-12);
        }
}

TEST_CASE("Pi^xi solves the row recursion for smooth input") {
    const int n = 4;
    const SmoothPath sp(n);
    const double h = 1e-4;
    const SampledPath eta = sp.sample(1.0, 10000);
    const TrianglePath x = pi_xi(eta, testutil::random_triangle(n, -1, 1));
    double worst = 0.0;
    for (int k : {1000, 5000, 9000}) {
        const Triangle& prev = x.states[k - 1];
        const Triangle& cur = x.states[k];
        const Triangle& next = x.states[k + 1];
        const Triangle rate = (1.0 / (2 * h)) * (next - prev);
        const Vector eta_rate = sp.rate(x.grid(k));
        worst = std::max(worst, std::abs(rate(1, 1) - eta_rate(0)));
        for (int m = 2; m <= n; ++m) {
            const double first = rate(m - 1, 1) + std::exp(cur(m, 2) - cur(m - 1, 1));
            const double last = eta_rate(m - 1) - std::exp(cur(m, m) - cur(m - 1, m - 1));
            worst = std::max(worst, std::abs(rate(m, 1) - first));
            worst = std::max(worst, std::abs(rate(m, m) - last));
            for (int i = 2; i < m; ++i) {
                const double mid = rate(m - 1, i) + std::exp(cur(m, i + 1) - cur(m - 1, i)) -
                                   std::exp(cur(m, i) - cur(m - 1, i - 1));
                worst = std::max(worst, std::abs(rate(m, i) - mid));
            }
        }
    }
    CHECK(worst < 1e-6);
}

TEST_CASE("b(t) closed forms") {
    const SampledPath zero = SampledPath::uniform_grid(1.5, 1500, 3);
    const Matrix b = b_path(zero, 1.5).matrix();
    Matrix expect(3, 3);
    expect << 1, 1.5, 1.125, 0, 1, 1.5, 0, 0, 1;
    CHECK(max_abs(b - expect) < 1e-6);
    CHECK(max_abs(b_path(zero, 0.0).matrix() - Matrix::Identity(3, 3)) == 0.0);

    Vector lam(2);
    lam << 0.7, -0.4;
    const SampledPath lin = SampledPath::linear(lam, 2.0, 20000);
    for (double t : {0.5, 1.0, 1.77}) {
        const Matrix bt = b_path(lin, t).matrix();
        CHECK(bt(0, 0) == doctest::Approx(std::exp(0.7 * t)).epsilon(1e-12));
        CHECK(bt(0, 1) == doctest::Approx((std::exp(0.7 * t) - std::exp(-0.4 * t)) / 1.1).epsilon(1e-8));
    }
}

TEST_CASE("b(t) solves b' = eps(eta') b, also from a general start") {
    for (int n = 2; n <= 4; ++n) {
        const SmoothPath sp(n);
        const SampledPath eta = sp.sample(1.0, 20000);
        const Matrix b = b_path(eta, 1.0).matrix();
        const Matrix ode = rk4_b(sp, Matrix::Identity(n, n), 1.0, 2000);
        CHECK(max_abs(b - ode) / max_abs(ode) < 1e-7);
        for (int m = 1; m <= n; ++m)
            for (int k = 1; k <= m; ++k) CHECK(minor(b, m, k) > 0.0);

        // Starting from b0 the solution is b(t) b0, and f carries it to Pi^xi.
        const Triangle xi = testutil::random_triangle(n, -1, 1);
        const Matrix b0 = f_inv(xi).matrix();
        const Matrix from_b0 = rk4_b(sp, b0, 1.0, 2000);
        CHECK(max_abs(b * b0 - from_b0) / max_abs(from_b0) < 1e-7);
        const TrianglePath x = pi_xi(eta, xi);
        CHECK(f_map(from_b0).max_abs_diff(x.back()) < 1e-7);
    }
}

TEST_CASE("non-intersecting path integrals") {
    const SampledPath zero = SampledPath::uniform_grid(1.0, 1000, 3);
    const MonteCarloEstimate one = kmg_minor_oracle(zero, 1.0, 3, 1, 100000, 11);
    CHECK(std::abs(one.value - 0.5) <= 3 * one.std_error + 1e-14);
    const MonteCarloEstimate full = kmg_minor_oracle(zero, 1.0, 2, 2, 10000, 11);
    CHECK(full.value == doctest::Approx(1.0));
    const MonteCarloEstimate two = kmg_minor_oracle(zero, 1.0, 3, 2, 100000, 11);
    CHECK(std::abs(two.value - 0.5) < 3 * two.std_error);

    Vector lam(3);
    lam << 0.3, 0.0, -0.3;
    const SampledPath lin = SampledPath::linear(lam, 1.0, 1000);
    const double target = minor(b_path(lin, 1.0).matrix(), 3, 2);
    const MonteCarloEstimate est = kmg_minor_oracle(lin, 1.0, 3, 2, 100000, 5);
    CHECK(std::abs(est.value - target) < 3 * est.std_error);
    // Same seed, same estimate.
    CHECK(kmg_minor_oracle(lin, 1.0, 3, 2, 20000, 5).value == kmg_minor_oracle(lin, 1.0, 3, 2, 20000, 5).value);
    CHECK_THROWS_AS(kmg_minor_oracle(lin, 1.0, 2, 3, 20000), RangeError);
}

TEST_CASE("path CSV round trip") {
    const SampledPath eta = SmoothPath(3).sample(1.0, 10);
    std::stringstream ss;
    write_path_csv(ss, eta);
    CHECK(ss.str().rfind("t,eta_1,eta_2,eta_3\n", 0) == 0);
    const SampledPath back = read_path_csv(ss);
    CHECK(max_abs(back.values() - eta.values()) < 1e-15);

    std::stringstream tri;
    write_triangle_path_csv(tri, pi_xi(eta, Triangle(3)));
    CHECK(tri.str().rfind("t,x_1_1,x_2_1,x_2_2,x_3_1,x_3_2,x_3_3\n", 0) == 0);
}
