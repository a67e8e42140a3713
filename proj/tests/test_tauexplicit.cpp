#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sstream>

#include "helpers.hpp"
#include "todarsk/critical.hpp"
#include "todarsk/grsk.hpp"
#include "todarsk/tauexplicit.hpp"

using namespace todarsk;
using testutil::max_abs;
using testutil::random_separated;
using testutil::random_vector;
using testutil::uniform;

namespace {

Vector vec(std::initializer_list<double> v) {
    Vector out(static_cast<Eigen::Index>(v.size()));
    Eigen::Index i = 0;
    for (double x : v) out(i++) = x;
    return out;
}

double rel(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

}  // namespace

TEST_CASE("ExpPolynomial arithmetic") {
    const ExpPolynomial a = ExpPolynomial::monomial(1.0, 2, 3.0);  // 3 t^2 e^t
    const ExpPolynomial b = ExpPolynomial::monomial(-1.0) + ExpPolynomial::constant(2.0);
    for (double t : {0.0, 0.5, 1.7}) {
        CHECK(a(t) == doctest::Approx(3 * t * t * std::exp(t)));
        CHECK((a * b)(t) == doctest::Approx(a(t) * b(t)));
        CHECK((a - a)(t) == 0.0);
        CHECK(a.derivative()(t) == doctest::Approx(3 * (2 * t + t * t) * std::exp(t)));
        CHECK(a.derivative(2)(t) == doctest::Approx(3 * (2 + 4 * t + t * t) * std::exp(t)));
    }
    CHECK((a - a).is_zero());
    // e^t * e^{-t} merges into a constant.
    const ExpPolynomial one = ExpPolynomial::monomial(1.0) * ExpPolynomial::monomial(-1.0);
    REQUIRE(one.terms().size() == 1);
    CHECK(one.terms()[0].rate == 0.0);
    CHECK(ExpPolynomial::constant(5.0).derivative().is_zero());
}

TEST_CASE("b_ij worked examples") {
    const Vector lam = vec({0.7, -0.4, 1.3});
    CHECK(b_explicit(lam, 0.8, 2, 2) == doctest::Approx(std::exp(-0.4 * 0.8)).epsilon(1e-15));
    const double two = (std::exp(0.7 * 0.8) - std::exp(-0.4 * 0.8)) / (0.7 + 0.4);
    CHECK(rel(b_explicit(lam, 0.8, 1, 2), two) < 1e-14);
    CHECK(rel(b_det_form(lam, 0.8, 1, 2), two) < 1e-14);

    // lambda = (1, 0, -1), t = 1: b_13 = e/2 - 1 + e^{-1}/2 = cosh 1 - 1.
    const Vector sym = vec({1.0, 0.0, -1.0});
    CHECK(rel(b_explicit(sym, 1.0, 1, 3), std::cosh(1.0) - 1.0) < 1e-14);
    CHECK(std::abs(b_det_form(sym, 1.0, 1, 3) - b_explicit(sym, 1.0, 1, 3)) < 1e-12);

    for (int d = 0; d <= 5; ++d) {
        const double t = 1.3;
        double expect = std::pow(t, d);
        for (int r = 2; r <= d; ++r) expect /= r;
        CHECK(rel(b_explicit(Vector::Zero(6), t, 1, 1 + d), expect) < 1e-14);
        CHECK(rel(b_exp_polynomial(Vector::Zero(6), 1, 1 + d)(t), expect) < 1e-14);
    }
    CHECK(b_explicit(lam, 0.0, 1, 3) == 0.0);
    CHECK_THROWS_AS(b_explicit(lam, 1.0, 3, 2), RangeError);
    CHECK_THROWS_AS(b_det_form(vec({0.5, 0.5}), 1.0, 1, 2), DegenerateNodes);
}

TEST_CASE("explicit b equals the matrix exponential") {
    for (int trial = 0; trial < 40; ++trial) {
        const int n = 2 + trial % 5;
        const Vector lam = random_vector(n, -3, 3);
        const double t = uniform(0.0, 3.0);
        const Matrix e = matrix_exp(epsilon_matrix(lam), t);
        CHECK(max_abs(b_explicit_matrix(lam, t) - e) < 1e-10 * std::max(1.0, max_abs(e)));
    }
    // Repeated and nearly repeated nodes.
    for (const Vector& lam : {vec({0.5, 0.5, 0.5, -1.0}), vec({1.0, 1.0 + 1e-7, 1.0 - 3e-8, 0.2, 1.0}),
                              vec({2.0, -2.0, 2.0, -2.0, 2.0, -2.0}), vec({0.3, 0.3001, 0.2999, 0.3, 0.30005})}) {
        for (double t : {0.2, 1.0, 3.0}) {
            const Matrix e = matrix_exp(epsilon_matrix(lam), t);
            CHECK(max_abs(b_explicit_matrix(lam, t) - e) < 1e-10 * std::max(1.0, max_abs(e)));
        }
    }
    // The exact form handles exactly repeated nodes.
    for (const Vector& lam : {vec({0.5, 0.5, 0.5, -1.0}), vec({2.0, -2.0, 2.0, -2.0, 2.0, -2.0})}) {
        const int n = static_cast<int>(lam.size());
        for (double t : {0.2, 1.0, 3.0}) {
            const Matrix e = matrix_exp(epsilon_matrix(lam), t);
            CHECK(rel(b_exp_polynomial(lam, 1, n)(t), e(0, n - 1)) < 1e-11);
        }
    }
}

TEST_CASE("exact exponential polynomial form of b") {
    for (int trial = 0; trial < 10; ++trial) {
        const int n = 2 + trial % 4;
        const Vector lam = random_separated(n, 0.3, 3.0);
        for (double t : {0.5, 1.0, 2.0})
            for (int i = 1; i <= n; ++i)
                for (int j = i; j <= n; ++j)
                    CHECK(rel(b_exp_polynomial(lam, i, j)(t), b_explicit(lam, t, i, j)) < 1e-11);
    }
    // Confluent: lambda = (a, a): b_12 = t e^{at}.
    const ExpPolynomial conf = b_exp_polynomial(vec({0.4, 0.4}), 1, 2);
    CHECK(rel(conf(1.5), 1.5 * std::exp(0.6)) < 1e-15);
}

TEST_CASE("determinant form") {
    for (int trial = 0; trial < 20; ++trial) {
        const int n = 2 + trial % 4;
        const Vector lam = random_separated(n, 0.3, 2.0);
        const double t = uniform(0.1, 2.0);
        for (int i = 1; i < n; ++i)
            for (int j = i + 1; j <= n; ++j)
                CHECK(std::abs(b_det_form(lam, t, i, j) - b_explicit(lam, t, i, j)) <
                      1e-10 * std::max(1.0, std::abs(b_explicit(lam, t, i, j))));
    }
    // Near-confluent conditioning probe.
    const Vector close = vec({0.5, 0.5 + 1e-4, -0.3});
    for (double t : {0.5, 1.0, 2.0})
        CHECK(std::abs(b_det_form(close, t, 1, 3) - b_explicit(close, t, 1, 3)) < 1e-6);
}

TEST_CASE("partial-fraction weights sum to zero") {
    for (int trial = 0; trial < 25; ++trial) {
        const int n = 2 + trial % 5;
        const Vector lam = random_separated(n, 0.2, 3.0);
        double scale = 0.0;
        for (int k = 0; k < n; ++k) {
            double p = 1.0;
            for (int l = 0; l < n; ++l)
                if (l != k) p *= lam(k) - lam(l);
            scale = std::max(scale, std::abs(1.0 / p));
        }
        CHECK(std::abs(residue_sum(lam)) < 1e-12 * scale);
    }
}

TEST_CASE("tau functions") {
    // n = 3, lambda = 0.
    for (double t : {0.5, 1.0, 2.0}) {
        CHECK(rel(tau_k(Vector::Zero(3), t, 1), t * t / 2) < 1e-14);
        CHECK(rel(tau_k(Vector::Zero(3), t, 2), t * t / 2) < 1e-14);
        CHECK(rel(tau_k(Vector::Zero(3), t, 3), 1.0) < 1e-14);
    }
    // n = 2, lambda = (a, -a): tau_1 = sinh(at)/a.
    for (double a : {0.5, 1.0, 2.0}) CHECK(rel(tau_k(vec({a, -a}), 1.3, 1), std::sinh(a * 1.3) / a) < 1e-14);
    // tau_n = det e^{t eps} = e^{t sum lambda}.
    for (int trial = 0; trial < 10; ++trial) {
        const int n = 2 + trial % 3;
        const Vector lam = random_vector(n, -1, 1);
        CHECK(rel(tau_k(lam, 0.9, n), std::exp(0.9 * lam.sum())) < 1e-12);
    }
    CHECK_THROWS_AS(tau_k(Vector::Zero(3), 1.0, 4), RangeError);
}

TEST_CASE("zero-lambda closed form") {
    CHECK(rel(tau_zero_lambda(3, 1.7, 1), 1.7 * 1.7 / 2) < 1e-15);
    CHECK(rel(tau_zero_lambda(4, 1.7, 2), std::pow(1.7, 4) / 12) < 1e-14);
    CHECK(tau_zero_lambda(5, 0.3, 5) == 1.0);
    for (int n = 1; n <= 5; ++n)
        for (int k = 1; k <= n; ++k)
            for (double t : {0.5, 1.0, 2.0}) {
                CHECK(rel(tau_k(Vector::Zero(n), t, k), tau_zero_lambda(n, t, k)) < 1e-10);
                CHECK(rel(tau_k_exp(Vector::Zero(n), k)(t), tau_zero_lambda(n, t, k)) < 1e-10);
            }
}

TEST_CASE("Hankel form") {
    for (double t : {0.5, 1.0, 2.0}) {
        CHECK(rel(tau_hankel(Vector::Zero(3), t, 1), t * t / 2) < 1e-14);
        CHECK(rel(tau_hankel(Vector::Zero(3), t, 2), t * t / 2) < 1e-14);
    }
    for (int trial = 0; trial < 10; ++trial) {
        const int n = 2 + trial % 4;
        const Vector lam = random_separated(n, 0.3, 2.0);
        for (double t : {0.5, 1.0, 2.0})
            for (int k = 1; k <= n; ++k) CHECK(rel(tau_hankel(lam, t, k), tau_k(lam, t, k)) < 1e-9);
    }
}

TEST_CASE("tau functions solve the bilinear Toda identity") {
    const Vector grid = vec({0.5, 0.8, 1.0, 1.5, 2.0});
    CHECK(toda_log_second_derivative_check(Vector::Zero(2), grid).max_residual < 1e-12);
    CHECK(toda_log_second_derivative_check(Vector::Zero(3), grid).max_residual < 1e-12);
    for (int trial = 0; trial < 6; ++trial) {
        const int n = 2 + trial % 4;
        const CheckReport rep = toda_log_second_derivative_check(random_separated(n, 0.3, 2.0), grid);
        CHECK(rep.pass);
        CHECK(rep.max_residual < 1e-8);
    }

    // x^n from log tau satisfies the Toda equations, with exact derivatives.
    const Vector lam = random_separated(4, 0.3, 1.5);
    std::vector<ExpPolynomial> tau{ExpPolynomial::constant(1.0)};
    for (int k = 1; k <= 4; ++k) tau.push_back(tau_k_exp(lam, k));
    for (double t : {0.6, 1.2, 1.9}) {
        Vector x(4), acc(4);
        for (int k = 1; k <= 4; ++k) {
            auto logpp = [&](int j) {
                if (j == 0) return 0.0;
                const double v = tau[j](t), d1 = tau[j].derivative()(t), d2 = tau[j].derivative(2)(t);
                return (d2 * v - d1 * d1) / (v * v);
            };
            x(k - 1) = std::log(tau[k](t)) - std::log(tau[k - 1](t));
            acc(k - 1) = logpp(k) - logpp(k - 1);
        }
        for (int i = 0; i < 4; ++i) {
            double expect = 0.0;
            if (i > 0) expect += std::exp(x(i) - x(i - 1));
            if (i + 1 < 4) expect -= std::exp(x(i + 1) - x(i));
            CHECK(std::abs(acc(i) - expect) < 1e-8 * std::max(1.0, std::abs(expect)));
        }
    }
}

TEST_CASE("log tau rows match the path map on linear paths") {
    const Vector lam = random_separated(3, 0.3, 1.0);
    const SampledPath eta = SampledPath::linear(lam, 1.5, 3000);
    const TrianglePath x = pi_n(eta);
    for (double t : {0.5, 1.0, 1.5}) {
        const Vector expect = bottom_row_from_tau(lam, t);
        CHECK((x.at(t).bottom_row() - expect).cwiseAbs().maxCoeff() < 1e-6);
    }
}

TEST_CASE("explicit solution lies on the critical manifold") {
    for (int trial = 0; trial < 4; ++trial) {
        const int n = 2 + trial % 3;
        const Vector lam = random_separated(n, 0.3, 1.5);
        for (double t : {0.1, 0.5, 1.0, 2.0}) {
            const Triangle x = f_map(b_explicit_matrix(lam, t));
            CHECK(critical_residual_norm(x, lam) < 1e-6);
        }
    }
}

TEST_CASE("tau CSV") {
    const Vector grid = vec({0.5, 1.0});
    std::ostringstream os, rows;
    write_tau_csv(os, tau_table(Vector::Zero(3), grid));
    CHECK(os.str().rfind("t,tau_1,tau_2,tau_3\n0.5,0.125,0.125,1\n", 0) == 0);
    write_solution_rows_csv(rows, Vector::Zero(2), grid);
    CHECK(rows.str().rfind("t,x_1,x_2\n", 0) == 0);
}
