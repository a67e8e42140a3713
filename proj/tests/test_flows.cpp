#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <sstream>

#include "helpers.hpp"
#include "todarsk/critical.hpp"
#include "todarsk/flows.hpp"

using namespace todarsk;
using testutil::max_abs;
using testutil::random_separated;
using testutil::random_triangle;
using testutil::random_vector;
using testutil::uniform;

namespace {

FlowConfig config(double t_end, double dt = 1e-3) {
    FlowConfig cfg;
    cfg.t_end = t_end;
    cfg.dt = dt;
    return cfg;
}

// Bottom row of the n = 2 critical-start solution with lambda = (lam, -lam) and
// x^2(0) = (x, -x).
double example_86(double lam, double x, double t) {
    const double e_neg_y = std::sqrt(lam * lam * std::exp(2 * x) + 1) - lam * std::exp(x);
    return std::log(std::exp(x + lam * t) + e_neg_y * std::sinh(lam * t) / lam);
}

Triangle example_86_start(double lam, double x) {
    Vector bottom(2), lambda(2);
    bottom << x, -x;
    lambda << lam, -lam;
    return critical_point(bottom, lambda);
}

Vector sym(double a) {
    Vector v(2);
    v << a, -a;
    return v;
}

// Real parts of the sorted spectrum; a complex pair is reported as a NaN entry.
Vector sorted_eigs(const Matrix& m) {
    const auto ev = eigenvalues(m);
    Vector out(static_cast<Eigen::Index>(ev.size()));
    for (std::size_t i = 0; i < ev.size(); ++i)
        out(static_cast<Eigen::Index>(i)) = std::abs(ev[i].imag()) < 1e-9 ? ev[i].real() : NAN;
    return out;
}

struct OnManifold {
    Vector lambda;
    Triangle x;
};

OnManifold random_on_manifold(int n, double gap = 0.3) {
    const Vector lambda = random_separated(n, gap, 1.0);
    return {lambda, critical_point(random_vector(n, -1, 1), lambda)};
}

}  // namespace

TEST_CASE("vector fields at the zero triangle") {
    for (TriangleField f : {TriangleField::rsk, TriangleField::local}) {
        const Triangle v = vector_field(Triangle(2), Vector::Zero(2), f);
        CHECK(v(1, 1) == 0.0);
        CHECK(v(2, 1) == doctest::Approx(1.0));
        CHECK(v(2, 2) == doctest::Approx(-1.0));
    }
    const Triangle off = Triangle::from_rows({{1.0}, {0.0, 0.0}});
    CHECK(vf_dyn_rsk(off, Vector::Zero(2))(2, 1) == doctest::Approx(std::exp(-1.0)));
    CHECK(vf_dyn(off, Vector::Zero(2))(2, 1) == doctest::Approx(std::exp(1.0)));
}

TEST_CASE("RSK field along the lambda = 0 solution") {
    for (double t : {0.0, 0.5, 1.0, 3.0}) {
        const double l = std::log1p(t);
        const Triangle x = Triangle::from_rows({{0.0}, {l, -l}});
        CHECK(vf_dyn_rsk(x, Vector::Zero(2))(2, 1) == doctest::Approx(1.0 / (1.0 + t)).epsilon(1e-14));
    }
}

TEST_CASE("fields agree on the critical manifold") {
    for (int trial = 0; trial < 12; ++trial) {
        const int n = 2 + trial % 4;
        const OnManifold s = random_on_manifold(n);
        const Triangle a = vf_dyn_rsk(s.x, s.lambda), b = vf_dyn(s.x, s.lambda);
        CHECK(a.max_abs_diff(b) < 1e-9);
        for (int m = 1; m <= n; ++m) {
            double sum = 0.0;
            for (int i = 1; i <= m; ++i) sum += a(m, i) - (i < m ? a(m - 1, i) : 0.0);
            CHECK(sum == doctest::Approx(s.lambda(m - 1)).epsilon(1e-10));
        }
    }
    CHECK(vf_dyn_rsk(random_triangle(3), Vector::Zero(3)).max_abs_diff(vf_dyn(random_triangle(3), Vector::Zero(3))) >
          1e-3);
}

TEST_CASE("RK4 reproduces the lambda = 0 solution") {
    const TrianglePath path = integrate_triangle(Triangle(2), Vector::Zero(2), config(2.0));
    for (double t : {0.5, 1.0, 2.0}) {
        const Triangle& x = path.at(t);
        CHECK(std::abs(x(2, 1) - std::log1p(t)) < 1e-8);
        CHECK(std::abs(x(2, 2) + std::log1p(t)) < 1e-8);
        CHECK(std::abs(x(1, 1)) < 1e-14);
    }
    CHECK(path.grid(path.points() - 1) == 2.0);
    CHECK(path.points() == 2001);
}

TEST_CASE("RK4 reproduces the critical-start solution") {
    for (double lam : {1.0, 0.6}) {
        for (double x0 : {0.0, 0.4}) {
            const Triangle start = example_86_start(lam, x0);
            const TrianglePath path = integrate_triangle(start, sym(lam), config(2.0));
            double worst = 0.0;
            for (int k = 0; k < path.points(); ++k) {
                const double t = path.grid(k);
                worst = std::max(worst, std::abs(path.states[k](2, 1) - example_86(lam, x0, t)));
                worst = std::max(worst, std::abs(path.states[k](2, 2) + example_86(lam, x0, t)));
            }
            CHECK(worst < 1e-7);
        }
    }
}

TEST_CASE("RK4 convergence order") {
    const Vector lambda = random_vector(3, -1, 1);
    const Triangle x0 = random_triangle(3);
    auto at = [&](double dt) { return integrate_triangle(x0, lambda, config(1.0, dt)).back(); };
    const Triangle a = at(0.1), b = at(0.05), c = at(0.025);
    const double ratio = a.max_abs_diff(b) / b.max_abs_diff(c);
    CHECK(ratio > 12.0);
    CHECK(ratio < 20.0);
    for (TriangleField f : {TriangleField::rsk, TriangleField::local})
        CHECK(richardson_defect(x0, lambda, 1e-3, f) < 10 * std::pow(1e-3, 4));
}

TEST_CASE("integration errors") {
    CHECK_THROWS_AS(integrate_triangle(Triangle(2), Vector::Zero(2), config(1.0, 0.0)), RangeError);
    CHECK_THROWS_AS(integrate_triangle(Triangle(2), Vector::Zero(2), config(-1.0)), RangeError);
    // Large lambda pushes x^1_1 = lambda_1 t past the exp-safe range.
    Vector lambda(2);
    lambda << 800.0, 0.0;
    try {
        integrate_triangle(Triangle(2), lambda, config(2.0, 0.01));
        FAIL("expected overflow");
    } catch (const OverflowError& e) {
        CHECK(e.time() > 0.8);
        CHECK(e.time() < 0.9);
    }
    CHECK(integrate_triangle(Triangle(2), Vector::Zero(2), config(0.0)).points() == 1);
}

TEST_CASE("linear flow") {
    const PositiveUpper b = f_inv(random_triangle(3));
    const Vector lambda = random_vector(3, -1, 1);
    CHECK(max_abs(r_flow(b, lambda, 0.0).matrix() - b.matrix()) < 1e-15);
    const Matrix two_step = r_flow(r_flow(b, lambda, 0.4), lambda, 0.7).matrix();
    CHECK(max_abs(two_step - r_flow(b, lambda, 1.1).matrix()) < 1e-10 * max_abs(two_step));

    const PositiveUpper b0 = f_inv(Triangle(2));
    for (double t : {0.0, 0.5, 2.0}) {
        Matrix expect(2, 2);
        expect << 1, 1 + t, 0, 1;
        CHECK(max_abs(r_flow(b0, Vector::Zero(2), t).matrix() - expect) < 1e-14);
    }
}

TEST_CASE("conjugated flow") {
    for (double t : {0.5, 1.0, 2.0}) {
        const Triangle x = s_flow(Triangle(2), Vector::Zero(2), t);
        CHECK(std::abs(x(2, 1) - std::log1p(t)) < 1e-8);
        CHECK(std::abs(x(2, 2) + std::log1p(t)) < 1e-8);
    }
    for (double t : {0.3, 1.0, 2.0}) {
        const Triangle x = s_flow(example_86_start(0.8, 0.3), sym(0.8), t);
        CHECK(std::abs(x(2, 1) - example_86(0.8, 0.3, t)) < 1e-10);
    }
    for (int trial = 0; trial < 9; ++trial) {
        const int n = 2 + trial % 3;
        const Triangle x0 = random_triangle(n);
        const Vector lambda = random_vector(n, -1, 1);
        const TrianglePath path = integrate_triangle(x0, lambda, config(2.0));
        for (double t : {0.5, 1.3, 2.0}) CHECK(s_flow(x0, lambda, t).max_abs_diff(path.at(t)) < 1e-7);
    }
}

TEST_CASE("Toda tangent") {
    LaxMatrix m{Vector::Zero(2), Vector::Constant(1, 1.0)};
    const LaxMatrix d = toda_lax_rhs(m);
    CHECK(d.p(0) == -1.0);
    CHECK(d.p(1) == 1.0);
    CHECK(d.q(0) == 0.0);

    for (int trial = 0; trial < 20; ++trial) {
        const int n = 2 + trial % 5;
        const LaxMatrix r{random_vector(n, -2, 2), random_vector(n - 1, 0.1, 2)};
        const Matrix comm = lax_commutator(r.to_matrix());
        // to_matrix puts 1 on the superdiagonal; a tangent has 0 there.
        Matrix tangent = toda_lax_rhs(r).to_matrix();
        for (int i = 0; i + 1 < n; ++i) tangent(i, i + 1) = 0.0;
        CHECK(max_abs(comm - tangent) < 1e-12);
        const double printed_gap = max_abs(toda_lax_rhs_printed(r).to_matrix() - toda_lax_rhs(r).to_matrix());
        if (n <= 2) CHECK(printed_gap == 0.0);
        else CHECK(printed_gap > 1e-3);
    }

    // x(t) = (log sinh t, -log sinh t): p = xdot, q = e^{x_2 - x_1}.
    for (double t : {0.3, 1.0, 2.5}) {
        const double s = std::sinh(t), c = std::cosh(t);
        const LaxMatrix at{sym(c / s), Vector::Constant(1, 1.0 / (s * s))};
        const LaxMatrix rate = toda_lax_rhs(at);
        CHECK(rate.p(0) == doctest::Approx(-1.0 / (s * s)).epsilon(1e-13));
        CHECK(rate.q(0) == doctest::Approx(-2.0 * c / (s * s * s)).epsilon(1e-13));
    }
}

TEST_CASE("Toda factorization solution") {
    const OnManifold s = random_on_manifold(4);
    const LaxMatrix m0 = g_lambda(s.x, s.lambda);
    const TodaSolution zero = toda_flow_factorized(m0, 0.0);
    CHECK(max_abs(zero.m.to_matrix() - m0.to_matrix()) < 1e-14);
    CHECK(max_abs(zero.state.n_part.matrix() - Matrix::Identity(4, 4)) < 1e-14);
    CHECK(max_abs(zero.state.r_part - Matrix::Identity(4, 4)) < 1e-14);

    const TodaSolution one = toda_flow_factorized(m0, 1.2);
    const Matrix e = matrix_exp(m0.to_matrix(), 1.2);
    CHECK(max_abs(one.state.n_part.matrix() * one.state.r_part - e) < 1e-10 * max_abs(e));

    // n = 2 critical start: q(t) = e^{x^2_2 - x^2_1}.
    for (double t : {0.5, 1.0, 2.0}) {
        const LaxMatrix start = g_lambda(example_86_start(1.0, 0.0), sym(1.0));
        const double expect = std::exp(-2 * example_86(1.0, 0.0, t));
        CHECK(toda_flow_factorized(start, t).m.q(0) == doctest::Approx(expect).epsilon(1e-10));
    }

    for (int trial = 0; trial < 8; ++trial) {
        const int n = 2 + trial % 4;
        const OnManifold r = random_on_manifold(n);
        const LaxMatrix init = g_lambda(r.x, r.lambda);
        const LaxPath ode = integrate_lax(init, config(2.0));
        const Vector eig0 = sorted_eigs(init.to_matrix());
        double worst = 0.0, drift = 0.0;
        for (std::size_t k = 0; k < ode.states.size(); k += 100) {
            const TodaSolution sol = toda_flow_factorized(init, ode.grid(static_cast<Eigen::Index>(k)));
            worst = std::max(worst, max_abs(sol.m.to_matrix() - ode.states[k].to_matrix()));
            drift = std::max(drift, (sorted_eigs(sol.m.to_matrix()) - eig0).cwiseAbs().maxCoeff());
        }
        CHECK(worst < 1e-6);
        CHECK(drift < 1e-6);
    }
}

TEST_CASE("Toda blow-up") {
    // p = 0, q = 1: e^{tM} is a rotation and its (1,1) minor cos t vanishes at pi/2.
    const LaxMatrix rot{Vector::Zero(2), Vector::Constant(1, 1.0)};
    const auto when = toda_blowup_time(rot, 3.0, 0.01, 1e-12);
    REQUIRE(when.has_value());
    CHECK(std::abs(*when - M_PI / 2) < 1e-6);
    try {
        toda_flow_factorized(rot, M_PI / 2, 1e-12);
        FAIL("expected blow-up");
    } catch (const FactorizationBlowUp& e) {
        CHECK(e.minor_index() == 1);
        CHECK(e.time() == doctest::Approx(M_PI / 2));
    }
    const OnManifold s = random_on_manifold(3);
    CHECK_FALSE(toda_blowup_time(g_lambda(s.x, s.lambda), 2.0, 0.05).has_value());
}

TEST_CASE("the flows commute with g_lambda") {
    for (int trial = 0; trial < 9; ++trial) {
        const int n = 2 + trial % 4;
        const OnManifold s = random_on_manifold(n);
        const LaxMatrix m0 = g_lambda(s.x, s.lambda);
        for (double t : {0.5, 1.0, 2.0}) {
            const LaxMatrix lhs = g_lambda(s_flow(s.x, s.lambda, t), s.lambda);
            const LaxMatrix rhs = toda_flow_factorized(m0, t).m;
            CHECK(max_abs(lhs.to_matrix() - rhs.to_matrix()) < 1e-6);
        }
    }
}

TEST_CASE("critical manifold is invariant and the two flows coincide on it") {
    for (int trial = 0; trial < 6; ++trial) {
        const int n = 2 + trial % 3;
        const OnManifold s = random_on_manifold(n);
        REQUIRE(critical_residual_norm(s.x, s.lambda) < 1e-9);
        const TrianglePath a = integrate_triangle(s.x, s.lambda, config(2.0), TriangleField::rsk);
        const TrianglePath b = integrate_triangle(s.x, s.lambda, config(2.0), TriangleField::local);
        double res = 0.0, gap = 0.0;
        for (int k = 0; k < a.points(); k += 50) {
            res = std::max(res, critical_residual_norm(a.states[k], s.lambda));
            res = std::max(res, critical_residual_norm(b.states[k], s.lambda));
            gap = std::max(gap, a.states[k].max_abs_diff(b.states[k]));
        }
        CHECK(res < 1e-6);
        CHECK(gap < 1e-6);
    }
}

TEST_CASE("bottom row solves the Toda equations") {
    const OnManifold s = random_on_manifold(4);
    const double h = 1e-3;
    for (double t : {0.4, 1.0, 1.7}) {
        const Vector a = s_flow(s.x, s.lambda, t - h).bottom_row();
        const Vector b = s_flow(s.x, s.lambda, t).bottom_row();
        const Vector c = s_flow(s.x, s.lambda, t + h).bottom_row();
        const Vector acc = (a - 2 * b + c) / (h * h);
        const int n = 4;
        for (int i = 0; i < n; ++i) {
            double expect = 0.0;
            if (i > 0) expect += std::exp(b(i) - b(i - 1));
            if (i + 1 < n) expect -= std::exp(b(i + 1) - b(i));
            CHECK(std::abs(acc(i) - expect) < 1e-5);
        }
    }
}

TEST_CASE("Kostant normal form") {
    CHECK(max_abs(kostant_L(LaxMatrix{Vector::Constant(1, 0.4), Vector(0)}, Vector::Constant(1, 0.4)).matrix() -
                  Matrix::Identity(1, 1)) == 0.0);
    for (int trial = 0; trial < 9; ++trial) {
        const int n = 2 + trial % 3;
        const OnManifold s = random_on_manifold(n);
        const LaxMatrix m = g_lambda(s.x, s.lambda);
        const LowerUnitriangular l = kostant_L(m, s.lambda);
        CHECK(max_abs(l.matrix() - h_map(s.x).matrix()) < 1e-8);
        const Matrix back = l.inverse().matrix() * epsilon_matrix(s.lambda) * l.matrix();
        CHECK(max_abs(back - m.to_matrix()) < 1e-9);
        CHECK_THROWS_AS(kostant_L(m, s.lambda + Vector::Constant(n, 0.1)), SpectrumError);
    }
    // Repeated eigenvalues.
    const Triangle zero_start = critical_point(random_vector(3, -1, 1), Vector::Zero(3));
    const LaxMatrix nil = g_lambda(zero_start, Vector::Zero(3));
    CHECK(max_abs(kostant_L(nil, Vector::Zero(3)).matrix() - h_map(zero_start).matrix()) < 1e-8);
}

TEST_CASE("L and R evolution") {
    // lambda = 0, zero start: L(t) = [[1,0],[1/(1+t),1]].
    const TrianglePath path = integrate_triangle(Triangle(2), Vector::Zero(2), config(2.0));
    for (double t : {0.5, 1.0, 2.0}) CHECK(h_map(path.at(t))(1, 0) == doctest::Approx(1.0 / (1.0 + t)).epsilon(1e-8));
    const LrEvolutionReport ex = lr_evolution_check(path, Vector::Zero(2));
    CHECK(ex.l_equation.pass);
    CHECK(ex.r_equation.pass);

    for (int trial = 0; trial < 4; ++trial) {
        const int n = 2 + trial % 3;
        const OnManifold s = random_on_manifold(n);
        const TrianglePath traj = integrate_triangle(s.x, s.lambda, config(2.0));
        const LrEvolutionReport rep = lr_evolution_check(traj, s.lambda);
        CHECK(rep.l_equation.pass);
        CHECK(rep.r_equation.pass);
        CHECK(to_json(rep.l_equation).at("check") == "Ldot = L Q");

        Vector target = s.lambda;
        std::sort(target.data(), target.data() + n);
        double drift = 0.0;
        for (int k = 0; k < traj.points(); k += 100)
            drift = std::max(
                drift, (sorted_eigs(g_lambda(traj.states[k], s.lambda).to_matrix()) - target).cwiseAbs().maxCoeff());
        CHECK(drift < 1e-6);

        // Along the flow the Gauss pieces still recompose f^{-1}(X) w0bar.
        const Triangle& x = traj.at(1.0);
        const Matrix lhs = f_inv(x).matrix() * w0_bar(n);
        const Matrix rhs = h_map(x).matrix() * gauss_ldu(lhs).r_part();
        CHECK(max_abs(lhs - rhs) < 1e-8 * max_abs(lhs));
    }

    // A trajectory off the critical manifold does not satisfy Ldot = L Q.
    const TrianglePath off = integrate_triangle(Triangle::from_rows({{1.0}, {0.0, 0.0}}), Vector::Zero(2), config(1.0));
    CHECK_FALSE(lr_evolution_check(off, Vector::Zero(2)).l_equation.pass);
}

TEST_CASE("Lax trajectory CSV") {
    const LaxPath path = integrate_lax(LaxMatrix{Vector::Zero(3), Vector::Constant(2, 0.5)}, config(0.01, 0.005));
    std::ostringstream os;
    write_lax_path_csv(os, path);
    const std::string text = os.str();
    CHECK(text.rfind("t,p_1,p_2,p_3,q_1,q_2\n", 0) == 0);
    CHECK(std::count(text.begin(), text.end(), '\n') == 4);
}
