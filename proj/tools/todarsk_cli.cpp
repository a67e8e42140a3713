// todarsk: verification suites, trajectories, simulations, critical points and
// tau tables from the command line. Exit codes: 0 pass, 1 failure, 2 usage.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "todarsk/critical.hpp"
#include "todarsk/flows.hpp"
#include "todarsk/grsk.hpp"
#include "todarsk/stochastic.hpp"
#include "todarsk/tauexplicit.hpp"
#include "todarsk/verify.hpp"

using namespace todarsk;

namespace {

constexpr int kExitFail = 1;
constexpr int kExitUsage = 2;

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Params {
    int n = 2;
    std::vector<double> lambda;
    std::vector<double> x;
    double t_end = 1.0;
    double dt = 1e-3;
    double eps = 1.0;
    std::uint64_t seed = 20240611;
    long replicas = 10000;
    std::string out;
    bool quick = false;
};

Vector lambda_vector(const Params& p) {
    if (p.lambda.empty()) return Vector::Zero(p.n);
    if (static_cast<int>(p.lambda.size()) != p.n)
        throw UsageError("--lambda has " + std::to_string(p.lambda.size()) + " entries, expected n = " +
                         std::to_string(p.n));
    return Eigen::Map<const Vector>(p.lambda.data(), p.n);
}

Vector x_vector(const Params& p) {
    if (p.x.empty()) return Vector::Zero(p.n);
    if (static_cast<int>(p.x.size()) != p.n) throw UsageError("--x must have n entries");
    return Eigen::Map<const Vector>(p.x.data(), p.n);
}

// Writes to --out when given, stdout otherwise.
void emit(const Params& p, const std::string& text) {
    if (p.out.empty()) {
        std::cout << text;
        return;
    }
    std::ofstream f(p.out);
    if (!f) throw UsageError("cannot open output file " + p.out);
    f << text;
}

void write_file(const std::string& path, const std::string& text) {
    std::ofstream f(path);
    if (!f) throw UsageError("cannot open output file " + path);
    f << text;
}

void add_common(CLI::App* cmd, Params& p) {
    cmd->add_option("--n", p.n, "size")->check(CLI::Range(1, 64));
    cmd->add_option("--lambda", p.lambda, "comma list of drift / eigenvalue entries")->delimiter(',');
    cmd->add_option("--t-end", p.t_end, "final time")->check(CLI::PositiveNumber);
    cmd->add_option("--dt", p.dt, "time step")->check(CLI::PositiveNumber);
    cmd->add_option("--seed", p.seed, "random seed");
    cmd->add_option("--out", p.out, "output file (stdout when omitted)");
}

// ---------------------------------------------------------------------------

int cmd_verify(const std::string& suite, const Params& p, std::optional<long> replicas) {
    if (suite != "all" && !is_suite(suite)) throw UsageError("unknown suite '" + suite + "'");
    SuiteOptions opts;
    opts.quick = p.quick;
    opts.seed = p.seed;
    opts.replicas = replicas;
    nlohmann::json report = nlohmann::json::array();
    bool pass = true;
    const std::vector<std::string> names = suite == "all" ? suite_names() : std::vector<std::string>{suite};
    for (const auto& name : names) {
        const SuiteResult r = run_suite(name, opts);
        std::cerr << (r.pass() ? "PASS " : "FAIL ") << name << " (" << r.seconds << " s)\n";
        pass = pass && r.pass();
        report.push_back(to_json(r));
    }
    emit(p, report.dump(2) + "\n");
    return pass ? 0 : kExitFail;
}

int cmd_flow(const Params& p, const std::string& start, const std::string& method, const std::string& lax_out,
             const std::vector<double>& lax_p, const std::vector<double>& lax_q) {
    FlowConfig cfg;
    cfg.t_end = p.t_end;
    cfg.dt = p.dt;
    cfg.validate();

    if (!lax_p.empty()) {
        // Toda lattice from a Lax matrix by factorization of e^{tM0}.
        if (lax_q.size() + 1 != lax_p.size()) throw UsageError("--lax-q must have one entry fewer than --lax-p");
        const int n = static_cast<int>(lax_p.size());
        const LaxMatrix m0{Eigen::Map<const Vector>(lax_p.data(), n),
                           Eigen::Map<const Vector>(lax_q.data(), n - 1)};
        const int steps = cfg.steps();
        const auto blowup = toda_blowup_time(m0, p.t_end, p.dt);
        LaxPath path;
        std::vector<double> times;
        for (int k = 0; k <= steps; ++k) {
            const double t = p.t_end * k / steps;
            if (blowup && t >= *blowup) break;
            times.push_back(t);
            path.states.push_back(toda_flow_factorized(m0, t).m);
        }
        path.grid = Eigen::Map<const Vector>(times.data(), static_cast<Eigen::Index>(times.size()));
        std::ostringstream os;
        write_lax_path_csv(os, path);
        emit(p, os.str());
        if (blowup) {
            std::cerr << "blow-up: a leading principal minor of exp(t M0) vanishes at t = " << *blowup << "\n";
            return kExitFail;
        }
        return 0;
    }

    const Vector lambda = lambda_vector(p);
    const int n = p.n;
    TrianglePath path;
    if (start == "identity") {
        // b(0) = I: X(t) = f(e^{t eps_lambda}) for t > 0
        const int steps = cfg.steps();
        path.grid = Vector::LinSpaced(steps, p.t_end / steps, p.t_end);
        for (int k = 0; k < steps; ++k) path.states.push_back(f_map(b_explicit_matrix(lambda, path.grid(k))));
    } else {
        Triangle x0(n);
        if (start == "critical") {
            x0 = critical_point(x_vector(p), lambda);
        } else if (start != "zero") {
            throw UsageError("--start must be identity, zero or critical");
        }
        try {
            if (method == "rk4") {
                path = integrate_triangle(x0, lambda, cfg, TriangleField::rsk);
            } else if (method == "rk4-local") {
                path = integrate_triangle(x0, lambda, cfg, TriangleField::local);
            } else if (method == "conjugated") {
                const int steps = cfg.steps();
                path.grid = Vector::LinSpaced(steps + 1, 0.0, p.t_end);
                for (int k = 0; k <= steps; ++k) path.states.push_back(s_flow(x0, lambda, path.grid(k)));
            } else {
                throw UsageError("--method must be rk4, rk4-local or conjugated");
            }
        } catch (const OverflowError& e) {
            std::cerr << "blow-up: " << e.what() << "\n";
            return kExitFail;
        }
    }
    std::ostringstream os;
    write_triangle_path_csv(os, path);
    emit(p, os.str());
    if (!lax_out.empty()) {
        LaxPath lax;
        lax.grid = path.grid;
        for (const auto& x : path.states) lax.states.push_back(g_lambda(x, lambda));
        std::ostringstream ls;
        write_lax_path_csv(ls, lax);
        write_file(lax_out, ls.str());
    }
    return 0;
}

int cmd_simulate(const Params& p, const std::string& test, const std::string& samples_out) {
    SdeConfig cfg;
    cfg.lambda = lambda_vector(p);
    cfg.eps = p.eps;
    cfg.dt = p.dt;
    cfg.t_end = p.t_end;
    cfg.replicas = p.replicas;
    cfg.seed = p.seed;
    cfg.validate();
    const Vector x = x_vector(p);

    std::vector<Triangle> samples;
    auto collect_samples = [&]() {
        const long count = std::min<long>(cfg.replicas, 100000);
        if (test == "sigma" || test == "rsk-vs-warren") {
            auto rng = replica_rng(cfg.seed, 0, 10);
            samples = sample_sigma_lambda(x, cfg.lambda, cfg.eps, count, rng);
        } else {
            for (long r = 0; r < count; ++r) {
                auto rng = replica_rng(cfg.seed, static_cast<std::uint64_t>(r), 0);
                samples.push_back(pi_n(sample_brownian(cfg, rng)).back());
            }
        }
    };

    const bool ks_test = test != "sigma";
    if (!ks_test || cfg.replicas < kMinKsReplicas) {
        if (ks_test)
            std::cerr << "warning: " << cfg.replicas << " replicas is below " << kMinKsReplicas
                      << "; two-sample test skipped, samples only\n";
        collect_samples();
        if (!samples_out.empty()) {
            std::ostringstream os;
            write_samples_csv(os, samples);
            write_file(samples_out, os.str());
        }
        nlohmann::json j{{"test", test},       {"n", cfg.n()},        {"eps", cfg.eps},
                         {"replicas", cfg.replicas}, {"seed", cfg.seed}, {"samples", samples.size()}};
        j["lambda"] = p.lambda.empty() ? std::vector<double>(static_cast<std::size_t>(cfg.n()), 0.0) : p.lambda;
        if (ks_test) j["warning"] = "too few replicas for a two-sample test";
        emit(p, j.dump(2) + "\n");
        return 0;
    }

    SimulationReport rep;
    if (test == "generator") {
        rep = generator_test(cfg);
    } else if (test == "control") {
        rep = generator_test(cfg, 0.1, 2.0);
        rep.alpha = 1e-4;
        rep.pass = rep.min_p() < rep.alpha;
    } else if (test == "rsk-vs-warren") {
        rep = dynamics_comparison_test(cfg, x);
    } else if (test == "rsk-vs-path") {
        Triangle xi(cfg.n());
        for (int i = 1; i <= cfg.n(); ++i) xi(cfg.n(), i) = x(i - 1);
        rep = rsk_sde_path_test(cfg, xi);
    } else {
        throw UsageError("--test must be generator, control, rsk-vs-warren, rsk-vs-path or sigma");
    }
    if (!samples_out.empty()) {
        collect_samples();
        std::ostringstream os;
        write_samples_csv(os, samples);
        write_file(samples_out, os.str());
    }
    emit(p, to_json(rep).dump(2) + "\n");
    return rep.pass ? 0 : kExitFail;
}

int cmd_critical(const Params& p, const std::string& in) {
    Vector x, lambda;
    if (!in.empty()) {
        std::ifstream f(in);
        if (!f) throw UsageError("cannot open " + in);
        const nlohmann::json j = nlohmann::json::parse(f);
        const auto xs = j.at("x").get<std::vector<double>>();
        const auto ls = j.at("lambda").get<std::vector<double>>();
        if (xs.size() != ls.size()) throw UsageError("x and lambda differ in length");
        x = Eigen::Map<const Vector>(xs.data(), static_cast<Eigen::Index>(xs.size()));
        lambda = Eigen::Map<const Vector>(ls.data(), static_cast<Eigen::Index>(ls.size()));
    } else {
        x = x_vector(p);
        lambda = lambda_vector(p);
    }
    const Triangle c = critical_point(x, lambda);
    const Vector g = grad_u_at(c, lambda);
    const nlohmann::json out{{"triangle", triangle_to_json(c)},
                             {"u", F_lambda(c, lambda)},
                             {"grad_u", std::vector<double>(g.data(), g.data() + g.size())},
                             {"residual", critical_residual_norm(c, lambda)}};
    emit(p, out.dump(2) + "\n");
    return 0;
}

int cmd_tau(const Params& p, const std::string& rows_out) {
    const Vector lambda = lambda_vector(p);
    const int steps = std::max(1, static_cast<int>(std::ceil(p.t_end / p.dt - 1e-9)));
    const Vector grid = Vector::LinSpaced(steps + 1, 0.0, p.t_end);
    std::ostringstream os;
    write_tau_csv(os, tau_table(lambda, grid));
    emit(p, os.str());
    if (!rows_out.empty()) {
        std::ostringstream rs;
        write_solution_rows_csv(rs, lambda, grid.tail(steps));
        write_file(rows_out, rs.str());
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Geometric RSK, Toda flows and their stochastic versions"};
    app.require_subcommand(1);
    app.set_config("--config", "", "key=value configuration file");

    Params p;
    std::optional<long> verify_replicas;

    std::string suite;
    auto* verify = app.add_subcommand("verify", "run a property suite: factorization, grsk, flows, critical, tau, "
                                                "stochastic or all");
    verify->add_option("suite", suite, "suite name")->required();
    verify->add_flag("--quick", p.quick, "reduced replica and sample counts");
    verify->add_option("--seed", p.seed, "random seed");
    verify->add_option("--replicas", verify_replicas, "replicas for the stochastic suite");
    verify->add_option("--out", p.out, "report file (stdout when omitted)");

    std::string start = "zero", method = "rk4", lax_out;
    std::vector<double> lax_p, lax_q;
    auto* flow = app.add_subcommand("flow", "triangle or Toda trajectory as CSV");
    add_common(flow, p);
    flow->add_option("--start", start, "identity (b(0) = I), zero (X(0) = 0) or critical (X*_lambda(x))");
    flow->add_option("--x", p.x, "bottom row for the critical start")->delimiter(',');
    flow->add_option("--method", method, "rk4, rk4-local or conjugated");
    flow->add_option("--lax-out", lax_out, "also write the Lax trajectory g_lambda(X(t))");
    flow->add_option("--lax-p", lax_p, "Toda run from a Lax matrix: diagonal")->delimiter(',');
    flow->add_option("--lax-q", lax_q, "Toda run from a Lax matrix: subdiagonal weights")->delimiter(',');

    std::string test = "generator", samples_out;
    auto* simulate = app.add_subcommand("simulate", "seeded two-sample tests of the Brownian dynamics");
    add_common(simulate, p);
    simulate->add_option("--test", test, "generator, control, rsk-vs-warren, rsk-vs-path or sigma");
    simulate->add_option("--eps", p.eps, "noise variance")->check(CLI::NonNegativeNumber);
    simulate->add_option("--replicas", p.replicas, "replicas per sample");
    simulate->add_option("--x", p.x, "bottom row for Sigma_lambda initial data")->delimiter(',');
    simulate->add_option("--samples-out", samples_out, "CSV of sampled triangles");

    std::string critical_in;
    auto* critical = app.add_subcommand("critical", "critical point X*_lambda(x), u_lambda and its gradient");
    add_common(critical, p);
    critical->add_option("--x", p.x, "bottom row")->delimiter(',');
    critical->add_option("--in", critical_in, "JSON {\"x\": [...], \"lambda\": [...]}");

    std::string rows_out;
    auto* tau = app.add_subcommand("tau", "tau functions on a grid as CSV");
    add_common(tau, p);
    tau->add_option("--rows-out", rows_out, "also write bottom rows t,x_1..x_n for t > 0");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitUsage;
    }

    try {
        for (CLI::App* sub : {flow, simulate, critical, tau})
            if (sub->parsed() && sub->count("--n") == 0) {
                if (!p.lambda.empty()) p.n = static_cast<int>(p.lambda.size());
                else if (!p.x.empty()) p.n = static_cast<int>(p.x.size());
            }
        if (*verify) return cmd_verify(suite, p, verify_replicas);
        if (*flow) return cmd_flow(p, start, method, lax_out, lax_p, lax_q);
        if (*simulate) return cmd_simulate(p, test, samples_out);
        if (*critical) return cmd_critical(p, critical_in);
        return cmd_tau(p, rows_out);
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const RangeError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const DomainError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const nlohmann::json::exception& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitFail;
    }
}
