#pragma once

// Brownian-driven dynamics on triangles: Brownian paths, Euler-Maruyama steps
// of the RSK-type and Warren-type SDEs, Whittaker functions psi_lambda by
// quadrature (n <= 3), sampling of the kernel Sigma_lambda, and two-sample
// tests comparing fixed-time laws.

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "todarsk/grsk.hpp"

namespace todarsk {

struct SdeConfig {
    double eps = 1.0;       ///< infinitesimal variance of the driving noise
    Vector lambda;          ///< drift
    double dt = 1e-3;
    double t_end = 1.0;
    long replicas = 10000;
    std::uint64_t seed = 1;

    int n() const { return static_cast<int>(lambda.size()); }
    int steps() const;
    void validate() const;
};

/// Generator for replica `index` of stream `stream`, seeded from (seed, stream, index).
std::mt19937_64 replica_rng(std::uint64_t seed, std::uint64_t index, std::uint64_t stream = 0);

/// eta(t) = sqrt(eps) B(t) + t lambda on the dt-grid of [0, t_end].
SampledPath sample_brownian(const SdeConfig& cfg, std::mt19937_64& rng);

/// One Euler-Maruyama step of the RSK-type SDE. dW holds standard Brownian
/// increments (variance dt) for the n driving motions; they are scaled by sqrt(eps).
Triangle em_step_rsk(const Triangle& x, const SpectralVector& lambda, double eps, const Vector& dW, double dt);
/// One Euler-Maruyama step of the Warren-type SDE with one increment per entry.
Triangle em_step_warren(const Triangle& x, const SpectralVector& lambda, double eps, const Triangle& dW, double dt);

enum class SdeKind { rsk, warren };
/// X(t_end) from X(0) = x0 with fresh increments drawn from rng.
Triangle simulate_triangle_sde(const Triangle& x0, const SdeConfig& cfg, SdeKind kind, std::mt19937_64& rng);

struct WhittakerEval {
    Vector x;
    Vector lambda;
    double eps = 1.0;
    double value = 0.0;
    double log_value = 0.0;
    bool accurate = true;
    std::string warning;
};

/// psi_lambda(x) = int over triangles with bottom row x of e^{-F_lambda/eps},
/// by nested trapezoid rules centered at the critical point (n <= 3).
WhittakerEval whittaker_eval(const Vector& x, const SpectralVector& lambda, double eps);
/// grad log psi_lambda by central differences of the quadrature.
Vector whittaker_grad_log(const Vector& x, const SpectralVector& lambda, double eps, double h = 1e-4);
/// (H psi)/psi with H = -eps Laplacian + (2/eps) sum e^{x_{i+1}-x_i}, by a
/// central-difference Laplacian of the quadrature.
double hamiltonian_ratio(const Vector& x, const SpectralVector& lambda, double eps, double h = 1e-3);

/// grad log psi_lambda for n = 2 from the modified Bessel representation
/// psi = 2 e^{(l1+l2)(x1+x2)/(2 eps)} K_{(l1-l2)/eps}((2/eps) e^{(x2-x1)/2}),
/// tabulated in x2 - x1 for fast repeated evaluation.
class WhittakerDrift2 {
public:
    WhittakerDrift2(const SpectralVector& lambda, double eps);
    Vector grad_log(const Vector& x) const;

private:
    double ratio(double z) const;        ///< (w/2) K'(w)/K(w), table lookup
    double ratio_direct(double z) const;
    double mean_part_;
    double order_;
    double eps_;
    double z_lo_, z_hi_, step_;
    std::vector<double> table_;
};

/// Samples from Sigma_lambda(x, .): density proportional to e^{-F_lambda/eps}
/// on triangles with bottom row x. n = 2 by inverse CDF on a quadrature grid,
/// n = 3 by rejection from a Gaussian matched to the Hessian at X*_lambda(x).
std::vector<Triangle> sample_sigma_lambda(const Vector& x, const SpectralVector& lambda, double eps, long count,
                                          std::mt19937_64& rng);

/// Fewest replicas per sample for which the two-sample tests run.
inline constexpr long kMinKsReplicas = 50;

struct KsResult {
    double statistic = 0.0;
    double p_value = 1.0;
};
/// Kolmogorov survival function Q(t) = 2 sum_k (-1)^{k-1} e^{-2 k^2 t^2}.
double kolmogorov_survival(double t);
KsResult ks_two_sample(std::vector<double> a, std::vector<double> b);
double chi_squared_p_value(double statistic, int dof);

struct SimulationReport {
    std::string test;
    int n = 0;
    double eps = 0.0;
    Vector lambda;
    long replicas = 0;
    std::uint64_t seed = 0;
    std::vector<double> ks_stat;  ///< per compared coordinate
    std::vector<double> p_value;
    double alpha = 0.01;
    bool pass = false;            ///< every p-value above alpha

    double min_p() const;
};
nlohmann::json to_json(const SimulationReport& r);

/// Bottom rows of Pi applied to Brownian paths at t_end against an
/// Euler-Maruyama run of dx = sqrt(eps) dW + drift_scale * eps grad log psi dt
/// started from independent draws of the same law at t0. n = 2.
SimulationReport generator_test(const SdeConfig& cfg, double t0 = 0.1, double drift_scale = 1.0);

/// RSK-type against Warren-type SDE from X(0) ~ Sigma_lambda(x, .), compared
/// on the bottom row at t_end. n = 2 or 3.
SimulationReport dynamics_comparison_test(const SdeConfig& cfg, const Vector& x);

/// The RSK-type SDE from xi against Pi^xi applied to independent Brownian
/// paths, compared on the bottom row at t_end.
SimulationReport rsk_sde_path_test(const SdeConfig& cfg, const Triangle& xi);

/// CSV: one row per sample, header x_1_1,x_2_1,...
void write_samples_csv(std::ostream& os, const std::vector<Triangle>& samples);

}  // namespace todarsk
