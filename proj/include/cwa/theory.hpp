#pragma once

#include <cstdint>
#include <vector>

#include "cwa/attacks.hpp"
#include "cwa/models.hpp"

namespace cwa {

struct BoundCheckResult {
    double lhs = 0.0;
    double rhs = 0.0;
    bool satisfied = false;
    double slack = 0.0;  // rhs - lhs
    std::uint64_t instance_seed = 0;
};

BoundCheckResult make_bound_check(double lhs, double rhs, double tol, std::uint64_t seed);

// Per-model F-norm bound (x-p_i)^T H_i (x-p_i) <= ||H_i||_F ||x-p_i||_2^2;
// returns the worst-slack model. All members must be quadratic.
BoundCheckResult check_holder_bound(const Ensemble& e, const Vec& x, double tol = 1e-9,
                                    std::uint64_t seed = 0);

// Expectation-proxy form: mean(LHS) <= mean(||H||_F) * mean(||x-p||^2).
// Only meaningful on instances where the two factors are sampled independently.
BoundCheckResult check_holder_bound_averaged(const Ensemble& e, const Vec& x, double tol = 1e-9,
                                             std::uint64_t seed = 0);

struct DotProductCheck {
    BoundCheckResult chain;    // sum ||x-p_i||^2 <= M * sum ||g_i||^2, holds everywhere
    bool at_optimum = false;   // ||sum g_i||_2 <= delta_opt
    BoundCheckResult theorem;  // (1/n) sum ||x-p_i||^2 <= -(2M/n) sum_{j<i} g_i.g_j
};

DotProductCheck check_dot_product_bound(const Ensemble& e, const Vec& x,
                                        double delta_opt = 1e-8, double tol = 1e-6,
                                        std::uint64_t seed = 0);

// Mean pairwise cosine similarity of member gradients at each outer iterate.
std::vector<double> cosine_trend(const AttackTrace& trace, const Ensemble& e, int y = 0);

struct ProjectionStats {
    double mean_diag = 0.0;
    double mean_abs_offdiag = 0.0;
    int dim = 0;
    int n_samples = 0;
};

// Statistics of I - g g^T over random unit vectors g.
ProjectionStats check_projection_approximation(int dim, int n_samples, std::uint64_t seed);

struct GaussianOptimaSpec {
    int dim = 4;
    int n = 16;  // optima per ensemble
    double sigma = 1.0;
    Vec c;  // true mean optimum; zeros of size dim when empty

    void validate() const;
};

struct GaussianOptimaReport {
    double mean_sq_dist = 0.0;   // Monte Carlo E||c - p||^2
    double expected_sq_dist = 0.0;  // sigma^2 * dim
    double stderr_sq_dist = 0.0;
    std::vector<double> sigma_grid;
    std::vector<double> grid_mean_sq_dist;
    double f_quantile = 0.0;        // F_alpha(n-1, n-1)
    double f_true_positive_rate = 0.0;  // rule: s1^2/s2^2 >= quantile, sigma1 > sigma2
    double sigma_ratio = 2.0;
    std::vector<double> chebyshev_delta;
    std::vector<double> chebyshev_rate;   // empirical exceedance rates
    std::vector<double> chebyshev_bound;  // Var / ((n-1)^2 delta^2)
};

GaussianOptimaReport gaussian_optima_study(const GaussianOptimaSpec& spec, int trials,
                                           std::uint64_t seed);

// Upper-alpha quantile of the F(d1, d2) distribution by numerical integration
// of the density (adaptive Simpson + bisection), accurate to ~1e-6.
double f_upper_quantile(double alpha, int d1, int d2);
double f_cdf(double x, int d1, int d2);

struct LandscapeCurve {
    Vec offsets;
    Vec losses;
    Vec p_est;           // optimum located by per-member signed fine-tuning
    double dist_linf = 0.0;
    double curvature = 0.0;  // 2a from a least-squares parabola fit
    double fit_r2 = 0.0;
};

struct LandscapeProfile {
    std::vector<LandscapeCurve> curves;
    double mean_curvature = 0.0;
    double mean_dist_linf = 0.0;
};

// Per-member 1-D loss profiles along (p_i - x)/||p_i - x||_inf after locating
// p_i by signed descent on that member alone.
LandscapeProfile landscape_profile(const Vec& x, const Ensemble& e, int y, int probe_points,
                                   int fine_tune_steps, double fine_tune_step_size,
                                   double probe_range);

struct NfeAudit {
    std::int64_t expected = 0;
    std::int64_t actual = 0;
    bool ok = false;
};

NfeAudit nfe_audit(const AttackTrace& trace, const std::string& attack_name, int T, int n);

// Hutchinson-style F-norm estimate of the ensemble-loss Hessian at x.
double ensemble_hessian_fnorm(const Ensemble& e, const Vec& x, int y, int n_probes,
                              std::uint64_t seed, double h = 1e-4);

}  // namespace cwa
