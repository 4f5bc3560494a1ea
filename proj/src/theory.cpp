#include "cwa/theory.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

namespace cwa {

namespace {

const QuadraticModel& as_quadratic(const ClassifierPtr& m) {
    const auto* q = dynamic_cast<const QuadraticModel*>(m.get());
    if (q == nullptr) {
        throw std::invalid_argument("theory check requires quadratic ensemble members");
    }
    return *q;
}

}  // namespace

BoundCheckResult make_bound_check(double lhs, double rhs, double tol, std::uint64_t seed) {
    BoundCheckResult r;
    r.lhs = lhs;
    r.rhs = rhs;
    r.slack = rhs - lhs;
    r.satisfied = r.slack >= -tol;
    r.instance_seed = seed;
    return r;
}

BoundCheckResult check_holder_bound(const Ensemble& e, const Vec& x, double tol,
                                    std::uint64_t seed) {
    BoundCheckResult worst;
    bool first = true;
    for (const auto& m : e.members()) {
        const auto& q = as_quadratic(m);
        Vec d = sub(x, q.optimum());
        double lhs = q.hessian().quad_form(d);
        double rhs = q.hessian().frobenius_norm() * dot(d, d);
        BoundCheckResult cur = make_bound_check(lhs, rhs, tol, seed);
        if (first || cur.slack < worst.slack) {
            worst = cur;
            first = false;
        }
    }
    return worst;
}

BoundCheckResult check_holder_bound_averaged(const Ensemble& e, const Vec& x, double tol,
                                             std::uint64_t seed) {
    double mean_lhs = 0.0, mean_fnorm = 0.0, mean_sq = 0.0;
    double inv = 1.0 / static_cast<double>(e.size());
    for (const auto& m : e.members()) {
        const auto& q = as_quadratic(m);
        Vec d = sub(x, q.optimum());
        mean_lhs += inv * q.hessian().quad_form(d);
        mean_fnorm += inv * q.hessian().frobenius_norm();
        mean_sq += inv * dot(d, d);
    }
    return make_bound_check(mean_lhs, mean_fnorm * mean_sq, tol, seed);
}

DotProductCheck check_dot_product_bound(const Ensemble& e, const Vec& x, double delta_opt,
                                        double tol, std::uint64_t seed) {
    int n = e.size();
    double m_const = 0.0;
    double sum_sq_dist = 0.0;
    double sum_sq_grad = 0.0;
    std::vector<Vec> grads;
    grads.reserve(n);
    for (const auto& member : e.members()) {
        const auto& q = as_quadratic(member);
        Matrix hinv = q.hessian().inverse();
        double hf = hinv.frobenius_norm();
        m_const = std::max(m_const, hf * hf);
        Vec d = sub(x, q.optimum());
        sum_sq_dist += dot(d, d);
        Vec g = q.hessian().matvec(d);
        sum_sq_grad += dot(g, g);
        grads.push_back(std::move(g));
    }

    DotProductCheck out;
    out.chain = make_bound_check(sum_sq_dist, m_const * sum_sq_grad, tol, seed);

    Vec gsum(x.size(), 0.0);
    for (const auto& g : grads) axpy(1.0, g, gsum);
    out.at_optimum = norm_l2(gsum) <= delta_opt;

    double cross = 0.0;
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < i; ++j) cross += dot(grads[i], grads[j]);
    }
    double lhs = sum_sq_dist / n;
    double rhs = -(2.0 * m_const / n) * cross;
    out.theorem = make_bound_check(lhs, rhs, tol, seed);
    return out;
}

std::vector<double> cosine_trend(const AttackTrace& trace, const Ensemble& e, int y) {
    std::vector<double> trend;
    trend.reserve(trace.iterates.size());
    int n = e.size();
    for (const Vec& x : trace.iterates) {
        std::vector<Vec> grads;
        grads.reserve(n);
        for (const auto& m : e.members()) grads.push_back(m->input_grad(x, y));
        double s = 0.0;
        int pairs = 0;
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < i; ++j) {
                s += cosine_similarity(grads[i], grads[j]);
                ++pairs;
            }
        }
        trend.push_back(pairs > 0 ? s / pairs : 1.0);
    }
    return trend;
}

ProjectionStats check_projection_approximation(int dim, int n_samples, std::uint64_t seed) {
    if (dim < 2) throw std::invalid_argument("check_projection_approximation: dim >= 2");
    if (n_samples < 1) throw std::invalid_argument("check_projection_approximation: n_samples >= 1");
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    ProjectionStats stats;
    stats.dim = dim;
    stats.n_samples = n_samples;
    double diag_acc = 0.0, off_acc = 0.0;
    for (int s = 0; s < n_samples; ++s) {
        Vec g(dim);
        for (double& v : g) v = gauss(rng);
        g = l2_normalize(g);
        double d = 0.0;
        for (int i = 0; i < dim; ++i) d += 1.0 - g[i] * g[i];
        diag_acc += d / dim;
        double off = 0.0;
        for (int i = 0; i < dim; ++i) {
            for (int j = 0; j < i; ++j) off += std::abs(g[i] * g[j]);
        }
        off_acc += off / (0.5 * dim * (dim - 1));
    }
    stats.mean_diag = diag_acc / n_samples;
    stats.mean_abs_offdiag = off_acc / n_samples;
    return stats;
}

// ------------------------------------------------------------ F distribution

namespace {

double f_log_pdf_const(int d1, int d2) {
    double a = 0.5 * d1, b = 0.5 * d2;
    return std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(static_cast<double>(d1) / d2);
}

double f_pdf(double x, int d1, int d2, double log_c) {
    if (x <= 0.0) return 0.0;
    double a = 0.5 * d1, b = 0.5 * d2;
    double lp = log_c + (a - 1.0) * std::log(x) - (a + b) * std::log1p(x * d1 / d2);
    return std::exp(lp);
}

double simpson(double lo, double hi, int d1, int d2, double log_c) {
    double mid = 0.5 * (lo + hi);
    return (hi - lo) / 6.0 *
           (f_pdf(lo, d1, d2, log_c) + 4.0 * f_pdf(mid, d1, d2, log_c) + f_pdf(hi, d1, d2, log_c));
}

double adaptive(double lo, double hi, double whole, int d1, int d2, double log_c, double tol,
                int depth) {
    double mid = 0.5 * (lo + hi);
    double left = simpson(lo, mid, d1, d2, log_c);
    double right = simpson(mid, hi, d1, d2, log_c);
    if (depth <= 0 || std::abs(left + right - whole) < 15.0 * tol) {
        return left + right + (left + right - whole) / 15.0;
    }
    return adaptive(lo, mid, left, d1, d2, log_c, tol / 2.0, depth - 1) +
           adaptive(mid, hi, right, d1, d2, log_c, tol / 2.0, depth - 1);
}

}  // namespace

double f_cdf(double x, int d1, int d2) {
    if (x <= 0.0) return 0.0;
    double log_c = f_log_pdf_const(d1, d2);
    // split at 1 so the integrable peak near 0 is resolved
    double split = std::min(x, 1.0);
    double acc = adaptive(0.0, split, simpson(0.0, split, d1, d2, log_c), d1, d2, log_c, 1e-10, 40);
    if (x > 1.0) {
        acc += adaptive(1.0, x, simpson(1.0, x, d1, d2, log_c), d1, d2, log_c, 1e-10, 40);
    }
    return std::min(1.0, acc);
}

double f_upper_quantile(double alpha, int d1, int d2) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("f_upper_quantile: bad alpha");
    double target = 1.0 - alpha;
    double hi = 2.0;
    while (f_cdf(hi, d1, d2) < target) {
        hi *= 2.0;
        if (hi > 1e12) throw std::runtime_error("f_upper_quantile: quantile search overflow");
    }
    double lo = 0.0;
    for (int it = 0; it < 200; ++it) {
        double mid = 0.5 * (lo + hi);
        if (f_cdf(mid, d1, d2) < target) lo = mid;
        else hi = mid;
        if (hi - lo < 1e-9) break;
    }
    return 0.5 * (lo + hi);
}

// ----------------------------------------------------------- gaussian optima

void GaussianOptimaSpec::validate() const {
    if (dim < 1) throw std::invalid_argument("GaussianOptimaSpec: dim >= 1");
    if (n < 2) throw std::invalid_argument("GaussianOptimaSpec: n >= 2");
    if (!(sigma > 0.0)) throw std::invalid_argument("GaussianOptimaSpec: sigma > 0");
    if (!c.empty() && static_cast<int>(c.size()) != dim) {
        throw std::invalid_argument("GaussianOptimaSpec: c dimension mismatch");
    }
}

GaussianOptimaReport gaussian_optima_study(const GaussianOptimaSpec& spec, int trials,
                                           std::uint64_t seed) {
    spec.validate();
    if (trials < 100) throw std::invalid_argument("gaussian_optima_study: trials >= 100");
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    Vec c = spec.c.empty() ? Vec(spec.dim, 0.0) : spec.c;

    GaussianOptimaReport report;
    report.expected_sq_dist = spec.sigma * spec.sigma * spec.dim;

    // (a) E||c - p||^2 == sigma^2 * dim
    {
        double acc = 0.0, acc2 = 0.0;
        for (int t = 0; t < trials; ++t) {
            double d2 = 0.0;
            for (int i = 0; i < spec.dim; ++i) {
                double z = spec.sigma * gauss(rng);
                d2 += z * z;
            }
            acc += d2;
            acc2 += d2 * d2;
        }
        report.mean_sq_dist = acc / trials;
        double var = std::max(0.0, acc2 / trials - report.mean_sq_dist * report.mean_sq_dist);
        report.stderr_sq_dist = std::sqrt(var / trials);
    }

    // mean squared distance should grow monotonically with sigma
    report.sigma_grid = {0.5 * spec.sigma, spec.sigma, 2.0 * spec.sigma};
    for (double s : report.sigma_grid) {
        double acc = 0.0;
        for (int t = 0; t < trials; ++t) {
            double d2 = 0.0;
            for (int i = 0; i < spec.dim; ++i) {
                double z = s * gauss(rng);
                d2 += z * z;
            }
            acc += d2;
        }
        report.grid_mean_sq_dist.push_back(acc / trials);
    }

    // F-rule: sigma1 = ratio * sigma2
    report.f_quantile = f_upper_quantile(0.05, spec.n - 1, spec.n - 1);
    double sigma2 = spec.sigma;
    double sigma1 = report.sigma_ratio * sigma2;
    auto sample_s2 = [&](double s) {
        std::vector<Vec> ps(spec.n, Vec(spec.dim));
        Vec mean(spec.dim, 0.0);
        for (int i = 0; i < spec.n; ++i) {
            for (int d = 0; d < spec.dim; ++d) {
                ps[i][d] = c[d] + s * gauss(rng);
                mean[d] += ps[i][d] / spec.n;
            }
        }
        double acc = 0.0;
        for (int i = 0; i < spec.n; ++i) {
            Vec diff = sub(ps[i], mean);
            acc += dot(diff, diff);
        }
        return acc / spec.n;
    };
    int hits = 0;
    for (int t = 0; t < trials; ++t) {
        double s1 = sample_s2(sigma1);
        double s2 = sample_s2(sigma2);
        if (s1 / s2 >= report.f_quantile) ++hits;
    }
    report.f_true_positive_rate = static_cast<double>(hits) / trials;

    // Chebyshev coverage of the training-vs-testing gap
    {
        std::vector<double> gaps;
        gaps.reserve(trials);
        double mean_gapvar_acc = 0.0, mean_acc = 0.0;
        for (int t = 0; t < trials; ++t) {
            double s2 = sample_s2(spec.sigma) * spec.n / (spec.n - 1.0);
            gaps.push_back(s2);
            mean_acc += s2;
        }
        double mean = mean_acc / trials;
        for (double v : gaps) mean_gapvar_acc += (v - mean) * (v - mean);
        double var = mean_gapvar_acc / trials;
        for (double k : {1.0, 2.0, 3.0}) {
            double delta = k * std::sqrt(var);
            int exceed = 0;
            for (double v : gaps) {
                if (std::abs(v - report.expected_sq_dist) > delta) ++exceed;
            }
            report.chebyshev_delta.push_back(delta);
            report.chebyshev_rate.push_back(static_cast<double>(exceed) / trials);
            report.chebyshev_bound.push_back(std::min(1.0, var / (delta * delta)));
        }
    }
    return report;
}

// --------------------------------------------------------- landscape profile

LandscapeProfile landscape_profile(const Vec& x, const Ensemble& e, int y, int probe_points,
                                   int fine_tune_steps, double fine_tune_step_size,
                                   double probe_range) {
    if (probe_points < 3) throw std::invalid_argument("landscape_profile: probe_points >= 3");
    LandscapeProfile profile;
    for (const auto& m : e.members()) {
        LandscapeCurve curve;
        // locate p_i by signed descent on this member alone
        Vec p = x;
        for (int s = 0; s < fine_tune_steps; ++s) {
            Vec g = m->input_grad(p, y);
            axpy(-fine_tune_step_size, sign_vec(g), p);
            if (!std::isfinite(m->loss(p, y))) {
                throw std::runtime_error("landscape_profile: fine-tune diverged");
            }
        }
        curve.p_est = p;
        Vec diff = sub(p, x);
        curve.dist_linf = norm_linf(diff);
        Vec u(x.size(), 0.0);
        if (curve.dist_linf > kNormFloor) u = scale(diff, 1.0 / curve.dist_linf);

        curve.offsets.resize(probe_points);
        curve.losses.resize(probe_points);
        for (int i = 0; i < probe_points; ++i) {
            double s = -probe_range + 2.0 * probe_range * i / (probe_points - 1);
            Vec xi = x;
            axpy(s, u, xi);
            curve.offsets[i] = s;
            curve.losses[i] = m->loss(xi, y);
        }

        // least-squares parabola a s^2 + b s + c0
        {
            double s0 = probe_points, s1 = 0, s2 = 0, s3 = 0, s4 = 0;
            double t0 = 0, t1 = 0, t2 = 0;
            for (int i = 0; i < probe_points; ++i) {
                double s = curve.offsets[i], v = curve.losses[i];
                double ss = s * s;
                s1 += s; s2 += ss; s3 += ss * s; s4 += ss * ss;
                t0 += v; t1 += s * v; t2 += ss * v;
            }
            Matrix a(3);
            a.at(0, 0) = s4; a.at(0, 1) = s3; a.at(0, 2) = s2;
            a.at(1, 0) = s3; a.at(1, 1) = s2; a.at(1, 2) = s1;
            a.at(2, 0) = s2; a.at(2, 1) = s1; a.at(2, 2) = s0;
            Vec rhs = {t2, t1, t0};
            Vec coef = a.inverse().matvec(rhs);
            curve.curvature = 2.0 * coef[0];
            double mean = t0 / probe_points;
            double ss_tot = 0.0, ss_res = 0.0;
            for (int i = 0; i < probe_points; ++i) {
                double s = curve.offsets[i];
                double fit = coef[0] * s * s + coef[1] * s + coef[2];
                ss_tot += (curve.losses[i] - mean) * (curve.losses[i] - mean);
                ss_res += (curve.losses[i] - fit) * (curve.losses[i] - fit);
            }
            curve.fit_r2 = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : 1.0;
        }
        profile.curves.push_back(std::move(curve));
    }
    double inv = 1.0 / static_cast<double>(profile.curves.size());
    for (const auto& c : profile.curves) {
        profile.mean_curvature += inv * c.curvature;
        profile.mean_dist_linf += inv * c.dist_linf;
    }
    return profile;
}

NfeAudit nfe_audit(const AttackTrace& trace, const std::string& attack_name, int T, int n) {
    NfeAudit audit;
    audit.expected = expected_nfe(attack_name, T, n, trace.config.r);
    audit.actual = trace.nfe;
    audit.ok = audit.expected == audit.actual;
    return audit;
}

double ensemble_hessian_fnorm(const Ensemble& e, const Vec& x, int y, int n_probes,
                              std::uint64_t seed, double h) {
    if (n_probes < 1) throw std::invalid_argument("ensemble_hessian_fnorm: n_probes >= 1");
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    double acc = 0.0;
    Vec xp(x.size()), xm(x.size());
    for (int t = 0; t < n_probes; ++t) {
        Vec v(x.size());
        for (double& entry : v) entry = gauss(rng);
        for (size_t i = 0; i < x.size(); ++i) {
            xp[i] = x[i] + h * v[i];
            xm[i] = x[i] - h * v[i];
        }
        Vec gp = e.loss_and_grad(xp, y).second;
        Vec gm = e.loss_and_grad(xm, y).second;
        double s = 0.0;
        for (size_t i = 0; i < x.size(); ++i) {
            double hv = (gp[i] - gm[i]) / (2.0 * h);
            s += hv * hv;
        }
        acc += s;
    }
    return std::sqrt(acc / n_probes);
}

}  // namespace cwa
