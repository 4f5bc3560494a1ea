#include "cwa/attacks.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>

namespace cwa {

namespace {

constexpr double kImagenetDim = 224.0 * 224.0 * 3.0;

void record(AttackTrace& trace, const Ensemble& e, const Vec& x, int y) {
    trace.iterates.push_back(x);
    trace.ensemble_losses.push_back(e.loss(x, y));
    std::vector<double> ml;
    ml.reserve(e.size());
    for (const auto& m : e.members()) ml.push_back(m->loss(x, y));
    trace.member_losses.push_back(std::move(ml));
}

AttackTrace start_trace(const std::string& name, const Ensemble& e, const Vec& x_nat, int y,
                        const AttackConfig& cfg) {
    cfg.validate();
    require_finite(x_nat, "attack:" + name);
    if (static_cast<int>(x_nat.size()) != e.dim()) {
        throw std::invalid_argument("attack " + name + ": x_nat dim mismatch");
    }
    AttackTrace trace;
    trace.attack = name;
    trace.config = cfg;
    record(trace, e, x_nat, y);
    return trace;
}

std::vector<int> member_order(const Ensemble& e, std::uint64_t seed) {
    std::vector<int> order(e.size());
    std::iota(order.begin(), order.end(), 0);
    std::mt19937_64 rng(seed);
    std::shuffle(order.begin(), order.end(), rng);
    return order;
}

}  // namespace

double AttackConfig::effective_beta(int dim) const {
    if (!rescale_beta) return beta;
    return beta * std::sqrt(static_cast<double>(dim) / kImagenetDim);
}

void AttackConfig::validate() const {
    budget.validate();
    if (T < 1) throw std::invalid_argument("AttackConfig: T must be >= 1");
    if (mu < 0.0) throw std::invalid_argument("AttackConfig: mu must be >= 0");
    if (!(alpha > 0.0)) throw std::invalid_argument("AttackConfig: alpha must be > 0");
    if (!(beta > 0.0)) throw std::invalid_argument("AttackConfig: beta must be > 0");
    if (r < 0.0) throw std::invalid_argument("AttackConfig: r must be >= 0");
    if (!(norm_floor > 0.0)) throw std::invalid_argument("AttackConfig: norm_floor must be > 0");
}

AttackTrace fgsm(const Ensemble& e, const Vec& x_nat, int y, const AttackConfig& cfg) {
    auto trace = start_trace("fgsm", e, x_nat, y, cfg);
    std::int64_t before = e.grad_evals();
    Vec g = e.loss_and_grad(x_nat, y).second;
    Vec s = sign_vec(g);
    Vec x = x_nat;
    axpy(-cfg.budget.eps, s, x);
    x = clip_linf_box(x, x_nat, cfg.budget);
    record(trace, e, x, y);
    trace.nfe = e.grad_evals() - before;
    return trace;
}

AttackTrace bim(const Ensemble& e, const Vec& x_nat, int y, const AttackConfig& cfg) {
    auto trace = start_trace("bim", e, x_nat, y, cfg);
    std::int64_t before = e.grad_evals();
    Vec x = x_nat;
    for (int t = 0; t < cfg.T; ++t) {
        Vec g = e.loss_and_grad(x, y).second;
        Vec s = sign_vec(g);
        axpy(-cfg.alpha, s, x);
        x = clip_linf_box(x, x_nat, cfg.budget);
        record(trace, e, x, y);
    }
    trace.nfe = e.grad_evals() - before;
    return trace;
}

AttackTrace mi(const Ensemble& e, const Vec& x_nat, int y, const AttackConfig& cfg) {
    auto trace = start_trace("mi", e, x_nat, y, cfg);
    std::int64_t before = e.grad_evals();
    Vec x = x_nat;
    Vec m(x.size(), 0.0);
    for (int t = 0; t < cfg.T; ++t) {
        Vec g = e.loss_and_grad(x, y).second;
        // descent convention: accumulate -g / ||g||_1
        double n1 = std::max(norm_l1(g), cfg.norm_floor);
        for (size_t i = 0; i < x.size(); ++i) m[i] = cfg.mu * m[i] - g[i] / n1;
        Vec s = sign_vec(m);
        axpy(cfg.alpha, s, x);
        x = clip_linf_box(x, x_nat, cfg.budget);
        record(trace, e, x, y);
    }
    trace.nfe = e.grad_evals() - before;
    return trace;
}

std::pair<Vec, Vec> sam_step(const Ensemble& e, const Vec& x_t, const Vec& x_nat, int y,
                             const AttackConfig& cfg) {
    Vec g = e.loss_and_grad(x_t, y).second;
    Vec x_r = x_t;
    axpy(cfg.r, sign_vec(g), x_r);
    x_r = clip_linf_box(x_r, x_nat, cfg.budget);
    Vec g2 = e.loss_and_grad(x_r, y).second;
    Vec x_f = x_r;
    axpy(-cfg.alpha, sign_vec(g2), x_f);
    x_f = clip_linf_box(x_f, x_nat, cfg.budget);
    return {x_r, x_f};
}

AttackTrace sam(const Ensemble& e, const Vec& x_nat, int y, const AttackConfig& cfg) {
    auto trace = start_trace("sam", e, x_nat, y, cfg);
    std::int64_t before = e.grad_evals();
    Vec x = x_nat;
    for (int t = 0; t < cfg.T; ++t) {
        x = sam_step(e, x, x_nat, y, cfg).second;
        record(trace, e, x, y);
    }
    trace.nfe = e.grad_evals() - before;
    return trace;
}

AttackTrace mi_sam(const Ensemble& e, const Vec& x_nat, int y, const AttackConfig& cfg) {
    auto trace = start_trace("mi-sam", e, x_nat, y, cfg);
    std::int64_t before = e.grad_evals();
    double beta = cfg.effective_beta(e.dim());
    Vec x = x_nat;
    Vec m(x.size(), 0.0);
    for (int t = 0; t < cfg.T; ++t) {
        Vec g = e.loss_and_grad(x, y).second;
        Vec x_r = x;
        axpy(cfg.r, sign_vec(g), x_r);
        x_r = clip_linf_box(x_r, x_nat, cfg.budget);
        g = e.loss_and_grad(x_r, y).second;
        Vec x_f = x_r;
        axpy(-beta, sign_vec(g), x_f);
        x_f = clip_linf_box(x_f, x_nat, cfg.budget);
        // raw momentum over the combined direction; no sign on the outer step
        for (size_t i = 0; i < x.size(); ++i) m[i] = cfg.mu * m[i] + (x_f[i] - x[i]);
        axpy(cfg.alpha, m, x);
        x = clip_linf_box(x, x_nat, cfg.budget);
        record(trace, e, x, y);
    }
    trace.nfe = e.grad_evals() - before;
    return trace;
}

Vec cse_inner_loop(const Ensemble& e, const Vec& x_t, const Vec& x_nat, int y,
                   const AttackConfig& cfg, MomentumState& state,
                   const std::vector<int>& order) {
    if (state.m_hat.empty()) state.m_hat.assign(x_t.size(), 0.0);
    double beta = cfg.effective_beta(e.dim());
    Vec x = x_t;
    for (int idx : order) {
        Vec g = e.member(idx)->input_grad(x, y);
        Vec gn = l2_normalize(g, cfg.norm_floor);
        for (size_t i = 0; i < x.size(); ++i) state.m_hat[i] = cfg.mu * state.m_hat[i] + gn[i];
        axpy(-beta, state.m_hat, x);
        x = clip_linf_box(x, x_nat, cfg.budget);
    }
    return x;
}

namespace {

AttackTrace cwa_family(const std::string& name, const Ensemble& e, const Vec& x_nat, int y,
                       const AttackConfig& cfg, bool with_reverse, bool signed_outer) {
    auto trace = start_trace(name, e, x_nat, y, cfg);
    std::int64_t before = e.grad_evals();
    std::vector<int> order = member_order(e, cfg.seed);
    Vec x = x_nat;
    MomentumState state;
    state.m.assign(x.size(), 0.0);
    for (int t = 0; t < cfg.T; ++t) {
        if (cfg.reset_inner_momentum) state.m_hat.assign(x.size(), 0.0);
        Vec x0 = x;
        if (with_reverse && cfg.r > 0.0) {
            Vec g = e.loss_and_grad(x, y).second;
            axpy(cfg.r, sign_vec(g), x0);
            x0 = clip_linf_box(x0, x_nat, cfg.budget);
        }
        Vec xn = cse_inner_loop(e, x0, x_nat, y, cfg, state, order);
        for (size_t i = 0; i < x.size(); ++i) state.m[i] = cfg.mu * state.m[i] + (xn[i] - x[i]);
        if (signed_outer) {
            axpy(cfg.alpha, sign_vec(state.m), x);
        } else {
            axpy(cfg.alpha, state.m, x);
        }
        x = clip_linf_box(x, x_nat, cfg.budget);
        record(trace, e, x, y);
    }
    trace.nfe = e.grad_evals() - before;
    return trace;
}

}  // namespace

AttackTrace cse(const Ensemble& e, const Vec& x_nat, int y, const AttackConfig& cfg) {
    return cwa_family("cse", e, x_nat, y, cfg, /*with_reverse=*/false, /*signed_outer=*/false);
}

AttackTrace mi_cse(const Ensemble& e, const Vec& x_nat, int y, const AttackConfig& cfg) {
    return cwa_family("mi-cse", e, x_nat, y, cfg, /*with_reverse=*/false, /*signed_outer=*/true);
}

AttackTrace mi_cwa(const Ensemble& e, const Vec& x_nat, int y, const AttackConfig& cfg) {
    return cwa_family("mi-cwa", e, x_nat, y, cfg, /*with_reverse=*/true, /*signed_outer=*/true);
}

AttackTrace generalized_cwa(const Ensemble& e, const Vec& x_nat, int y,
                            const PerturbationBudget& budget, int T, Optimizer& opt_r,
                            Optimizer& opt_beta, Optimizer& opt_alpha,
                            std::uint64_t seed, double norm_floor) {
    AttackConfig cfg;
    cfg.budget = budget;
    cfg.T = T;
    cfg.seed = seed;
    cfg.norm_floor = norm_floor;
    auto trace = start_trace("generalized-cwa", e, x_nat, y, cfg);
    std::int64_t before = e.grad_evals();
    std::vector<int> order = member_order(e, seed);
    opt_r.reset();
    opt_beta.reset();
    opt_alpha.reset();
    Vec x = x_nat;
    for (int t = 0; t < T; ++t) {
        Vec o = x;
        Vec g = e.loss_and_grad(x, y).second;
        x = clip_linf_box(opt_r.step(x, scale(g, -1.0)), x_nat, budget);
        for (int idx : order) {
            g = e.member(idx)->input_grad(x, y);
            x = clip_linf_box(opt_beta.step(x, g), x_nat, budget);
        }
        Vec upd = sub(o, x);
        x = clip_linf_box(opt_alpha.step(o, upd), x_nat, budget);
        record(trace, e, x, y);
    }
    trace.nfe = e.grad_evals() - before;
    return trace;
}

AttackFn attack_by_name(const std::string& name) {
    if (name == "fgsm") return &fgsm;
    if (name == "bim") return &bim;
    if (name == "mi") return &mi;
    if (name == "sam") return &sam;
    if (name == "mi-sam") return &mi_sam;
    if (name == "cse") return &cse;
    if (name == "mi-cse") return &mi_cse;
    if (name == "mi-cwa") return &mi_cwa;
    throw std::invalid_argument("unknown attack: " + name);
}

std::vector<std::string> attack_names() {
    return {"fgsm", "bim", "mi", "sam", "mi-sam", "cse", "mi-cse", "mi-cwa"};
}

std::int64_t expected_nfe(const std::string& attack, int T, int n, double r) {
    if (attack == "fgsm") return n;
    if (attack == "bim" || attack == "mi") return static_cast<std::int64_t>(T) * n;
    if (attack == "cse" || attack == "mi-cse") return static_cast<std::int64_t>(T) * n;
    if (attack == "sam" || attack == "mi-sam") return 2LL * T * n;
    if (attack == "mi-cwa") {
        return (r > 0.0) ? 2LL * T * n : static_cast<std::int64_t>(T) * n;
    }
    throw std::invalid_argument("expected_nfe: unknown attack " + attack);
}

}  // namespace cwa
