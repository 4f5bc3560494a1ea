#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <memory>
#include <random>

#include "cwa/attacks.hpp"
#include "cwa/verify.hpp"

using namespace cwa;

namespace {

ClassifierPtr diag_quadratic(const Vec& p, const Vec& diag) {
    Matrix h(static_cast<int>(p.size()));
    for (int i = 0; i < h.n; ++i) h.at(i, i) = diag[i];
    return std::make_shared<QuadraticModel>(p, h, 0.0);
}

Ensemble single(ClassifierPtr m) { return Ensemble({std::move(m)}, EnsembleMode::LossAverage); }

Ensemble trained_pair(std::uint64_t seed) {
    auto a = std::make_shared<LinearSoftmax>(4, 3);
    a->init_random(seed);
    auto b = std::make_shared<Mlp>(4, 6, 3, Activation::Tanh);
    b->init_random(seed + 1);
    return Ensemble({a, b}, EnsembleMode::LogitsAverage);
}

void check_budget(const AttackTrace& tr, const Vec& x_nat) {
    const auto& b = tr.config.budget;
    for (const Vec& x : tr.iterates) {
        for (size_t i = 0; i < x.size(); ++i) {
            CHECK(std::abs(x[i] - x_nat[i]) <= b.eps + 1e-12);
            CHECK(x[i] >= b.box_lo);
            CHECK(x[i] <= b.box_hi);
        }
    }
}

}  // namespace

TEST_CASE("fgsm on a 1-D quadratic moves toward the optimum by exactly eps") {
    Ensemble e = single(diag_quadratic({0.8}, {1.0}));
    AttackConfig cfg;
    Vec x_nat{0.5};
    AttackTrace tr = fgsm(e, x_nat, 0, cfg);
    CHECK(tr.iterates.size() == 2);
    CHECK(tr.final_x()[0] == doctest::Approx(0.5 + 16.0 / 255.0).epsilon(1e-15));
    CHECK(tr.nfe == 1);
}

TEST_CASE("fgsm with zero gradient leaves x unchanged") {
    Ensemble e = single(diag_quadratic({0.5}, {1.0}));
    AttackConfig cfg;
    AttackTrace tr = fgsm(e, {0.5}, 0, cfg);
    CHECK(tr.final_x()[0] == 0.5);
}

TEST_CASE("fgsm hand trace on a 2-dim linear softmax") {
    // W = I, b = 0, x = (0.5, 0.5), y = 0: grad = W^T(e_y - softmax) = (0.5, -0.5)
    auto lin = std::make_shared<LinearSoftmax>(2, 2);
    lin->weights() = {1.0, 0.0, 0.0, 1.0};
    Ensemble e({lin}, EnsembleMode::LogitsAverage);
    AttackConfig cfg;
    cfg.budget.eps = 0.1;
    AttackTrace tr = fgsm(e, {0.5, 0.5}, 0, cfg);
    CHECK(tr.final_x()[0] == doctest::Approx(0.4).epsilon(1e-12));
    CHECK(tr.final_x()[1] == doctest::Approx(0.6).epsilon(1e-12));
}

TEST_CASE("bim with T=1, alpha=eps equals fgsm bitwise") {
    Ensemble e = trained_pair(3);
    AttackConfig cfg;
    cfg.T = 1;
    cfg.alpha = cfg.budget.eps;
    Vec x_nat{0.4, 0.5, 0.6, 0.5};
    AttackTrace a = bim(e, x_nat, 1, cfg);
    AttackTrace b = fgsm(e, x_nat, 1, cfg);
    CHECK(a.final_x() == b.final_x());
}

TEST_CASE("bim two-step hand trace on a 1-D quadratic") {
    // p=0.6, H=1: g(0.5)=-0.1 -> x1=0.54; g(0.54)=-0.06 -> x2=0.58
    Ensemble e = single(diag_quadratic({0.6}, {1.0}));
    AttackConfig cfg;
    cfg.budget.eps = 0.1;
    cfg.T = 2;
    cfg.alpha = 0.04;
    AttackTrace tr = bim(e, {0.5}, 0, cfg);
    CHECK(tr.iterates[1][0] == doctest::Approx(0.54).epsilon(1e-14));
    CHECK(tr.iterates[2][0] == doctest::Approx(0.58).epsilon(1e-14));
}

TEST_CASE("bim loss non-increasing on a single interior convex quadratic") {
    Ensemble e = single(diag_quadratic({0.55, 0.52}, {1.0, 2.0}));
    AttackConfig cfg;
    cfg.budget.eps = 0.2;
    cfg.T = 20;
    cfg.alpha = 0.002;
    AttackTrace tr = bim(e, {0.5, 0.5}, 0, cfg);
    for (size_t t = 1; t < tr.ensemble_losses.size(); ++t) {
        CHECK(tr.ensemble_losses[t] <= tr.ensemble_losses[t - 1] + 1e-12);
    }
}

TEST_CASE("mi with T=1, alpha=eps matches fgsm bitwise") {
    Ensemble e = trained_pair(5);
    AttackConfig cfg;
    cfg.T = 1;
    cfg.alpha = cfg.budget.eps;
    Vec x_nat{0.3, 0.6, 0.4, 0.7};
    AttackTrace a = mi(e, x_nat, 2, cfg);
    AttackTrace b = fgsm(e, x_nat, 2, cfg);
    CHECK(a.final_x() == b.final_x());
}

TEST_CASE("mi with mu=0 equals bim (sign erases the l1 normalization)") {
    Ensemble e = trained_pair(7);
    AttackConfig cfg;
    cfg.mu = 0.0;
    Vec x_nat{0.45, 0.55, 0.5, 0.5};
    AttackTrace a = mi(e, x_nat, 0, cfg);
    AttackTrace b = bim(e, x_nat, 0, cfg);
    CHECK(a.iterates == b.iterates);
}

TEST_CASE("mi three-iteration hand trace on a diagonal quadratic ensemble") {
    // members H1=I p1=(0.7,0.5), H2=2I p2=(0.5,0.7); loss-average gradient
    // stays negative in both coordinates, so every signed step is (+1,+1).
    Ensemble e({diag_quadratic({0.7, 0.5}, {1.0, 1.0}), diag_quadratic({0.5, 0.7}, {2.0, 2.0})},
               EnsembleMode::LossAverage);
    AttackConfig cfg;
    cfg.budget.eps = 0.1;
    cfg.T = 3;
    cfg.alpha = 0.02;
    AttackTrace tr = mi(e, {0.5, 0.5}, 0, cfg);
    CHECK(tr.iterates[1][0] == doctest::Approx(0.52).epsilon(1e-14));
    CHECK(tr.iterates[1][1] == doctest::Approx(0.52).epsilon(1e-14));
    CHECK(tr.iterates[2][0] == doctest::Approx(0.54).epsilon(1e-14));
    CHECK(tr.iterates[3][0] == doctest::Approx(0.56).epsilon(1e-14));
    CHECK(tr.iterates[3][1] == doctest::Approx(0.56).epsilon(1e-14));
}

TEST_CASE("sam_step with r=0 reduces to a plain signed descent step") {
    Ensemble e = single(diag_quadratic({0.7, 0.5}, {1.0, 1.0}));
    AttackConfig cfg;
    cfg.r = 0.0;
    Vec x_t{0.5, 0.5};
    auto [x_r, x_f] = sam_step(e, x_t, x_t, 0, cfg);
    CHECK(x_r == x_t);
    // gradient (-0.2, 0): descent step is +alpha in coord 0
    CHECK(x_f[0] == doctest::Approx(0.5 + cfg.alpha).epsilon(1e-14));
    CHECK(x_f[1] == 0.5);
}

TEST_CASE("sam_step near a 1-D symmetric optimum returns to within alpha") {
    Ensemble e = single(diag_quadratic({0.5}, {1.0}));
    AttackConfig cfg;  // r = eps/15 < alpha = eps/5
    Vec x_nat{0.5};
    Vec x_t{0.501};
    auto [x_r, x_f] = sam_step(e, x_t, x_nat, 0, cfg);
    CHECK(std::abs(x_r[0] - 0.5) > std::abs(x_t[0] - 0.5));  // kicked away
    CHECK(std::abs(x_f[0] - 0.5) <= cfg.alpha + 1e-14);
}

TEST_CASE("sam_step 2-dim quadratic hand trace") {
    Ensemble e = single(diag_quadratic({0.7, 0.5}, {1.0, 1.0}));
    AttackConfig cfg;
    cfg.budget.eps = 0.1;
    cfg.r = 0.02;
    cfg.alpha = 0.04;
    auto [x_r, x_f] = sam_step(e, {0.5, 0.5}, {0.5, 0.5}, 0, cfg);
    CHECK(x_r[0] == doctest::Approx(0.48).epsilon(1e-14));
    CHECK(x_r[1] == 0.5);
    CHECK(x_f[0] == doctest::Approx(0.52).epsilon(1e-14));
    CHECK(x_f[1] == 0.5);
}

TEST_CASE("mi_sam with r=0, mu=0 takes one inner descent step scaled by alpha") {
    Ensemble e = single(diag_quadratic({0.9, 0.5}, {1.0, 1.0}));
    AttackConfig cfg;
    cfg.T = 1;
    cfg.r = 0.0;
    cfg.mu = 0.0;
    cfg.rescale_beta = false;
    cfg.beta = 0.01;
    cfg.alpha = 0.5;
    Vec x_nat{0.5, 0.5};
    AttackTrace tr = mi_sam(e, x_nat, 0, cfg);
    // inner: x_f = x + beta in coord 0; outer: x += alpha*(x_f - x)
    CHECK(tr.final_x()[0] == doctest::Approx(0.5 + 0.5 * 0.01).epsilon(1e-14));
    CHECK(tr.final_x()[1] == 0.5);
}

TEST_CASE("cse_inner_loop with one member and mu=0 is one normalized step of size beta") {
    Ensemble e = single(diag_quadratic({0.7, 0.5}, {1.0, 1.0}));
    AttackConfig cfg;
    cfg.mu = 0.0;
    cfg.rescale_beta = false;
    cfg.beta = 0.01;
    MomentumState st;
    Vec out = cse_inner_loop(e, {0.5, 0.5}, {0.5, 0.5}, 0, cfg, st, {0});
    CHECK(out[0] == doctest::Approx(0.51).epsilon(1e-12));
    CHECK(out[1] == 0.5);
}

TEST_CASE("cse_inner_loop with two identical members doubles down on the direction") {
    auto m1 = diag_quadratic({0.9, 0.5}, {1.0, 1.0});
    auto m2 = diag_quadratic({0.9, 0.5}, {1.0, 1.0});
    Ensemble both({m1, m2}, EnsembleMode::LossAverage);
    Ensemble one({m1}, EnsembleMode::LossAverage);
    AttackConfig cfg;
    cfg.rescale_beta = false;
    cfg.beta = 0.005;
    Vec x{0.5, 0.5};
    MomentumState st1, st2;
    Vec a = cse_inner_loop(one, x, x, 0, cfg, st1, {0});
    Vec b = cse_inner_loop(both, x, x, 0, cfg, st2, {0, 1});
    CHECK(a[0] > x[0]);
    CHECK(b[0] > a[0]);  // same direction, strictly further
    CHECK(b[1] == a[1]);
}

TEST_CASE("cse_inner_loop two-model hand trace") {
    Ensemble e({diag_quadratic({0.9, 0.5}, {1.0, 1.0}), diag_quadratic({0.5, 0.9}, {1.0, 1.0})},
               EnsembleMode::LossAverage);
    AttackConfig cfg;
    cfg.budget.eps = 0.2;
    cfg.rescale_beta = false;
    cfg.beta = 0.1;
    MomentumState st;
    Vec out = cse_inner_loop(e, {0.5, 0.5}, {0.5, 0.5}, 0, cfg, st, {0, 1});
    // member 0: g=(-0.4,0), m_hat=(-1,0), x=(0.6,0.5)
    // member 1: g=(0.1,-0.4)/|..|, m_hat=(-1+0.24253562503633297, -0.9701425001453319)
    CHECK(out[0] == doctest::Approx(0.6757464374963667).epsilon(1e-13));
    CHECK(out[1] == doctest::Approx(0.5970142500145332).epsilon(1e-13));
}

TEST_CASE("mi_cse single-member reduction matches a manual normalized-MI step") {
    Ensemble e = single(diag_quadratic({0.9, 0.5}, {1.0, 1.0}));
    AttackConfig cfg;
    cfg.T = 1;
    cfg.mu = 0.0;
    cfg.rescale_beta = false;
    cfg.beta = 0.01;
    Vec x_nat{0.5, 0.5};
    AttackTrace tr = mi_cse(e, x_nat, 0, cfg);
    // inner moves +beta in coord 0; outer x += alpha*sign(inner displacement)
    CHECK(tr.final_x()[0] == doctest::Approx(0.5 + cfg.alpha).epsilon(1e-14));
    CHECK(tr.final_x()[1] == 0.5);
}

TEST_CASE("mi_cwa with r=0 is bitwise identical to mi_cse") {
    std::uint64_t s = 20260826;
    Ensemble e = random_quadratic_ensemble(8, 4, 0.2, Vec(8, 0.5), 0.1, s);
    AttackConfig cfg;
    cfg.r = 0.0;
    cfg.seed = 99;
    Vec x_nat(8, 0.5);
    AttackTrace a = mi_cwa(e, x_nat, 0, cfg);
    AttackTrace b = mi_cse(e, x_nat, 0, cfg);
    CHECK(a.iterates == b.iterates);
    CHECK(a.nfe == b.nfe);
}

TEST_CASE("generalized_cwa with matching optimizers is bitwise identical to mi_cwa") {
    std::uint64_t s = 424243;
    Ensemble e = random_quadratic_ensemble(8, 4, 0.2, Vec(8, 0.5), 0.1, s);
    AttackConfig cfg;
    cfg.seed = 7;
    Vec x_nat(8, 0.5);
    AttackTrace a = mi_cwa(e, x_nat, 0, cfg);
    PlainStep opt_r(cfg.r, /*signed_step=*/true);
    NormalizedMomentum opt_beta(cfg.mu, cfg.effective_beta(8), cfg.norm_floor);
    SignMomentum opt_alpha(cfg.mu, cfg.alpha);
    AttackTrace b = generalized_cwa(e, x_nat, 0, cfg.budget, cfg.T, opt_r, opt_beta, opt_alpha,
                                    cfg.seed, cfg.norm_floor);
    CHECK(a.iterates == b.iterates);
    CHECK(a.nfe == b.nfe);
}

TEST_CASE("generalized_cwa with Adam as the outer optimizer runs within budget") {
    std::uint64_t s = 5150;
    Ensemble e = random_quadratic_ensemble(6, 3, 0.2, Vec(6, 0.5), 0.1, s);
    PerturbationBudget budget;
    PlainStep opt_r(budget.eps / 15.0, true);
    NormalizedMomentum opt_beta(1.0, 0.01);
    Adam opt_alpha(budget.eps / 5.0);
    Vec x_nat(6, 0.5);
    AttackTrace tr = generalized_cwa(e, x_nat, 0, budget, 10, opt_r, opt_beta, opt_alpha, 1);
    check_budget(tr, x_nat);
    CHECK(tr.iterates.size() == 11);
}

TEST_CASE("generalized_cwa with all PlainStep, r=0 is a momentum-free inner descent") {
    // one member, T=1: reverse step is a no-op, inner plain step moves by
    // beta*g, outer plain step applies (x_inner - o) once more from o.
    Ensemble e = single(diag_quadratic({0.9, 0.5}, {1.0, 1.0}));
    PerturbationBudget budget;
    budget.eps = 0.3;
    PlainStep opt_r(0.0, true);
    PlainStep opt_beta(0.05);
    PlainStep opt_alpha(1.0);
    Vec x_nat{0.5, 0.5};
    AttackTrace tr = generalized_cwa(e, x_nat, 0, budget, 1, opt_r, opt_beta, opt_alpha, 0);
    // g=(-0.4,0) -> inner x=(0.52,0.5); upd=o-x=(-0.02,0); outer o-1.0*upd=(0.52,0.5)
    CHECK(tr.final_x()[0] == doctest::Approx(0.52).epsilon(1e-14));
    CHECK(tr.final_x()[1] == 0.5);
}

TEST_CASE("attack determinism: identical config and seed give bitwise-identical traces") {
    Ensemble e = trained_pair(11);
    AttackConfig cfg;
    cfg.seed = 31337;
    Vec x_nat{0.5, 0.4, 0.6, 0.5};
    for (const auto& name : attack_names()) {
        AttackTrace a = attack_by_name(name)(e, x_nat, 1, cfg);
        AttackTrace b = attack_by_name(name)(e, x_nat, 1, cfg);
        CHECK(a.iterates == b.iterates);
        CHECK(a.nfe == b.nfe);
    }
}

TEST_CASE("every attack keeps every iterate inside the ball and box") {
    std::mt19937_64 rng(71);
    std::uniform_real_distribution<double> u(0.05, 0.95);
    for (int inst = 0; inst < 5; ++inst) {
        Ensemble e = trained_pair(100 + inst);
        Vec x_nat(4);
        for (auto& v : x_nat) v = u(rng);
        AttackConfig cfg;
        cfg.seed = inst;
        for (const auto& name : attack_names()) {
            AttackTrace tr = attack_by_name(name)(e, x_nat, static_cast<int>(rng() % 3), cfg);
            check_budget(tr, x_nat);
        }
    }
}

TEST_CASE("nfe matches the accounting formulas") {
    Ensemble e = random_quadratic_ensemble(6, 4, 0.2, Vec(6, 0.5), 0.1, 8);
    AttackConfig cfg;
    Vec x_nat(6, 0.5);
    int n = e.size();
    for (const auto& name : attack_names()) {
        AttackTrace tr = attack_by_name(name)(e, x_nat, 0, cfg);
        CHECK(tr.nfe == expected_nfe(name, cfg.T, n, cfg.r));
    }
    CHECK(expected_nfe("fgsm", 10, 6, 0.0) == 6);
    CHECK(expected_nfe("mi", 10, 4, 0.0) == 40);
    CHECK(expected_nfe("mi-cwa", 10, 4, 16.0 / 255.0 / 15.0) == 80);
    CHECK(expected_nfe("mi-cwa", 10, 4, 0.0) == 40);
}

TEST_CASE("mi_cwa NFE is 20n at T=10 (n=4 -> 80)") {
    Ensemble e = random_quadratic_ensemble(6, 4, 0.2, Vec(6, 0.5), 0.1, 13);
    AttackConfig cfg;
    AttackTrace tr = mi_cwa(e, Vec(6, 0.5), 0, cfg);
    CHECK(tr.nfe == 80);
}

TEST_CASE("member order is seed-controlled and fixed per run") {
    std::uint64_t s = 777;
    Ensemble e = random_quadratic_ensemble(6, 5, 0.2, Vec(6, 0.5), 0.1, s);
    AttackConfig a;
    a.seed = 1;
    AttackConfig b;
    b.seed = 2;
    Vec x_nat(6, 0.5);
    AttackTrace t1 = mi_cse(e, x_nat, 0, a);
    AttackTrace t1b = mi_cse(e, x_nat, 0, a);
    AttackTrace t2 = mi_cse(e, x_nat, 0, b);
    CHECK(t1.iterates == t1b.iterates);
    CHECK(t1.iterates != t2.iterates);  // different visiting order moves differently
}

TEST_CASE("config validation rejects bad fields") {
    AttackConfig cfg;
    cfg.T = 0;
    CHECK_THROWS(cfg.validate());
    cfg = AttackConfig{};
    cfg.alpha = 0.0;
    CHECK_THROWS(cfg.validate());
    cfg = AttackConfig{};
    cfg.mu = -1.0;
    CHECK_THROWS(cfg.validate());
    cfg = AttackConfig{};
    cfg.r = -0.1;
    CHECK_THROWS(cfg.validate());
    cfg = AttackConfig{};
    cfg.budget.eps = -1.0;
    CHECK_THROWS(cfg.validate());
    CHECK_THROWS(attack_by_name("pgd"));
}

TEST_CASE("effective beta rescales by sqrt(dim / imagenet dim)") {
    AttackConfig cfg;
    CHECK(cfg.effective_beta(150528) == doctest::Approx(50.0).epsilon(1e-12));
    CHECK(cfg.effective_beta(16) ==
          doctest::Approx(50.0 * std::sqrt(16.0 / 150528.0)).epsilon(1e-12));
    cfg.rescale_beta = false;
    CHECK(cfg.effective_beta(16) == 50.0);
}
