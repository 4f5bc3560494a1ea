#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "cwa/harness.hpp"
#include "cwa/io.hpp"

using namespace cwa;

namespace {

Dataset small_blobs(std::uint64_t seed, int dim = 8, int k = 3, int per_class = 40) {
    DatasetSpec spec;
    spec.dim = dim;
    spec.k = k;
    spec.per_class = per_class;
    spec.noise = 0.04;
    spec.seed = seed;
    return generate_dataset(spec);
}

ZooSpec small_zoo_spec() {
    ZooSpec spec;
    for (int i = 0; i < 4; ++i) {
        ZooMemberSpec m;
        m.train.arch = (i % 2 == 0) ? "linear" : "mlp";
        m.train.hidden = 6 + 2 * i;
        m.train.act = (i % 2 == 0) ? Activation::Tanh : Activation::Sigmoid;
        m.train.seed = 100 + i;
        m.train.epochs = 40;
        spec.members.push_back(m);
    }
    spec.surrogates = {0, 1};
    spec.holdouts = {2, 3};
    return spec;
}

}  // namespace

TEST_CASE("gaussian blobs: nearest-center rule scores >= 0.97") {
    DatasetSpec spec;
    spec.dim = 6;
    spec.k = 2;
    spec.per_class = 200;
    spec.noise = 0.04;
    spec.seed = 5;
    Dataset data = generate_dataset(spec);
    CHECK(nearest_center_accuracy(data, blob_centers(spec)) >= 0.97);
}

TEST_CASE("zero-noise blobs are perfectly separable") {
    DatasetSpec spec;
    spec.dim = 4;
    spec.k = 3;
    spec.per_class = 30;
    spec.noise = 0.0;
    spec.seed = 9;
    Dataset data = generate_dataset(spec);
    CHECK(nearest_center_accuracy(data, blob_centers(spec)) == doctest::Approx(1.0));
}

TEST_CASE("dataset generation is deterministic per seed") {
    DatasetSpec spec;
    spec.generator = "concentric_rings";
    spec.dim = 5;
    spec.k = 2;
    spec.per_class = 25;
    spec.seed = 31;
    Dataset a = generate_dataset(spec);
    Dataset b = generate_dataset(spec);
    CHECK(a.xs == b.xs);
    CHECK(a.ys == b.ys);
    spec.seed = 32;
    Dataset c = generate_dataset(spec);
    CHECK(a.xs != c.xs);
}

TEST_CASE("all three generators emit valid in-box points") {
    for (const char* gen : {"gaussian_blobs", "concentric_rings", "xor_grid"}) {
        DatasetSpec spec;
        spec.generator = gen;
        spec.dim = 4;
        spec.k = 2;
        spec.per_class = 30;
        spec.seed = 8;
        Dataset data = generate_dataset(spec);
        CHECK(data.xs.size() == 60);
        for (const Vec& x : data.xs) {
            for (double v : x) {
                CHECK(v >= 0.0);
                CHECK(v <= 1.0);
            }
        }
        for (int y : data.ys) {
            CHECK(y >= 0);
            CHECK(y < 2);
        }
    }
}

TEST_CASE("dataset spec validation") {
    DatasetSpec bad;
    bad.k = 1;
    CHECK_THROWS(generate_dataset(bad));
    DatasetSpec bad2;
    bad2.generator = "mnist";
    CHECK_THROWS(generate_dataset(bad2));
    DatasetSpec bad3;
    bad3.per_class = 0;
    CHECK_THROWS(generate_dataset(bad3));
}

TEST_CASE("zoo spec validation: overlapping or empty splits rejected") {
    ZooSpec spec = small_zoo_spec();
    CHECK_NOTHROW(spec.validate());
    spec.holdouts = {1, 2};
    CHECK_THROWS(spec.validate());
    spec = small_zoo_spec();
    spec.surrogates.clear();
    CHECK_THROWS(spec.validate());
}

TEST_CASE("train_zoo trains every member deterministically") {
    Dataset data = small_blobs(77);
    ZooSpec spec = small_zoo_spec();
    Zoo a = train_zoo(spec, data);
    Zoo b = train_zoo(spec, data);
    REQUIRE(a.models.size() == 4);
    CHECK(a.train_accuracy == b.train_accuracy);
    for (double acc : a.train_accuracy) CHECK(acc >= 0.9);
    CHECK(a.surrogate_models().size() == 2);
    CHECK(a.holdout_models().size() == 2);
}

TEST_CASE("attack_success_rate basics") {
    Dataset data = small_blobs(78, 6, 2, 50);
    TrainSpec ts;
    ts.arch = "linear";
    ts.seed = 4;
    ts.epochs = 60;
    TrainResult res = train_classifier(ts, data);
    // unperturbed inputs: nothing flips
    CHECK(attack_success_rate(data.xs, data.xs, data.ys, *res.model) == 0.0);
    // replace each point with one from the other class: eligible points flip
    std::vector<Vec> adv(data.xs.size());
    for (size_t i = 0; i < data.xs.size(); ++i) {
        for (size_t j = 0; j < data.xs.size(); ++j) {
            if (data.ys[j] != data.ys[i]) {
                adv[i] = data.xs[j];
                break;
            }
        }
    }
    CHECK(attack_success_rate(adv, data.xs, data.ys, *res.model) >= 0.9);
}

TEST_CASE("attack_success_rate rejects quadratic models and empty eligible sets") {
    std::mt19937_64 rng(3);
    Vec center(4, 0.5);
    auto q = sample_quadratic_model(4, 0.2, center, 0.1, rng);
    Dataset data = small_blobs(79, 4, 2, 5);
    CHECK_THROWS(attack_success_rate(data.xs, data.xs, data.ys, *q));
}

TEST_CASE("run_campaign with eps=0 yields zero success rates") {
    Dataset data = small_blobs(80);
    Zoo zoo = train_zoo(small_zoo_spec(), data);
    AttackConfig cfg;
    cfg.budget.eps = 0.0;
    CampaignOptions opts;
    opts.attacks = {"mi"};
    opts.max_points = 30;
    CampaignReport rep = run_campaign(data, zoo, cfg, opts);
    for (double r : rep.attack("mi").surrogate_rates) CHECK(r == 0.0);
    for (double r : rep.attack("mi").holdout_rates) CHECK(r == 0.0);
}

TEST_CASE("run_campaign is deterministic and white-box beats black-box for MI") {
    Dataset data = small_blobs(81);
    Zoo zoo = train_zoo(small_zoo_spec(), data);
    AttackConfig cfg;
    cfg.seed = 11;
    CampaignOptions opts;
    opts.attacks = {"mi"};
    opts.max_points = 60;
    CampaignReport a = run_campaign(data, zoo, cfg, opts);
    CampaignReport b = run_campaign(data, zoo, cfg, opts);
    CHECK(a.attack("mi").mean_surrogate_rate == b.attack("mi").mean_surrogate_rate);
    CHECK(a.attack("mi").mean_holdout_rate == b.attack("mi").mean_holdout_rate);
    CHECK(a.config_hash == b.config_hash);
    CHECK(a.attack("mi").mean_surrogate_rate >= a.attack("mi").mean_holdout_rate);
    CHECK(a.attack("mi").nfe_per_example == 10 * 2);  // T*n on the surrogate pair
    for (double r : a.attack("mi").surrogate_rates) {
        CHECK(r >= 0.0);
        CHECK(r <= 1.0);
    }
}

TEST_CASE("run_campaign with jobs > 1 matches the single-threaded report") {
    Dataset data = small_blobs(82);
    Zoo zoo = train_zoo(small_zoo_spec(), data);
    AttackConfig cfg;
    cfg.seed = 13;
    CampaignOptions serial;
    serial.attacks = {"mi", "mi-cwa"};
    serial.max_points = 40;
    CampaignOptions parallel = serial;
    parallel.jobs = 4;
    CampaignReport a = run_campaign(data, zoo, cfg, serial);
    CampaignReport b = run_campaign(data, zoo, cfg, parallel);
    for (const auto& name : serial.attacks) {
        CHECK(a.attack(name).surrogate_rates == b.attack(name).surrogate_rates);
        CHECK(a.attack(name).holdout_rates == b.attack(name).holdout_rates);
    }
}

TEST_CASE("success rate grows with eps on average") {
    Dataset data = small_blobs(83);
    Zoo zoo = train_zoo(small_zoo_spec(), data);
    CampaignOptions opts;
    opts.attacks = {"mi"};
    opts.max_points = 60;
    AttackConfig lo;
    lo.budget.eps = 8.0 / 255.0;
    lo.alpha = lo.budget.eps / 5.0;
    lo.r = lo.budget.eps / 15.0;
    AttackConfig hi;
    CampaignReport a = run_campaign(data, zoo, lo, opts);
    CampaignReport b = run_campaign(data, zoo, hi, opts);
    CHECK(a.attack("mi").mean_holdout_rate <= b.attack("mi").mean_holdout_rate + 1e-12);
}

TEST_CASE("sweep: singleton grid equals run_campaign") {
    Dataset data = small_blobs(84);
    Zoo zoo = train_zoo(small_zoo_spec(), data);
    AttackConfig cfg;
    CampaignOptions opts;
    opts.attacks = {"mi"};
    opts.max_points = 30;
    SweepReport sw = sweep("T", {10.0}, data, zoo, cfg, opts);
    REQUIRE(sw.points.size() == 1);
    CampaignReport direct = run_campaign(data, zoo, cfg, opts);
    CHECK(sw.points[0].report.attack("mi").mean_holdout_rate ==
          direct.attack("mi").mean_holdout_rate);
    CHECK_THROWS(sweep("gamma", {1.0}, data, zoo, cfg, opts));
    CHECK_THROWS(sweep("T", {}, data, zoo, cfg, opts));
}

TEST_CASE("config hash is stable and sensitive") {
    AttackConfig a;
    AttackConfig b;
    CHECK(config_hash(a) == config_hash(b));
    b.T = 20;
    CHECK(config_hash(a) != config_hash(b));
}
