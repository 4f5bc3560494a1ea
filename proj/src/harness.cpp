#include "cwa/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>
#include <thread>

#include "cwa/io.hpp"
#include "cwa/theory.hpp"

namespace cwa {

namespace {

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (salt + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

void clamp_to_box(Vec& x) {
    for (double& v : x) v = std::min(1.0, std::max(0.0, v));
}

}  // namespace

void DatasetSpec::validate() const {
    if (k < 2) throw std::invalid_argument("DatasetSpec: K >= 2");
    if (per_class < 1) throw std::invalid_argument("DatasetSpec: per_class >= 1");
    if (dim < 2) throw std::invalid_argument("DatasetSpec: dim >= 2");
    if (noise < 0.0) throw std::invalid_argument("DatasetSpec: noise >= 0");
    if (generator != "gaussian_blobs" && generator != "concentric_rings" && generator != "xor_grid") {
        throw std::invalid_argument("DatasetSpec: unknown generator " + generator);
    }
}

std::vector<Vec> blob_centers(const DatasetSpec& spec) {
    std::mt19937_64 rng(mix_seed(spec.seed, 0xb10b));
    std::uniform_real_distribution<double> unif(0.25, 0.75);
    double min_sep = 4.0 * spec.noise;
    for (int attempt = 0; attempt < 5000; ++attempt) {
        std::vector<Vec> centers(spec.k, Vec(spec.dim));
        for (auto& c : centers) {
            for (double& v : c) v = unif(rng);
        }
        bool ok = true;
        for (int i = 0; i < spec.k && ok; ++i) {
            for (int j = 0; j < i; ++j) {
                if (norm_l2(sub(centers[i], centers[j])) < min_sep) {
                    ok = false;
                    break;
                }
            }
        }
        if (ok) return centers;
    }
    throw std::runtime_error("blob_centers: could not place centers with 4-sigma separation");
}

Dataset generate_dataset(const DatasetSpec& spec) {
    spec.validate();
    Dataset data;
    data.dim = spec.dim;
    data.k = spec.k;
    std::mt19937_64 rng(mix_seed(spec.seed, 0xda7a));
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::uniform_real_distribution<double> unif(0.0, 1.0);

    if (spec.generator == "gaussian_blobs") {
        std::vector<Vec> centers = blob_centers(spec);
        for (int cls = 0; cls < spec.k; ++cls) {
            for (int s = 0; s < spec.per_class; ++s) {
                Vec x = centers[cls];
                for (double& v : x) v += spec.noise * gauss(rng);
                clamp_to_box(x);
                data.xs.push_back(std::move(x));
                data.ys.push_back(cls);
            }
        }
    } else if (spec.generator == "concentric_rings") {
        for (int cls = 0; cls < spec.k; ++cls) {
            double radius = 0.1 + 0.35 * (cls + 1) / spec.k;
            for (int s = 0; s < spec.per_class; ++s) {
                double theta = 2.0 * M_PI * unif(rng);
                Vec x(spec.dim, 0.5);
                x[0] += radius * std::cos(theta);
                x[1] += radius * std::sin(theta);
                for (double& v : x) v += spec.noise * gauss(rng);
                clamp_to_box(x);
                data.xs.push_back(std::move(x));
                data.ys.push_back(cls);
            }
        }
    } else {  // xor_grid
        int cells = 2 * spec.k;
        for (int cls = 0; cls < spec.k; ++cls) {
            int made = 0;
            while (made < spec.per_class) {
                double u = unif(rng), v = unif(rng);
                int label = (static_cast<int>(u * cells) + static_cast<int>(v * cells)) % spec.k;
                if (label != cls) continue;
                Vec x(spec.dim, 0.5);
                x[0] = u;
                x[1] = v;
                for (int d = 2; d < spec.dim; ++d) x[d] = 0.5 + spec.noise * gauss(rng);
                clamp_to_box(x);
                data.xs.push_back(std::move(x));
                data.ys.push_back(cls);
                ++made;
            }
        }
    }
    // shuffle so any prefix of the dataset is class-balanced in expectation
    std::vector<size_t> perm(data.xs.size());
    std::iota(perm.begin(), perm.end(), size_t{0});
    std::mt19937_64 perm_rng(mix_seed(spec.seed, 0x5481ff1e));
    std::shuffle(perm.begin(), perm.end(), perm_rng);
    Dataset shuffled;
    shuffled.dim = data.dim;
    shuffled.k = data.k;
    shuffled.xs.reserve(perm.size());
    shuffled.ys.reserve(perm.size());
    for (size_t i : perm) {
        shuffled.xs.push_back(std::move(data.xs[i]));
        shuffled.ys.push_back(data.ys[i]);
    }
    return shuffled;
}

double nearest_center_accuracy(const Dataset& data, const std::vector<Vec>& centers) {
    if (data.xs.empty()) return 0.0;
    int hit = 0;
    for (size_t i = 0; i < data.xs.size(); ++i) {
        int best = 0;
        double best_d = norm_l2(sub(data.xs[i], centers[0]));
        for (size_t c = 1; c < centers.size(); ++c) {
            double d = norm_l2(sub(data.xs[i], centers[c]));
            if (d < best_d) {
                best_d = d;
                best = static_cast<int>(c);
            }
        }
        if (best == data.ys[i]) ++hit;
    }
    return static_cast<double>(hit) / data.xs.size();
}

void ZooSpec::validate() const {
    if (members.empty()) throw std::invalid_argument("ZooSpec: empty member list");
    if (surrogates.empty() || holdouts.empty()) {
        throw std::invalid_argument("ZooSpec: surrogate and holdout sets must be nonempty");
    }
    for (int i : surrogates) {
        if (i < 0 || i >= static_cast<int>(members.size())) {
            throw std::invalid_argument("ZooSpec: surrogate index out of range");
        }
        if (std::find(holdouts.begin(), holdouts.end(), i) != holdouts.end()) {
            throw std::invalid_argument("ZooSpec: surrogate/holdout sets must be disjoint");
        }
    }
    for (int i : holdouts) {
        if (i < 0 || i >= static_cast<int>(members.size())) {
            throw std::invalid_argument("ZooSpec: holdout index out of range");
        }
    }
}

std::vector<ClassifierPtr> Zoo::surrogate_models() const {
    std::vector<ClassifierPtr> out;
    for (int i : surrogates) out.push_back(models.at(i));
    return out;
}

std::vector<ClassifierPtr> Zoo::holdout_models() const {
    std::vector<ClassifierPtr> out;
    for (int i : holdouts) out.push_back(models.at(i));
    return out;
}

Zoo train_zoo(const ZooSpec& spec, const Dataset& data) {
    spec.validate();
    Zoo zoo;
    zoo.surrogates = spec.surrogates;
    zoo.holdouts = spec.holdouts;
    for (const auto& m : spec.members) {
        TrainResult res = train_classifier(m.train, data);
        zoo.models.push_back(res.model);
        zoo.train_accuracy.push_back(res.train_accuracy);
    }
    return zoo;
}

double attack_success_rate(const std::vector<Vec>& x_adv, const std::vector<Vec>& x_nat,
                           const std::vector<int>& ys, const Classifier& model) {
    if (model.num_classes() == 0) {
        throw std::invalid_argument("attack_success_rate: model must classify");
    }
    if (x_adv.size() != x_nat.size() || x_adv.size() != ys.size()) {
        throw std::invalid_argument("attack_success_rate: size mismatch");
    }
    int eligible = 0, flipped = 0;
    for (size_t i = 0; i < x_adv.size(); ++i) {
        if (model.predict(x_nat[i]) != ys[i]) continue;
        ++eligible;
        if (model.predict(x_adv[i]) != ys[i]) ++flipped;
    }
    if (eligible == 0) throw std::runtime_error("attack_success_rate: no eligible examples");
    return static_cast<double>(flipped) / eligible;
}

const AttackReport& CampaignReport::attack(const std::string& name) const {
    for (const auto& a : attacks) {
        if (a.attack == name) return a;
    }
    throw std::invalid_argument("CampaignReport: no attack " + name);
}

std::string config_hash(const AttackConfig& cfg) {
    std::string s = attack_config_to_json(cfg).dump();
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

CampaignReport run_campaign(const Dataset& test_set, const Zoo& zoo, const AttackConfig& cfg,
                            const CampaignOptions& opts) {
    // eps == 0 is a legal degenerate campaign (no perturbation, zero rates)
    if (cfg.budget.eps != 0.0) cfg.validate();
    if (test_set.xs.empty()) throw std::invalid_argument("run_campaign: empty test set");
    if (test_set.dim != zoo.models.at(0)->dim()) {
        throw std::invalid_argument("run_campaign: dataset/zoo dimension mismatch");
    }
    int n_points = static_cast<int>(test_set.xs.size());
    if (opts.max_points > 0) n_points = std::min(n_points, opts.max_points);

    Ensemble surrogate_ens(zoo.surrogate_models(), cfg.ensemble_mode);
    auto holdout_models = zoo.holdout_models();
    auto surrogate_models = zoo.surrogate_models();

    CampaignReport report;
    report.config_hash = config_hash(cfg);
    report.seed = cfg.seed;
    report.n_points = n_points;
    report.dim = test_set.dim;
    report.k = test_set.k;

    for (const std::string& name : opts.attacks) {
        AttackFn fn = attack_by_name(name);
        auto t0 = std::chrono::steady_clock::now();

        std::vector<Vec> x_nat(n_points), x_adv(n_points);
        std::vector<int> ys(n_points);
        std::vector<std::int64_t> nfes(n_points, 0);

        auto run_point = [&](int i) {
            AttackConfig pt_cfg = cfg;
            pt_cfg.seed = mix_seed(cfg.seed, static_cast<std::uint64_t>(i));
            x_nat[i] = test_set.xs[i];
            ys[i] = test_set.ys[i];
            if (cfg.budget.eps == 0.0) {
                x_adv[i] = x_nat[i];
                return;
            }
            AttackTrace trace = fn(surrogate_ens, x_nat[i], ys[i], pt_cfg);
            x_adv[i] = trace.final_x();
            nfes[i] = trace.nfe;
        };

        if (opts.jobs > 1) {
            std::vector<std::thread> pool;
            std::atomic<int> next{0};
            for (int w = 0; w < opts.jobs; ++w) {
                pool.emplace_back([&]() {
                    for (int i = next.fetch_add(1); i < n_points; i = next.fetch_add(1)) run_point(i);
                });
            }
            for (auto& th : pool) th.join();
        } else {
            for (int i = 0; i < n_points; ++i) run_point(i);
        }

        AttackReport ar;
        ar.attack = name;
        for (const auto& m : surrogate_models) {
            ar.surrogate_rates.push_back(attack_success_rate(x_adv, x_nat, ys, *m));
        }
        for (const auto& m : holdout_models) {
            ar.holdout_rates.push_back(attack_success_rate(x_adv, x_nat, ys, *m));
        }
        ar.mean_surrogate_rate =
            std::accumulate(ar.surrogate_rates.begin(), ar.surrogate_rates.end(), 0.0) /
            ar.surrogate_rates.size();
        ar.mean_holdout_rate =
            std::accumulate(ar.holdout_rates.begin(), ar.holdout_rates.end(), 0.0) /
            ar.holdout_rates.size();
        ar.nfe_per_example = nfes.empty() ? 0 : nfes[0];

        if (cfg.budget.eps > 0.0) {
            int cs = std::min(opts.cosine_sample, n_points);
            double ci = 0.0, cf = 0.0;
            for (int i = 0; i < cs; ++i) {
                AttackConfig pt_cfg = cfg;
                pt_cfg.seed = mix_seed(cfg.seed, static_cast<std::uint64_t>(i));
                AttackTrace trace = fn(surrogate_ens, x_nat[i], ys[i], pt_cfg);
                auto trend = cosine_trend(trace, surrogate_ens, ys[i]);
                ci += trend.front();
                cf += trend.back();
            }
            if (cs > 0) {
                ar.cosine_initial = ci / cs;
                ar.cosine_final = cf / cs;
            }
            int fs = std::min(opts.flatness_sample, n_points);
            double fl = 0.0;
            for (int i = 0; i < fs; ++i) {
                fl += ensemble_hessian_fnorm(surrogate_ens, x_adv[i], ys[i], opts.flatness_probes,
                                             mix_seed(cfg.seed, 0xf1a7 + i));
            }
            if (fs > 0) ar.flatness = fl / fs;
        }

        ar.wall_seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        report.attacks.push_back(std::move(ar));
    }
    return report;
}

SweepReport sweep(const std::string& parameter, const std::vector<double>& grid,
                  const Dataset& test_set, const Zoo& zoo, const AttackConfig& base_cfg,
                  const CampaignOptions& opts) {
    if (grid.empty()) throw std::invalid_argument("sweep: empty grid");
    SweepReport out;
    out.parameter = parameter;
    for (double v : grid) {
        AttackConfig cfg = base_cfg;
        if (parameter == "T") cfg.T = static_cast<int>(v);
        else if (parameter == "beta") cfg.beta = v;
        else if (parameter == "r") cfg.r = v;
        else if (parameter == "alpha") cfg.alpha = v;
        else throw std::invalid_argument("sweep: unknown parameter " + parameter);
        out.points.push_back({v, run_campaign(test_set, zoo, cfg, opts)});
    }
    return out;
}

}  // namespace cwa
