#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cwa/attacks.hpp"
#include "cwa/models.hpp"

namespace cwa {

struct DatasetSpec {
    std::string generator = "gaussian_blobs";  // gaussian_blobs | concentric_rings | xor_grid
    int dim = 16;
    int k = 4;
    int per_class = 100;
    double noise = 0.05;
    std::uint64_t seed = 0;

    void validate() const;
};

Dataset generate_dataset(const DatasetSpec& spec);

// Nearest-center rule for gaussian_blobs; the analytic Bayes boundary at
// equal class priors and isotropic noise.
double nearest_center_accuracy(const Dataset& data, const std::vector<Vec>& centers);
std::vector<Vec> blob_centers(const DatasetSpec& spec);

struct ZooMemberSpec {
    TrainSpec train;
};

struct ZooSpec {
    std::vector<ZooMemberSpec> members;
    std::vector<int> surrogates;
    std::vector<int> holdouts;

    void validate() const;
};

struct Zoo {
    std::vector<ClassifierPtr> models;
    std::vector<int> surrogates;
    std::vector<int> holdouts;
    std::vector<double> train_accuracy;

    std::vector<ClassifierPtr> surrogate_models() const;
    std::vector<ClassifierPtr> holdout_models() const;
};

Zoo train_zoo(const ZooSpec& spec, const Dataset& data);

// Fraction of initially-correct examples the attack flips on this model.
double attack_success_rate(const std::vector<Vec>& x_adv, const std::vector<Vec>& x_nat,
                           const std::vector<int>& ys, const Classifier& model);

struct AttackReport {
    std::string attack;
    std::vector<double> surrogate_rates;
    std::vector<double> holdout_rates;
    double mean_surrogate_rate = 0.0;
    double mean_holdout_rate = 0.0;
    double cosine_initial = 0.0;
    double cosine_final = 0.0;
    double flatness = 0.0;  // mean endpoint Hessian F-norm estimate (sampled)
    std::int64_t nfe_per_example = 0;
    double wall_seconds = 0.0;
};

struct CampaignReport {
    std::string config_hash;
    std::uint64_t seed = 0;
    int n_points = 0;
    int dim = 0;
    int k = 0;
    std::vector<AttackReport> attacks;

    const AttackReport& attack(const std::string& name) const;
};

struct CampaignOptions {
    std::vector<std::string> attacks = {"mi", "mi-cwa"};
    int max_points = 0;        // 0 = all test points
    int cosine_sample = 16;    // traces sampled for the cosine trend
    int flatness_sample = 8;   // endpoints sampled for the flatness metric
    int flatness_probes = 16;
    int jobs = 1;
};

CampaignReport run_campaign(const Dataset& test_set, const Zoo& zoo, const AttackConfig& cfg,
                            const CampaignOptions& opts);

struct SweepPoint {
    double value = 0.0;
    CampaignReport report;
};

struct SweepReport {
    std::string parameter;  // T | beta | r | alpha
    std::vector<SweepPoint> points;
};

SweepReport sweep(const std::string& parameter, const std::vector<double>& grid,
                  const Dataset& test_set, const Zoo& zoo, const AttackConfig& base_cfg,
                  const CampaignOptions& opts);

// FNV-1a over the canonical JSON form of the config.
std::string config_hash(const AttackConfig& cfg);

}  // namespace cwa
