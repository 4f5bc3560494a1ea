#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "cwa/models.hpp"
#include "cwa/optimizers.hpp"
#include "cwa/vec.hpp"

namespace cwa {

struct AttackConfig {
    PerturbationBudget budget{};
    int T = 10;
    double mu = 1.0;
    double alpha = (16.0 / 255.0) / 5.0;
    double beta = 50.0;  // raw value from the 224x224x3 calibration
    double r = (16.0 / 255.0) / 15.0;
    EnsembleMode ensemble_mode = EnsembleMode::LogitsAverage;
    std::uint64_t seed = 0;
    double norm_floor = kNormFloor;
    // beta scales as 1/sqrt(D) for normalized-gradient steps; rescale it to
    // the working dimension by default, keep the raw value settable.
    bool rescale_beta = true;
    bool reset_inner_momentum = false;  // ablation flag; default follows Alg. 1

    double effective_beta(int dim) const;
    void validate() const;
};

struct MomentumState {
    Vec m;
    Vec m_hat;
};

struct AttackTrace {
    std::string attack;
    std::vector<Vec> iterates;  // x_0, x_1, ..., x_T
    std::vector<double> ensemble_losses;
    std::vector<std::vector<double>> member_losses;
    std::int64_t nfe = 0;  // member-gradient evaluations during the run
    AttackConfig config;

    const Vec& final_x() const { return iterates.back(); }
};

AttackTrace fgsm(const Ensemble& e, const Vec& x_nat, int y, const AttackConfig& cfg);
AttackTrace bim(const Ensemble& e, const Vec& x_nat, int y, const AttackConfig& cfg);
AttackTrace mi(const Ensemble& e, const Vec& x_nat, int y, const AttackConfig& cfg);

// One SAM iteration: reverse signed ascent step of size r, then a signed
// descent step of size alpha, both clipped.
std::pair<Vec, Vec> sam_step(const Ensemble& e, const Vec& x_t, const Vec& x_nat, int y,
                             const AttackConfig& cfg);
AttackTrace sam(const Ensemble& e, const Vec& x_nat, int y, const AttackConfig& cfg);
AttackTrace mi_sam(const Ensemble& e, const Vec& x_nat, int y, const AttackConfig& cfg);

// Sequential per-model normalized-gradient updates with persistent inner
// momentum; `order` fixes the member visiting order for the whole run.
Vec cse_inner_loop(const Ensemble& e, const Vec& x_t, const Vec& x_nat, int y,
                   const AttackConfig& cfg, MomentumState& state,
                   const std::vector<int>& order);

AttackTrace cse(const Ensemble& e, const Vec& x_nat, int y, const AttackConfig& cfg);
AttackTrace mi_cse(const Ensemble& e, const Vec& x_nat, int y, const AttackConfig& cfg);
AttackTrace mi_cwa(const Ensemble& e, const Vec& x_nat, int y, const AttackConfig& cfg);

AttackTrace generalized_cwa(const Ensemble& e, const Vec& x_nat, int y,
                            const PerturbationBudget& budget, int T, Optimizer& opt_r,
                            Optimizer& opt_beta, Optimizer& opt_alpha,
                            std::uint64_t seed = 0, double norm_floor = kNormFloor);

using AttackFn = AttackTrace (*)(const Ensemble&, const Vec&, int, const AttackConfig&);

// Lookup by name: fgsm, bim, mi, sam, mi-sam, cse, mi-cse, mi-cwa.
AttackFn attack_by_name(const std::string& name);
std::vector<std::string> attack_names();

// Expected member-gradient evaluations per run.
std::int64_t expected_nfe(const std::string& attack, int T, int n, double r);

}  // namespace cwa
