#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cwa/theory.hpp"

namespace cwa {

// Constructed quadratic ensemble: H_i = A^T A + lambda I, p_i ~ N(center, sigma_p^2 I).
// unit_fnorm rescales every H_i to a common Frobenius norm so ||H_i||_F is
// exactly uncorrelated with ||x - p_i||_2.
Ensemble random_quadratic_ensemble(int dim, int n, double lambda, const Vec& center,
                                   double sigma_p, std::uint64_t seed, double entry_scale = 1.0,
                                   bool unit_fnorm = false);

struct VerifyResult {
    std::string check;
    int instances = 0;
    double pass_rate = 0.0;
    double worst_slack = 0.0;
    std::uint64_t seed = 0;
    std::uint64_t worst_instance_seed = 0;
    bool pass = false;
    std::string detail;
};

VerifyResult verify_holder(int trials, std::uint64_t seed);
VerifyResult verify_dot_product(int trials, std::uint64_t seed);
VerifyResult verify_cosine_trend(int trials, std::uint64_t seed);
VerifyResult verify_gaussian_optima(int trials, std::uint64_t seed);
VerifyResult verify_projection(int trials, std::uint64_t seed);
VerifyResult verify_nfe(std::uint64_t seed);

std::vector<std::string> verification_check_names();
std::vector<VerifyResult> run_verification(const std::string& check, int trials,
                                           std::uint64_t seed);

}  // namespace cwa
