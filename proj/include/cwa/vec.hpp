#pragma once

#include <string>
#include <vector>

namespace cwa {

// Flat image vector; all attack math runs on doubles.
using Vec = std::vector<double>;

constexpr double kNormFloor = 1e-12;

struct PerturbationBudget {
    double eps = 16.0 / 255.0;
    double box_lo = 0.0;
    double box_hi = 1.0;

    void validate() const;
};

void require_finite(const Vec& v, const std::string& who);
void require_same_dim(const Vec& a, const Vec& b, const std::string& who);

// Joint projection onto the l-inf ball around x_nat and the pixel box.
Vec clip_linf_box(const Vec& x, const Vec& x_nat, const PerturbationBudget& budget);

Vec sign_vec(const Vec& v);

// v / max(||v||, floor); sub-floor vectors are scaled by 1/floor (zero stays zero).
Vec l2_normalize(const Vec& v, double floor = kNormFloor);
Vec l1_normalize(const Vec& v, double floor = kNormFloor);

double dot(const Vec& a, const Vec& b);
double norm_l1(const Vec& v);
double norm_l2(const Vec& v);
double norm_linf(const Vec& v);

// 0 when either argument has norm below the floor.
double cosine_similarity(const Vec& a, const Vec& b, double floor = kNormFloor);

Vec add(const Vec& a, const Vec& b);
Vec sub(const Vec& a, const Vec& b);
Vec scale(const Vec& v, double s);
void axpy(double a, const Vec& x, Vec& y);  // y += a*x

}  // namespace cwa
