#include "cwa/vec.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace cwa {

void PerturbationBudget::validate() const {
    if (!(eps > 0.0) || !std::isfinite(eps)) {
        throw std::invalid_argument("PerturbationBudget: eps must be finite and > 0");
    }
    if (!(box_lo < box_hi)) {
        throw std::invalid_argument("PerturbationBudget: box_lo must be < box_hi");
    }
}

void require_finite(const Vec& v, const std::string& who) {
    for (double x : v) {
        if (!std::isfinite(x)) {
            throw std::invalid_argument(who + ": non-finite entry");
        }
    }
}

void require_same_dim(const Vec& a, const Vec& b, const std::string& who) {
    if (a.size() != b.size()) {
        throw std::invalid_argument(who + ": dimension mismatch (" + std::to_string(a.size()) +
                                    " vs " + std::to_string(b.size()) + ")");
    }
}

Vec clip_linf_box(const Vec& x, const Vec& x_nat, const PerturbationBudget& budget) {
    budget.validate();
    require_same_dim(x, x_nat, "clip_linf_box");
    require_finite(x, "clip_linf_box");
    require_finite(x_nat, "clip_linf_box");
    Vec out(x.size());
    for (size_t i = 0; i < x.size(); ++i) {
        double lo = std::max(x_nat[i] - budget.eps, budget.box_lo);
        double hi = std::min(x_nat[i] + budget.eps, budget.box_hi);
        out[i] = std::min(std::max(x[i], lo), hi);
    }
    return out;
}

Vec sign_vec(const Vec& v) {
    require_finite(v, "sign_vec");
    Vec out(v.size());
    for (size_t i = 0; i < v.size(); ++i) {
        out[i] = (v[i] > 0.0) ? 1.0 : (v[i] < 0.0 ? -1.0 : 0.0);
    }
    return out;
}

Vec l2_normalize(const Vec& v, double floor) {
    require_finite(v, "l2_normalize");
    if (!(floor > 0.0)) throw std::invalid_argument("l2_normalize: floor must be > 0");
    double n = std::max(norm_l2(v), floor);
    return scale(v, 1.0 / n);
}

Vec l1_normalize(const Vec& v, double floor) {
    require_finite(v, "l1_normalize");
    if (!(floor > 0.0)) throw std::invalid_argument("l1_normalize: floor must be > 0");
    double n = std::max(norm_l1(v), floor);
    return scale(v, 1.0 / n);
}

double dot(const Vec& a, const Vec& b) {
    require_same_dim(a, b, "dot");
    double s = 0.0;
    for (size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

double norm_l1(const Vec& v) {
    double s = 0.0;
    for (double x : v) s += std::abs(x);
    return s;
}

double norm_l2(const Vec& v) { return std::sqrt(dot(v, v)); }

double norm_linf(const Vec& v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
}

double cosine_similarity(const Vec& a, const Vec& b, double floor) {
    require_same_dim(a, b, "cosine_similarity");
    double na = norm_l2(a);
    double nb = norm_l2(b);
    if (na < floor || nb < floor) return 0.0;
    double c = dot(a, b) / (na * nb);
    return std::min(1.0, std::max(-1.0, c));
}

Vec add(const Vec& a, const Vec& b) {
    require_same_dim(a, b, "add");
    Vec out(a.size());
    for (size_t i = 0; i < a.size(); ++i) out[i] = a[i] + b[i];
    return out;
}

Vec sub(const Vec& a, const Vec& b) {
    require_same_dim(a, b, "sub");
    Vec out(a.size());
    for (size_t i = 0; i < a.size(); ++i) out[i] = a[i] - b[i];
    return out;
}

Vec scale(const Vec& v, double s) {
    Vec out(v.size());
    for (size_t i = 0; i < v.size(); ++i) out[i] = v[i] * s;
    return out;
}

void axpy(double a, const Vec& x, Vec& y) {
    require_same_dim(x, y, "axpy");
    for (size_t i = 0; i < x.size(); ++i) y[i] += a * x[i];
}

}  // namespace cwa
