#include "cwa/optimizers.hpp"

#include <cmath>

namespace cwa {

Vec PlainStep::step(const Vec& x, const Vec& g) {
    Vec out(x.size());
    if (signed_) {
        Vec s = sign_vec(g);
        for (size_t i = 0; i < x.size(); ++i) out[i] = x[i] - lr_ * s[i];
    } else {
        for (size_t i = 0; i < x.size(); ++i) out[i] = x[i] - lr_ * g[i];
    }
    return out;
}

Vec SignMomentum::step(const Vec& x, const Vec& g) {
    if (m_.empty()) m_.assign(x.size(), 0.0);
    for (size_t i = 0; i < x.size(); ++i) m_[i] = mu_ * m_[i] + g[i];
    Vec out(x.size());
    for (size_t i = 0; i < x.size(); ++i) {
        double s = (m_[i] > 0.0) ? 1.0 : (m_[i] < 0.0 ? -1.0 : 0.0);
        out[i] = x[i] - lr_ * s;
    }
    return out;
}

Vec RawMomentum::step(const Vec& x, const Vec& g) {
    if (m_.empty()) m_.assign(x.size(), 0.0);
    for (size_t i = 0; i < x.size(); ++i) m_[i] = mu_ * m_[i] + g[i];
    Vec out(x.size());
    for (size_t i = 0; i < x.size(); ++i) out[i] = x[i] - lr_ * m_[i];
    return out;
}

Vec NormalizedMomentum::step(const Vec& x, const Vec& g) {
    if (m_.empty()) m_.assign(x.size(), 0.0);
    Vec gn = l2_normalize(g, floor_);
    for (size_t i = 0; i < x.size(); ++i) m_[i] = mu_ * m_[i] + gn[i];
    Vec out(x.size());
    for (size_t i = 0; i < x.size(); ++i) out[i] = x[i] - lr_ * m_[i];
    return out;
}

Vec Adam::step(const Vec& x, const Vec& g) {
    if (m_.empty()) {
        m_.assign(x.size(), 0.0);
        v_.assign(x.size(), 0.0);
    }
    ++t_;
    double c1 = 1.0 - std::pow(beta1_, t_);
    double c2 = 1.0 - std::pow(beta2_, t_);
    Vec out(x.size());
    for (size_t i = 0; i < x.size(); ++i) {
        m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * g[i];
        v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * g[i] * g[i];
        double mhat = m_[i] / c1;
        double vhat = v_[i] / c2;
        out[i] = x[i] - lr_ * mhat / (std::sqrt(vhat) + eps_);
    }
    return out;
}

}  // namespace cwa
