#pragma once

#include <memory>
#include <string>

#include "cwa/vec.hpp"

namespace cwa {

// Stateful descent steppers: step(x, g) returns the new point (pre-clip)
// moving against the supplied gradient-like direction.
class Optimizer {
public:
    virtual ~Optimizer() = default;
    virtual Vec step(const Vec& x, const Vec& g) = 0;
    virtual void reset() = 0;
    virtual std::string name() const = 0;
};

using OptimizerPtr = std::unique_ptr<Optimizer>;

class PlainStep : public Optimizer {
public:
    PlainStep(double lr, bool signed_step = false) : lr_(lr), signed_(signed_step) {}
    Vec step(const Vec& x, const Vec& g) override;
    void reset() override {}
    std::string name() const override { return signed_ ? "plain-sign" : "plain"; }

private:
    double lr_;
    bool signed_;
};

// m <- mu*m + g, move by lr*sign(m).
class SignMomentum : public Optimizer {
public:
    SignMomentum(double mu, double lr) : mu_(mu), lr_(lr) {}
    Vec step(const Vec& x, const Vec& g) override;
    void reset() override { m_.clear(); }
    std::string name() const override { return "sign-momentum"; }

private:
    double mu_, lr_;
    Vec m_;
};

// m <- mu*m + g, move by lr*m.
class RawMomentum : public Optimizer {
public:
    RawMomentum(double mu, double lr) : mu_(mu), lr_(lr) {}
    Vec step(const Vec& x, const Vec& g) override;
    void reset() override { m_.clear(); }
    std::string name() const override { return "raw-momentum"; }

private:
    double mu_, lr_;
    Vec m_;
};

// m <- mu*m + g/||g||_2, move by lr*m.
class NormalizedMomentum : public Optimizer {
public:
    NormalizedMomentum(double mu, double lr, double floor = kNormFloor)
        : mu_(mu), lr_(lr), floor_(floor) {}
    Vec step(const Vec& x, const Vec& g) override;
    void reset() override { m_.clear(); }
    std::string name() const override { return "normalized-momentum"; }

private:
    double mu_, lr_, floor_;
    Vec m_;
};

class Adam : public Optimizer {
public:
    Adam(double lr, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8)
        : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {}
    Vec step(const Vec& x, const Vec& g) override;
    void reset() override { m_.clear(); v_.clear(); t_ = 0; }
    std::string name() const override { return "adam"; }

private:
    double lr_, beta1_, beta2_, eps_;
    Vec m_, v_;
    int t_ = 0;
};

}  // namespace cwa
