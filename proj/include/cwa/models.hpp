#pragma once

#include <atomic>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "cwa/matrix.hpp"
#include "cwa/vec.hpp"

namespace cwa {

double log_softmax_at(const Vec& logits, int y);
Vec softmax(const Vec& logits);

// Differentiable loss surface with exact input gradients. The attacker
// minimizes loss(x, y) = log softmax(logits(x))_y; every input_grad /
// logits_vjp call bumps the gradient-evaluation counter used for NFE
// accounting.
class Classifier {
public:
    virtual ~Classifier() = default;

    virtual int dim() const = 0;
    virtual int num_classes() const = 0;  // 0 for pure loss surfaces
    virtual std::string arch() const = 0;

    virtual Vec logits(const Vec& x) const = 0;
    virtual double loss(const Vec& x, int y) const;
    virtual Vec input_grad(const Vec& x, int y) const = 0;

    // Vector-Jacobian product d(logits)/dx^T * upstream; counts as one
    // gradient evaluation.
    virtual Vec logits_vjp(const Vec& x, const Vec& upstream) const = 0;

    int predict(const Vec& x) const;

    std::int64_t grad_evals() const { return grad_evals_.load(std::memory_order_relaxed); }

protected:
    void count_grad_eval() const { grad_evals_.fetch_add(1, std::memory_order_relaxed); }
    void check_class(int y) const;
    mutable std::atomic<std::int64_t> grad_evals_{0};
};

using ClassifierPtr = std::shared_ptr<Classifier>;

// loss(x) = c + 1/2 (x-p)^T H (x-p); no logits, y ignored.
class QuadraticModel : public Classifier {
public:
    QuadraticModel(Vec p, Matrix h, double c);

    int dim() const override { return static_cast<int>(p_.size()); }
    int num_classes() const override { return 0; }
    std::string arch() const override { return "quadratic"; }

    Vec logits(const Vec&) const override;
    double loss(const Vec& x, int y) const override;
    Vec input_grad(const Vec& x, int y) const override;  // H (x - p)
    Vec logits_vjp(const Vec&, const Vec&) const override;

    const Vec& optimum() const { return p_; }
    const Matrix& hessian() const { return h_; }
    double optimum_loss() const { return c_; }

private:
    Vec p_;
    Matrix h_;
    double c_;
};

class LinearSoftmax : public Classifier {
public:
    LinearSoftmax(int dim, int k);

    int dim() const override { return dim_; }
    int num_classes() const override { return k_; }
    std::string arch() const override { return "linear"; }

    Vec logits(const Vec& x) const override;
    Vec input_grad(const Vec& x, int y) const override;
    Vec logits_vjp(const Vec& x, const Vec& upstream) const override;

    void init_random(std::uint64_t seed, double scale = 0.1);
    void train_batch(const std::vector<Vec>& xs, const std::vector<int>& ys, double lr);

    std::vector<double>& weights() { return w_; }  // k x dim, row-major
    std::vector<double>& biases() { return b_; }
    const std::vector<double>& weights() const { return w_; }
    const std::vector<double>& biases() const { return b_; }

private:
    int dim_;
    int k_;
    std::vector<double> w_;
    std::vector<double> b_;
};

enum class Activation { Tanh, Sigmoid };

std::string activation_name(Activation a);
Activation activation_from_name(const std::string& name);

// One hidden layer, hand-coded backprop.
class Mlp : public Classifier {
public:
    Mlp(int dim, int hidden, int k, Activation act);

    int dim() const override { return dim_; }
    int num_classes() const override { return k_; }
    std::string arch() const override { return "mlp"; }

    int hidden() const { return hidden_; }
    Activation activation() const { return act_; }

    Vec logits(const Vec& x) const override;
    Vec input_grad(const Vec& x, int y) const override;
    Vec logits_vjp(const Vec& x, const Vec& upstream) const override;

    void init_random(std::uint64_t seed, double scale = 0.5);
    void train_batch(const std::vector<Vec>& xs, const std::vector<int>& ys, double lr);

    std::vector<double>& params() { return params_; }
    const std::vector<double>& params() const { return params_; }

private:
    Vec hidden_pre(const Vec& x) const;
    double act_fn(double z) const;
    double act_deriv_from_pre(double z) const;

    // params layout: w1 (hidden x dim), b1 (hidden), w2 (k x hidden), b2 (k)
    double w1(int i, int j) const { return params_[static_cast<size_t>(i) * dim_ + j]; }
    double b1(int i) const { return params_[w1_size_ + i]; }
    double w2(int i, int j) const { return params_[w1_size_ + hidden_ + static_cast<size_t>(i) * hidden_ + j]; }
    double b2(int i) const { return params_[w1_size_ + hidden_ + w2_size_ + i]; }

    int dim_;
    int hidden_;
    int k_;
    Activation act_;
    size_t w1_size_;
    size_t w2_size_;
    std::vector<double> params_;
};

enum class EnsembleMode { LossAverage, LogitsAverage };

std::string ensemble_mode_name(EnsembleMode m);
EnsembleMode ensemble_mode_from_name(const std::string& name);

class Ensemble {
public:
    Ensemble(std::vector<ClassifierPtr> members, EnsembleMode mode);

    int size() const { return static_cast<int>(members_.size()); }
    int dim() const { return members_[0]->dim(); }
    EnsembleMode mode() const { return mode_; }
    const std::vector<ClassifierPtr>& members() const { return members_; }
    const ClassifierPtr& member(int i) const { return members_.at(i); }

    double loss(const Vec& x, int y) const;
    std::pair<double, Vec> loss_and_grad(const Vec& x, int y) const;

    std::int64_t grad_evals() const;

private:
    std::vector<ClassifierPtr> members_;
    EnsembleMode mode_;
};

// Central finite differences of loss per coordinate.
Vec finite_diff_grad(const Classifier& c, const Vec& x, int y, double h);

// sqrt of the probe mean of ||H v||^2 for standard-normal v, with H v taken
// by central differences of input_grad.
double hessian_fnorm_estimate(const Classifier& c, const Vec& x, int y, int n_probes,
                              std::uint64_t seed, double h = 1e-4);

struct Dataset {
    std::vector<Vec> xs;
    std::vector<int> ys;
    int dim = 0;
    int k = 0;
};

struct TrainSpec {
    std::string arch = "linear";  // "linear" | "mlp"
    int hidden = 16;
    Activation act = Activation::Tanh;
    std::uint64_t seed = 0;
    int epochs = 50;
    double lr = 0.5;
    int batch_size = 32;
};

struct TrainResult {
    ClassifierPtr model;
    double train_accuracy = 0.0;
    double final_loss = 0.0;
};

double accuracy(const Classifier& c, const Dataset& data);

// Deterministic mini-batch gradient descent on cross-entropy; throws naming
// the epoch if the loss goes non-finite.
TrainResult train_classifier(const TrainSpec& spec, const Dataset& data);

// PSD sampling per H = A^T A + lambda I; p drawn Gaussian around center.
ClassifierPtr sample_quadratic_model(int dim, double lambda, const Vec& center, double sigma,
                                     std::mt19937_64& rng, double entry_scale = 1.0);

}  // namespace cwa
