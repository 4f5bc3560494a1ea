#include "cwa/models.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace cwa {

double log_softmax_at(const Vec& logits, int y) {
    if (y < 0 || y >= static_cast<int>(logits.size())) {
        throw std::invalid_argument("log_softmax_at: class index out of range");
    }
    double mx = *std::max_element(logits.begin(), logits.end());
    double lse = 0.0;
    for (double z : logits) lse += std::exp(z - mx);
    return logits[y] - mx - std::log(lse);
}

Vec softmax(const Vec& logits) {
    double mx = *std::max_element(logits.begin(), logits.end());
    Vec p(logits.size());
    double s = 0.0;
    for (size_t i = 0; i < logits.size(); ++i) {
        p[i] = std::exp(logits[i] - mx);
        s += p[i];
    }
    for (double& v : p) v /= s;
    return p;
}

double Classifier::loss(const Vec& x, int y) const {
    check_class(y);
    return log_softmax_at(logits(x), y);
}

int Classifier::predict(const Vec& x) const {
    Vec z = logits(x);
    return static_cast<int>(std::max_element(z.begin(), z.end()) - z.begin());
}

void Classifier::check_class(int y) const {
    if (y < 0 || y >= num_classes()) {
        throw std::invalid_argument("Classifier: class index " + std::to_string(y) +
                                    " out of range for K=" + std::to_string(num_classes()));
    }
}

// ---------------------------------------------------------------- quadratic

QuadraticModel::QuadraticModel(Vec p, Matrix h, double c)
    : p_(std::move(p)), h_(std::move(h)), c_(c) {
    if (static_cast<int>(p_.size()) != h_.n) {
        throw std::invalid_argument("QuadraticModel: p/H dimension mismatch");
    }
    if (!h_.is_symmetric(1e-12)) {
        throw std::invalid_argument("QuadraticModel: H must be symmetric");
    }
}

Vec QuadraticModel::logits(const Vec&) const {
    throw std::runtime_error("QuadraticModel has no logits");
}

double QuadraticModel::loss(const Vec& x, int) const {
    Vec d = sub(x, p_);
    return c_ + 0.5 * h_.quad_form(d);
}

Vec QuadraticModel::input_grad(const Vec& x, int) const {
    count_grad_eval();
    return h_.matvec(sub(x, p_));
}

Vec QuadraticModel::logits_vjp(const Vec&, const Vec&) const {
    throw std::runtime_error("QuadraticModel has no logits");
}

// ------------------------------------------------------------ linear softmax

LinearSoftmax::LinearSoftmax(int dim, int k)
    : dim_(dim), k_(k), w_(static_cast<size_t>(k) * dim, 0.0), b_(k, 0.0) {
    if (dim < 1 || k < 2) throw std::invalid_argument("LinearSoftmax: need dim >= 1, K >= 2");
}

Vec LinearSoftmax::logits(const Vec& x) const {
    if (static_cast<int>(x.size()) != dim_) throw std::invalid_argument("LinearSoftmax: dim mismatch");
    Vec z(k_);
    for (int i = 0; i < k_; ++i) {
        double s = b_[i];
        const double* row = &w_[static_cast<size_t>(i) * dim_];
        for (int j = 0; j < dim_; ++j) s += row[j] * x[j];
        z[i] = s;
    }
    return z;
}

Vec LinearSoftmax::input_grad(const Vec& x, int y) const {
    check_class(y);
    count_grad_eval();
    Vec p = softmax(logits(x));
    // dL/dz = e_y - p for L = log softmax_y
    Vec g(dim_, 0.0);
    for (int i = 0; i < k_; ++i) {
        double u = (i == y ? 1.0 : 0.0) - p[i];
        const double* row = &w_[static_cast<size_t>(i) * dim_];
        for (int j = 0; j < dim_; ++j) g[j] += u * row[j];
    }
    return g;
}

Vec LinearSoftmax::logits_vjp(const Vec& x, const Vec& upstream) const {
    if (static_cast<int>(upstream.size()) != k_) {
        throw std::invalid_argument("LinearSoftmax::logits_vjp: upstream size mismatch");
    }
    (void)x;
    count_grad_eval();
    Vec g(dim_, 0.0);
    for (int i = 0; i < k_; ++i) {
        const double* row = &w_[static_cast<size_t>(i) * dim_];
        for (int j = 0; j < dim_; ++j) g[j] += upstream[i] * row[j];
    }
    return g;
}

void LinearSoftmax::init_random(std::uint64_t seed, double scale) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, scale);
    for (double& v : w_) v = gauss(rng);
    for (double& v : b_) v = gauss(rng);
}

void LinearSoftmax::train_batch(const std::vector<Vec>& xs, const std::vector<int>& ys, double lr) {
    std::vector<double> gw(w_.size(), 0.0);
    std::vector<double> gb(b_.size(), 0.0);
    double inv = 1.0 / static_cast<double>(xs.size());
    for (size_t s = 0; s < xs.size(); ++s) {
        Vec p = softmax(logits(xs[s]));
        for (int i = 0; i < k_; ++i) {
            // cross-entropy: dJ/dz = p - e_y
            double u = p[i] - (i == ys[s] ? 1.0 : 0.0);
            double* grow = &gw[static_cast<size_t>(i) * dim_];
            for (int j = 0; j < dim_; ++j) grow[j] += inv * u * xs[s][j];
            gb[i] += inv * u;
        }
    }
    for (size_t i = 0; i < w_.size(); ++i) w_[i] -= lr * gw[i];
    for (size_t i = 0; i < b_.size(); ++i) b_[i] -= lr * gb[i];
}

// ------------------------------------------------------------------- mlp

std::string activation_name(Activation a) {
    return a == Activation::Tanh ? "tanh" : "sigmoid";
}

Activation activation_from_name(const std::string& name) {
    if (name == "tanh") return Activation::Tanh;
    if (name == "sigmoid") return Activation::Sigmoid;
    throw std::invalid_argument("unknown activation: " + name);
}

Mlp::Mlp(int dim, int hidden, int k, Activation act)
    : dim_(dim), hidden_(hidden), k_(k), act_(act),
      w1_size_(static_cast<size_t>(hidden) * dim),
      w2_size_(static_cast<size_t>(k) * hidden),
      params_(w1_size_ + hidden + w2_size_ + k, 0.0) {
    if (dim < 1 || hidden < 1 || k < 2) throw std::invalid_argument("Mlp: bad shape");
}

double Mlp::act_fn(double z) const {
    return act_ == Activation::Tanh ? std::tanh(z) : 1.0 / (1.0 + std::exp(-z));
}

double Mlp::act_deriv_from_pre(double z) const {
    if (act_ == Activation::Tanh) {
        double t = std::tanh(z);
        return 1.0 - t * t;
    }
    double s = 1.0 / (1.0 + std::exp(-z));
    return s * (1.0 - s);
}

Vec Mlp::hidden_pre(const Vec& x) const {
    if (static_cast<int>(x.size()) != dim_) throw std::invalid_argument("Mlp: dim mismatch");
    Vec pre(hidden_);
    for (int i = 0; i < hidden_; ++i) {
        double s = b1(i);
        for (int j = 0; j < dim_; ++j) s += w1(i, j) * x[j];
        pre[i] = s;
    }
    return pre;
}

Vec Mlp::logits(const Vec& x) const {
    Vec pre = hidden_pre(x);
    Vec z(k_);
    for (int i = 0; i < k_; ++i) {
        double s = b2(i);
        for (int j = 0; j < hidden_; ++j) s += w2(i, j) * act_fn(pre[j]);
        z[i] = s;
    }
    return z;
}

Vec Mlp::logits_vjp(const Vec& x, const Vec& upstream) const {
    if (static_cast<int>(upstream.size()) != k_) {
        throw std::invalid_argument("Mlp::logits_vjp: upstream size mismatch");
    }
    count_grad_eval();
    Vec pre = hidden_pre(x);
    Vec dpre(hidden_);
    for (int j = 0; j < hidden_; ++j) {
        double da = 0.0;
        for (int i = 0; i < k_; ++i) da += w2(i, j) * upstream[i];
        dpre[j] = da * act_deriv_from_pre(pre[j]);
    }
    Vec g(dim_, 0.0);
    for (int j = 0; j < hidden_; ++j) {
        for (int d = 0; d < dim_; ++d) g[d] += w1(j, d) * dpre[j];
    }
    return g;
}

Vec Mlp::input_grad(const Vec& x, int y) const {
    check_class(y);
    count_grad_eval();
    Vec p = softmax(logits(x));
    Vec up(k_);
    for (int i = 0; i < k_; ++i) up[i] = (i == y ? 1.0 : 0.0) - p[i];
    // reuse the vjp path without double-counting
    Vec pre = hidden_pre(x);
    Vec dpre(hidden_);
    for (int j = 0; j < hidden_; ++j) {
        double da = 0.0;
        for (int i = 0; i < k_; ++i) da += w2(i, j) * up[i];
        dpre[j] = da * act_deriv_from_pre(pre[j]);
    }
    Vec g(dim_, 0.0);
    for (int j = 0; j < hidden_; ++j) {
        for (int d = 0; d < dim_; ++d) g[d] += w1(j, d) * dpre[j];
    }
    return g;
}

void Mlp::init_random(std::uint64_t seed, double scale) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    double s1 = scale / std::sqrt(static_cast<double>(dim_));
    double s2 = scale / std::sqrt(static_cast<double>(hidden_));
    for (size_t i = 0; i < w1_size_; ++i) params_[i] = s1 * gauss(rng);
    for (int i = 0; i < hidden_; ++i) params_[w1_size_ + i] = 0.0;
    for (size_t i = 0; i < w2_size_; ++i) params_[w1_size_ + hidden_ + i] = s2 * gauss(rng);
    for (int i = 0; i < k_; ++i) params_[w1_size_ + hidden_ + w2_size_ + i] = 0.0;
}

void Mlp::train_batch(const std::vector<Vec>& xs, const std::vector<int>& ys, double lr) {
    std::vector<double> grad(params_.size(), 0.0);
    double inv = 1.0 / static_cast<double>(xs.size());
    for (size_t s = 0; s < xs.size(); ++s) {
        const Vec& x = xs[s];
        Vec pre = hidden_pre(x);
        Vec act(hidden_);
        for (int j = 0; j < hidden_; ++j) act[j] = act_fn(pre[j]);
        Vec z(k_);
        for (int i = 0; i < k_; ++i) {
            double v = b2(i);
            for (int j = 0; j < hidden_; ++j) v += w2(i, j) * act[j];
            z[i] = v;
        }
        Vec p = softmax(z);
        Vec dz(k_);
        for (int i = 0; i < k_; ++i) dz[i] = p[i] - (i == ys[s] ? 1.0 : 0.0);
        Vec dpre(hidden_);
        for (int j = 0; j < hidden_; ++j) {
            double da = 0.0;
            for (int i = 0; i < k_; ++i) da += w2(i, j) * dz[i];
            dpre[j] = da * act_deriv_from_pre(pre[j]);
        }
        for (int j = 0; j < hidden_; ++j) {
            for (int d = 0; d < dim_; ++d) grad[static_cast<size_t>(j) * dim_ + d] += inv * dpre[j] * x[d];
            grad[w1_size_ + j] += inv * dpre[j];
        }
        for (int i = 0; i < k_; ++i) {
            for (int j = 0; j < hidden_; ++j) {
                grad[w1_size_ + hidden_ + static_cast<size_t>(i) * hidden_ + j] += inv * dz[i] * act[j];
            }
            grad[w1_size_ + hidden_ + w2_size_ + i] += inv * dz[i];
        }
    }
    for (size_t i = 0; i < params_.size(); ++i) params_[i] -= lr * grad[i];
}

// ----------------------------------------------------------------- ensemble

std::string ensemble_mode_name(EnsembleMode m) {
    return m == EnsembleMode::LossAverage ? "loss" : "logits";
}

EnsembleMode ensemble_mode_from_name(const std::string& name) {
    if (name == "loss") return EnsembleMode::LossAverage;
    if (name == "logits") return EnsembleMode::LogitsAverage;
    throw std::invalid_argument("unknown ensemble mode: " + name);
}

Ensemble::Ensemble(std::vector<ClassifierPtr> members, EnsembleMode mode)
    : members_(std::move(members)), mode_(mode) {
    if (members_.empty()) throw std::invalid_argument("Ensemble: empty member list");
    int d = members_[0]->dim();
    int k = members_[0]->num_classes();
    for (const auto& m : members_) {
        if (m->dim() != d) throw std::invalid_argument("Ensemble: member dim mismatch");
        if (mode_ == EnsembleMode::LogitsAverage) {
            if (m->num_classes() == 0) {
                throw std::invalid_argument("Ensemble: logits averaging needs classifiers with logits");
            }
            if (m->num_classes() != k) throw std::invalid_argument("Ensemble: member K mismatch");
        }
    }
}

double Ensemble::loss(const Vec& x, int y) const {
    if (mode_ == EnsembleMode::LossAverage) {
        double s = 0.0;
        for (const auto& m : members_) s += m->loss(x, y);
        return s / static_cast<double>(members_.size());
    }
    Vec zbar(members_[0]->num_classes(), 0.0);
    double inv = 1.0 / static_cast<double>(members_.size());
    for (const auto& m : members_) {
        Vec z = m->logits(x);
        for (size_t i = 0; i < zbar.size(); ++i) zbar[i] += inv * z[i];
    }
    return log_softmax_at(zbar, y);
}

std::pair<double, Vec> Ensemble::loss_and_grad(const Vec& x, int y) const {
    double inv = 1.0 / static_cast<double>(members_.size());
    if (mode_ == EnsembleMode::LossAverage) {
        double L = 0.0;
        Vec g(x.size(), 0.0);
        for (const auto& m : members_) {
            L += inv * m->loss(x, y);
            axpy(inv, m->input_grad(x, y), g);
        }
        return {L, g};
    }
    int k = members_[0]->num_classes();
    Vec zbar(k, 0.0);
    for (const auto& m : members_) {
        Vec z = m->logits(x);
        for (int i = 0; i < k; ++i) zbar[i] += inv * z[i];
    }
    double L = log_softmax_at(zbar, y);
    Vec p = softmax(zbar);
    Vec up(k);
    for (int i = 0; i < k; ++i) up[i] = ((i == y ? 1.0 : 0.0) - p[i]) * inv;
    Vec g(x.size(), 0.0);
    for (const auto& m : members_) axpy(1.0, m->logits_vjp(x, up), g);
    return {L, g};
}

std::int64_t Ensemble::grad_evals() const {
    std::int64_t s = 0;
    for (const auto& m : members_) s += m->grad_evals();
    return s;
}

// ------------------------------------------------------------------ oracles

Vec finite_diff_grad(const Classifier& c, const Vec& x, int y, double h) {
    if (!(h > 0.0)) throw std::invalid_argument("finite_diff_grad: h must be > 0");
    Vec g(x.size());
    Vec xp = x;
    for (size_t i = 0; i < x.size(); ++i) {
        double x0 = x[i];
        xp[i] = x0 + h;
        double lp = c.loss(xp, y);
        xp[i] = x0 - h;
        double lm = c.loss(xp, y);
        xp[i] = x0;
        g[i] = (lp - lm) / (2.0 * h);
    }
    return g;
}

double hessian_fnorm_estimate(const Classifier& c, const Vec& x, int y, int n_probes,
                              std::uint64_t seed, double h) {
    if (n_probes < 1) throw std::invalid_argument("hessian_fnorm_estimate: n_probes >= 1");
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    double acc = 0.0;
    Vec xp(x.size()), xm(x.size());
    for (int t = 0; t < n_probes; ++t) {
        Vec v(x.size());
        for (double& e : v) e = gauss(rng);
        for (size_t i = 0; i < x.size(); ++i) {
            xp[i] = x[i] + h * v[i];
            xm[i] = x[i] - h * v[i];
        }
        Vec gp = c.input_grad(xp, y);
        Vec gm = c.input_grad(xm, y);
        double s = 0.0;
        for (size_t i = 0; i < x.size(); ++i) {
            double hv = (gp[i] - gm[i]) / (2.0 * h);
            s += hv * hv;
        }
        acc += s;
    }
    return std::sqrt(acc / static_cast<double>(n_probes));
}

// ------------------------------------------------------------------ trainer

double accuracy(const Classifier& c, const Dataset& data) {
    if (data.xs.empty()) return 0.0;
    int hit = 0;
    for (size_t i = 0; i < data.xs.size(); ++i) {
        if (c.predict(data.xs[i]) == data.ys[i]) ++hit;
    }
    return static_cast<double>(hit) / static_cast<double>(data.xs.size());
}

TrainResult train_classifier(const TrainSpec& spec, const Dataset& data) {
    if (data.xs.empty()) throw std::invalid_argument("train_classifier: empty dataset");
    for (int y : data.ys) {
        if (y < 0 || y >= data.k) throw std::invalid_argument("train_classifier: label out of range");
    }
    std::shared_ptr<LinearSoftmax> lin;
    std::shared_ptr<Mlp> mlp;
    ClassifierPtr model;
    if (spec.arch == "linear") {
        lin = std::make_shared<LinearSoftmax>(data.dim, data.k);
        lin->init_random(spec.seed);
        model = lin;
    } else if (spec.arch == "mlp") {
        mlp = std::make_shared<Mlp>(data.dim, spec.hidden, data.k, spec.act);
        mlp->init_random(spec.seed);
        model = mlp;
    } else {
        throw std::invalid_argument("train_classifier: unknown arch " + spec.arch);
    }

    std::mt19937_64 rng(spec.seed ^ 0x9e3779b97f4a7c15ULL);
    std::vector<size_t> order(data.xs.size());
    std::iota(order.begin(), order.end(), 0);
    double last_loss = 0.0;
    for (int epoch = 0; epoch < spec.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        for (size_t start = 0; start < order.size(); start += spec.batch_size) {
            size_t end = std::min(order.size(), start + spec.batch_size);
            std::vector<Vec> bx;
            std::vector<int> by;
            bx.reserve(end - start);
            by.reserve(end - start);
            for (size_t i = start; i < end; ++i) {
                bx.push_back(data.xs[order[i]]);
                by.push_back(data.ys[order[i]]);
            }
            if (lin) lin->train_batch(bx, by, spec.lr);
            else mlp->train_batch(bx, by, spec.lr);
        }
        double l = 0.0;
        for (size_t i = 0; i < data.xs.size(); ++i) l -= model->loss(data.xs[i], data.ys[i]);
        l /= static_cast<double>(data.xs.size());
        if (!std::isfinite(l)) {
            throw std::runtime_error("train_classifier: loss diverged at epoch " + std::to_string(epoch));
        }
        last_loss = l;
    }
    return {model, accuracy(*model, data), last_loss};
}

ClassifierPtr sample_quadratic_model(int dim, double lambda, const Vec& center, double sigma,
                                     std::mt19937_64& rng, double entry_scale) {
    Matrix h = random_psd(dim, lambda, rng, entry_scale);
    std::normal_distribution<double> gauss(0.0, sigma);
    Vec p(dim);
    for (int i = 0; i < dim; ++i) p[i] = center[i] + gauss(rng);
    return std::make_shared<QuadraticModel>(std::move(p), std::move(h), 0.0);
}

}  // namespace cwa
