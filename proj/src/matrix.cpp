#include "cwa/matrix.hpp"

#include <cmath>
#include <stdexcept>

namespace cwa {

Matrix Matrix::identity(int dim) {
    Matrix m(dim);
    for (int i = 0; i < dim; ++i) m.at(i, i) = 1.0;
    return m;
}

Vec Matrix::matvec(const Vec& x) const {
    if (static_cast<int>(x.size()) != n) throw std::invalid_argument("Matrix::matvec: dim mismatch");
    Vec out(n, 0.0);
    for (int i = 0; i < n; ++i) {
        double s = 0.0;
        for (int j = 0; j < n; ++j) s += at(i, j) * x[j];
        out[i] = s;
    }
    return out;
}

double Matrix::frobenius_norm() const {
    double s = 0.0;
    for (double v : a) s += v * v;
    return std::sqrt(s);
}

double Matrix::quad_form(const Vec& x) const { return dot(x, matvec(x)); }

bool Matrix::is_symmetric(double tol) const {
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j)
            if (std::abs(at(i, j) - at(j, i)) > tol) return false;
    return true;
}

Matrix Matrix::inverse() const {
    Matrix aug = *this;
    Matrix inv = Matrix::identity(n);
    for (int col = 0; col < n; ++col) {
        int piv = col;
        for (int r = col + 1; r < n; ++r)
            if (std::abs(aug.at(r, col)) > std::abs(aug.at(piv, col))) piv = r;
        if (std::abs(aug.at(piv, col)) < 1e-14) {
            throw std::runtime_error("Matrix::inverse: singular matrix");
        }
        if (piv != col) {
            for (int j = 0; j < n; ++j) {
                std::swap(aug.at(piv, j), aug.at(col, j));
                std::swap(inv.at(piv, j), inv.at(col, j));
            }
        }
        double d = aug.at(col, col);
        for (int j = 0; j < n; ++j) {
            aug.at(col, j) /= d;
            inv.at(col, j) /= d;
        }
        for (int r = 0; r < n; ++r) {
            if (r == col) continue;
            double f = aug.at(r, col);
            if (f == 0.0) continue;
            for (int j = 0; j < n; ++j) {
                aug.at(r, j) -= f * aug.at(col, j);
                inv.at(r, j) -= f * inv.at(col, j);
            }
        }
    }
    return inv;
}

Matrix Matrix::scaled(double s) const {
    Matrix out = *this;
    for (double& v : out.a) v *= s;
    return out;
}

Matrix random_psd(int dim, double lambda, std::mt19937_64& rng, double entry_scale) {
    std::normal_distribution<double> gauss(0.0, entry_scale);
    Matrix g(dim);
    for (double& v : g.a) v = gauss(rng);
    Matrix h(dim);
    for (int i = 0; i < dim; ++i) {
        for (int j = i; j < dim; ++j) {
            double s = 0.0;
            for (int k = 0; k < dim; ++k) s += g.at(k, i) * g.at(k, j);
            h.at(i, j) = s;
            h.at(j, i) = s;
        }
        h.at(i, i) += lambda;
    }
    return h;
}

Vec quadratic_ensemble_optimum(const std::vector<Matrix>& hs, const std::vector<Vec>& ps,
                               double tol, int max_iters) {
    if (hs.empty() || hs.size() != ps.size()) {
        throw std::invalid_argument("quadratic_ensemble_optimum: bad inputs");
    }
    int dim = hs[0].n;
    Matrix hsum(dim);
    Vec rhs(dim, 0.0);
    for (size_t i = 0; i < hs.size(); ++i) {
        for (size_t k = 0; k < hsum.a.size(); ++k) hsum.a[k] += hs[i].a[k];
        Vec hp = hs[i].matvec(ps[i]);
        for (int k = 0; k < dim; ++k) rhs[k] += hp[k];
    }
    double step = 1.0 / std::max(hsum.frobenius_norm(), 1e-12);
    Vec x(dim, 0.0);
    for (int it = 0; it < max_iters; ++it) {
        Vec g = hsum.matvec(x);
        for (int k = 0; k < dim; ++k) g[k] -= rhs[k];
        if (norm_l2(g) <= tol) return x;
        axpy(-step, g, x);
    }
    Vec g = hsum.matvec(x);
    for (int k = 0; k < dim; ++k) g[k] -= rhs[k];
    if (norm_l2(g) <= tol) return x;
    throw std::runtime_error("quadratic_ensemble_optimum: gradient descent did not converge");
}

}  // namespace cwa
