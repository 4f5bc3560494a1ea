#pragma once

#include <cstdint>
#include <random>

#include "cwa/vec.hpp"

namespace cwa {

// Small dense square matrix, row-major. Dimensions here stay in the tens.
struct Matrix {
    int n = 0;
    std::vector<double> a;  // n*n

    Matrix() = default;
    explicit Matrix(int dim) : n(dim), a(static_cast<size_t>(dim) * dim, 0.0) {}

    double& at(int i, int j) { return a[static_cast<size_t>(i) * n + j]; }
    double at(int i, int j) const { return a[static_cast<size_t>(i) * n + j]; }

    static Matrix identity(int dim);

    Vec matvec(const Vec& x) const;
    double frobenius_norm() const;
    double quad_form(const Vec& x) const;  // x^T A x
    bool is_symmetric(double tol = 1e-12) const;

    Matrix inverse() const;  // Gauss-Jordan with partial pivoting; throws on singular
    Matrix scaled(double s) const;
};

// A^T A + lambda I for Gaussian A: symmetric PSD by construction.
Matrix random_psd(int dim, double lambda, std::mt19937_64& rng, double entry_scale = 1.0);

// Loss surface solve: (sum_i H_i) c = sum_i H_i p_i via plain gradient descent,
// run until ||sum_i g_i|| <= tol. Throws if it fails to converge.
Vec quadratic_ensemble_optimum(const std::vector<Matrix>& hs, const std::vector<Vec>& ps,
                               double tol, int max_iters = 2000000);

}  // namespace cwa
