#pragma once

#include "smm/types.hpp"

#include <cmath>
#include <numbers>
#include <string>
#include <variant>

namespace smm {

// First-level positive-definite kernels on the input space.
//
// RBF convention: exp(-gamma/2 * ||x-z||^2).  Note the factor of 1/2 --
// many libraries use exp(-gamma * ||x-z||^2) instead.  The normalized
// variant multiplies by the Gaussian density constant (gamma/(2*pi))^(d/2).

struct LinearKernel {};

struct PolynomialKernel {
    int degree = 2;
    double offset = 1.0;
};

struct GaussianRBFKernel {
    double gamma = 1.0;
    bool normalized = false;
};

class EmbeddingKernel {
public:
    using Storage = std::variant<LinearKernel, PolynomialKernel, GaussianRBFKernel>;

    static EmbeddingKernel linear() { return EmbeddingKernel(LinearKernel{}); }

    static EmbeddingKernel polynomial(int degree, double offset = 1.0) {
        if (degree < 1 || degree > 8)
            throw std::invalid_argument("polynomial: degree must be in 1..8");
        if (offset < 0.0) throw std::invalid_argument("polynomial: offset must be >= 0");
        return EmbeddingKernel(PolynomialKernel{degree, offset});
    }

    static EmbeddingKernel rbf(double gamma, bool normalized = false) {
        if (!(gamma > 0.0)) throw std::invalid_argument("rbf: gamma must be > 0");
        return EmbeddingKernel(GaussianRBFKernel{gamma, normalized});
    }

    bool is_linear() const { return std::holds_alternative<LinearKernel>(v_); }
    bool is_polynomial() const { return std::holds_alternative<PolynomialKernel>(v_); }
    bool is_rbf() const { return std::holds_alternative<GaussianRBFKernel>(v_); }

    const PolynomialKernel& as_polynomial() const { return std::get<PolynomialKernel>(v_); }
    const GaussianRBFKernel& as_rbf() const { return std::get<GaussianRBFKernel>(v_); }

    const Storage& storage() const { return v_; }

private:
    explicit EmbeddingKernel(Storage v) : v_(v) {}
    Storage v_;
};

inline double rbf_normalization(double gamma, Index dim) {
    return std::pow(gamma / (2.0 * std::numbers::pi), 0.5 * static_cast<double>(dim));
}

inline double eval_base(const EmbeddingKernel& k, const Vector& x, const Vector& z) {
    if (x.size() != z.size())
        throw DimensionMismatch("eval_base: point dimensions differ");
    return std::visit(
        [&](const auto& kk) -> double {
            using T = std::decay_t<decltype(kk)>;
            if constexpr (std::is_same_v<T, LinearKernel>) {
                return x.dot(z);
            } else if constexpr (std::is_same_v<T, PolynomialKernel>) {
                return std::pow(x.dot(z) + kk.offset, kk.degree);
            } else {
                double v = std::exp(-0.5 * kk.gamma * (x - z).squaredNorm());
                if (kk.normalized) v *= rbf_normalization(kk.gamma, x.size());
                return v;
            }
        },
        k.storage());
}

// Gram of eval_base over a point set (rows). Each unordered pair is
// evaluated once, so symmetry is exact.
inline Matrix pairwise_gram(const EmbeddingKernel& k, const Matrix& points) {
    const Index n = points.rows();
    if (n < 1) throw std::invalid_argument("pairwise_gram: empty point list");
    Matrix g(n, n);
    for (Index i = 0; i < n; ++i) {
        for (Index j = i; j < n; ++j) {
            const double v = eval_base(k, points.row(i), points.row(j));
            g(i, j) = v;
            g(j, i) = v;
        }
    }
    return g;
}

}  // namespace smm
