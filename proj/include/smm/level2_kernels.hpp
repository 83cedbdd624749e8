#pragma once

#include "smm/expected_kernels.hpp"
#include "smm/types.hpp"

#include <cmath>
#include <variant>

namespace smm {

// Second-level kernels on distributions, defined through RKHS inner
// products of mean embeddings: kappa(mu_P, mu_Q) as a function of
// K(P,Q), K(P,P), K(Q,Q).

struct Level2Linear {};

struct Level2Polynomial {
    int degree = 2;
    double offset = 1.0;
};

struct Level2RBF {
    double gamma = 1.0;
};

class Level2Kernel {
public:
    using Storage = std::variant<Level2Linear, Level2Polynomial, Level2RBF>;

    static Level2Kernel linear() { return Level2Kernel(Level2Linear{}); }

    static Level2Kernel polynomial(int degree, double offset = 1.0) {
        if (degree < 1 || degree > 8)
            throw std::invalid_argument("level2 polynomial: degree must be in 1..8");
        if (offset < 0.0) throw std::invalid_argument("level2 polynomial: offset must be >= 0");
        return Level2Kernel(Level2Polynomial{degree, offset});
    }

    static Level2Kernel rbf(double gamma) {
        if (!(gamma > 0.0)) throw std::invalid_argument("level2 rbf: gamma must be > 0");
        return Level2Kernel(Level2RBF{gamma});
    }

    bool is_linear() const { return std::holds_alternative<Level2Linear>(v_); }
    bool is_polynomial() const { return std::holds_alternative<Level2Polynomial>(v_); }
    bool is_rbf() const { return std::holds_alternative<Level2RBF>(v_); }

    const Level2Polynomial& as_polynomial() const { return std::get<Level2Polynomial>(v_); }
    const Level2RBF& as_rbf() const { return std::get<Level2RBF>(v_); }

    const Storage& storage() const { return v_; }

private:
    explicit Level2Kernel(Storage v) : v_(v) {}
    Storage v_;
};

// kpq, kpp, kqq must come from one level-1 config with the diagonal
// correction off, otherwise the RKHS distance is inconsistent.
inline double level2_eval(const Level2Kernel& k2, double kpq, double kpp, double kqq) {
    return std::visit(
        [&](const auto& kk) -> double {
            using T = std::decay_t<decltype(kk)>;
            if constexpr (std::is_same_v<T, Level2Linear>) {
                return kpq;
            } else if constexpr (std::is_same_v<T, Level2Polynomial>) {
                return std::pow(kpq + kk.offset, kk.degree);
            } else {
                double d2 = kpp - 2.0 * kpq + kqq;
                if (d2 < 0.0) {
                    if (d2 < -1e-6)
                        throw NegativeSquaredDistance(
                            "level2_eval: squared RKHS distance " + std::to_string(d2));
                    d2 = 0.0;  // cancellation on near-duplicates
                }
                return std::exp(-0.5 * kk.gamma * d2);
            }
        },
        k2.storage());
}

// Entrywise level-2 map over a level-1 Gram whose diagonal was computed
// without the linear delta correction.
inline Matrix level2_apply(const Level2Kernel& k2, const Matrix& k1) {
    const Index n = k1.rows();
    Matrix out(n, n);
    for (Index i = 0; i < n; ++i) {
        for (Index j = i; j < n; ++j) {
            const double v = level2_eval(k2, k1(i, j), k1(i, i), k1(j, j));
            out(i, j) = v;
            out(j, i) = v;
        }
    }
    return out;
}

inline GramMatrix level2_gram(const ExpectedKernelConfig& cfg, const Level2Kernel& k2,
                              const std::vector<Distribution>& dists) {
    ExpectedKernelConfig inner(cfg);
    inner.diagonal_correction = false;
    GramMatrix g = gram(inner, dists);
    g.values = level2_apply(k2, g.values);
    return g;
}

}  // namespace smm
