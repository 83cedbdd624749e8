#pragma once

#include "smm/rng.hpp"
#include "smm/types.hpp"

#include <Eigen/Eigenvalues>

#include <cassert>
#include <cmath>
#include <vector>

namespace smm {

// Sequential minimal optimization for the C-SVM dual
//   max  sum_i a_i - 1/2 sum_ij a_i a_j y_i y_j K_ij
//   s.t. 0 <= a_i <= C,  sum_i a_i y_i = 0
// over a precomputed Gram matrix.

struct SolverParams {
    double C = 1.0;
    double tol = 1e-3;     // KKT tolerance
    int max_passes = 10;   // examine-all rounds allowed
    long max_iters = 0;    // 0 -> max(1e6, 4000*m)
    std::uint64_t seed = 0;
};

struct SmoResult {
    Vector alphas;
    double bias = 0.0;
    double objective = 0.0;
    bool converged = true;
    long steps = 0;
};

namespace detail {

class SmoSolver {
public:
    SmoSolver(const Matrix& K, const std::vector<int>& labels, const SolverParams& params)
        : K_(K), params_(params), rng_(params.seed) {
        m_ = K.rows();
        if (m_ < 2 || K.cols() != m_)
            throw std::invalid_argument("smo_solve: Gram must be square with m >= 2");
        if (static_cast<Index>(labels.size()) != m_)
            throw DimensionMismatch("smo_solve: label count mismatch");
        y_.resize(m_);
        bool pos = false, neg = false;
        for (Index i = 0; i < m_; ++i) {
            if (labels[static_cast<std::size_t>(i)] == 1)
                pos = true;
            else if (labels[static_cast<std::size_t>(i)] == -1)
                neg = true;
            else
                throw std::invalid_argument("smo_solve: label not in {+1,-1}");
            y_[i] = static_cast<double>(labels[static_cast<std::size_t>(i)]);
        }
        if (!pos || !neg) throw DegenerateLabels("smo_solve: both classes required");
        if (!(params.C > 0.0)) throw std::invalid_argument("smo_solve: C must be > 0");
        alpha_ = Vector::Zero(m_);
        bias_ = 0.0;
        errors_ = -y_;  // f == 0 initially
        max_iters_ = params.max_iters > 0 ? params.max_iters
                                          : std::max<long>(1000000L, 4000L * m_);
    }

    SmoResult solve() {
        bool examine_all = true;
        int all_rounds = 0;
        bool hit_cap = false;
        while (true) {
            Index changed = 0;
            if (examine_all) {
                ++all_rounds;
                for (Index i = 0; i < m_; ++i) changed += examine(i);
            } else {
                for (Index i = 0; i < m_; ++i)
                    if (is_free(alpha_[i])) changed += examine(i);
            }
            if (steps_ >= max_iters_ || all_rounds > params_.max_passes) {
                hit_cap = true;
                break;
            }
            if (examine_all) {
                if (changed == 0) break;  // KKT satisfied everywhere
                examine_all = false;
            } else if (changed == 0) {
                examine_all = true;
            }
        }
        SmoResult res;
        res.alphas = alpha_;
        res.bias = final_bias();
        res.objective = objective();
        res.converged = !hit_cap;
        res.steps = steps_;
        return res;
    }

private:
    bool is_free(double a) const {
        const double eps = 1e-8 * params_.C;
        return a > eps && a < params_.C - eps;
    }

    double objective() const {
        const Vector u = alpha_.cwiseProduct(y_);
        return alpha_.sum() - 0.5 * u.dot(K_ * u);
    }

    Index examine(Index i2) {
        const double a2 = alpha_[i2];
        const double e2 = errors_[i2];
        const double r2 = e2 * y_[i2];
        const bool violated = (r2 < -params_.tol && a2 < params_.C) ||
                              (r2 > params_.tol && a2 > 0.0);
        if (!violated) return 0;

        // second-choice heuristic: largest |E1 - E2| among free points
        Index best = -1;
        double best_gap = 0.0;
        for (Index i = 0; i < m_; ++i) {
            if (!is_free(alpha_[i])) continue;
            const double gap = std::abs(errors_[i] - e2);
            if (gap > best_gap) {
                best_gap = gap;
                best = i;
            }
        }
        if (best >= 0 && take_step(best, i2)) return 1;

        const Index start_free = static_cast<Index>(rng_.uniform_index(static_cast<std::uint64_t>(m_)));
        for (Index off = 0; off < m_; ++off) {
            const Index i = (start_free + off) % m_;
            if (is_free(alpha_[i]) && take_step(i, i2)) return 1;
        }
        const Index start_all = static_cast<Index>(rng_.uniform_index(static_cast<std::uint64_t>(m_)));
        for (Index off = 0; off < m_; ++off) {
            const Index i = (start_all + off) % m_;
            if (take_step(i, i2)) return 1;
        }
        return 0;
    }

    bool take_step(Index i1, Index i2) {
        if (i1 == i2) return false;
        if (steps_ >= max_iters_) return false;
        const double a1 = alpha_[i1], a2 = alpha_[i2];
        const double y1 = y_[i1], y2 = y_[i2];
        const double e1 = errors_[i1], e2 = errors_[i2];
        const double s = y1 * y2;
        const double C = params_.C;

        double lo, hi;
        if (s < 0.0) {
            lo = std::max(0.0, a2 - a1);
            hi = std::min(C, C + a2 - a1);
        } else {
            lo = std::max(0.0, a1 + a2 - C);
            hi = std::min(C, a1 + a2);
        }
        if (lo >= hi) return false;

        const double k11 = K_(i1, i1), k22 = K_(i2, i2), k12 = K_(i1, i2);
        const double eta = k11 + k22 - 2.0 * k12;
        double a2_new;
        if (eta > 0.0) {
            a2_new = a2 + y2 * (e1 - e2) / eta;
            a2_new = std::min(hi, std::max(lo, a2_new));
        } else {
            // curvature <= 0: compare dual objective at the segment ends
            const double f1 = y1 * (e1 - bias_) - a1 * k11 - s * a2 * k12;
            const double f2 = y2 * (e2 - bias_) - a2 * k22 - s * a1 * k12;
            const double l1 = a1 + s * (a2 - lo);
            const double h1 = a1 + s * (a2 - hi);
            const double obj_lo = l1 * f1 + lo * f2 + 0.5 * l1 * l1 * k11 + 0.5 * lo * lo * k22 +
                                  s * lo * l1 * k12;
            const double obj_hi = h1 * f1 + hi * f2 + 0.5 * h1 * h1 * k11 + 0.5 * hi * hi * k22 +
                                  s * hi * h1 * k12;
            if (obj_lo < obj_hi - 1e-12)
                a2_new = lo;
            else if (obj_lo > obj_hi + 1e-12)
                a2_new = hi;
            else
                return false;
        }
        if (std::abs(a2_new - a2) < 1e-12 * (a2_new + a2 + 1e-12)) return false;
        double a1_new = a1 + s * (a2 - a2_new);
        // the compensating update can land a rounding error outside the box
        if (a1_new < 1e-12 * C) a1_new = 0.0;
        if (a1_new > C * (1.0 - 1e-12)) a1_new = C;

        // bias update keeping the error cache consistent
        const double d1 = a1_new - a1;
        const double d2 = a2_new - a2;
        const double b1 = bias_ - e1 - y1 * d1 * k11 - y2 * d2 * k12;
        const double b2 = bias_ - e2 - y1 * d1 * k12 - y2 * d2 * k22;
        double b_new;
        if (a1_new > 0.0 && a1_new < C)
            b_new = b1;
        else if (a2_new > 0.0 && a2_new < C)
            b_new = b2;
        else
            b_new = 0.5 * (b1 + b2);

#ifndef NDEBUG
        const double obj_before = m_ <= 80 ? objective() : 0.0;
#endif
        alpha_[i1] = a1_new;
        alpha_[i2] = a2_new;
        errors_ += y1 * d1 * K_.col(i1) + y2 * d2 * K_.col(i2);
        errors_.array() += b_new - bias_;
        bias_ = b_new;
        ++steps_;
#ifndef NDEBUG
        if (m_ <= 80) {
            const double obj_after = objective();
            assert(obj_after >= obj_before - 1e-8 * (1.0 + std::abs(obj_after)));
        }
#endif
        return true;
    }

    // Mean over free support vectors of y_i - sum_j a_j y_j K_ij;
    // midpoint of the KKT bias interval when no free vector exists.
    double final_bias() const {
        const Vector f0 = K_ * alpha_.cwiseProduct(y_);  // decision without bias
        double acc = 0.0;
        Index count = 0;
        for (Index i = 0; i < m_; ++i) {
            if (is_free(alpha_[i])) {
                acc += y_[i] - f0[i];
                ++count;
            }
        }
        if (count > 0) return acc / static_cast<double>(count);
        double b_lo = -std::numeric_limits<double>::infinity();
        double b_hi = std::numeric_limits<double>::infinity();
        const double eps = 1e-8 * params_.C;
        for (Index i = 0; i < m_; ++i) {
            const double g = y_[i] - f0[i];
            const bool at_zero = alpha_[i] <= eps;
            const bool at_c = alpha_[i] >= params_.C - eps;
            if ((y_[i] > 0 && at_zero) || (y_[i] < 0 && at_c)) b_lo = std::max(b_lo, g);
            if ((y_[i] < 0 && at_zero) || (y_[i] > 0 && at_c)) b_hi = std::min(b_hi, g);
        }
        if (std::isfinite(b_lo) && std::isfinite(b_hi)) return 0.5 * (b_lo + b_hi);
        if (std::isfinite(b_lo)) return b_lo;
        if (std::isfinite(b_hi)) return b_hi;
        return 0.0;
    }

    const Matrix& K_;
    SolverParams params_;
    Rng rng_;
    Index m_ = 0;
    Vector y_;
    Vector alpha_;
    Vector errors_;  // f(x_i) - y_i
    double bias_ = 0.0;
    long steps_ = 0;
    long max_iters_ = 0;
};

}  // namespace detail

inline SmoResult smo_solve(const Matrix& gram_values, const std::vector<int>& labels,
                           const SolverParams& params) {
    detail::SmoSolver solver(gram_values, labels, params);
    return solver.solve();
}

}  // namespace smm
