#pragma once

#include "smm/rng.hpp"
#include "smm/types.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include <utility>
#include <variant>
#include <vector>

namespace smm {

// Probability measures on R^d: point masses, Gaussians, moment-only
// surrogates, and weighted samples.

struct Dirac {
    Vector point;
};

struct Gaussian {
    Vector mean;
    Matrix cov;  // stored symmetrized
};

struct MomentOnly {
    Vector mean;
    Matrix cov;
};

struct Empirical {
    Matrix points;   // one point per row
    Vector weights;  // nonnegative, sums to 1
};

namespace detail {

inline void check_square(const Matrix& cov, Index d, const char* where) {
    if (cov.rows() != d || cov.cols() != d)
        throw DimensionMismatch(std::string(where) + ": covariance is " +
                                std::to_string(cov.rows()) + "x" + std::to_string(cov.cols()) +
                                ", expected " + std::to_string(d) + "x" + std::to_string(d));
}

// Symmetrize and validate PSD-ness; min eigenvalue >= -1e-9 after symmetrization.
inline Matrix validated_cov(const Matrix& cov, Index d, const char* where) {
    check_square(cov, d, where);
    const double scale = std::max(1.0, cov.cwiseAbs().maxCoeff());
    if ((cov - cov.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale)
        throw NotPSD(std::string(where) + ": covariance not symmetric");
    Matrix sym = 0.5 * (cov + cov.transpose());
    Eigen::SelfAdjointEigenSolver<Matrix> es(sym, Eigen::EigenvaluesOnly);
    const double min_eig = es.eigenvalues().minCoeff();
    if (min_eig < -1e-9)
        throw NotPSD(std::string(where) + ": covariance not PSD, min eigenvalue " +
                         std::to_string(min_eig),
                     min_eig);
    return sym;
}

}  // namespace detail

class Distribution {
public:
    using Storage = std::variant<Dirac, Gaussian, MomentOnly, Empirical>;

    static Distribution dirac(Vector point) {
        if (point.size() < 1) throw DimensionMismatch("dirac: empty point");
        return Distribution(Dirac{std::move(point)});
    }

    static Distribution gaussian(const Vector& mean, const Matrix& cov) {
        if (mean.size() < 1) throw DimensionMismatch("gaussian: empty mean");
        Matrix sym = detail::validated_cov(cov, mean.size(), "gaussian");
        return Distribution(Gaussian{mean, std::move(sym)});
    }

    static Distribution moment_only(const Vector& mean, const Matrix& cov) {
        if (mean.size() < 1) throw DimensionMismatch("moment_only: empty mean");
        Matrix sym = detail::validated_cov(cov, mean.size(), "moment_only");
        return Distribution(MomentOnly{mean, std::move(sym)});
    }

    // Weights are normalized to sum 1; uniform when omitted.
    static Distribution empirical(Matrix points, Vector weights = Vector()) {
        const Index n = points.rows();
        if (n < 1 || points.cols() < 1) throw DimensionMismatch("empirical: no points");
        if (weights.size() == 0)
            weights = Vector::Constant(n, 1.0 / static_cast<double>(n));
        if (weights.size() != n)
            throw DimensionMismatch("empirical: weight count != point count");
        if ((weights.array() < 0).any())
            throw std::invalid_argument("empirical: negative weight");
        const double total = weights.sum();
        if (!(total > 0))
            throw std::invalid_argument("empirical: weights sum to zero");
        weights /= total;
        return Distribution(Empirical{std::move(points), std::move(weights)});
    }

    Index dim() const {
        return std::visit(
            [](const auto& d) -> Index {
                using T = std::decay_t<decltype(d)>;
                if constexpr (std::is_same_v<T, Dirac>)
                    return d.point.size();
                else if constexpr (std::is_same_v<T, Empirical>)
                    return d.points.cols();
                else
                    return d.mean.size();
            },
            v_);
    }

    bool is_dirac() const { return std::holds_alternative<Dirac>(v_); }
    bool is_gaussian() const { return std::holds_alternative<Gaussian>(v_); }
    bool is_moment_only() const { return std::holds_alternative<MomentOnly>(v_); }
    bool is_empirical() const { return std::holds_alternative<Empirical>(v_); }

    const Dirac& as_dirac() const { return std::get<Dirac>(v_); }
    const Gaussian& as_gaussian() const { return std::get<Gaussian>(v_); }
    const MomentOnly& as_moment_only() const { return std::get<MomentOnly>(v_); }
    const Empirical& as_empirical() const { return std::get<Empirical>(v_); }

    const Storage& storage() const { return v_; }

    // True when first and second moments are directly available
    // (everything except Empirical, where they are derived).
    bool has_stored_moments() const { return !is_empirical(); }

private:
    explicit Distribution(Storage v) : v_(std::move(v)) {}
    Storage v_;
};

struct Moments {
    Vector mean;
    Matrix cov;
};

inline Moments moments(const Distribution& p) {
    return std::visit(
        [](const auto& d) -> Moments {
            using T = std::decay_t<decltype(d)>;
            if constexpr (std::is_same_v<T, Dirac>) {
                const Index n = d.point.size();
                return {d.point, Matrix::Zero(n, n)};
            } else if constexpr (std::is_same_v<T, Empirical>) {
                // weighted mean / covariance, no bias correction
                Vector mean = d.points.transpose() * d.weights;
                Matrix centered = d.points.rowwise() - mean.transpose();
                Matrix cov = centered.transpose() * d.weights.asDiagonal() * centered;
                return {std::move(mean), std::move(cov)};
            } else {
                return {d.mean, d.cov};
            }
        },
        p.storage());
}

// Lower Cholesky factor with the diagonal-jitter retry policy:
// on failure add 1e-10*trace/d, retrying up to 3 times with 10x growth.
inline Matrix cholesky_with_jitter(const Matrix& cov) {
    const Index d = cov.rows();
    if (cov.isZero(0.0)) return Matrix::Zero(d, d);
    double jitter = 1e-10 * cov.trace() / static_cast<double>(d);
    if (jitter <= 0.0) jitter = 1e-14;
    Eigen::LLT<Matrix> llt(cov);
    if (llt.info() == Eigen::Success) return llt.matrixL();
    for (int attempt = 0; attempt < 3; ++attempt) {
        llt.compute(cov + jitter * Matrix::Identity(d, d));
        if (llt.info() == Eigen::Success) return llt.matrixL();
        jitter *= 10.0;
    }
    throw NotPSD("cholesky_with_jitter: matrix not PSD after jitter");
}

// n i.i.d. draws, one per row. Deterministic given the generator state.
inline Matrix sample(const Distribution& p, Index n, Rng& rng) {
    if (n < 1) throw std::invalid_argument("sample: n must be >= 1");
    return std::visit(
        [&](const auto& d) -> Matrix {
            using T = std::decay_t<decltype(d)>;
            if constexpr (std::is_same_v<T, Dirac>) {
                Matrix out(n, d.point.size());
                out.rowwise() = d.point.transpose();
                return out;
            } else if constexpr (std::is_same_v<T, Empirical>) {
                // inverse-CDF resampling over the weight table
                const Index m = d.points.rows();
                Vector cum(m);
                double acc = 0.0;
                for (Index i = 0; i < m; ++i) {
                    acc += d.weights[i];
                    cum[i] = acc;
                }
                cum[m - 1] = 1.0;
                Matrix out(n, d.points.cols());
                for (Index i = 0; i < n; ++i) {
                    const double u = rng.uniform();
                    Index lo = 0, hi = m - 1;
                    while (lo < hi) {
                        const Index mid = (lo + hi) / 2;
                        if (cum[mid] <= u)
                            lo = mid + 1;
                        else
                            hi = mid;
                    }
                    out.row(i) = d.points.row(lo);
                }
                return out;
            } else {
                const Index dim = d.mean.size();
                const Matrix chol = cholesky_with_jitter(d.cov);
                Matrix z(n, dim);
                for (Index i = 0; i < n; ++i)
                    for (Index j = 0; j < dim; ++j) z(i, j) = rng.normal();
                Matrix out = z * chol.transpose();
                out.rowwise() += d.mean.transpose();
                return out;
            }
        },
        p.storage());
}

struct LabeledMeasureSet {
    std::vector<Distribution> distributions;
    std::vector<int> labels;  // +1 / -1

    Index size() const { return static_cast<Index>(distributions.size()); }

    void validate() const {
        if (distributions.size() != labels.size())
            throw DimensionMismatch("LabeledMeasureSet: length mismatch");
        if (distributions.empty())
            throw std::invalid_argument("LabeledMeasureSet: empty");
        const Index d = distributions.front().dim();
        for (const auto& p : distributions)
            if (p.dim() != d) throw DimensionMismatch("LabeledMeasureSet: mixed dimensions");
        for (int y : labels)
            if (y != 1 && y != -1)
                throw std::invalid_argument("LabeledMeasureSet: label not in {+1,-1}");
    }

    bool has_both_classes() const {
        bool pos = false, neg = false;
        for (int y : labels) (y > 0 ? pos : neg) = true;
        return pos && neg;
    }
};

}  // namespace smm
