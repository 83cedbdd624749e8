#pragma once

#include "smm/embedding_kernels.hpp"
#include "smm/measures.hpp"
#include "smm/rng.hpp"
#include "smm/types.hpp"

#include <Eigen/Cholesky>

#include <cmath>
#include <optional>
#include <vector>

namespace smm {

// Expected kernel K(P,Q) = E_{x~P, z~Q}[k(x,z)]: analytic forms for
// (linear, any-with-moments), (RBF, Gaussian), (poly2/poly3, Gaussian),
// and the weighted empirical double sum for sample-based measures.

struct ExpectedKernelConfig {
    EmbeddingKernel embedding;
    // Adds tr(Sigma_i) to diagonal entries under the linear kernel.
    // Has no effect for other kernels (the correction term exists only
    // in the linear closed form).
    bool diagonal_correction;
    // When no closed form applies but both sides can be sampled, fall
    // back to the empirical estimate with `fallback_samples` draws per
    // side from a stream seeded by `fallback_seed`.
    bool empirical_fallback = false;
    Index fallback_samples = 2000;
    std::uint64_t fallback_seed = 0;

    explicit ExpectedKernelConfig(EmbeddingKernel k)
        : embedding(k), diagonal_correction(k.is_linear()) {}
    ExpectedKernelConfig(EmbeddingKernel k, bool diag_corr)
        : embedding(k), diagonal_correction(diag_corr) {}
};

enum class EntryKind { ClosedForm, Empirical };

struct EntryProvenance {
    EntryKind kind = EntryKind::ClosedForm;
    Index n = 0;  // sample sizes for the empirical path
    Index m = 0;
};

struct GramMatrix {
    Matrix values;
    ExpectedKernelConfig config;
    std::vector<EntryProvenance> source;  // row-major
    bool jittered = false;

    const EntryProvenance& at(Index i, Index j) const {
        return source[static_cast<std::size_t>(i * values.cols() + j)];
    }

    void add_diagonal_jitter(double eps) {
        values.diagonal().array() += eps;
        jittered = true;
    }
};

namespace detail {

// ---- empirical double sum --------------------------------------------------

// sum_{r,s} w_r v_s (x_r . z_s)^p via raw moment contraction; exact in
// exact arithmetic, O(n d^p) instead of O(n m).
inline double dot_power_moment(const Matrix& X, const Vector& w, const Matrix& Z,
                               const Vector& v, int p) {
    const Index d = X.cols();
    switch (p) {
        case 0:
            return 1.0;
        case 1:
            return (X.transpose() * w).dot(Z.transpose() * v);
        case 2: {
            Matrix sx = X.transpose() * w.asDiagonal() * X;
            Matrix sz = Z.transpose() * v.asDiagonal() * Z;
            return (sx.array() * sz.array()).sum();
        }
        case 3: {
            std::vector<double> tx(static_cast<std::size_t>(d * d * d), 0.0);
            std::vector<double> tz(static_cast<std::size_t>(d * d * d), 0.0);
            auto accumulate = [d](std::vector<double>& t, const Matrix& pts, const Vector& wt) {
                for (Index r = 0; r < pts.rows(); ++r) {
                    const auto x = pts.row(r);
                    const double wr = wt[r];
                    for (Index a = 0; a < d; ++a)
                        for (Index b = 0; b < d; ++b)
                            for (Index c = 0; c < d; ++c)
                                t[static_cast<std::size_t>((a * d + b) * d + c)] +=
                                    wr * x[a] * x[b] * x[c];
                }
            };
            accumulate(tx, X, w);
            accumulate(tz, Z, v);
            double acc = 0.0;
            for (std::size_t i = 0; i < tx.size(); ++i) acc += tx[i] * tz[i];
            return acc;
        }
        default:
            throw std::logic_error("dot_power_moment: unsupported power");
    }
}

// Blocked single-precision evaluation of the weighted double sum for
// kernels without a factored form. Double accumulation keeps the error
// well below the Monte-Carlo noise floor of the estimates it serves.
inline double empirical_sum_blocked(const EmbeddingKernel& k, const Matrix& X, const Vector& w,
                                    const Matrix& Z, const Vector& v) {
    using MatrixXf = Eigen::MatrixXf;
    using VectorXf = Eigen::VectorXf;
    const MatrixXf Xf = X.cast<float>();
    const MatrixXf Zf = Z.cast<float>();
    const VectorXf vf = v.cast<float>();
    const VectorXf nx = Xf.rowwise().squaredNorm();
    const VectorXf nz = Zf.rowwise().squaredNorm();
    const Index n = X.rows();
    const Index m = Z.rows();
    // two-level tiling keeps the kernel tile and its operands in cache;
    // the streaming version is memory-bound at these sizes
    const Index br = 64, bc = 4096;
    double total = 0.0;
    MatrixXf g(br, bc);
    VectorXf rowacc(br);
    for (Index i0 = 0; i0 < n; i0 += br) {
        const Index rb = std::min(br, n - i0);
        rowacc.head(rb).setZero();
        for (Index j0 = 0; j0 < m; j0 += bc) {
            const Index cb = std::min(bc, m - j0);
            auto gb = g.topLeftCorner(rb, cb);
            gb.noalias() = Xf.middleRows(i0, rb) * Zf.middleRows(j0, cb).transpose();
            std::visit(
                [&](const auto& kk) {
                    using T = std::decay_t<decltype(kk)>;
                    if constexpr (std::is_same_v<T, PolynomialKernel>) {
                        gb = (gb.array() + static_cast<float>(kk.offset))
                                 .pow(static_cast<float>(kk.degree))
                                 .matrix();
                    } else if constexpr (std::is_same_v<T, GaussianRBFKernel>) {
                        const float gamma = static_cast<float>(kk.gamma);
                        gb *= -2.0f;
                        gb.colwise() += nx.segment(i0, rb);
                        gb.rowwise() += nz.segment(j0, cb).transpose();
                        gb = (-0.5f * gamma * gb.array()).exp().matrix();
                    } else {
                        // linear handled by the factored path
                    }
                },
                k.storage());
            rowacc.head(rb).noalias() += gb * vf.segment(j0, cb);
        }
        for (Index i = 0; i < rb; ++i) total += w[i0 + i] * static_cast<double>(rowacc[i]);
    }
    if (k.is_rbf() && k.as_rbf().normalized) total *= rbf_normalization(k.as_rbf().gamma, X.cols());
    return total;
}

inline double empirical_sum_direct(const EmbeddingKernel& k, const Matrix& X, const Vector& w,
                                   const Matrix& Z, const Vector& v) {
    double total = 0.0;
    for (Index r = 0; r < X.rows(); ++r) {
        double row = 0.0;
        for (Index s = 0; s < Z.rows(); ++s)
            row += v[s] * eval_base(k, X.row(r), Z.row(s));
        total += w[r] * row;
    }
    return total;
}

}  // namespace detail

// Eq-4-style weighted empirical estimate sum_{r,s} w_r v_s k(x_r, z_s).
inline double empirical_expected_kernel(const EmbeddingKernel& k, const Empirical& p,
                                        const Empirical& q) {
    if (p.points.cols() != q.points.cols())
        throw DimensionMismatch("empirical_expected_kernel: dimensions differ");
    const Index n = p.points.rows();
    const Index m = q.points.rows();
    if (k.is_linear())
        return detail::dot_power_moment(p.points, p.weights, q.points, q.weights, 1);
    if (k.is_polynomial() && k.as_polynomial().degree <= 3) {
        const auto& pk = k.as_polynomial();
        const double c = pk.offset;
        const double e1 = detail::dot_power_moment(p.points, p.weights, q.points, q.weights, 1);
        if (pk.degree == 1) return e1 + c;
        const double e2 = detail::dot_power_moment(p.points, p.weights, q.points, q.weights, 2);
        if (pk.degree == 2) return e2 + 2.0 * c * e1 + c * c;
        const double e3 = detail::dot_power_moment(p.points, p.weights, q.points, q.weights, 3);
        return e3 + 3.0 * c * e2 + 3.0 * c * c * e1 + c * c * c;
    }
    if (n * m <= 250000) return detail::empirical_sum_direct(k, p.points, p.weights, q.points, q.weights);
    return detail::empirical_sum_blocked(k, p.points, p.weights, q.points, q.weights);
}

namespace detail {

struct MomentView {
    Vector mean;
    Matrix cov;
    bool gaussian_like;  // Gaussian or Dirac (valid for the Gaussian closed forms)
};

inline std::optional<MomentView> moment_view(const Distribution& p) {
    if (p.is_dirac()) {
        const Index d = p.dim();
        return MomentView{p.as_dirac().point, Matrix::Zero(d, d), true};
    }
    if (p.is_gaussian()) return MomentView{p.as_gaussian().mean, p.as_gaussian().cov, true};
    if (p.is_moment_only())
        return MomentView{p.as_moment_only().mean, p.as_moment_only().cov, false};
    return std::nullopt;
}

inline double rbf_gaussian_closed_form(const GaussianRBFKernel& k, const MomentView& a,
                                       const MomentView& b) {
    const Index d = a.mean.size();
    Matrix A = a.cov + b.cov + (1.0 / k.gamma) * Matrix::Identity(d, d);
    Eigen::LLT<Matrix> llt(A);
    if (llt.info() != Eigen::Success)
        throw SingularSolve("rbf closed form: Cholesky of Sigma_i+Sigma_j+I/gamma failed");
    const Vector q = a.mean - b.mean;
    const double quad = q.dot(llt.solve(q));
    // |gamma*Sigma_i + gamma*Sigma_j + I| = gamma^d |A|, from the factor diagonal
    double log_det_half = 0.0;
    const auto& L = llt.matrixLLT();
    for (Index i = 0; i < d; ++i) log_det_half += std::log(std::sqrt(k.gamma) * L(i, i));
    double v = std::exp(-0.5 * quad - log_det_half);
    if (k.normalized) v *= rbf_normalization(k.gamma, d);
    return v;
}

inline double poly_gaussian_closed_form(const PolynomialKernel& k, const MomentView& a,
                                        const MomentView& b) {
    const double c = k.offset;
    const double s = a.mean.dot(b.mean);
    if (k.degree == 1) return s + c;
    const double var_cross = (a.cov.array() * b.cov.transpose().array()).sum() +
                             a.mean.dot(b.cov * a.mean) + b.mean.dot(a.cov * b.mean);
    if (k.degree == 2) return (s + c) * (s + c) + var_cross;
    const double mixed = a.mean.dot(b.cov * (a.cov * b.mean));
    return std::pow(s + c, 3) + 6.0 * mixed + 3.0 * (s + c) * var_cross;
}

inline bool samplable(const Distribution& p) { return !p.is_moment_only(); }

inline Empirical as_sample(const Distribution& p, Index n, Rng& rng) {
    if (p.is_empirical()) return p.as_empirical();
    Matrix pts = sample(p, n, rng);
    return Empirical{std::move(pts), Vector::Constant(n, 1.0 / static_cast<double>(n))};
}

}  // namespace detail

inline double expected_kernel(const ExpectedKernelConfig& cfg, const Distribution& p,
                              const Distribution& q, bool same_index,
                              EntryProvenance* prov = nullptr) {
    if (p.dim() != q.dim())
        throw DimensionMismatch("expected_kernel: distribution dimensions differ");
    if (prov) *prov = EntryProvenance{EntryKind::ClosedForm, 0, 0};
    const EmbeddingKernel& k = cfg.embedding;

    if (p.is_empirical() && q.is_empirical()) {
        if (prov)
            *prov = EntryProvenance{EntryKind::Empirical, p.as_empirical().points.rows(),
                                    q.as_empirical().points.rows()};
        return empirical_expected_kernel(k, p.as_empirical(), q.as_empirical());
    }

    // Mixed empirical/parametric: average the parametric side's closed
    // form over the sample (exact by linearity of the mean map).
    if (p.is_empirical() != q.is_empirical()) {
        const Distribution& emp = p.is_empirical() ? p : q;
        const Distribution& other = p.is_empirical() ? q : p;
        const auto view = detail::moment_view(other);
        const bool closed_ok =
            view && (k.is_linear() ||
                     ((k.is_rbf() || (k.is_polynomial() && k.as_polynomial().degree <= 3)) &&
                      view->gaussian_like));
        if (closed_ok) {
            const Empirical& e = emp.as_empirical();
            const Index d = other.dim();
            double acc = 0.0;
            for (Index r = 0; r < e.points.rows(); ++r) {
                detail::MomentView pt{e.points.row(r).transpose(), Matrix::Zero(d, d), true};
                double val;
                if (k.is_linear())
                    val = pt.mean.dot(view->mean);
                else if (k.is_rbf())
                    val = detail::rbf_gaussian_closed_form(k.as_rbf(), pt, *view);
                else
                    val = detail::poly_gaussian_closed_form(k.as_polynomial(), pt, *view);
                acc += e.weights[r] * val;
            }
            if (prov) *prov = EntryProvenance{EntryKind::ClosedForm, 0, 0};
            return acc;
        }
        if (cfg.empirical_fallback && detail::samplable(other)) {
            Rng rng(cfg.fallback_seed);
            Empirical es = detail::as_sample(other, cfg.fallback_samples, rng);
            const Empirical& ee = emp.as_empirical();
            if (prov)
                *prov = EntryProvenance{EntryKind::Empirical, ee.points.rows(), es.points.rows()};
            return empirical_expected_kernel(k, ee, es);
        }
        throw NoClosedForm("expected_kernel: no closed form for mixed pair with this kernel");
    }

    // Both parametric.
    const auto a = detail::moment_view(p);
    const auto b = detail::moment_view(q);
    if (k.is_linear()) {
        double v = a->mean.dot(b->mean);
        if (same_index && cfg.diagonal_correction) v += a->cov.trace();
        return v;
    }
    const bool gaussians = a->gaussian_like && b->gaussian_like;
    if (k.is_rbf() && gaussians)
        return detail::rbf_gaussian_closed_form(k.as_rbf(), *a, *b);
    if (k.is_polynomial() && k.as_polynomial().degree <= 3 && gaussians)
        return detail::poly_gaussian_closed_form(k.as_polynomial(), *a, *b);

    if (cfg.empirical_fallback && detail::samplable(p) && detail::samplable(q)) {
        Rng rng(cfg.fallback_seed);
        Empirical pe = detail::as_sample(p, cfg.fallback_samples, rng);
        Empirical qe = detail::as_sample(q, cfg.fallback_samples, rng);
        if (prov)
            *prov = EntryProvenance{EntryKind::Empirical, pe.points.rows(), qe.points.rows()};
        return empirical_expected_kernel(k, pe, qe);
    }
    throw NoClosedForm("expected_kernel: unsupported kernel/distribution pair");
}

// mu_P evaluated at a point: <mu_P, k(x,.)> = K(P, delta_x).
inline double mean_embedding_eval(const ExpectedKernelConfig& cfg, const Distribution& p,
                                  const Vector& x) {
    return expected_kernel(cfg, p, Distribution::dirac(x), false);
}

inline GramMatrix gram(const ExpectedKernelConfig& cfg, const std::vector<Distribution>& dists) {
    const Index n = static_cast<Index>(dists.size());
    if (n < 1) throw std::invalid_argument("gram: empty distribution list");
    const Index d = dists.front().dim();
    for (const auto& p : dists)
        if (p.dim() != d) throw DimensionMismatch("gram: mixed dimensions");
    GramMatrix g{Matrix(n, n), cfg, std::vector<EntryProvenance>(static_cast<std::size_t>(n * n)),
                 false};
    for (Index i = 0; i < n; ++i) {
        for (Index j = i; j < n; ++j) {
            EntryProvenance prov;
            const double v = expected_kernel(cfg, dists[static_cast<std::size_t>(i)],
                                             dists[static_cast<std::size_t>(j)], i == j, &prov);
            g.values(i, j) = v;
            g.values(j, i) = v;
            g.source[static_cast<std::size_t>(i * n + j)] = prov;
            g.source[static_cast<std::size_t>(j * n + i)] = prov;
        }
    }
    return g;
}

}  // namespace smm
