#pragma once

#include "smm/expected_kernels.hpp"
#include "smm/level2_kernels.hpp"
#include "smm/measures.hpp"
#include "smm/solver.hpp"

#include <Eigen/Eigenvalues>

#include <optional>
#include <vector>

namespace smm {

// Train/predict layer: an SVM whose training examples are probability
// distributions, solved over the expected-kernel (or level-2) Gram.

struct TrainingMeta {
    std::uint64_t seed = 0;
    double objective = 0.0;
    bool converged = true;
    double C = 1.0;
};

struct TrainedSMM {
    ExpectedKernelConfig level1;
    std::optional<Level2Kernel> level2;
    std::vector<Distribution> support;
    std::vector<int> support_labels;
    Vector alphas;        // dual coefficients, in (0, C]
    Vector coeffs;        // alpha_i * y_i
    Vector support_self;  // level-1 K(P_i,P_i), no diagonal correction
    double bias = 0.0;
    TrainingMeta meta;
};

namespace detail {

// Eager PSD guard for desk-scale Grams: one jitter attempt, then reject.
inline void ensure_psd(GramMatrix& g) {
    if (g.values.rows() > 500) return;  // rely on the solver's own robustness at scale
    const double max_diag = g.values.diagonal().cwiseAbs().maxCoeff();
    Eigen::SelfAdjointEigenSolver<Matrix> es(g.values, Eigen::EigenvaluesOnly);
    if (es.eigenvalues().minCoeff() >= -1e-9 * std::max(max_diag, 1.0)) return;
    g.add_diagonal_jitter(1e-8 * g.values.diagonal().mean());
    es.compute(g.values, Eigen::EigenvaluesOnly);
    if (es.eigenvalues().minCoeff() < -1e-9 * std::max(max_diag, 1.0))
        throw GramNotPSD("train: Gram not PSD after jitter, min eigenvalue " +
                         std::to_string(es.eigenvalues().minCoeff()));
}

}  // namespace detail

inline TrainedSMM train(const LabeledMeasureSet& data, const ExpectedKernelConfig& cfg,
                        const std::optional<Level2Kernel>& level2, const SolverParams& params) {
    data.validate();
    if (!data.has_both_classes()) throw DegenerateLabels("train: both classes required");

    GramMatrix g = level2 ? level2_gram(cfg, *level2, data.distributions)
                          : gram(cfg, data.distributions);
    detail::ensure_psd(g);
    const SmoResult sol = smo_solve(g.values, data.labels, params);

    TrainedSMM model{cfg, level2, {}, {}, {}, {}, {}, sol.bias,
                     TrainingMeta{params.seed, sol.objective, sol.converged, params.C}};
    std::vector<double> alphas, coeffs;
    for (Index i = 0; i < data.size(); ++i) {
        if (sol.alphas[i] <= 0.0) continue;
        model.support.push_back(data.distributions[static_cast<std::size_t>(i)]);
        model.support_labels.push_back(data.labels[static_cast<std::size_t>(i)]);
        alphas.push_back(sol.alphas[i]);
        coeffs.push_back(sol.alphas[i] * data.labels[static_cast<std::size_t>(i)]);
    }
    model.alphas = Eigen::Map<const Vector>(alphas.data(), static_cast<Index>(alphas.size()));
    model.coeffs = Eigen::Map<const Vector>(coeffs.data(), static_cast<Index>(coeffs.size()));

    ExpectedKernelConfig nocorr(cfg);
    nocorr.diagonal_correction = false;
    model.support_self.resize(model.coeffs.size());
    for (Index i = 0; i < model.coeffs.size(); ++i)
        model.support_self[i] = expected_kernel(
            nocorr, model.support[static_cast<std::size_t>(i)],
            model.support[static_cast<std::size_t>(i)], false);
    return model;
}

inline double decision(const TrainedSMM& model, const Distribution& p) {
    ExpectedKernelConfig nocorr(model.level1);
    nocorr.diagonal_correction = false;
    double acc = 0.0;
    if (model.level2) {
        const double kqq = expected_kernel(nocorr, p, p, false);
        for (Index i = 0; i < model.coeffs.size(); ++i) {
            const double kpq =
                expected_kernel(nocorr, model.support[static_cast<std::size_t>(i)], p, false);
            acc += model.coeffs[i] *
                   level2_eval(*model.level2, kpq, model.support_self[i], kqq);
        }
    } else {
        for (Index i = 0; i < model.coeffs.size(); ++i)
            acc += model.coeffs[i] *
                   expected_kernel(nocorr, model.support[static_cast<std::size_t>(i)], p, false);
    }
    return acc + model.bias;
}

// Ties (exact zero) map to +1.
inline int predict(const TrainedSMM& model, const Distribution& p) {
    return decision(model, p) >= 0.0 ? 1 : -1;
}

}  // namespace smm
