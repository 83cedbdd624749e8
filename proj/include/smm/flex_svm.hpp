#pragma once

#include "smm/expected_kernels.hpp"
#include "smm/smm.hpp"

#include <vector>

namespace smm {

// Flex-SVM: an SVM on points whose kernel places a smoothed (per-example)
// kernel at each training point,
//   K_g(x_i, x_j) = <mu_i, mu_j>  with  mu_i the embedding of N(x_i, Sigma_i).
// Evaluated by delegation to the expected-kernel closed forms.

struct SmoothingFamily {
    std::vector<Matrix> covs;  // one PSD matrix per training example

    static SmoothingFamily isotropic(const std::vector<double>& sigma2, Index dim) {
        SmoothingFamily fam;
        fam.covs.reserve(sigma2.size());
        for (double s2 : sigma2) {
            if (s2 < 0.0) throw std::invalid_argument("SmoothingFamily: sigma^2 must be >= 0");
            fam.covs.push_back(s2 * Matrix::Identity(dim, dim));
        }
        return fam;
    }

    const Matrix& at(std::size_t i) const {
        if (i >= covs.size()) throw std::out_of_range("SmoothingFamily: index out of range");
        return covs[i];
    }
};

inline double flex_kernel(const EmbeddingKernel& k, const SmoothingFamily& fam, std::size_t i,
                          std::size_t j, const Vector& xi, const Vector& xj) {
    const ExpectedKernelConfig cfg(k, /*diag_corr=*/false);
    return expected_kernel(cfg, Distribution::gaussian(xi, fam.at(i)),
                           Distribution::gaussian(xj, fam.at(j)), false);
}

struct EquivalenceReport {
    double max_gram_diff = 0.0;
    double max_decision_diff = 0.0;
    double smm_objective = 0.0;
    double svm_objective = 0.0;
    bool pass = false;
};

// Trains (a) the linear SMM on the smoothed measures and (b) the SVM on
// the raw points under K_g, with identical solver seeds, and compares
// Grams and probe decisions. Probes are evaluated as point masses.
inline EquivalenceReport verify_equivalence(const Matrix& points, const std::vector<int>& labels,
                                            const SmoothingFamily& fam, const EmbeddingKernel& k,
                                            const SolverParams& params, const Matrix& probes) {
    const Index m = points.rows();
    if (static_cast<std::size_t>(m) != labels.size())
        throw DimensionMismatch("verify_equivalence: label count mismatch");
    if (fam.covs.size() != static_cast<std::size_t>(m))
        throw DimensionMismatch("verify_equivalence: smoother count mismatch");

    LabeledMeasureSet measures;
    for (Index i = 0; i < m; ++i) {
        measures.distributions.push_back(
            Distribution::gaussian(points.row(i).transpose(), fam.at(static_cast<std::size_t>(i))));
        measures.labels.push_back(labels[static_cast<std::size_t>(i)]);
    }

    const ExpectedKernelConfig cfg(k, /*diag_corr=*/false);
    const GramMatrix smm_gram = gram(cfg, measures.distributions);

    Matrix flex_gram(m, m);
    for (Index i = 0; i < m; ++i) {
        for (Index j = i; j < m; ++j) {
            const double v =
                flex_kernel(k, fam, static_cast<std::size_t>(i), static_cast<std::size_t>(j),
                            points.row(i).transpose(), points.row(j).transpose());
            flex_gram(i, j) = v;
            flex_gram(j, i) = v;
        }
    }

    EquivalenceReport rep;
    rep.max_gram_diff = (smm_gram.values - flex_gram).cwiseAbs().maxCoeff();

    const TrainedSMM smm_model = train(measures, cfg, std::nullopt, params);
    const SmoResult svm_sol = smo_solve(flex_gram, labels, params);
    rep.smm_objective = smm_model.meta.objective;
    rep.svm_objective = svm_sol.objective;

    for (Index t = 0; t < probes.rows(); ++t) {
        const Vector z = probes.row(t).transpose();
        const double d_smm = decision(smm_model, Distribution::dirac(z));
        double d_svm = svm_sol.bias;
        for (Index j = 0; j < m; ++j) {
            if (svm_sol.alphas[j] <= 0.0) continue;
            const double kgz = expected_kernel(
                cfg, Distribution::gaussian(points.row(j).transpose(),
                                            fam.at(static_cast<std::size_t>(j))),
                Distribution::dirac(z), false);
            d_svm += svm_sol.alphas[j] * labels[static_cast<std::size_t>(j)] * kgz;
        }
        rep.max_decision_diff = std::max(rep.max_decision_diff, std::abs(d_smm - d_svm));
    }
    rep.pass = rep.max_gram_diff <= 1e-8 && rep.max_decision_diff <= 1e-5;
    return rep;
}

}  // namespace smm
