#pragma once

#include "smm/smm.hpp"

#include <cmath>

namespace smm {

// Numerical checks of the risk-deviation inequality
//   |E_P[l(y, f(x))] - l(y, E_P[f(x)])| <= 2 * C_l * C_f * sigma
// for the hinge loss (C_l = 1) and sigma = sqrt(trace cov).

inline double hinge_loss(double y, double t) { return std::max(0.0, 1.0 - y * t); }

struct LipschitzBudget {
    double C_f = 0.0;
    double C_ell = 1.0;
    double sigma = 0.0;
};

// Coefficient-mass Lipschitz constant for f = sum_i alpha_i y_i mu_i
// under an RBF embedding: sup|grad k| = sqrt(gamma) * e^{-1/2}, and
// smoothing by the measures only contracts gradients.
inline double lipschitz_bound_rkhs(const TrainedSMM& model) {
    if (!model.level1.embedding.is_rbf() || model.level2)
        throw UnsupportedKernel("lipschitz_bound_rkhs: requires RBF embedding, level-1 model");
    const auto& k = model.level1.embedding.as_rbf();
    double grad_sup = std::sqrt(k.gamma) * std::exp(-0.5);
    if (k.normalized) {
        // normalization scales the kernel, and its gradient, uniformly
        Index dim = model.support.empty() ? 1 : model.support.front().dim();
        grad_sup *= rbf_normalization(k.gamma, dim);
    }
    return model.alphas.cwiseAbs().sum() * grad_sup;
}

struct DeviationReport {
    double lhs = 0.0;
    double rhs = 0.0;
    double mc_stderr = 0.0;
    bool holds = false;
};

inline DeviationReport risk_deviation_check(const Distribution& p, int y, const TrainedSMM& model,
                                            Index n, Rng& rng) {
    if (n < 1) throw std::invalid_argument("risk_deviation_check: n must be >= 1");
    const double yv = static_cast<double>(y);

    const Matrix draws = sample(p, n, rng);
    double loss_sum = 0.0, loss_sq = 0.0;
    for (Index i = 0; i < n; ++i) {
        const double f = decision(model, Distribution::dirac(draws.row(i).transpose()));
        const double l = hinge_loss(yv, f);
        loss_sum += l;
        loss_sq += l * l;
    }
    const double mc_mean = loss_sum / static_cast<double>(n);
    const double var = std::max(0.0, loss_sq / static_cast<double>(n) - mc_mean * mc_mean);
    const double se = std::sqrt(var / static_cast<double>(n));

    // E_P[f] via the mean-embedding closed form when available, else the
    // same Monte-Carlo draws.
    double ef;
    try {
        ef = decision(model, p);
    } catch (const NoClosedForm&) {
        double acc = 0.0;
        for (Index i = 0; i < n; ++i)
            acc += decision(model, Distribution::dirac(draws.row(i).transpose()));
        ef = acc / static_cast<double>(n);
    }

    const double sigma = std::sqrt(moments(p).cov.trace());
    DeviationReport rep;
    rep.lhs = std::abs(mc_mean - hinge_loss(yv, ef));
    rep.rhs = 2.0 * 1.0 * lipschitz_bound_rkhs(model) * sigma;
    rep.mc_stderr = se;
    // absolute slack covers summation rounding when both sides are exactly
    // zero in real arithmetic (point masses, constant decision functions)
    rep.holds = rep.lhs <= rep.rhs + 3.0 * se + 1e-12 * (1.0 + std::abs(rep.rhs));
    return rep;
}

struct RiskPair {
    double risk_emp = 0.0;     // (1/m) sum_i MC-mean of l(y_i, f(x)), x ~ P_i
    double risk_mu_emp = 0.0;  // (1/m) sum_i l(y_i, E_{P_i}[f])
    double budget = 0.0;       // (1/m) sum_i 2 C_l C_f sigma_i
    double mc_stderr = 0.0;
};

inline RiskPair empirical_risks(const LabeledMeasureSet& data, const TrainedSMM& model,
                                Index n_per_dist, Rng& rng) {
    data.validate();
    if (n_per_dist < 1) throw std::invalid_argument("empirical_risks: n_per_dist must be >= 1");
    const double cf = lipschitz_bound_rkhs(model);
    const Index m = data.size();
    RiskPair out;
    double var_acc = 0.0;
    for (Index i = 0; i < m; ++i) {
        const auto& p = data.distributions[static_cast<std::size_t>(i)];
        const double yv = static_cast<double>(data.labels[static_cast<std::size_t>(i)]);
        const Matrix draws = sample(p, n_per_dist, rng);
        double loss_sum = 0.0, loss_sq = 0.0;
        for (Index t = 0; t < n_per_dist; ++t) {
            const double l =
                hinge_loss(yv, decision(model, Distribution::dirac(draws.row(t).transpose())));
            loss_sum += l;
            loss_sq += l * l;
        }
        const double mean_l = loss_sum / static_cast<double>(n_per_dist);
        var_acc += std::max(0.0, loss_sq / static_cast<double>(n_per_dist) - mean_l * mean_l) /
                   static_cast<double>(n_per_dist);
        out.risk_emp += mean_l;
        out.risk_mu_emp += hinge_loss(yv, decision(model, p));
        out.budget += 2.0 * cf * std::sqrt(moments(p).cov.trace());
    }
    const double mf = static_cast<double>(m);
    out.risk_emp /= mf;
    out.risk_mu_emp /= mf;
    out.budget /= mf;
    out.mc_stderr = std::sqrt(var_acc) / mf;
    return out;
}

}  // namespace smm
