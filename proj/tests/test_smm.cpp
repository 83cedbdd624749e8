#include "smm/smm.hpp"

#include <doctest.h>

#include <cmath>

using namespace smm;

TEST_SUITE_BEGIN("smm");

namespace {

Vector vec2(double a, double b) {
    Vector v(2);
    v << a, b;
    return v;
}

// Two well-separated Gaussian classes in 2-D.
LabeledMeasureSet separated_task(Index per_class, Rng& rng, double gap = 6.0) {
    LabeledMeasureSet s;
    for (Index i = 0; i < per_class; ++i) {
        s.distributions.push_back(Distribution::gaussian(
            vec2(gap / 2 + 0.3 * rng.normal(), 0.3 * rng.normal()),
            0.2 * Matrix::Identity(2, 2)));
        s.labels.push_back(1);
    }
    for (Index i = 0; i < per_class; ++i) {
        s.distributions.push_back(Distribution::gaussian(
            vec2(-gap / 2 + 0.3 * rng.normal(), 0.3 * rng.normal()),
            0.2 * Matrix::Identity(2, 2)));
        s.labels.push_back(-1);
    }
    return s;
}

}  // namespace

TEST_CASE("separable task trains to zero training error") {
    Rng rng(3);
    const auto data = separated_task(10, rng);
    const ExpectedKernelConfig cfg(EmbeddingKernel::rbf(0.5), false);
    SolverParams params;
    params.C = 10.0;
    const TrainedSMM model = train(data, cfg, std::nullopt, params);
    CHECK(model.meta.converged);
    for (std::size_t i = 0; i < data.distributions.size(); ++i)
        CHECK(predict(model, data.distributions[i]) == data.labels[i]);
    // decision is positive at the positive center, negative at the other
    CHECK(decision(model, Distribution::dirac(vec2(3, 0))) > 0.0);
    CHECK(decision(model, Distribution::dirac(vec2(-3, 0))) < 0.0);
}

TEST_CASE("point-mass training is exactly a kernel SVM") {
    Rng rng(8);
    Matrix pts(16, 2);
    std::vector<int> labels;
    LabeledMeasureSet data;
    for (Index i = 0; i < 16; ++i) {
        pts(i, 0) = rng.normal();
        pts(i, 1) = rng.normal();
        const int y = pts(i, 0) + 0.3 * pts(i, 1) > 0 ? 1 : -1;
        labels.push_back(y);
        data.distributions.push_back(Distribution::dirac(pts.row(i).transpose()));
        data.labels.push_back(y);
    }
    const auto k = EmbeddingKernel::rbf(0.9);
    const ExpectedKernelConfig cfg(k, false);
    const GramMatrix g = gram(cfg, data.distributions);
    CHECK((g.values - pairwise_gram(k, pts)).cwiseAbs().maxCoeff() <= 1e-15);

    SolverParams params;
    params.C = 2.0;
    params.seed = 5;
    const TrainedSMM model = train(data, cfg, std::nullopt, params);
    // hand the solver the identical Gram bits: the SMO pivot order is
    // sensitive to last-ulp differences between equivalent Gram expressions
    const SmoResult svm = smo_solve(g.values, labels, params);
    Rng probe_rng(19);
    for (int t = 0; t < 25; ++t) {
        const Vector z = vec2(probe_rng.normal(), probe_rng.normal());
        double f = svm.bias;
        for (Index i = 0; i < 16; ++i)
            f += svm.alphas[i] * labels[static_cast<std::size_t>(i)] *
                 eval_base(k, pts.row(i).transpose(), z);
        CHECK(decision(model, Distribution::dirac(z)) == doctest::Approx(f).epsilon(1e-9));
    }
}

TEST_CASE("stored coefficients and self-terms are consistent") {
    Rng rng(21);
    const auto data = separated_task(8, rng);
    const ExpectedKernelConfig cfg(EmbeddingKernel::rbf(0.7), false);
    SolverParams params;
    params.C = 3.0;
    const TrainedSMM model = train(data, cfg, std::nullopt, params);
    CHECK(model.alphas.size() == model.coeffs.size());
    CHECK(model.alphas.size() == static_cast<Index>(model.support.size()));
    for (Index i = 0; i < model.alphas.size(); ++i) {
        CHECK(model.alphas[i] > 0.0);
        CHECK(model.alphas[i] <= params.C);
        CHECK(model.coeffs[i] ==
              model.alphas[i] * model.support_labels[static_cast<std::size_t>(i)]);
        CHECK(model.support_self[i] ==
              expected_kernel(ExpectedKernelConfig(cfg.embedding, false),
                              model.support[static_cast<std::size_t>(i)],
                              model.support[static_cast<std::size_t>(i)], false));
    }
    CHECK(model.meta.C == params.C);
    CHECK(model.meta.seed == params.seed);
}

TEST_CASE("level-2 decisions reproduce the training Gram rows") {
    Rng rng(33);
    const auto data = separated_task(6, rng, 3.0);
    const ExpectedKernelConfig cfg(EmbeddingKernel::rbf(0.6), false);
    const Level2Kernel l2 = Level2Kernel::rbf(1.5);
    SolverParams params;
    params.C = 4.0;
    const TrainedSMM model = train(data, cfg, l2, params);
    // recompute the decision for each training example straight from the
    // level-2 Gram and the dense solver output
    const GramMatrix k2 = level2_gram(cfg, l2, data.distributions);
    const SmoResult sol = smo_solve(k2.values, data.labels, params);
    for (Index i = 0; i < data.size(); ++i) {
        double f = sol.bias;
        for (Index j = 0; j < data.size(); ++j)
            f += sol.alphas[j] * data.labels[static_cast<std::size_t>(j)] * k2.values(i, j);
        CHECK(decision(model, data.distributions[static_cast<std::size_t>(i)]) ==
              doctest::Approx(f).epsilon(1e-9));
    }
}

TEST_CASE("level-2 training separates a covariance-only task") {
    // identical means; classes differ only through their covariance scale,
    // which a level-2 rbf on mean embeddings can see
    Rng rng(47);
    LabeledMeasureSet data;
    for (Index i = 0; i < 12; ++i) {
        const double s2 = (i < 6) ? 0.1 : 2.0;
        data.distributions.push_back(Distribution::gaussian(
            vec2(0.05 * rng.normal(), 0.05 * rng.normal()), s2 * Matrix::Identity(2, 2)));
        data.labels.push_back(i < 6 ? 1 : -1);
    }
    const ExpectedKernelConfig cfg(EmbeddingKernel::rbf(1.0), false);
    SolverParams params;
    params.C = 50.0;
    const TrainedSMM model = train(data, cfg, Level2Kernel::rbf(10.0), params);
    int correct = 0;
    for (std::size_t i = 0; i < data.distributions.size(); ++i)
        correct += predict(model, data.distributions[i]) == data.labels[i];
    CHECK(correct == 12);
}

TEST_CASE("degenerate inputs are rejected") {
    LabeledMeasureSet one_class;
    one_class.distributions.push_back(Distribution::dirac(vec2(0, 0)));
    one_class.distributions.push_back(Distribution::dirac(vec2(1, 0)));
    one_class.labels = {1, 1};
    const ExpectedKernelConfig cfg(EmbeddingKernel::linear());
    SolverParams params;
    CHECK_THROWS_AS(train(one_class, cfg, std::nullopt, params), DegenerateLabels);

    LabeledMeasureSet mismatched;
    mismatched.distributions.push_back(Distribution::dirac(vec2(0, 0)));
    mismatched.labels = {1, -1};
    CHECK_THROWS_AS(train(mismatched, cfg, std::nullopt, params), DimensionMismatch);
}

TEST_CASE("training ignores the level-1 diagonal correction at prediction time") {
    // a linear model trained with the correction must still score a support
    // distribution by <m_i, m_j> terms only
    Rng rng(71);
    const auto data = separated_task(5, rng);
    const ExpectedKernelConfig cfg(EmbeddingKernel::linear(), true);
    SolverParams params;
    params.C = 1.0;
    const TrainedSMM model = train(data, cfg, std::nullopt, params);
    const auto& p0 = data.distributions[0];
    double f = model.bias;
    for (Index i = 0; i < model.coeffs.size(); ++i)
        f += model.coeffs[i] *
             moments(model.support[static_cast<std::size_t>(i)]).mean.dot(moments(p0).mean);
    CHECK(decision(model, p0) == doctest::Approx(f).epsilon(1e-12));
}

TEST_SUITE_END();
