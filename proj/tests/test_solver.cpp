#include "smm/embedding_kernels.hpp"
#include "smm/solver.hpp"

#include "reference_qp.hpp"

#include <doctest.h>

#include <cmath>
#include <vector>

using namespace smm;

TEST_SUITE_BEGIN("solver");

namespace {

struct Instance {
    Matrix K;
    std::vector<int> labels;
};

Instance random_instance(Index m, Rng& rng, double gamma) {
    Matrix pts(m, 2);
    for (Index i = 0; i < m; ++i)
        for (int j = 0; j < 2; ++j) pts(i, j) = 2.0 * rng.normal();
    Instance inst;
    inst.K = pairwise_gram(EmbeddingKernel::rbf(gamma), pts);
    inst.labels.resize(static_cast<std::size_t>(m));
    for (auto& y : inst.labels) y = rng.uniform() < 0.5 ? 1 : -1;
    inst.labels[0] = 1;
    inst.labels[1] = -1;
    return inst;
}

// KKT residuals for the C-SVM dual at (alphas, bias).
double max_kkt_violation(const Matrix& K, const std::vector<int>& labels, const Vector& a,
                         double bias, double C) {
    const Index m = K.rows();
    Vector y(m);
    for (Index i = 0; i < m; ++i) y[i] = labels[static_cast<std::size_t>(i)];
    const Vector f = K * a.cwiseProduct(y) + Vector::Constant(m, bias);
    double worst = 0.0;
    const double eps = 1e-8 * C;
    for (Index i = 0; i < m; ++i) {
        const double margin = y[i] * f[i];
        if (a[i] <= eps)
            worst = std::max(worst, 1.0 - margin);  // should have margin >= 1
        else if (a[i] >= C - eps)
            worst = std::max(worst, margin - 1.0);  // should have margin <= 1
        else
            worst = std::max(worst, std::abs(margin - 1.0));
    }
    return worst;
}

}  // namespace

TEST_CASE("two symmetric points give the analytic solution") {
    Matrix K(2, 2);
    K << 1.0, -1.0, -1.0, 1.0;  // linear kernel at x = +1, -1
    SolverParams params;
    params.C = 1.0;
    params.tol = 1e-8;
    const SmoResult r = smo_solve(K, {1, -1}, params);
    // dual: max 2a - 2a^2 at a = 1/2; f(x) = x, so bias = 0
    CHECK(r.alphas[0] == doctest::Approx(0.5).epsilon(1e-9));
    CHECK(r.alphas[1] == doctest::Approx(0.5).epsilon(1e-9));
    CHECK(r.bias == doctest::Approx(0.0).epsilon(1e-9));
    CHECK(r.objective == doctest::Approx(0.5).epsilon(1e-9));
    CHECK(r.converged);
}

TEST_CASE("box constraint binds when C is small") {
    Matrix K(2, 2);
    K << 1.0, -1.0, -1.0, 1.0;
    SolverParams params;
    params.C = 0.1;
    params.tol = 1e-8;
    const SmoResult r = smo_solve(K, {1, -1}, params);
    CHECK(r.alphas[0] == doctest::Approx(0.1));
    CHECK(r.alphas[1] == doctest::Approx(0.1));
    // objective 2a - 2a^2 at the cap
    CHECK(r.objective == doctest::Approx(0.2 - 0.02).epsilon(1e-9));
}

TEST_CASE("matches the projected-gradient reference on random instances") {
    Rng rng(123);
    int checked = 0;
    for (int t = 0; t < 15; ++t) {
        const Index m = 8 + static_cast<Index>(rng.uniform_index(33));
        const Instance inst = random_instance(m, rng, 0.3 + rng.uniform());
        const double C = (t % 3 == 0) ? 0.5 : (t % 3 == 1 ? 2.0 : 10.0);
        SolverParams params;
        params.C = C;
        params.tol = 1e-6;
        params.max_passes = 40;
        params.seed = 7 + t;
        const SmoResult smo = smo_solve(inst.K, inst.labels, params);
        const refqp::Result ref = refqp::solve(inst.K, inst.labels, C);
        CHECK(smo.objective ==
              doctest::Approx(ref.objective).epsilon(1e-5).scale(std::max(1.0, ref.objective)));
        CHECK(smo.objective <= ref.objective + 1e-7 * (1.0 + std::abs(ref.objective)));
        ++checked;
    }
    CHECK(checked == 15);
}

TEST_CASE("solutions satisfy feasibility and KKT conditions") {
    Rng rng(321);
    for (int t = 0; t < 10; ++t) {
        const Instance inst = random_instance(20, rng, 0.8);
        SolverParams params;
        params.C = 5.0;
        params.tol = 1e-6;
        params.max_passes = 40;
        const SmoResult r = smo_solve(inst.K, inst.labels, params);
        CHECK(r.converged);
        CHECK(r.alphas.minCoeff() >= 0.0);
        CHECK(r.alphas.maxCoeff() <= params.C);
        double balance = 0.0;
        for (Index i = 0; i < inst.K.rows(); ++i)
            balance += r.alphas[i] * inst.labels[static_cast<std::size_t>(i)];
        CHECK(std::abs(balance) <= 1e-10 * (1.0 + r.alphas.sum()));
        CHECK(max_kkt_violation(inst.K, inst.labels, r.alphas, r.bias, params.C) <=
              10.0 * params.tol);
    }
}

TEST_CASE("same seed reproduces the identical solution") {
    Rng rng(99);
    const Instance inst = random_instance(25, rng, 0.6);
    SolverParams params;
    params.C = 2.0;
    params.seed = 4242;
    const SmoResult a = smo_solve(inst.K, inst.labels, params);
    const SmoResult b = smo_solve(inst.K, inst.labels, params);
    CHECK((a.alphas - b.alphas).cwiseAbs().maxCoeff() == 0.0);
    CHECK(a.bias == b.bias);
    CHECK(a.steps == b.steps);
}

TEST_CASE("input validation") {
    Matrix K(2, 2);
    K << 1, 0, 0, 1;
    SolverParams params;
    CHECK_THROWS_AS(smo_solve(K, {1, 1}, params), DegenerateLabels);
    CHECK_THROWS(smo_solve(K, {1, 0}, params));
    CHECK_THROWS_AS(smo_solve(K, {1}, params), DimensionMismatch);
    params.C = -1.0;
    CHECK_THROWS(smo_solve(K, {1, -1}, params));
    Matrix K1(1, 1);
    K1 << 1;
    SolverParams ok;
    CHECK_THROWS(smo_solve(K1, {1}, ok));
}

TEST_CASE("flat kernel with duplicated points still terminates") {
    // duplicated rows make eta = 0 for some pairs, exercising the
    // endpoint-objective branch
    Matrix pts(6, 2);
    pts << 0, 0, 0, 0, 1, 1, 1, 1, -1, 0, 0, -1;
    const Matrix K = pairwise_gram(EmbeddingKernel::rbf(0.5), pts);
    SolverParams params;
    params.C = 1.0;
    params.tol = 1e-6;
    params.max_passes = 40;
    const SmoResult r = smo_solve(K, {1, 1, -1, -1, 1, -1}, params);
    const refqp::Result ref = refqp::solve(K, {1, 1, -1, -1, 1, -1}, 1.0);
    CHECK(r.objective ==
          doctest::Approx(ref.objective).epsilon(1e-5).scale(std::max(1.0, ref.objective)));
}

TEST_SUITE_END();
