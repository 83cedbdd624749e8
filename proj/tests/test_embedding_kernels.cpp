#include "smm/embedding_kernels.hpp"
#include "smm/rng.hpp"

#include <doctest.h>

#include <Eigen/Eigenvalues>

#include <cmath>
#include <numbers>

using namespace smm;

TEST_SUITE_BEGIN("embedding_kernels");

namespace {

Vector vec2(double a, double b) {
    Vector v(2);
    v << a, b;
    return v;
}

}  // namespace

TEST_CASE("linear kernel is the dot product") {
    CHECK(eval_base(EmbeddingKernel::linear(), vec2(1, 2), vec2(3, -1)) == doctest::Approx(1.0));
    CHECK(eval_base(EmbeddingKernel::linear(), vec2(0, 0), vec2(3, -1)) == 0.0);
}

TEST_CASE("polynomial kernel matches the hand-expanded value") {
    const auto k = EmbeddingKernel::polynomial(2);
    // (x.z + 1)^2 with x.z = 1
    CHECK(eval_base(k, vec2(1, 2), vec2(3, -1)) == doctest::Approx(4.0));
    const auto k3 = EmbeddingKernel::polynomial(3, 0.5);
    const double dot = 2.0 * 1.0 + 1.0 * 1.0;
    CHECK(eval_base(k3, vec2(2, 1), vec2(1, 1)) ==
          doctest::Approx(std::pow(dot + 0.5, 3)));
}

TEST_CASE("rbf kernel uses the exp(-gamma/2 ||x-z||^2) convention") {
    const auto k = EmbeddingKernel::rbf(0.5);
    CHECK(eval_base(k, vec2(1, 1), vec2(1, 1)) == doctest::Approx(1.0));
    // ||x-z||^2 = 2, so the value is exp(-0.5 * 0.5 * 2) = exp(-0.5)
    CHECK(eval_base(k, vec2(0, 0), vec2(1, 1)) == doctest::Approx(std::exp(-0.5)));
    // and NOT the exp(-gamma r^2) convention
    CHECK(eval_base(k, vec2(0, 0), vec2(1, 1)) != doctest::Approx(std::exp(-1.0)));
}

TEST_CASE("normalized rbf multiplies by the density constant") {
    const double gamma = 2.0 * std::numbers::pi;  // makes the constant exactly 1 in 2-D
    CHECK(rbf_normalization(gamma, 2) == doctest::Approx(1.0));
    CHECK(rbf_normalization(1.0, 2) == doctest::Approx(1.0 / (2.0 * std::numbers::pi)));
    const auto k = EmbeddingKernel::rbf(1.0, true);
    const auto plain = EmbeddingKernel::rbf(1.0, false);
    const Vector x = vec2(0.3, -0.2), z = vec2(1.0, 0.4);
    CHECK(eval_base(k, x, z) ==
          doctest::Approx(eval_base(plain, x, z) / (2.0 * std::numbers::pi)));
}

TEST_CASE("parameter validation") {
    CHECK_THROWS(EmbeddingKernel::polynomial(0));
    CHECK_THROWS(EmbeddingKernel::polynomial(9));
    CHECK_THROWS(EmbeddingKernel::polynomial(2, -0.1));
    CHECK_THROWS(EmbeddingKernel::rbf(0.0));
    CHECK_THROWS(EmbeddingKernel::rbf(-1.0));
    CHECK_NOTHROW(EmbeddingKernel::polynomial(8, 0.0));
}

TEST_CASE("dimension mismatch is rejected") {
    Vector x(2), z(3);
    x.setZero();
    z.setZero();
    CHECK_THROWS_AS(eval_base(EmbeddingKernel::linear(), x, z), DimensionMismatch);
}

TEST_CASE("pairwise grams are symmetric and PSD") {
    Rng rng(5);
    Matrix pts(12, 3);
    for (Index i = 0; i < pts.rows(); ++i)
        for (Index j = 0; j < pts.cols(); ++j) pts(i, j) = rng.normal();
    for (const auto& k : {EmbeddingKernel::linear(), EmbeddingKernel::rbf(0.7),
                          EmbeddingKernel::rbf(0.7, true), EmbeddingKernel::polynomial(2),
                          EmbeddingKernel::polynomial(3)}) {
        const Matrix g = pairwise_gram(k, pts);
        CHECK((g - g.transpose()).cwiseAbs().maxCoeff() == 0.0);
        Eigen::SelfAdjointEigenSolver<Matrix> es(g, Eigen::EigenvaluesOnly);
        const double floor = -1e-9 * std::max(1.0, g.diagonal().cwiseAbs().maxCoeff());
        CHECK(es.eigenvalues().minCoeff() >= floor);
    }
}

TEST_CASE("rbf is shift and rotation invariant, bounded by 1") {
    Rng rng(9);
    const auto k = EmbeddingKernel::rbf(1.3);
    for (int t = 0; t < 20; ++t) {
        const Vector x = vec2(rng.normal(), rng.normal());
        const Vector z = vec2(rng.normal(), rng.normal());
        const Vector shift = vec2(rng.normal(), rng.normal());
        const double v = eval_base(k, x, z);
        CHECK(v == doctest::Approx(eval_base(k, x + shift, z + shift)));
        CHECK(v <= 1.0);
        CHECK(v > 0.0);
    }
}

TEST_SUITE_END();
