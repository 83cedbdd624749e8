#include "smm/harness.hpp"

#include <doctest.h>

#include <cmath>
#include <set>

using namespace smm;

TEST_SUITE_BEGIN("harness");

TEST_CASE("wishart draws have the df-scaled mean") {
    Matrix scale(3, 3);
    scale << 1.0, 0.3, 0.0, 0.3, 1.0, 0.2, 0.0, 0.2, 0.5;
    const int df = 5;
    Rng rng(7);
    const int n = 10000;
    Matrix acc = Matrix::Zero(3, 3);
    for (int t = 0; t < n; ++t) acc += sample_wishart(scale, df, rng);
    acc /= n;
    for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) {
            // Var(W_ij) = df (V_ij^2 + V_ii V_jj)
            const double sd = std::sqrt(
                df * (scale(i, j) * scale(i, j) + scale(i, i) * scale(j, j)) / n);
            CHECK(std::abs(acc(i, j) - df * scale(i, j)) <= 5.0 * sd);
        }
    }
}

TEST_CASE("one-dimensional wishart reduces to chi-square") {
    Matrix one(1, 1);
    one << 1.0;
    Rng rng(11);
    const int n = 10000, df = 5;
    double mean = 0.0, sq = 0.0;
    for (int t = 0; t < n; ++t) {
        const double w = sample_wishart(one, df, rng)(0, 0);
        mean += w;
        sq += w * w;
    }
    mean /= n;
    // chi-square(5): mean 5, variance 10
    CHECK(std::abs(mean - 5.0) <= 5.0 * std::sqrt(10.0 / n));
    CHECK(std::abs(sq / n - mean * mean - 10.0) <= 1.0);
}

TEST_CASE("wishart validates its inputs") {
    Rng rng(1);
    Matrix neg(2, 2);
    neg << -1.0, 0.0, 0.0, 1.0;
    CHECK_THROWS_AS(sample_wishart(neg, 5, rng), NotPSD);
    CHECK_THROWS(sample_wishart(Matrix::Identity(3, 3), 2, rng));
    CHECK_THROWS_AS(sample_wishart(Matrix::Ones(2, 3), 5, rng), DimensionMismatch);
}

TEST_CASE("generated tasks have the requested shape and are seed-deterministic") {
    SyntheticTaskSpec spec = SyntheticTaskSpec::desk_default();
    spec.dim = 4;
    spec.mean_pos = Vector::Constant(4, 1.0);
    spec.mean_neg = Vector::Constant(4, 2.0);
    spec.mean_cov = 0.5 * Matrix::Identity(4, 4);
    spec.wishart_scale_pos = 0.6 * Matrix::Identity(4, 4);
    spec.wishart_scale_neg = 1.2 * Matrix::Identity(4, 4);
    spec.wishart_df = 6;
    spec.train_per_class = 7;
    spec.test_per_class = 3;
    spec.seed = 77;
    const auto [train_a, test_a] = generate_task(spec);
    const auto [train_b, test_b] = generate_task(spec);
    CHECK(train_a.size() == 14);
    CHECK(test_a.size() == 6);
    Index pos = 0;
    for (int y : train_a.labels) pos += y > 0;
    CHECK(pos == 7);
    for (const auto& p : train_a.distributions) {
        CHECK(p.is_gaussian());
        CHECK(p.dim() == 4);
    }
    for (Index i = 0; i < train_a.size(); ++i) {
        const auto& ga = train_a.distributions[static_cast<std::size_t>(i)].as_gaussian();
        const auto& gb = train_b.distributions[static_cast<std::size_t>(i)].as_gaussian();
        CHECK((ga.mean - gb.mean).cwiseAbs().maxCoeff() == 0.0);
        CHECK((ga.cov - gb.cov).cwiseAbs().maxCoeff() == 0.0);
    }
}

TEST_CASE("task generation rejects bad specs") {
    SyntheticTaskSpec spec = SyntheticTaskSpec::desk_default();
    spec.wishart_df = 5;  // below dim = 10
    CHECK_THROWS(generate_task(spec));
}

TEST_CASE("combo names parse and round-trip") {
    for (const char* name : {"LIN-LIN", "POLY2-RBF", "POLY3-POLY", "RBF-RBF", "NRBF-LIN"}) {
        CHECK(combo_name(parse_combo(name)) == name);
    }
    CHECK(parse_combo("URBF-LIN").emb == EmbKind::Nrbf);  // alternate spelling
    CHECK_THROWS_AS(parse_combo("RBF"), ParseError);
    CHECK_THROWS_AS(parse_combo("FOO-LIN"), ParseError);
    CHECK_THROWS_AS(parse_combo("RBF-FOO"), ParseError);
}

TEST_CASE("stratified folds partition each class evenly") {
    std::vector<int> labels;
    for (int i = 0; i < 23; ++i) labels.push_back(1);
    for (int i = 0; i < 17; ++i) labels.push_back(-1);
    Rng rng(3);
    const auto fold = detail::stratified_folds(labels, 5, rng);
    REQUIRE(fold.size() == labels.size());
    std::vector<int> pos_count(5, 0), neg_count(5, 0);
    for (std::size_t i = 0; i < labels.size(); ++i) {
        REQUIRE(fold[i] >= 0);
        REQUIRE(fold[i] < 5);
        (labels[i] > 0 ? pos_count : neg_count)[static_cast<std::size_t>(fold[i])]++;
    }
    for (int f = 0; f < 5; ++f) {
        CHECK(pos_count[f] >= 23 / 5);
        CHECK(pos_count[f] <= 23 / 5 + 1);
        CHECK(neg_count[f] >= 17 / 5);
        CHECK(neg_count[f] <= 17 / 5 + 1);
    }
}

TEST_CASE("cross-validation on a single-point grid returns that point") {
    SyntheticTaskSpec spec = SyntheticTaskSpec::desk_default();
    spec.dim = 2;
    spec.mean_pos = Vector::Constant(2, 1.0);
    spec.mean_neg = Vector::Constant(2, 3.0);
    spec.mean_cov = 0.2 * Matrix::Identity(2, 2);
    spec.wishart_scale_pos = 0.3 * Matrix::Identity(2, 2);
    spec.wishart_scale_neg = 0.3 * Matrix::Identity(2, 2);
    spec.wishart_df = 4;
    spec.train_per_class = 10;
    spec.test_per_class = 2;
    spec.seed = 5;
    const auto [train_set, test_set] = generate_task(spec);
    CVGrid grid;
    grid.C_values = {2.0};
    grid.gamma_values = {0.5};
    grid.l2_gamma_values = {1.0};
    grid.folds = 5;
    Rng rng(9);
    const auto [best, acc] = run_cv(train_set, grid, parse_combo("RBF-RBF"), rng);
    CHECK(best.C == 2.0);
    CHECK(best.emb_param == 0.5);
    CHECK(best.l2_param == 1.0);
    CHECK(best.cv_accuracy == acc);
    CHECK(acc >= 0.0);
    CHECK(acc <= 1.0);
}

TEST_CASE("cross-validation finds a perfect grid point on a separable task") {
    // classes 10 sigma apart
    LabeledMeasureSet data;
    Rng gen(13);
    for (Index i = 0; i < 20; ++i) {
        const int y = i < 10 ? 1 : -1;
        Vector m(2);
        m << y * 5.0 + 0.3 * gen.normal(), 0.3 * gen.normal();
        data.distributions.push_back(Distribution::gaussian(m, 0.2 * Matrix::Identity(2, 2)));
        data.labels.push_back(y);
    }
    CVGrid grid;
    grid.C_values = {1.0, 10.0};
    grid.gamma_values = {0.1, 1.0};
    grid.l2_gamma_values = {1.0};
    grid.folds = 5;
    Rng rng(17);
    const auto [best, acc] = run_cv(data, grid, parse_combo("RBF-RBF"), rng);
    CHECK(acc == 1.0);
}

TEST_CASE("cv rejects more folds than class members") {
    LabeledMeasureSet data;
    for (Index i = 0; i < 6; ++i) {
        data.distributions.push_back(Distribution::dirac(Vector::Constant(1, double(i))));
        data.labels.push_back(i < 3 ? 1 : -1);
    }
    CVGrid grid;
    grid.C_values = {1.0};
    grid.folds = 4;
    Rng rng(1);
    CHECK_THROWS(run_cv(data, grid, parse_combo("LIN-LIN"), rng));
}

namespace {

SyntheticTaskSpec tiny_spec() {
    SyntheticTaskSpec spec = SyntheticTaskSpec::desk_default();
    spec.dim = 2;
    spec.mean_pos = Vector::Constant(2, 1.0);
    spec.mean_neg = Vector::Constant(2, 3.0);
    spec.mean_cov = 0.3 * Matrix::Identity(2, 2);
    spec.wishart_scale_pos = 0.3 * Matrix::Identity(2, 2);
    spec.wishart_scale_neg = 0.6 * Matrix::Identity(2, 2);
    spec.wishart_df = 4;
    spec.train_per_class = 8;
    spec.test_per_class = 4;
    return spec;
}

CVGrid tiny_grid() {
    CVGrid grid;
    grid.C_values = {1.0, 8.0};
    grid.gamma_values = {0.3};
    grid.l2_gamma_values = {1.0};
    grid.folds = 4;
    return grid;
}

}  // namespace

TEST_CASE("experiments are reproducible and report sane accuracies") {
    const auto spec = tiny_spec();
    const auto grid = tiny_grid();
    const std::vector<KernelCombo> combos = {parse_combo("RBF-RBF"), parse_combo("LIN-LIN")};
    const auto a = run_experiment(spec, combos, 3, grid, 42);
    const auto b = run_experiment(spec, combos, 3, grid, 42);
    REQUIRE(a.combos.size() == 2);
    CHECK(a.repetitions == 3);
    for (std::size_t c = 0; c < a.combos.size(); ++c) {
        REQUIRE(a.combos[c].accuracies.size() == 3);
        for (double acc : a.combos[c].accuracies) {
            CHECK(acc >= 0.0);
            CHECK(acc <= 1.0);
        }
        for (std::size_t r = 0; r < 3; ++r)
            CHECK(a.combos[c].accuracies[r] == b.combos[c].accuracies[r]);
        const double m = a.combos[c].mean;
        CHECK(m >= 0.0);
        CHECK(m <= 1.0);
    }
    REQUIRE(a.baselines.size() == 2);
    CHECK(a.baselines[0].name == "SVM");
    CHECK(a.baselines[1].name == "ASVM");
    for (const auto& bl : a.baselines) REQUIRE(bl.accuracies.size() == 3);
}

TEST_CASE("single mean-placed virtual sample reduces the pooled baseline to means") {
    const auto spec = tiny_spec();
    const auto grid = tiny_grid();
    BaselineOptions opts;
    opts.virtual_at_mean = true;
    const auto rep = run_experiment(spec, {parse_combo("RBF-LIN")}, 2, grid, 7, opts);
    REQUIRE(rep.baselines.size() == 2);
    for (std::size_t r = 0; r < rep.baselines[0].accuracies.size(); ++r)
        CHECK(rep.baselines[0].accuracies[r] == rep.baselines[1].accuracies[r]);
}

TEST_CASE("boundary grid evaluates the decision on the lattice") {
    Rng gen(23);
    LabeledMeasureSet data;
    for (Index i = 0; i < 8; ++i) {
        const int y = i < 4 ? 1 : -1;
        Vector m(2);
        m << y * 2.0 + 0.2 * gen.normal(), 0.2 * gen.normal();
        data.distributions.push_back(Distribution::gaussian(m, 0.1 * Matrix::Identity(2, 2)));
        data.labels.push_back(y);
    }
    const ExpectedKernelConfig cfg(EmbeddingKernel::rbf(0.8), false);
    SolverParams params;
    params.C = 5.0;
    const TrainedSMM model = train(data, cfg, std::nullopt, params);
    const BoundaryGrid g = boundary_grid(model, -3.0, 3.0, 5);
    CHECK(g.xs.size() == 5);
    CHECK(g.values.rows() == 5);
    CHECK(g.xs[0] == -3.0);
    CHECK(g.xs[4] == 3.0);
    Vector p(2);
    p << g.xs[2], g.ys[1];
    CHECK(g.values(1, 2) == decision(model, Distribution::dirac(p)));
    CHECK_THROWS(boundary_grid(model, 0.0, 1.0, 1));
}

TEST_SUITE_END();
