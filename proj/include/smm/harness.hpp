#pragma once

#include "smm/level2_kernels.hpp"
#include "smm/measures.hpp"
#include "smm/smm.hpp"
#include "smm/solver.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace smm {

// Synthetic benchmark: two classes of Gaussian distributions whose means
// are normally distributed and whose covariances are Wishart draws, with
// cross-validated kernel/C selection and repeated train/test evaluation.

struct SyntheticTaskSpec {
    Index dim = 10;
    Vector mean_pos;        // default: all ones
    Vector mean_neg;        // default: all twos
    Matrix mean_cov;        // default: 0.5 * I
    Matrix wishart_scale_pos;  // default: 0.6 * I
    Matrix wishart_scale_neg;  // default: 1.2 * I
    int wishart_df = 10;
    Index train_per_class = 100;
    Index test_per_class = 50;
    std::uint64_t seed = 42;

    static SyntheticTaskSpec desk_default() {
        SyntheticTaskSpec s;
        s.mean_pos = Vector::Constant(s.dim, 1.0);
        s.mean_neg = Vector::Constant(s.dim, 2.0);
        s.mean_cov = 0.5 * Matrix::Identity(s.dim, s.dim);
        s.wishart_scale_pos = 0.6 * Matrix::Identity(s.dim, s.dim);
        s.wishart_scale_neg = 1.2 * Matrix::Identity(s.dim, s.dim);
        return s;
    }

    void validate() const {
        if (dim < 1) throw std::invalid_argument("SyntheticTaskSpec: dim must be >= 1");
        if (mean_pos.size() != dim || mean_neg.size() != dim)
            throw DimensionMismatch("SyntheticTaskSpec: class mean dimension");
        if (train_per_class < 1 || test_per_class < 1)
            throw std::invalid_argument("SyntheticTaskSpec: counts must be >= 1");
        if (wishart_df < dim)
            throw std::invalid_argument("SyntheticTaskSpec: Wishart df must be >= dim");
    }
};

// Bartlett construction: W = L A A^T L^T with L = chol(scale), A lower
// triangular, chi(df-i+1) diagonal and standard-normal subdiagonal.
inline Matrix sample_wishart(const Matrix& scale, int df, Rng& rng) {
    const Index d = scale.rows();
    if (scale.cols() != d) throw DimensionMismatch("sample_wishart: scale not square");
    if (df < d) throw std::invalid_argument("sample_wishart: df must be >= dim");
    Matrix chol;
    try {
        chol = cholesky_with_jitter(0.5 * (scale + scale.transpose()));
    } catch (const NotPSD&) {
        throw NotPSD("sample_wishart: scale not PSD");
    }
    Matrix a = Matrix::Zero(d, d);
    for (Index i = 0; i < d; ++i) {
        for (Index j = 0; j < i; ++j) a(i, j) = rng.normal();
        // chi^2 with integer dof df-i as a sum of squared normals
        const int dof = df - static_cast<int>(i);
        double chi2 = 0.0;
        for (int t = 0; t < dof; ++t) {
            const double z = rng.normal();
            chi2 += z * z;
        }
        a(i, i) = std::sqrt(chi2);
    }
    Matrix la = chol * a;
    Matrix w = la * la.transpose();
    return 0.5 * (w + w.transpose());
}

inline std::pair<LabeledMeasureSet, LabeledMeasureSet> generate_task(const SyntheticTaskSpec& spec,
                                                                     Rng& rng) {
    spec.validate();
    const Matrix mean_chol = cholesky_with_jitter(spec.mean_cov);
    auto draw_class = [&](const Vector& center, const Matrix& wishart_scale, Index count,
                          int label, LabeledMeasureSet& out) {
        for (Index i = 0; i < count; ++i) {
            Vector z(spec.dim);
            for (Index j = 0; j < spec.dim; ++j) z[j] = rng.normal();
            const Vector mean = center + mean_chol * z;
            const Matrix cov = sample_wishart(wishart_scale, spec.wishart_df, rng);
            out.distributions.push_back(Distribution::gaussian(mean, cov));
            out.labels.push_back(label);
        }
    };
    LabeledMeasureSet train, test;
    draw_class(spec.mean_pos, spec.wishart_scale_pos, spec.train_per_class, +1, train);
    draw_class(spec.mean_neg, spec.wishart_scale_neg, spec.train_per_class, -1, train);
    draw_class(spec.mean_pos, spec.wishart_scale_pos, spec.test_per_class, +1, test);
    draw_class(spec.mean_neg, spec.wishart_scale_neg, spec.test_per_class, -1, test);
    return {std::move(train), std::move(test)};
}

inline std::pair<LabeledMeasureSet, LabeledMeasureSet> generate_task(
    const SyntheticTaskSpec& spec) {
    Rng rng(spec.seed);
    return generate_task(spec, rng);
}

// ---- kernel combinations ---------------------------------------------------

enum class EmbKind { Lin, Poly2, Poly3, Rbf, Nrbf };
enum class L2Kind { Lin, Poly, Rbf };

struct KernelCombo {
    EmbKind emb = EmbKind::Rbf;
    L2Kind l2 = L2Kind::Rbf;
};

inline std::string emb_kind_name(EmbKind k) {
    switch (k) {
        case EmbKind::Lin: return "LIN";
        case EmbKind::Poly2: return "POLY2";
        case EmbKind::Poly3: return "POLY3";
        case EmbKind::Rbf: return "RBF";
        case EmbKind::Nrbf: return "NRBF";
    }
    return "?";
}

inline std::string l2_kind_name(L2Kind k) {
    switch (k) {
        case L2Kind::Lin: return "LIN";
        case L2Kind::Poly: return "POLY";
        case L2Kind::Rbf: return "RBF";
    }
    return "?";
}

inline std::string combo_name(const KernelCombo& c) {
    return emb_kind_name(c.emb) + "-" + l2_kind_name(c.l2);
}

inline KernelCombo parse_combo(const std::string& name) {
    const auto dash = name.find('-');
    if (dash == std::string::npos) throw ParseError("combo: expected EMB-L2, got " + name);
    const std::string e = name.substr(0, dash);
    const std::string l = name.substr(dash + 1);
    KernelCombo c;
    if (e == "LIN") c.emb = EmbKind::Lin;
    else if (e == "POLY2") c.emb = EmbKind::Poly2;
    else if (e == "POLY3") c.emb = EmbKind::Poly3;
    else if (e == "RBF") c.emb = EmbKind::Rbf;
    else if (e == "NRBF" || e == "URBF") c.emb = EmbKind::Nrbf;
    else throw ParseError("combo: unknown embedding kernel " + e);
    if (l == "LIN") c.l2 = L2Kind::Lin;
    else if (l == "POLY") c.l2 = L2Kind::Poly;
    else if (l == "RBF") c.l2 = L2Kind::Rbf;
    else throw ParseError("combo: unknown level-2 kernel " + l);
    return c;
}

// Embedding kernel for a combo; `param` is gamma for (N)RBF, the degree
// for POLY-style kinds with a free degree, and ignored for LIN.
inline EmbeddingKernel embedding_for(EmbKind kind, double param) {
    switch (kind) {
        case EmbKind::Lin: return EmbeddingKernel::linear();
        case EmbKind::Poly2: return EmbeddingKernel::polynomial(2);
        case EmbKind::Poly3: return EmbeddingKernel::polynomial(3);
        case EmbKind::Rbf: return EmbeddingKernel::rbf(param);
        case EmbKind::Nrbf: return EmbeddingKernel::rbf(param, /*normalized=*/true);
    }
    throw std::logic_error("embedding_for");
}

inline Level2Kernel level2_for(L2Kind kind, double param) {
    switch (kind) {
        case L2Kind::Lin: return Level2Kernel::linear();
        case L2Kind::Poly: return Level2Kernel::polynomial(static_cast<int>(param));
        case L2Kind::Rbf: return Level2Kernel::rbf(param);
    }
    throw std::logic_error("level2_for");
}

// ---- cross-validation ------------------------------------------------------

struct CVGrid {
    std::vector<double> C_values;
    std::vector<double> gamma_values;     // (N)RBF embedding bandwidths
    std::vector<int> degree_values;       // free-degree polynomial embeddings
    std::vector<double> l2_gamma_values;  // level-2 RBF bandwidths
    std::vector<int> l2_degree_values;    // level-2 polynomial degrees
    int folds = 10;

    // Minutes-scale defaults; trimmed relative to the full benchmark grid.
    static CVGrid desk_default() {
        CVGrid g;
        g.C_values = {0.125, 0.5, 2.0, 8.0, 32.0, 128.0};
        g.gamma_values = {1e-3, 1e-2, 1e-1, 1.0, 10.0, 100.0};
        g.degree_values = {2, 3, 4};
        g.l2_gamma_values = {1e-2, 1e-1, 1.0, 10.0};
        g.l2_degree_values = {2, 3, 4};
        return g;
    }

    static CVGrid full_grid() {
        CVGrid g;
        for (int e = -3; e <= 7; ++e) g.C_values.push_back(std::pow(2.0, e));
        for (int e = -3; e <= 2; ++e) g.gamma_values.push_back(std::pow(10.0, e));
        g.degree_values = {2, 3, 4, 5, 6};
        for (int e = -3; e <= 2; ++e) g.l2_gamma_values.push_back(std::pow(10.0, e));
        g.l2_degree_values = {2, 3, 4, 5, 6};
        return g;
    }

    void validate() const {
        if (C_values.empty()) throw std::invalid_argument("CVGrid: empty C list");
        if (folds < 2) throw std::invalid_argument("CVGrid: folds must be >= 2");
    }
};

struct ChosenParams {
    double C = 1.0;
    double emb_param = 0.0;  // 0 when the embedding kernel has no free parameter
    double l2_param = 0.0;   // 0 when the level-2 kernel has no free parameter
    double cv_accuracy = 0.0;
};

namespace detail {

inline std::vector<double> emb_param_list(EmbKind kind, const CVGrid& grid) {
    if (kind == EmbKind::Rbf || kind == EmbKind::Nrbf) return grid.gamma_values;
    return {0.0};  // LIN / POLY2 / POLY3 have fixed parameters
}

inline std::vector<double> l2_param_list(L2Kind kind, const CVGrid& grid) {
    switch (kind) {
        case L2Kind::Lin: return {0.0};
        case L2Kind::Poly: {
            std::vector<double> out;
            for (int d : grid.l2_degree_values) out.push_back(static_cast<double>(d));
            return out;
        }
        case L2Kind::Rbf: return grid.l2_gamma_values;
    }
    return {0.0};
}

// Level-1 Gram with the diagonal correction off, as level-2 inputs require.
inline Matrix level1_gram_nocorr(const EmbeddingKernel& k, const std::vector<Distribution>& dists) {
    ExpectedKernelConfig cfg(k, /*diag_corr=*/false);
    return gram(cfg, dists).values;
}

// Deterministic stratified fold assignment: per-class shuffle, then
// round-robin. Every example lands in exactly one fold.
inline std::vector<int> stratified_folds(const std::vector<int>& labels, int folds, Rng& rng) {
    std::vector<Index> pos, neg;
    for (std::size_t i = 0; i < labels.size(); ++i)
        (labels[i] > 0 ? pos : neg).push_back(static_cast<Index>(i));
    auto shuffle = [&rng](std::vector<Index>& idx) {
        for (std::size_t i = idx.size(); i > 1; --i)
            std::swap(idx[i - 1], idx[rng.uniform_index(i)]);
    };
    shuffle(pos);
    shuffle(neg);
    std::vector<int> fold(labels.size(), 0);
    int next = 0;
    for (Index i : pos) fold[static_cast<std::size_t>(i)] = next++ % folds;
    next = 0;
    for (Index i : neg) fold[static_cast<std::size_t>(i)] = next++ % folds;
    return fold;
}

// Train on a sub-Gram and score held-out rows.
inline double fold_accuracy(const Matrix& k2full, const std::vector<int>& labels,
                            const std::vector<Index>& train_idx,
                            const std::vector<Index>& val_idx, double C, double tol,
                            std::uint64_t seed) {
    const Index mt = static_cast<Index>(train_idx.size());
    Matrix sub(mt, mt);
    std::vector<int> sub_labels(train_idx.size());
    for (Index a = 0; a < mt; ++a) {
        sub_labels[static_cast<std::size_t>(a)] = labels[static_cast<std::size_t>(train_idx[a])];
        for (Index b = 0; b < mt; ++b)
            sub(a, b) = k2full(train_idx[static_cast<std::size_t>(a)],
                               train_idx[static_cast<std::size_t>(b)]);
    }
    SolverParams params;
    params.C = C;
    params.tol = tol;
    params.seed = seed;
    const SmoResult sol = smo_solve(sub, sub_labels, params);
    Index correct = 0;
    for (Index v : val_idx) {
        double f = sol.bias;
        for (Index a = 0; a < mt; ++a)
            f += sol.alphas[a] * sub_labels[static_cast<std::size_t>(a)] *
                 k2full(v, train_idx[static_cast<std::size_t>(a)]);
        const int pred = f >= 0.0 ? 1 : -1;
        if (pred == labels[static_cast<std::size_t>(v)]) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(val_idx.size());
}

}  // namespace detail

inline std::pair<ChosenParams, double> run_cv(const LabeledMeasureSet& data, const CVGrid& grid,
                                              const KernelCombo& combo, Rng& rng,
                                              double tol = 1e-3) {
    data.validate();
    grid.validate();
    Index pos = 0, neg = 0;
    for (int y : data.labels) (y > 0 ? pos : neg)++;
    if (grid.folds > pos || grid.folds > neg)
        throw std::invalid_argument("run_cv: more folds than examples in a class");

    const std::vector<int> fold = detail::stratified_folds(data.labels, grid.folds, rng);
    std::vector<std::vector<Index>> train_sets(static_cast<std::size_t>(grid.folds));
    std::vector<std::vector<Index>> val_sets(static_cast<std::size_t>(grid.folds));
    for (Index i = 0; i < data.size(); ++i)
        for (int f = 0; f < grid.folds; ++f)
            (fold[static_cast<std::size_t>(i)] == f ? val_sets : train_sets)[static_cast<std::size_t>(f)]
                .push_back(i);

    struct Result {
        double acc;
        double C, emb_param, l2_param;
    };
    std::vector<Result> results;

    const auto emb_params = detail::emb_param_list(combo.emb, grid);
    const auto l2_params = detail::l2_param_list(combo.l2, grid);
    for (double ep : emb_params) {
        const Matrix k1 = detail::level1_gram_nocorr(embedding_for(combo.emb, ep),
                                                     data.distributions);
        for (double lp : l2_params) {
            const Matrix k2 = level2_apply(level2_for(combo.l2, lp), k1);
            for (double C : grid.C_values) {
                double acc = 0.0;
                for (int f = 0; f < grid.folds; ++f)
                    acc += detail::fold_accuracy(k2, data.labels,
                                                 train_sets[static_cast<std::size_t>(f)],
                                                 val_sets[static_cast<std::size_t>(f)], C, tol,
                                                 /*seed=*/0x5eedULL + static_cast<std::uint64_t>(f));
                results.push_back({acc / grid.folds, C, ep, lp});
            }
        }
    }

    // argmax; ties broken by smallest C, then smallest embedding
    // parameter, then smallest level-2 parameter
    std::stable_sort(results.begin(), results.end(), [](const Result& a, const Result& b) {
        if (a.C != b.C) return a.C < b.C;
        if (a.emb_param != b.emb_param) return a.emb_param < b.emb_param;
        return a.l2_param < b.l2_param;
    });
    const Result* best = &results.front();
    for (const auto& r : results)
        if (r.acc > best->acc) best = &r;
    return {ChosenParams{best->C, best->emb_param, best->l2_param, best->acc}, best->acc};
}

// ---- experiment orchestration ----------------------------------------------

struct ComboResult {
    std::string name;
    std::vector<double> accuracies;  // per repetition
    std::vector<ChosenParams> chosen;
    double mean = 0.0;
    double stddev = 0.0;
};

struct BaselineOptions {
    bool enabled = true;
    Index virtual_per_dist = 10;   // ASVM virtual sample count
    bool virtual_at_mean = false;  // draw the single virtual sample at the mean
};

struct ExperimentReport {
    std::uint64_t seed = 0;
    int repetitions = 0;
    std::vector<ComboResult> combos;
    std::vector<ComboResult> baselines;  // "SVM" (on means) and "ASVM"
};

namespace detail {

inline void finalize(ComboResult& r) {
    const double n = static_cast<double>(r.accuracies.size());
    r.mean = std::accumulate(r.accuracies.begin(), r.accuracies.end(), 0.0) / n;
    double ss = 0.0;
    for (double a : r.accuracies) ss += (a - r.mean) * (a - r.mean);
    r.stddev = n > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
}

// Final train at chosen params and accuracy on the test Gram rows.
inline double train_test_accuracy(const KernelCombo& combo, const ChosenParams& cp,
                                  const LabeledMeasureSet& train_set,
                                  const LabeledMeasureSet& test_set, double tol) {
    const EmbeddingKernel emb = embedding_for(combo.emb, cp.emb_param);
    const Level2Kernel l2 = level2_for(combo.l2, cp.l2_param);
    const Matrix k1 = level1_gram_nocorr(emb, train_set.distributions);
    const Matrix k2 = level2_apply(l2, k1);
    SolverParams params;
    params.C = cp.C;
    params.tol = tol;
    params.seed = 0x7e57ULL;
    const SmoResult sol = smo_solve(k2, train_set.labels, params);

    const ExpectedKernelConfig cfg(emb, false);
    Vector self_train(train_set.size());
    for (Index i = 0; i < train_set.size(); ++i) self_train[i] = k1(i, i);
    Index correct = 0;
    for (Index t = 0; t < test_set.size(); ++t) {
        const auto& q = test_set.distributions[static_cast<std::size_t>(t)];
        const double kqq = expected_kernel(cfg, q, q, false);
        double f = sol.bias;
        for (Index i = 0; i < train_set.size(); ++i) {
            if (sol.alphas[i] <= 0.0) continue;
            const double kpq =
                expected_kernel(cfg, train_set.distributions[static_cast<std::size_t>(i)], q, false);
            f += sol.alphas[i] * train_set.labels[static_cast<std::size_t>(i)] *
                 level2_eval(l2, kpq, self_train[i], kqq);
        }
        if ((f >= 0.0 ? 1 : -1) == test_set.labels[static_cast<std::size_t>(t)]) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(test_set.size());
}

inline LabeledMeasureSet diracs_at_means(const LabeledMeasureSet& data) {
    LabeledMeasureSet out;
    for (std::size_t i = 0; i < data.distributions.size(); ++i) {
        out.distributions.push_back(Distribution::dirac(moments(data.distributions[i]).mean));
        out.labels.push_back(data.labels[i]);
    }
    return out;
}

}  // namespace detail

inline ExperimentReport run_experiment(const SyntheticTaskSpec& spec,
                                       const std::vector<KernelCombo>& combos, int repetitions,
                                       const CVGrid& grid, std::uint64_t root_seed,
                                       const BaselineOptions& baseline_opts = BaselineOptions{},
                                       double tol = 1e-3) {
    if (repetitions < 1) throw std::invalid_argument("run_experiment: repetitions must be >= 1");
    ExperimentReport report;
    report.seed = root_seed;
    report.repetitions = repetitions;
    for (const auto& c : combos) report.combos.push_back(ComboResult{combo_name(c), {}, {}, 0, 0});
    if (baseline_opts.enabled) {
        report.baselines.push_back(ComboResult{"SVM", {}, {}, 0, 0});
        report.baselines.push_back(ComboResult{"ASVM", {}, {}, 0, 0});
    }

    const Rng root(root_seed);
    for (int rep = 0; rep < repetitions; ++rep) {
        Rng rep_rng = root.substream(static_cast<std::uint64_t>(rep));
        Rng task_rng = rep_rng.substream(0);
        Rng cv_rng = rep_rng.substream(1);
        Rng base_rng = rep_rng.substream(2);
        const auto [train_set, test_set] = generate_task(spec, task_rng);

        for (std::size_t c = 0; c < combos.size(); ++c) {
            const auto [best, cv_acc] = run_cv(train_set, grid, combos[c], cv_rng, tol);
            const double acc =
                detail::train_test_accuracy(combos[c], best, train_set, test_set, tol);
            report.combos[c].accuracies.push_back(acc);
            report.combos[c].chosen.push_back(best);
        }

        if (baseline_opts.enabled) {
            // SVM on the distribution means, RBF kernel, its own CV
            const LabeledMeasureSet train_means = detail::diracs_at_means(train_set);
            const LabeledMeasureSet test_means = detail::diracs_at_means(test_set);
            const KernelCombo svm_combo{EmbKind::Rbf, L2Kind::Lin};
            const auto [svm_best, svm_cv] = run_cv(train_means, grid, svm_combo, cv_rng, tol);
            report.baselines[0].accuracies.push_back(
                detail::train_test_accuracy(svm_combo, svm_best, train_means, test_means, tol));
            report.baselines[0].chosen.push_back(svm_best);

            // ASVM: pooled virtual samples, reusing the SVM baseline's params
            LabeledMeasureSet pooled;
            for (std::size_t i = 0; i < train_set.distributions.size(); ++i) {
                if (baseline_opts.virtual_at_mean) {
                    pooled.distributions.push_back(
                        Distribution::dirac(moments(train_set.distributions[i]).mean));
                    pooled.labels.push_back(train_set.labels[i]);
                } else {
                    const Matrix draws = sample(train_set.distributions[i],
                                                baseline_opts.virtual_per_dist, base_rng);
                    for (Index r = 0; r < draws.rows(); ++r) {
                        pooled.distributions.push_back(
                            Distribution::dirac(draws.row(r).transpose()));
                        pooled.labels.push_back(train_set.labels[i]);
                    }
                }
            }
            report.baselines[1].accuracies.push_back(
                detail::train_test_accuracy(svm_combo, svm_best, pooled, test_means, tol));
            report.baselines[1].chosen.push_back(svm_best);
        }
    }
    for (auto& c : report.combos) detail::finalize(c);
    for (auto& b : report.baselines) detail::finalize(b);
    return report;
}

// Decision values on a regular lattice, for plotting 2-D boundaries.
struct BoundaryGrid {
    Vector xs, ys;
    Matrix values;  // values(i,j) = decision at (xs[j], ys[i])
};

inline BoundaryGrid boundary_grid(const TrainedSMM& model, double lo, double hi, Index steps) {
    if (steps < 2) throw std::invalid_argument("boundary_grid: steps must be >= 2");
    BoundaryGrid g;
    g.xs = Vector::LinSpaced(steps, lo, hi);
    g.ys = Vector::LinSpaced(steps, lo, hi);
    g.values.resize(steps, steps);
    Vector p(2);
    for (Index i = 0; i < steps; ++i)
        for (Index j = 0; j < steps; ++j) {
            p << g.xs[j], g.ys[i];
            g.values(i, j) = decision(model, Distribution::dirac(p));
        }
    return g;
}

}  // namespace smm
