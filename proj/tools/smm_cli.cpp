#include "smm/flex_svm.hpp"
#include "smm/harness.hpp"
#include "smm/io.hpp"
#include "smm/verification.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <iostream>
#include <sstream>

namespace {

using namespace smm;

double elapsed_s(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::vector<KernelCombo> parse_combo_list(const std::string& s) {
    std::vector<KernelCombo> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(parse_combo(item));
    if (out.empty()) throw ParseError("no kernel combos given");
    return out;
}

int cmd_gen(const std::string& spec_path, const std::string& out_path) {
    SyntheticTaskSpec spec = spec_path.empty() ? SyntheticTaskSpec::desk_default()
                                               : task_spec_from_json(load_json(spec_path));
    const auto [train_set, test_set] = generate_task(spec);
    json out;
    out["spec"] = to_json(spec);
    out["train"] = to_json(train_set);
    out["test"] = to_json(test_set);
    save_json(out_path, out);
    std::cerr << "wrote " << out_path << " (" << train_set.size() << " train, "
              << test_set.size() << " test)\n";
    return 0;
}

int cmd_gram(const std::string& kernel_spec, const std::string& in_path,
             const std::string& out_path, const std::string& prov_path, bool no_correction) {
    ExpectedKernelConfig cfg(parse_kernel(kernel_spec));
    if (no_correction) cfg.diagonal_correction = false;
    const auto dists = distribution_list_from_json(load_json(in_path));
    const GramMatrix g = gram(cfg, dists);
    save_text(out_path, matrix_to_csv(g.values));
    if (!prov_path.empty()) save_json(prov_path, provenance_to_json(g));
    std::cerr << "wrote " << g.values.rows() << "x" << g.values.cols() << " Gram to " << out_path
              << "\n";
    return 0;
}

int cmd_train(const std::string& data_path, const std::string& kernel_spec,
              const std::string& level2_spec, double C, double tol, std::uint64_t seed,
              const std::string& out_path) {
    const json data_json = load_json(data_path);
    const LabeledMeasureSet data =
        labeled_set_from_json(data_json.contains("train") ? data_json.at("train") : data_json);
    const ExpectedKernelConfig cfg(parse_kernel(kernel_spec));
    std::optional<Level2Kernel> l2;
    if (!level2_spec.empty()) l2 = parse_level2(level2_spec);
    SolverParams params;
    params.C = C;
    params.tol = tol;
    params.seed = seed;
    const auto t0 = std::chrono::steady_clock::now();
    const TrainedSMM model = train(data, cfg, l2, params);
    std::cerr << "trained in " << elapsed_s(t0) << " s, " << model.support.size()
              << " support distributions, objective " << model.meta.objective << "\n";
    save_json(out_path, to_json(model));
    return 0;
}

int cmd_predict(const std::string& model_path, const std::string& in_path,
                const std::string& out_path) {
    const TrainedSMM model = model_from_json(load_json(model_path));
    const json in_json = load_json(in_path);
    const auto dists = distribution_list_from_json(
        in_json.contains("test") ? in_json.at("test") : in_json);
    std::ostringstream os;
    os.precision(17);
    os << "index,decision,label\n";
    for (std::size_t i = 0; i < dists.size(); ++i) {
        const double f = decision(model, dists[i]);
        os << i << ',' << f << ',' << (f >= 0.0 ? 1 : -1) << '\n';
    }
    if (out_path.empty())
        std::cout << os.str();
    else
        save_text(out_path, os.str());
    return 0;
}

int cmd_cv(const std::string& data_path, const std::string& grid_path, const std::string& combo,
           std::uint64_t seed) {
    const json data_json = load_json(data_path);
    const LabeledMeasureSet data =
        labeled_set_from_json(data_json.contains("train") ? data_json.at("train") : data_json);
    const CVGrid grid =
        grid_path.empty() ? CVGrid::desk_default() : cv_grid_from_json(load_json(grid_path));
    Rng rng(seed);
    const auto [best, acc] = run_cv(data, grid, parse_combo(combo), rng);
    json out = chosen_to_json(best);
    out["combo"] = combo;
    std::cout << out.dump(2) << "\n";
    return 0;
}

int cmd_experiment(const std::string& spec_path, const std::string& grid_path,
                   const std::string& combos_str, int reps, std::uint64_t seed,
                   const std::string& out_path, const std::string& csv_path,
                   const std::string& boundary_path, bool no_baselines, Index virtual_n) {
    const SyntheticTaskSpec spec = spec_path.empty() ? SyntheticTaskSpec::desk_default()
                                                     : task_spec_from_json(load_json(spec_path));
    const CVGrid grid =
        grid_path.empty() ? CVGrid::desk_default() : cv_grid_from_json(load_json(grid_path));
    const auto combos = parse_combo_list(combos_str);
    BaselineOptions baselines;
    baselines.enabled = !no_baselines;
    baselines.virtual_per_dist = virtual_n;

    const auto t0 = std::chrono::steady_clock::now();
    const ExperimentReport report = run_experiment(spec, combos, reps, grid, seed, baselines);
    std::cerr << "experiment finished in " << elapsed_s(t0) << " s\n";
    for (const auto& c : report.combos)
        std::cerr << "  " << c.name << ": " << 100.0 * c.mean << " +- " << 100.0 * c.stddev
                  << " %\n";
    for (const auto& b : report.baselines)
        std::cerr << "  " << b.name << ": " << 100.0 * b.mean << " +- " << 100.0 * b.stddev
                  << " %\n";

    save_json(out_path, to_json(report));
    if (!csv_path.empty()) save_text(csv_path, report_to_csv(report));

    if (!boundary_path.empty()) {
        if (spec.dim != 2)
            throw std::invalid_argument("--boundary requires a 2-D task spec");
        Rng rng(seed);
        Rng task_rng = rng.substream(0).substream(0);
        const auto [train_set, test_set] = generate_task(spec, task_rng);
        const auto& chosen = report.combos.front().chosen.front();
        const KernelCombo combo = combos.front();
        SolverParams params;
        params.C = chosen.C;
        const ExpectedKernelConfig cfg(embedding_for(combo.emb, chosen.emb_param), false);
        const TrainedSMM model =
            train(train_set, cfg, level2_for(combo.l2, chosen.l2_param), params);
        double lo = 1e300, hi = -1e300;
        for (const auto& p : train_set.distributions) {
            const Vector m = moments(p).mean;
            lo = std::min(lo, m.minCoeff());
            hi = std::max(hi, m.maxCoeff());
        }
        const double pad = 0.25 * (hi - lo);
        save_text(boundary_path, boundary_to_csv(boundary_grid(model, lo - pad, hi + pad, 80)));
    }
    return 0;
}

int cmd_verify_equivalence(int n, Index dim, double gamma, double sigma_max, std::uint64_t seed,
                           const std::string& out_path) {
    Rng rng(seed);
    Matrix points(n, dim);
    std::vector<int> labels;
    std::vector<double> sigma2;
    for (int i = 0; i < n; ++i) {
        for (Index j = 0; j < dim; ++j) points(i, j) = 2.0 * rng.normal();
        labels.push_back(i % 2 == 0 ? 1 : -1);
        sigma2.push_back(rng.uniform(0.0, sigma_max));
    }
    Matrix probes(25, dim);
    for (Index i = 0; i < probes.rows(); ++i)
        for (Index j = 0; j < dim; ++j) probes(i, j) = 3.0 * rng.normal();
    SolverParams params;
    params.C = 10.0;
    params.seed = seed;
    const auto rep = verify_equivalence(points, labels, SmoothingFamily::isotropic(sigma2, dim),
                                        EmbeddingKernel::rbf(gamma), params, probes);
    json out;
    out["max_gram_diff"] = rep.max_gram_diff;
    out["max_decision_diff"] = rep.max_decision_diff;
    out["smm_objective"] = rep.smm_objective;
    out["svm_objective"] = rep.svm_objective;
    out["pass"] = rep.pass;
    if (out_path.empty())
        std::cout << out.dump(2) << "\n";
    else
        save_json(out_path, out);
    return rep.pass ? 0 : 1;
}

int cmd_verify_bound(int trials, Index samples, std::uint64_t seed, const std::string& out_path) {
    Rng rng(seed);
    // small random training tasks with an RBF level-1 linear SMM
    int holds = 0;
    double worst_margin = 1e300;
    json reports = json::array();
    for (int t = 0; t < trials; ++t) {
        Rng trial_rng = rng.substream(static_cast<std::uint64_t>(t));
        const Index dim = 2;
        LabeledMeasureSet data;
        for (int i = 0; i < 16; ++i) {
            Vector mean(dim);
            const int label = i % 2 == 0 ? 1 : -1;
            for (Index j = 0; j < dim; ++j) mean[j] = label * 1.5 + trial_rng.normal();
            Matrix a(dim, dim);
            for (Index r = 0; r < dim; ++r)
                for (Index c = 0; c < dim; ++c) a(r, c) = 0.5 * trial_rng.normal();
            data.distributions.push_back(Distribution::gaussian(mean, a * a.transpose()));
            data.labels.push_back(label);
        }
        SolverParams params;
        params.C = 10.0;
        params.seed = seed;
        const ExpectedKernelConfig cfg(EmbeddingKernel::rbf(0.5));
        const TrainedSMM model = train(data, cfg, std::nullopt, params);

        Vector mean(dim);
        for (Index j = 0; j < dim; ++j) mean[j] = trial_rng.normal();
        Matrix a(dim, dim);
        for (Index r = 0; r < dim; ++r)
            for (Index c = 0; c < dim; ++c) a(r, c) = trial_rng.normal();
        const Distribution p = Distribution::gaussian(mean, a * a.transpose());
        const int y = trial_rng.uniform() < 0.5 ? 1 : -1;
        const DeviationReport rep = risk_deviation_check(p, y, model, samples, trial_rng);
        if (rep.holds) ++holds;
        worst_margin = std::min(worst_margin, rep.rhs + 3.0 * rep.mc_stderr - rep.lhs);
        reports.push_back(json{{"lhs", rep.lhs},
                               {"rhs", rep.rhs},
                               {"stderr", rep.mc_stderr},
                               {"holds", rep.holds}});
    }
    json out;
    out["trials"] = trials;
    out["holds"] = holds;
    out["worst_margin"] = worst_margin;
    out["reports"] = std::move(reports);
    if (out_path.empty())
        std::cout << out.dump(2) << "\n";
    else
        save_json(out_path, out);
    return holds == trials ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"support measure machines: training, prediction, and verification"};
    app.require_subcommand(1);

    std::string spec_path, out_path, data_path, kernel_spec, level2_spec, model_path, in_path;
    std::string grid_path, combo = "RBF-RBF", combos_str = "RBF-RBF", csv_path, boundary_path;
    std::string prov_path;
    double C = 1.0, tol = 1e-3, gamma = 1.0, sigma_max = 0.5;
    std::uint64_t seed = 42;
    int reps = 10, n_points = 30, trials = 200;
    Index samples = 2000, virtual_n = 10, dim = 2;
    bool no_correction = false, no_baselines = false;

    auto* gen = app.add_subcommand("gen", "generate a synthetic task");
    gen->add_option("--spec", spec_path, "task spec JSON (defaults to the desk-scale task)");
    gen->add_option("--out", out_path, "output JSON path")->required();

    auto* gram_cmd = app.add_subcommand("gram", "expected-kernel Gram matrix");
    gram_cmd->add_option("--kernel", kernel_spec, "embedding kernel spec")->required();
    gram_cmd->add_option("--in", in_path, "distribution list JSON")->required();
    gram_cmd->add_option("--out", out_path, "CSV output path")->required();
    gram_cmd->add_option("--provenance", prov_path, "JSON provenance sidecar path");
    gram_cmd->add_flag("--no-correction", no_correction, "disable the linear diagonal correction");

    auto* train_cmd = app.add_subcommand("train", "train an SMM");
    train_cmd->add_option("--data", data_path, "labeled measure set JSON")->required();
    train_cmd->add_option("--kernel", kernel_spec, "embedding kernel spec")->required();
    train_cmd->add_option("--level2", level2_spec, "level-2 kernel spec (optional)");
    train_cmd->add_option("--C", C, "box constraint");
    train_cmd->add_option("--tol", tol, "KKT tolerance");
    train_cmd->add_option("--seed", seed, "solver seed");
    train_cmd->add_option("--out", out_path, "model JSON path")->required();

    auto* predict_cmd = app.add_subcommand("predict", "score distributions with a model");
    predict_cmd->add_option("--model", model_path, "model JSON")->required();
    predict_cmd->add_option("--in", in_path, "distribution list JSON")->required();
    predict_cmd->add_option("--out", out_path, "CSV output path (stdout if omitted)");

    auto* cv_cmd = app.add_subcommand("cv", "cross-validated parameter selection");
    cv_cmd->add_option("--data", data_path, "labeled measure set JSON")->required();
    cv_cmd->add_option("--grid", grid_path, "grid JSON (defaults to the desk grid)");
    cv_cmd->add_option("--combo", combo, "kernel combo, e.g. RBF-RBF");
    cv_cmd->add_option("--seed", seed, "fold shuffle seed");

    auto* exp_cmd = app.add_subcommand("experiment", "repeated synthetic benchmark");
    exp_cmd->add_option("--spec", spec_path, "task spec JSON");
    exp_cmd->add_option("--grid", grid_path, "CV grid JSON");
    exp_cmd->add_option("--combos", combos_str, "comma-separated kernel combos");
    exp_cmd->add_option("--reps", reps, "repetitions");
    exp_cmd->add_option("--seed", seed, "root seed");
    exp_cmd->add_option("--out", out_path, "report JSON path")->required();
    exp_cmd->add_option("--csv", csv_path, "report CSV path");
    exp_cmd->add_option("--boundary", boundary_path, "decision lattice CSV (2-D tasks)");
    exp_cmd->add_flag("--no-baselines", no_baselines, "skip SVM/ASVM baselines");
    exp_cmd->add_option("--virtual", virtual_n, "ASVM virtual samples per distribution");

    auto* verify = app.add_subcommand("verify", "equivalence and bound checks");
    verify->require_subcommand(1);
    auto* eq = verify->add_subcommand("equivalence", "linear SMM vs Flex-SVM");
    eq->add_option("--n", n_points, "training points");
    eq->add_option("--dim", dim, "input dimension");
    eq->add_option("--gamma", gamma, "RBF bandwidth");
    eq->add_option("--sigma-max", sigma_max, "max smoother variance");
    eq->add_option("--seed", seed, "instance seed");
    eq->add_option("--out", out_path, "report JSON path (stdout if omitted)");
    auto* bound = verify->add_subcommand("bound", "risk-deviation inequality");
    bound->add_option("--trials", trials, "random (P, y, model) triples");
    bound->add_option("--samples", samples, "Monte-Carlo draws per trial");
    bound->add_option("--seed", seed, "root seed");
    bound->add_option("--out", out_path, "report JSON path (stdout if omitted)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (gen->parsed()) return cmd_gen(spec_path, out_path);
        if (gram_cmd->parsed())
            return cmd_gram(kernel_spec, in_path, out_path, prov_path, no_correction);
        if (train_cmd->parsed())
            return cmd_train(data_path, kernel_spec, level2_spec, C, tol, seed, out_path);
        if (predict_cmd->parsed()) return cmd_predict(model_path, in_path, out_path);
        if (cv_cmd->parsed()) return cmd_cv(data_path, grid_path, combo, seed);
        if (exp_cmd->parsed())
            return cmd_experiment(spec_path, grid_path, combos_str, reps, seed, out_path, csv_path,
                                  boundary_path, no_baselines, virtual_n);
        if (eq->parsed())
            return cmd_verify_equivalence(n_points, dim, gamma, sigma_max, seed, out_path);
        if (bound->parsed()) return cmd_verify_bound(trials, samples, seed, out_path);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
