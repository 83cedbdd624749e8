#pragma once

#include "smm/expected_kernels.hpp"
#include "smm/harness.hpp"
#include "smm/level2_kernels.hpp"
#include "smm/measures.hpp"
#include "smm/smm.hpp"

#include <json.hpp>

#include <fstream>
#include <map>
#include <sstream>
#include <string>

namespace smm {

using json = nlohmann::ordered_json;

// ---- Eigen <-> JSON helpers ------------------------------------------------

inline json vector_to_json(const Vector& v) {
    json a = json::array();
    for (Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
    return a;
}

inline json matrix_to_json(const Matrix& m) {
    json rows = json::array();
    for (Index i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
        rows.push_back(std::move(row));
    }
    return rows;
}

inline Vector vector_from_json(const json& a) {
    if (!a.is_array()) throw ParseError("expected a JSON array of numbers");
    Vector v(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) v[static_cast<Index>(i)] = a[i].get<double>();
    return v;
}

inline Matrix matrix_from_json(const json& a) {
    if (!a.is_array() || a.empty()) throw ParseError("expected a JSON array of rows");
    const Index rows = static_cast<Index>(a.size());
    const Index cols = static_cast<Index>(a[0].size());
    Matrix m(rows, cols);
    for (Index i = 0; i < rows; ++i) {
        const auto& row = a[static_cast<std::size_t>(i)];
        if (static_cast<Index>(row.size()) != cols) throw ParseError("ragged JSON matrix");
        for (Index j = 0; j < cols; ++j) m(i, j) = row[static_cast<std::size_t>(j)].get<double>();
    }
    return m;
}

// ---- distributions ---------------------------------------------------------

inline json to_json(const Distribution& p) {
    json out;
    if (p.is_dirac()) {
        out["type"] = "dirac";
        out["point"] = vector_to_json(p.as_dirac().point);
    } else if (p.is_gaussian()) {
        out["type"] = "gaussian";
        out["mean"] = vector_to_json(p.as_gaussian().mean);
        out["cov"] = matrix_to_json(p.as_gaussian().cov);
    } else if (p.is_moment_only()) {
        out["type"] = "moment";
        out["mean"] = vector_to_json(p.as_moment_only().mean);
        out["cov"] = matrix_to_json(p.as_moment_only().cov);
    } else {
        out["type"] = "empirical";
        out["points"] = matrix_to_json(p.as_empirical().points);
        out["weights"] = vector_to_json(p.as_empirical().weights);
    }
    return out;
}

inline Distribution distribution_from_json(const json& j) {
    const std::string type = j.at("type").get<std::string>();
    if (type == "dirac") return Distribution::dirac(vector_from_json(j.at("point")));
    if (type == "gaussian")
        return Distribution::gaussian(vector_from_json(j.at("mean")),
                                      matrix_from_json(j.at("cov")));
    if (type == "moment")
        return Distribution::moment_only(vector_from_json(j.at("mean")),
                                         matrix_from_json(j.at("cov")));
    if (type == "empirical") {
        Matrix pts = matrix_from_json(j.at("points"));
        Vector w = j.contains("weights") ? vector_from_json(j.at("weights")) : Vector();
        return Distribution::empirical(std::move(pts), std::move(w));
    }
    throw ParseError("distribution: unknown type " + type);
}

inline json to_json(const LabeledMeasureSet& s) {
    json out;
    json dists = json::array();
    for (const auto& p : s.distributions) dists.push_back(to_json(p));
    out["distributions"] = std::move(dists);
    out["labels"] = s.labels;
    return out;
}

inline LabeledMeasureSet labeled_set_from_json(const json& j) {
    LabeledMeasureSet s;
    for (const auto& d : j.at("distributions")) s.distributions.push_back(distribution_from_json(d));
    if (j.contains("labels")) s.labels = j.at("labels").get<std::vector<int>>();
    else s.labels.assign(s.distributions.size(), 1);
    s.validate();
    return s;
}

inline std::vector<Distribution> distribution_list_from_json(const json& j) {
    const json& arr = j.is_array() ? j : j.at("distributions");
    std::vector<Distribution> out;
    for (const auto& d : arr) out.push_back(distribution_from_json(d));
    return out;
}

// ---- kernel spec strings ---------------------------------------------------
// "linear" | "poly:d=2,c=1" | "rbf:gamma=0.25" | "nrbf:gamma=0.25"
// "l2:linear" | "l2:poly:d=3,c=1" | "l2:rbf:gamma=0.1"

namespace detail {

inline std::map<std::string, double> parse_params(const std::string& s, const std::string& ctx) {
    std::map<std::string, double> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        const auto eq = item.find('=');
        if (eq == std::string::npos) throw ParseError(ctx + ": expected key=value, got " + item);
        try {
            out[item.substr(0, eq)] = std::stod(item.substr(eq + 1));
        } catch (const std::exception&) {
            throw ParseError(ctx + ": bad number in " + item);
        }
    }
    return out;
}

}  // namespace detail

inline EmbeddingKernel parse_kernel(const std::string& spec) {
    if (spec == "linear") return EmbeddingKernel::linear();
    const auto colon = spec.find(':');
    const std::string name = spec.substr(0, colon);
    const std::string rest = colon == std::string::npos ? "" : spec.substr(colon + 1);
    const auto params = detail::parse_params(rest, "kernel '" + spec + "'");
    if (name == "poly") {
        const int d = params.count("d") ? static_cast<int>(params.at("d")) : 2;
        const double c = params.count("c") ? params.at("c") : 1.0;
        return EmbeddingKernel::polynomial(d, c);
    }
    if (name == "rbf" || name == "nrbf") {
        if (!params.count("gamma")) throw ParseError("kernel '" + spec + "': gamma required");
        return EmbeddingKernel::rbf(params.at("gamma"), name == "nrbf");
    }
    throw ParseError("unknown kernel spec: " + spec);
}

inline std::string format_kernel(const EmbeddingKernel& k) {
    if (k.is_linear()) return "linear";
    if (k.is_polynomial()) {
        std::ostringstream os;
        os << "poly:d=" << k.as_polynomial().degree << ",c=" << k.as_polynomial().offset;
        return os.str();
    }
    std::ostringstream os;
    os << (k.as_rbf().normalized ? "nrbf" : "rbf") << ":gamma=" << k.as_rbf().gamma;
    return os.str();
}

inline Level2Kernel parse_level2(const std::string& spec) {
    if (spec.rfind("l2:", 0) != 0) throw ParseError("level-2 kernel spec must start with l2:");
    const std::string body = spec.substr(3);
    if (body == "linear") return Level2Kernel::linear();
    const auto colon = body.find(':');
    const std::string name = body.substr(0, colon);
    const std::string rest = colon == std::string::npos ? "" : body.substr(colon + 1);
    const auto params = detail::parse_params(rest, "kernel '" + spec + "'");
    if (name == "poly") {
        const int d = params.count("d") ? static_cast<int>(params.at("d")) : 2;
        const double c = params.count("c") ? params.at("c") : 1.0;
        return Level2Kernel::polynomial(d, c);
    }
    if (name == "rbf") {
        if (!params.count("gamma")) throw ParseError("kernel '" + spec + "': gamma required");
        return Level2Kernel::rbf(params.at("gamma"));
    }
    throw ParseError("unknown level-2 kernel spec: " + spec);
}

inline std::string format_level2(const Level2Kernel& k) {
    if (k.is_linear()) return "l2:linear";
    if (k.is_polynomial()) {
        std::ostringstream os;
        os << "l2:poly:d=" << k.as_polynomial().degree << ",c=" << k.as_polynomial().offset;
        return os.str();
    }
    std::ostringstream os;
    os << "l2:rbf:gamma=" << k.as_rbf().gamma;
    return os.str();
}

// ---- models ----------------------------------------------------------------

inline json to_json(const TrainedSMM& m) {
    json out;
    out["kernel"]["embedding"] = format_kernel(m.level1.embedding);
    out["kernel"]["diagonal_correction"] = m.level1.diagonal_correction;
    out["kernel"]["level2"] = m.level2 ? json(format_level2(*m.level2)) : json(nullptr);
    json support = json::array();
    for (const auto& p : m.support) support.push_back(to_json(p));
    out["support"] = std::move(support);
    out["support_labels"] = m.support_labels;
    out["alphas"] = vector_to_json(m.alphas);
    out["coefficients"] = vector_to_json(m.coeffs);
    out["support_self"] = vector_to_json(m.support_self);
    out["bias"] = m.bias;
    out["metadata"] = {{"seed", m.meta.seed},
                       {"objective", m.meta.objective},
                       {"converged", m.meta.converged},
                       {"C", m.meta.C}};
    return out;
}

inline TrainedSMM model_from_json(const json& j) {
    ExpectedKernelConfig cfg(parse_kernel(j.at("kernel").at("embedding").get<std::string>()),
                             j.at("kernel").at("diagonal_correction").get<bool>());
    std::optional<Level2Kernel> l2;
    if (!j.at("kernel").at("level2").is_null())
        l2 = parse_level2(j.at("kernel").at("level2").get<std::string>());
    TrainedSMM m{cfg, l2, {}, {}, {}, {}, {}, j.at("bias").get<double>(), {}};
    for (const auto& p : j.at("support")) m.support.push_back(distribution_from_json(p));
    m.support_labels = j.at("support_labels").get<std::vector<int>>();
    m.alphas = vector_from_json(j.at("alphas"));
    m.coeffs = vector_from_json(j.at("coefficients"));
    m.support_self = vector_from_json(j.at("support_self"));
    const auto& meta = j.at("metadata");
    m.meta.seed = meta.at("seed").get<std::uint64_t>();
    m.meta.objective = meta.at("objective").get<double>();
    m.meta.converged = meta.at("converged").get<bool>();
    m.meta.C = meta.at("C").get<double>();
    return m;
}

// ---- gram output -----------------------------------------------------------

inline std::string matrix_to_csv(const Matrix& m) {
    std::ostringstream os;
    os.precision(17);
    for (Index i = 0; i < m.rows(); ++i) {
        for (Index j = 0; j < m.cols(); ++j) {
            if (j) os << ',';
            os << m(i, j);
        }
        os << '\n';
    }
    return os.str();
}

inline json provenance_to_json(const GramMatrix& g) {
    json out;
    out["kernel"] = format_kernel(g.config.embedding);
    out["diagonal_correction"] = g.config.diagonal_correction;
    out["jittered"] = g.jittered;
    json entries = json::array();
    const Index n = g.values.rows();
    for (Index i = 0; i < n; ++i) {
        json row = json::array();
        for (Index j = 0; j < n; ++j) {
            const auto& e = g.at(i, j);
            if (e.kind == EntryKind::ClosedForm)
                row.push_back("closed-form");
            else
                row.push_back("empirical{" + std::to_string(e.n) + "," + std::to_string(e.m) + "}");
        }
        entries.push_back(std::move(row));
    }
    out["source"] = std::move(entries);
    return out;
}

// ---- harness specs and reports ---------------------------------------------

namespace detail {

inline Vector vector_or_fill(const json& j, Index dim) {
    if (j.is_number()) return Vector::Constant(dim, j.get<double>());
    return vector_from_json(j);
}

inline Matrix matrix_or_scaled_identity(const json& j, Index dim) {
    if (j.is_number()) return j.get<double>() * Matrix::Identity(dim, dim);
    return matrix_from_json(j);
}

}  // namespace detail

inline SyntheticTaskSpec task_spec_from_json(const json& j) {
    SyntheticTaskSpec s = SyntheticTaskSpec::desk_default();
    if (j.contains("dim")) {
        s.dim = j.at("dim").get<Index>();
        s.mean_pos = Vector::Constant(s.dim, 1.0);
        s.mean_neg = Vector::Constant(s.dim, 2.0);
        s.mean_cov = 0.5 * Matrix::Identity(s.dim, s.dim);
        s.wishart_scale_pos = 0.6 * Matrix::Identity(s.dim, s.dim);
        s.wishart_scale_neg = 1.2 * Matrix::Identity(s.dim, s.dim);
    }
    if (j.contains("mean_pos")) s.mean_pos = detail::vector_or_fill(j.at("mean_pos"), s.dim);
    if (j.contains("mean_neg")) s.mean_neg = detail::vector_or_fill(j.at("mean_neg"), s.dim);
    if (j.contains("mean_cov"))
        s.mean_cov = detail::matrix_or_scaled_identity(j.at("mean_cov"), s.dim);
    if (j.contains("wishart_scale_pos"))
        s.wishart_scale_pos = detail::matrix_or_scaled_identity(j.at("wishart_scale_pos"), s.dim);
    if (j.contains("wishart_scale_neg"))
        s.wishart_scale_neg = detail::matrix_or_scaled_identity(j.at("wishart_scale_neg"), s.dim);
    if (j.contains("wishart_df")) s.wishart_df = j.at("wishart_df").get<int>();
    if (j.contains("train_per_class")) s.train_per_class = j.at("train_per_class").get<Index>();
    if (j.contains("test_per_class")) s.test_per_class = j.at("test_per_class").get<Index>();
    if (j.contains("seed")) s.seed = j.at("seed").get<std::uint64_t>();
    s.validate();
    return s;
}

inline json to_json(const SyntheticTaskSpec& s) {
    json out;
    out["dim"] = s.dim;
    out["mean_pos"] = vector_to_json(s.mean_pos);
    out["mean_neg"] = vector_to_json(s.mean_neg);
    out["mean_cov"] = matrix_to_json(s.mean_cov);
    out["wishart_scale_pos"] = matrix_to_json(s.wishart_scale_pos);
    out["wishart_scale_neg"] = matrix_to_json(s.wishart_scale_neg);
    out["wishart_df"] = s.wishart_df;
    out["train_per_class"] = s.train_per_class;
    out["test_per_class"] = s.test_per_class;
    out["seed"] = s.seed;
    return out;
}

inline CVGrid cv_grid_from_json(const json& j) {
    CVGrid g = CVGrid::desk_default();
    if (j.contains("C")) g.C_values = j.at("C").get<std::vector<double>>();
    if (j.contains("gamma")) g.gamma_values = j.at("gamma").get<std::vector<double>>();
    if (j.contains("degree")) g.degree_values = j.at("degree").get<std::vector<int>>();
    if (j.contains("l2_gamma")) g.l2_gamma_values = j.at("l2_gamma").get<std::vector<double>>();
    if (j.contains("l2_degree")) g.l2_degree_values = j.at("l2_degree").get<std::vector<int>>();
    if (j.contains("folds")) g.folds = j.at("folds").get<int>();
    g.validate();
    return g;
}

inline json chosen_to_json(const ChosenParams& c) {
    return json{{"C", c.C},
                {"emb_param", c.emb_param},
                {"l2_param", c.l2_param},
                {"cv_accuracy", c.cv_accuracy}};
}

inline json to_json(const ExperimentReport& r) {
    json out;
    out["seed"] = r.seed;
    out["repetitions"] = r.repetitions;
    auto combo_json = [](const ComboResult& c) {
        json j;
        j["name"] = c.name;
        j["mean"] = c.mean;
        j["stddev"] = c.stddev;
        j["accuracies"] = c.accuracies;
        json chosen = json::array();
        for (const auto& p : c.chosen) chosen.push_back(chosen_to_json(p));
        j["chosen"] = std::move(chosen);
        return j;
    };
    json combos = json::array();
    for (const auto& c : r.combos) combos.push_back(combo_json(c));
    out["combos"] = std::move(combos);
    json baselines = json::array();
    for (const auto& b : r.baselines) baselines.push_back(combo_json(b));
    out["baselines"] = std::move(baselines);
    return out;
}

// One row per combo: name, mean, std, then per-repetition accuracies.
inline std::string report_to_csv(const ExperimentReport& r) {
    std::ostringstream os;
    os.precision(17);
    os << "name,mean,stddev";
    for (int i = 0; i < r.repetitions; ++i) os << ",rep" << i;
    os << '\n';
    auto row = [&](const ComboResult& c) {
        os << c.name << ',' << c.mean << ',' << c.stddev;
        for (double a : c.accuracies) os << ',' << a;
        os << '\n';
    };
    for (const auto& c : r.combos) row(c);
    for (const auto& b : r.baselines) row(b);
    return os.str();
}

inline std::string boundary_to_csv(const BoundaryGrid& g) {
    std::ostringstream os;
    os.precision(17);
    os << "x,y,decision\n";
    for (Index i = 0; i < g.ys.size(); ++i)
        for (Index j = 0; j < g.xs.size(); ++j)
            os << g.xs[j] << ',' << g.ys[i] << ',' << g.values(i, j) << '\n';
    return os.str();
}

// ---- small file helpers ----------------------------------------------------

inline json load_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    json j;
    in >> j;
    return j;
}

inline void save_text(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << text;
}

inline void save_json(const std::string& path, const json& j) { save_text(path, j.dump(2) + "\n"); }

}  // namespace smm
