#include "impforecast/serialize.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "impforecast/error.hpp"

namespace impforecast {

namespace {

Json vector_json(const Vector& v) {
    Json arr = Json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v[i]);
    return arr;
}

Vector vector_from(const Json& j) {
    Vector v(static_cast<Eigen::Index>(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i) v[static_cast<Eigen::Index>(i)] = j.at(i).get<double>();
    return v;
}

Json matrix_json(const Matrix& m) {
    Json rows = Json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) rows.push_back(vector_json(m.row(i).transpose()));
    return rows;
}

Matrix matrix_from(const Json& j, Eigen::Index cols) {
    Matrix m(static_cast<Eigen::Index>(j.size()), cols);
    for (std::size_t i = 0; i < j.size(); ++i) {
        const Json& row = j.at(i);
        if (static_cast<Eigen::Index>(row.size()) != cols) {
            throw Error(ErrorCode::ParseError, "matrix row has wrong length");
        }
        for (Eigen::Index c = 0; c < cols; ++c) m(static_cast<Eigen::Index>(i), c) = row.at(static_cast<std::size_t>(c)).get<double>();
    }
    return m;
}

Json tree_json(const RegressionTree& tree) {
    Json feature = Json::array(), threshold = Json::array(), left = Json::array(), right = Json::array(),
         value = Json::array();
    for (const TreeNode& n : tree.nodes()) {
        feature.push_back(n.feature);
        threshold.push_back(n.threshold);
        left.push_back(n.left);
        right.push_back(n.right);
        value.push_back(n.value);
    }
    return Json{{"feature", feature}, {"threshold", threshold}, {"left", left}, {"right", right}, {"value", value}};
}

RegressionTree tree_from(const Json& j) {
    const Json& feature = j.at("feature");
    const std::size_t n = feature.size();
    if (j.at("threshold").size() != n || j.at("left").size() != n || j.at("right").size() != n ||
        j.at("value").size() != n) {
        throw Error(ErrorCode::ParseError, "tree arrays have inconsistent lengths");
    }
    std::vector<TreeNode> nodes(n);
    for (std::size_t i = 0; i < n; ++i) {
        nodes[i].feature = feature.at(i).get<int>();
        nodes[i].threshold = j.at("threshold").at(i).get<double>();
        nodes[i].left = j.at("left").at(i).get<int>();
        nodes[i].right = j.at("right").at(i).get<int>();
        nodes[i].value = j.at("value").at(i).get<double>();
    }
    RegressionTree tree(std::move(nodes));
    if (!tree.well_formed()) throw Error(ErrorCode::ParseError, "tree is malformed");
    return tree;
}

Json optional_json(const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); }

std::optional<double> optional_from(const Json& j) {
    if (j.is_null()) return std::nullopt;
    return j.get<double>();
}

Json params_json(const ModelParams& params) {
    return std::visit(
        [](const auto& p) -> Json {
            using P = std::decay_t<decltype(p)>;
            if constexpr (std::is_same_v<P, LinearParams>) {
                return Json{{"weights", vector_json(p.weights)},
                            {"intercept", p.intercept},
                            {"alpha", p.alpha},
                            {"beta", p.beta}};
            } else if constexpr (std::is_same_v<P, EnsembleParams>) {
                Json trees = Json::array();
                for (const auto& t : p.trees) trees.push_back(tree_json(t));
                return Json{{"combine", p.combine == EnsembleParams::Combine::Mean ? "mean" : "additive"},
                            {"base_value", p.base_value},
                            {"lower", optional_json(p.lower)},
                            {"upper", optional_json(p.upper)},
                            {"tree_weights", p.tree_weights},
                            {"trees", trees}};
            } else {
                return Json{{"hidden_weights", matrix_json(p.hidden_weights)},
                            {"hidden_bias", vector_json(p.hidden_bias)},
                            {"output_weights", matrix_json(p.output_weights)},
                            {"output_bias", vector_json(p.output_bias)}};
            }
        },
        params);
}

ModelParams params_from(ModelKind kind, const Json& j, std::size_t input_dim) {
    switch (kind) {
        case ModelKind::LR:
        case ModelKind::BLR: {
            LinearParams p;
            p.weights = vector_from(j.at("weights"));
            p.intercept = j.at("intercept").get<double>();
            p.alpha = j.at("alpha").get<double>();
            p.beta = j.at("beta").get<double>();
            if (static_cast<std::size_t>(p.weights.size()) != input_dim) {
                throw Error(ErrorCode::ParseError, "linear weights do not match input_dim");
            }
            return p;
        }
        case ModelKind::DFR:
        case ModelKind::BDTR: {
            EnsembleParams p;
            const std::string combine = j.at("combine").get<std::string>();
            if (combine != "mean" && combine != "additive") throw Error(ErrorCode::ParseError, "bad combine mode");
            p.combine = combine == "mean" ? EnsembleParams::Combine::Mean : EnsembleParams::Combine::Additive;
            p.base_value = j.at("base_value").get<double>();
            p.lower = optional_from(j.at("lower"));
            p.upper = optional_from(j.at("upper"));
            p.tree_weights = j.at("tree_weights").get<std::vector<double>>();
            for (const Json& t : j.at("trees")) p.trees.push_back(tree_from(t));
            if (p.trees.empty() || p.trees.size() != p.tree_weights.size()) {
                throw Error(ErrorCode::ParseError, "ensemble tree/weight counts differ");
            }
            for (const auto& t : p.trees) {
                for (const auto& n : t.nodes()) {
                    if (n.feature >= static_cast<int>(input_dim)) {
                        throw Error(ErrorCode::ParseError, "tree splits on a feature beyond input_dim");
                    }
                }
            }
            return p;
        }
        case ModelKind::NNR: {
            const Json& hw = j.at("hidden_weights");
            const auto hidden = static_cast<Eigen::Index>(hw.size());
            MlpParams p;
            p.hidden_weights = matrix_from(hw, static_cast<Eigen::Index>(input_dim));
            p.hidden_bias = vector_from(j.at("hidden_bias"));
            p.output_weights = matrix_from(j.at("output_weights"), hidden);
            p.output_bias = vector_from(j.at("output_bias"));
            if (hidden < 1 || p.hidden_bias.size() != hidden || p.output_weights.rows() != 1 ||
                p.output_bias.size() != 1) {
                throw Error(ErrorCode::ParseError, "network parameter shapes are inconsistent");
            }
            return p;
        }
    }
    throw Error(ErrorCode::ParseError, "unknown model kind");
}

ModelKind kind_from(const Json& j) {
    const auto kind = kind_from_abbreviation(j.get<std::string>());
    if (!kind) throw Error(ErrorCode::ParseError, "unknown model kind '" + j.get<std::string>() + "'");
    return *kind;
}

FeatureGroup group_from(const Json& j) {
    const auto group = group_from_number(j.get<int>());
    if (!group) throw Error(ErrorCode::ParseError, "feature group must be 1 or 2");
    return *group;
}

// nlohmann throws its own exception types; surface them as ParseError.
template <typename Fn>
auto guarded(const char* what, Fn&& fn) {
    try {
        return fn();
    } catch (const Json::exception& e) {
        throw Error(ErrorCode::ParseError, std::string(what) + ": " + e.what());
    } catch (const std::out_of_range& e) {
        throw Error(ErrorCode::ParseError, std::string(what) + ": " + e.what());
    }
}

}  // namespace

Json to_json(const HyperParams& h) {
    return Json{
        {"lr", {{"ridge", h.lr.ridge}}},
        {"blr", {{"alpha", h.blr.alpha}, {"beta", h.blr.beta}, {"evidence_iters", h.blr.evidence_iters}}},
        {"dfr",
         {{"trees", h.dfr.trees},
          {"max_depth", h.dfr.max_depth},
          {"min_leaf", h.dfr.min_leaf},
          {"feature_subset_size", h.dfr.feature_subset_size},
          {"bootstrap", h.dfr.bootstrap}}},
        {"bdtr",
         {{"trees", h.bdtr.trees},
          {"max_depth", h.bdtr.max_depth},
          {"learning_rate", h.bdtr.learning_rate},
          {"min_leaf", h.bdtr.min_leaf}}},
        {"nnr",
         {{"hidden_units", h.nnr.hidden_units},
          {"epochs", h.nnr.epochs},
          {"step_size", h.nnr.step_size},
          {"momentum", h.nnr.momentum},
          {"init_scale", h.nnr.init_scale}}},
        {"standardize_trees", h.standardize_trees},
    };
}

HyperParams hyper_from_json(const Json& j) {
    return guarded("hyperparameters", [&] {
        HyperParams h;
        h.lr.ridge = j.at("lr").at("ridge").get<double>();
        const Json& blr = j.at("blr");
        h.blr.alpha = blr.at("alpha").get<double>();
        h.blr.beta = blr.at("beta").get<double>();
        h.blr.evidence_iters = blr.at("evidence_iters").get<int>();
        const Json& dfr = j.at("dfr");
        h.dfr.trees = dfr.at("trees").get<int>();
        h.dfr.max_depth = dfr.at("max_depth").get<int>();
        h.dfr.min_leaf = dfr.at("min_leaf").get<int>();
        h.dfr.feature_subset_size = dfr.at("feature_subset_size").get<int>();
        h.dfr.bootstrap = dfr.at("bootstrap").get<bool>();
        const Json& bdtr = j.at("bdtr");
        h.bdtr.trees = bdtr.at("trees").get<int>();
        h.bdtr.max_depth = bdtr.at("max_depth").get<int>();
        h.bdtr.learning_rate = bdtr.at("learning_rate").get<double>();
        h.bdtr.min_leaf = bdtr.at("min_leaf").get<int>();
        const Json& nnr = j.at("nnr");
        h.nnr.hidden_units = nnr.at("hidden_units").get<int>();
        h.nnr.epochs = nnr.at("epochs").get<int>();
        h.nnr.step_size = nnr.at("step_size").get<double>();
        h.nnr.momentum = nnr.at("momentum").get<double>();
        h.nnr.init_scale = nnr.at("init_scale").get<double>();
        h.standardize_trees = j.at("standardize_trees").get<bool>();
        return h;
    });
}

Json to_json(const TrainedModel& m) {
    return Json{
        {"format_version", kModelFormatVersion},
        {"channel", m.channel.index()},
        {"kind", std::string(abbreviation(m.model.kind))},
        {"group", group_number(m.group)},
        {"input_dim", m.model.input_dim},
        {"standardizer",
         {{"means", vector_json(m.model.standardizer.means)}, {"stdevs", vector_json(m.model.standardizer.stdevs)}}},
        {"params", params_json(m.model.params)},
        {"hyper", to_json(m.model.hyper)},
        {"seed", m.model.seed},
    };
}

TrainedModel model_from_json(const Json& j) {
    return guarded("model", [&] {
        const int version = j.at("format_version").get<int>();
        if (version != kModelFormatVersion) {
            throw Error(ErrorCode::IncompatibleBundle, "unsupported model format_version " + std::to_string(version));
        }
        TrainedModel m;
        m.channel = ChannelId{j.at("channel").get<int>()};
        m.group = group_from(j.at("group"));
        m.model.kind = kind_from(j.at("kind"));
        m.model.input_dim = j.at("input_dim").get<std::size_t>();
        m.model.standardizer.means = vector_from(j.at("standardizer").at("means"));
        m.model.standardizer.stdevs = vector_from(j.at("standardizer").at("stdevs"));
        if (static_cast<std::size_t>(m.model.standardizer.means.size()) != m.model.input_dim ||
            static_cast<std::size_t>(m.model.standardizer.stdevs.size()) != m.model.input_dim) {
            throw Error(ErrorCode::ParseError, "standardizer does not match input_dim");
        }
        m.model.params = params_from(m.model.kind, j.at("params"), m.model.input_dim);
        m.model.hyper = hyper_from_json(j.at("hyper"));
        m.model.seed = j.at("seed").get<std::uint64_t>();
        return m;
    });
}

Json to_json(const ErrorBands& b) {
    return Json{{"counts", b.counts}, {"n_test", b.n_test},     {"pct", b.pct},
                {"cum_0_2", b.cum_0_2}, {"cum_0_3", b.cum_0_3}};
}

ErrorBands bands_from_json(const Json& j) {
    return guarded("error bands", [&] {
        ErrorBands b;
        b.counts = j.at("counts").get<std::array<std::size_t, 4>>();
        b.n_test = j.at("n_test").get<std::size_t>();
        b.pct = j.at("pct").get<std::array<double, 4>>();
        b.cum_0_2 = j.at("cum_0_2").get<double>();
        b.cum_0_3 = j.at("cum_0_3").get<double>();
        return b;
    });
}

Json to_json(const StudyReport& r) {
    Json entries = Json::array();
    for (const SelectionEntry& e : r.entries) {
        Json candidates = Json::array();
        for (const CandidateScore& c : e.candidates) {
            Json cj{{"kind", std::string(abbreviation(c.kind))},
                    {"group", group_number(c.group)},
                    {"rmse", optional_json(c.rmse)}};
            if (!c.error.empty()) cj["error"] = c.error;
            candidates.push_back(cj);
        }
        entries.push_back(Json{{"channel", e.channel.index()},
                               {"label", label_name(e.channel)},
                               {"kind", std::string(abbreviation(e.kind))},
                               {"group", group_number(e.group)},
                               {"rmse", e.rmse},
                               {"bands", to_json(e.bands)},
                               {"candidates", candidates}});
    }
    Json histogram = Json::object();
    for (ModelKind k : kModelKinds) {
        const auto it = r.histogram.find(k);
        histogram[std::string(abbreviation(k))] = it == r.histogram.end() ? 0 : it->second;
    }
    return Json{
        {"format_version", r.format_version},
        {"config",
         {{"seed", r.config.seed},
          {"split", {{"test_fraction", r.config.split.test_fraction}, {"seed", r.config.split.seed}}},
          {"selection", std::string(to_string(r.config.selection))},
          {"hyper", to_json(r.config.hyper)}}},
        {"n_train", r.n_train},
        {"n_test", r.n_test},
        {"entries", entries},
        {"histogram", histogram},
    };
}

StudyReport report_from_json(const Json& j) {
    return guarded("study report", [&] {
        StudyReport r;
        r.format_version = j.at("format_version").get<int>();
        if (r.format_version != kReportFormatVersion) {
            throw Error(ErrorCode::ParseError,
                        "unsupported report format_version " + std::to_string(r.format_version));
        }
        const Json& config = j.at("config");
        r.config.seed = config.at("seed").get<std::uint64_t>();
        r.config.split.test_fraction = config.at("split").at("test_fraction").get<double>();
        r.config.split.seed = config.at("split").at("seed").get<std::uint64_t>();
        const auto selection = selection_from_string(config.at("selection").get<std::string>());
        if (!selection) throw Error(ErrorCode::ParseError, "unknown selection mode");
        r.config.selection = *selection;
        r.config.hyper = hyper_from_json(config.at("hyper"));
        r.n_train = j.at("n_train").get<std::size_t>();
        r.n_test = j.at("n_test").get<std::size_t>();
        for (const Json& e : j.at("entries")) {
            SelectionEntry entry;
            entry.channel = ChannelId{e.at("channel").get<int>()};
            entry.kind = kind_from(e.at("kind"));
            entry.group = group_from(e.at("group"));
            entry.rmse = e.at("rmse").get<double>();
            entry.bands = bands_from_json(e.at("bands"));
            if (e.contains("candidates")) {
                for (const Json& c : e.at("candidates")) {
                    CandidateScore score;
                    score.kind = kind_from(c.at("kind"));
                    score.group = group_from(c.at("group"));
                    score.rmse = optional_from(c.at("rmse"));
                    if (c.contains("error")) score.error = c.at("error").get<std::string>();
                    entry.candidates.push_back(std::move(score));
                }
            }
            r.entries.push_back(std::move(entry));
        }
        for (const auto& [key, value] : j.at("histogram").items()) {
            const auto kind = kind_from_abbreviation(key);
            if (!kind) throw Error(ErrorCode::ParseError, "unknown kind in histogram: " + key);
            r.histogram[*kind] = value.get<int>();
        }
        return r;
    });
}

Json to_json(const ModelBundle& bundle) {
    Json models = Json::array();
    for (const BundleEntry& e : bundle.models) {
        Json m = to_json(e.model);
        m["study_rmse"] = e.study_rmse;
        models.push_back(std::move(m));
    }
    return Json{{"format_version", bundle.format_version}, {"models", models}};
}

ModelBundle bundle_from_json(const Json& j) {
    ModelBundle bundle = guarded("model bundle", [&] {
        ModelBundle b;
        b.format_version = j.at("format_version").get<int>();
        if (b.format_version != kBundleFormatVersion) {
            throw Error(ErrorCode::IncompatibleBundle,
                        "unsupported model bundle format_version " + std::to_string(b.format_version));
        }
        for (const Json& m : j.at("models")) {
            b.models.push_back(BundleEntry{model_from_json(m), m.at("study_rmse").get<double>()});
        }
        return b;
    });
    std::set<int> seen;
    for (const BundleEntry& e : bundle.models) {
        if (!seen.insert(e.model.channel.index()).second) {
            throw Error(ErrorCode::IncompatibleBundle,
                        "model bundle has two models for channel " + std::to_string(e.model.channel.index()));
        }
        if (e.model.model.input_dim != feature_dimension(e.model.group)) {
            throw Error(ErrorCode::IncompatibleBundle, "model for channel " +
                                                           std::to_string(e.model.channel.index()) +
                                                           " does not match its feature group");
        }
    }
    for (ChannelId ch : ChannelId::all()) {
        if (!seen.count(ch.index())) {
            throw Error(ErrorCode::IncompatibleBundle,
                        "model bundle has no model for channel " + std::to_string(ch.index()));
        }
    }
    return bundle;
}

std::string dump(const Json& j) { return j.dump(1) + "\n"; }

Json read_json_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::ParseError, "cannot open " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    try {
        return Json::parse(buf.str());
    } catch (const Json::exception& e) {
        throw Error(ErrorCode::ParseError, path.string() + ": " + e.what());
    }
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::InvalidArgument, "cannot write " + path.string());
    out << text;
    if (!out) throw Error(ErrorCode::InvalidArgument, "failed writing " + path.string());
}

}  // namespace impforecast
