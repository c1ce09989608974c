#include <charconv>
#include <cmath>
#include <functional>
#include <map>

#include "impforecast/error.hpp"
#include "impforecast/regress.hpp"

namespace impforecast {

namespace {

[[noreturn]] void invalid(const std::string& message) { throw Error(ErrorCode::InvalidHyperParam, message); }

int parse_int(std::string_view key, std::string_view text) {
    int value = 0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (text.empty() || ec != std::errc{} || ptr != text.data() + text.size()) {
        invalid("hyperparameter " + std::string(key) + " expects an integer, got '" + std::string(text) + "'");
    }
    return value;
}

double parse_real(std::string_view key, std::string_view text) {
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (text.empty() || ec != std::errc{} || ptr != text.data() + text.size() || !std::isfinite(value)) {
        invalid("hyperparameter " + std::string(key) + " expects a number, got '" + std::string(text) + "'");
    }
    return value;
}

bool parse_bool(std::string_view key, std::string_view text) {
    if (text == "true" || text == "1" || text == "on") return true;
    if (text == "false" || text == "0" || text == "off") return false;
    invalid("hyperparameter " + std::string(key) + " expects true/false, got '" + std::string(text) + "'");
}

using Setter = std::function<void(HyperParams&, std::string_view, std::string_view)>;

const std::map<std::string, Setter, std::less<>>& setters() {
    static const std::map<std::string, Setter, std::less<>> table = {
        {"lr.ridge", [](HyperParams& h, auto k, auto v) { h.lr.ridge = parse_real(k, v); }},
        {"blr.alpha", [](HyperParams& h, auto k, auto v) { h.blr.alpha = parse_real(k, v); }},
        {"blr.beta", [](HyperParams& h, auto k, auto v) { h.blr.beta = parse_real(k, v); }},
        {"blr.evidence_iters", [](HyperParams& h, auto k, auto v) { h.blr.evidence_iters = parse_int(k, v); }},
        {"dfr.trees", [](HyperParams& h, auto k, auto v) { h.dfr.trees = parse_int(k, v); }},
        {"dfr.max_depth", [](HyperParams& h, auto k, auto v) { h.dfr.max_depth = parse_int(k, v); }},
        {"dfr.min_leaf", [](HyperParams& h, auto k, auto v) { h.dfr.min_leaf = parse_int(k, v); }},
        {"dfr.feature_subset_size",
         [](HyperParams& h, auto k, auto v) { h.dfr.feature_subset_size = parse_int(k, v); }},
        {"dfr.bootstrap", [](HyperParams& h, auto k, auto v) { h.dfr.bootstrap = parse_bool(k, v); }},
        {"bdtr.trees", [](HyperParams& h, auto k, auto v) { h.bdtr.trees = parse_int(k, v); }},
        {"bdtr.max_depth", [](HyperParams& h, auto k, auto v) { h.bdtr.max_depth = parse_int(k, v); }},
        {"bdtr.learning_rate", [](HyperParams& h, auto k, auto v) { h.bdtr.learning_rate = parse_real(k, v); }},
        {"bdtr.min_leaf", [](HyperParams& h, auto k, auto v) { h.bdtr.min_leaf = parse_int(k, v); }},
        {"nnr.hidden_units", [](HyperParams& h, auto k, auto v) { h.nnr.hidden_units = parse_int(k, v); }},
        {"nnr.epochs", [](HyperParams& h, auto k, auto v) { h.nnr.epochs = parse_int(k, v); }},
        {"nnr.step_size", [](HyperParams& h, auto k, auto v) { h.nnr.step_size = parse_real(k, v); }},
        {"nnr.momentum", [](HyperParams& h, auto k, auto v) { h.nnr.momentum = parse_real(k, v); }},
        {"nnr.init_scale", [](HyperParams& h, auto k, auto v) { h.nnr.init_scale = parse_real(k, v); }},
        {"standardize_trees", [](HyperParams& h, auto k, auto v) { h.standardize_trees = parse_bool(k, v); }},
    };
    return table;
}

}  // namespace

void HyperParams::validate() const {
    if (!(std::isfinite(lr.ridge) && lr.ridge >= 0.0)) invalid("lr.ridge must be >= 0");
    if (!(std::isfinite(blr.alpha) && blr.alpha > 0.0)) invalid("blr.alpha must be > 0");
    if (!(std::isfinite(blr.beta) && blr.beta > 0.0)) invalid("blr.beta must be > 0");
    if (blr.evidence_iters < 0) invalid("blr.evidence_iters must be >= 0");
    if (dfr.trees < 1) invalid("dfr.trees must be >= 1");
    if (dfr.max_depth < 0) invalid("dfr.max_depth must be >= 0");
    if (dfr.min_leaf < 1) invalid("dfr.min_leaf must be >= 1");
    if (dfr.feature_subset_size < 0) invalid("dfr.feature_subset_size must be >= 0 (0 selects ceil(sqrt(d)))");
    if (bdtr.trees < 1) invalid("bdtr.trees must be >= 1");
    if (bdtr.max_depth < 0) invalid("bdtr.max_depth must be >= 0");
    if (!(bdtr.learning_rate > 0.0 && bdtr.learning_rate <= 1.0)) invalid("bdtr.learning_rate must lie in (0, 1]");
    if (bdtr.min_leaf < 1) invalid("bdtr.min_leaf must be >= 1");
    if (nnr.hidden_units < 1) invalid("nnr.hidden_units must be >= 1");
    if (nnr.epochs < 1) invalid("nnr.epochs must be >= 1");
    if (!(std::isfinite(nnr.step_size) && nnr.step_size > 0.0)) invalid("nnr.step_size must be > 0");
    if (!(nnr.momentum >= 0.0 && nnr.momentum < 1.0)) invalid("nnr.momentum must lie in [0, 1)");
    if (!(std::isfinite(nnr.init_scale) && nnr.init_scale > 0.0)) invalid("nnr.init_scale must be > 0");
}

void HyperParams::set(std::string_view key, std::string_view value) {
    const auto& table = setters();
    const auto it = table.find(key);
    if (it == table.end()) invalid("unknown hyperparameter '" + std::string(key) + "'");
    it->second(*this, key, value);
}

std::vector<std::string> HyperParams::keys() {
    std::vector<std::string> out;
    for (const auto& [key, setter] : setters()) out.push_back(key);
    return out;
}

}  // namespace impforecast
