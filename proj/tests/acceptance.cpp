// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.
#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numeric>
#include <random>
#include <sstream>
#include <string>

#include "impforecast/cli.hpp"
#include "impforecast/dataio.hpp"
#include "impforecast/pipeline.hpp"
#include "impforecast/serialize.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace impforecast;
namespace fs = std::filesystem;
using testutil::random_int;
using testutil::random_matrix;
using testutil::random_vector;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

struct Outcome {
    bool pass = true;
    std::string detail;
};

std::vector<double> as_std(const Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

Outcome ols_oracle() {
    const auto start = Clock::now();
    std::mt19937_64 gen(101);
    double worst = 0.0;
    for (int trial = 0; trial < 50; ++trial) {
        const int d = random_int(gen, 1, 13);
        const int n = random_int(gen, std::max(10, d + 2), 100);
        const Matrix X = random_matrix(gen, n, d, -1.0, 5.0);
        Vector y = X * random_vector(gen, d) + random_vector(gen, n, -0.5, 0.5);
        y.array() += 3.0;
        const auto coef = linear_coefficients(fit(ModelKind::LR, X, y, HyperParams{}, 0));
        std::vector<double> got = as_std(coef.weights);
        got.push_back(coef.intercept);
        worst = std::max(worst, oracle::relative_error(got, oracle::ols(X, y)));
    }
    const double elapsed = seconds_since(start);
    return {worst < 1e-8 && elapsed < 5.0,
            "max relative error " + fmt("%.3e", worst) + ", " + fmt("%.2f", elapsed) + " s"};
}

Outcome blr_closed_form() {
    std::mt19937_64 gen(202);
    double worst_fixed = 0.0;
    double worst_flat = 0.0;
    for (int trial = 0; trial < 20; ++trial) {
        const int d = random_int(gen, 1, 13);
        const int n = random_int(gen, std::max(10, d + 2), 100);
        const Matrix X = random_matrix(gen, n, d, 0.0, 10.0);
        const Vector y = X * random_vector(gen, d) + random_vector(gen, n, -0.5, 0.5);

        HyperParams h;
        h.blr.alpha = std::pow(10.0, random_int(gen, -3, 2));
        h.blr.beta = std::pow(10.0, random_int(gen, -1, 2));
        h.blr.evidence_iters = 0;
        const auto p = std::get<LinearParams>(fit(ModelKind::BLR, X, y, h, 0).params);
        std::vector<double> got = as_std(p.weights);
        got.push_back(p.intercept);
        std::vector<double> penalty(static_cast<std::size_t>(d) + 1, h.blr.alpha);
        penalty.back() = 0.0;
        const auto D = oracle::design_with_intercept(oracle::standardize(X));
        worst_fixed = std::max(worst_fixed,
                               oracle::relative_error(got, oracle::penalized_normal_solve(D, y, penalty, h.blr.beta)));

        h.blr.alpha = 1e-12;
        const auto flat = linear_coefficients(fit(ModelKind::BLR, X, y, h, 0));
        const auto ols = oracle::ols(X, y);
        for (Eigen::Index j = 0; j < d; ++j) {
            worst_flat = std::max(worst_flat, std::abs(flat.weights[j] - ols[static_cast<std::size_t>(j)]));
        }
        worst_flat = std::max(worst_flat, std::abs(flat.intercept - ols.back()));
    }
    return {worst_fixed < 1e-8 && worst_flat < 1e-6, "closed form " + fmt("%.3e", worst_fixed) +
                                                         ", alpha=1e-12 vs OLS " + fmt("%.3e", worst_flat)};
}

Outcome gradient_check() {
    std::mt19937_64 gen(303);
    double worst = 0.0;
    for (int net = 0; net < 20; ++net) {
        const int d = random_int(gen, 1, 13);
        const int H = random_int(gen, 1, 16);
        const int n = random_int(gen, 1, 40);
        const Matrix X = random_matrix(gen, n, d, -2.0, 2.0);
        const Vector y = random_vector(gen, n, -2.0, 2.0);
        const Vector theta =
            random_vector(gen, static_cast<Eigen::Index>(mlp_parameter_count(d, H)), -1.0, 1.0);
        const auto analytic = nn_loss_and_gradient(theta, X, y, static_cast<std::size_t>(H)).gradient;
        const auto fd = oracle::mlp_fd_gradient(as_std(theta), X, y, static_cast<std::size_t>(H), 1e-5);
        for (std::size_t k = 0; k < fd.size(); ++k) {
            const double a = analytic[static_cast<Eigen::Index>(k)];
            worst = std::max(worst, std::abs(a - fd[k]) / std::max(1e-8, std::abs(fd[k])));
        }
    }
    return {worst < 1e-4, "max relative error " + fmt("%.3e", worst)};
}

Outcome boosting_monotone() {
    std::mt19937_64 gen(404);
    int violations = 0;
    double worst_rise = 0.0;
    for (int dataset = 0; dataset < 10; ++dataset) {
        const int n = random_int(gen, 20, 80);
        const int d = random_int(gen, 1, 13);
        const Matrix X = random_matrix(gen, n, d);
        const Vector y = (X.col(0).array().sin() * 3.0).matrix() + random_vector(gen, n, -1.0, 1.0);
        HyperParams h;
        h.bdtr.trees = 200;
        h.bdtr.learning_rate = 0.1;
        const Regressor full = fit(ModelKind::BDTR, X, y, h, static_cast<std::uint64_t>(dataset));
        const double base = std::get<EnsembleParams>(full.params).base_value;
        double previous = (y.array() - base).square().sum() / n;
        for (std::size_t t = 1; t <= 200; ++t) {
            const double mse = (predict(truncate_ensemble(full, t), X) - y).squaredNorm() / n;
            if (mse > previous) {
                worst_rise = std::max(worst_rise, (mse - previous) / previous);
                if (mse > previous * (1.0 + 1e-12)) ++violations;
            }
            previous = mse;
        }
    }
    return {violations == 0, std::to_string(violations) + " increases beyond float rounding (largest relative rise " +
                                 fmt("%.1e", worst_rise) + ")"};
}

Outcome forest_degenerate() {
    std::mt19937_64 gen(505);
    int mean_mismatches = 0;
    int range_violations = 0;
    for (int trial = 0; trial < 10; ++trial) {
        const int n = random_int(gen, 5, 60);
        const int d = random_int(gen, 1, 13);
        const Matrix X = random_matrix(gen, n, d);
        const Vector y = random_vector(gen, n, 1.0, 20.0);
        const Matrix probe = random_matrix(gen, 50, d, -10.0, 10.0);

        HyperParams stump;
        stump.dfr.trees = 1;
        stump.dfr.max_depth = 0;
        stump.dfr.bootstrap = false;
        const double mean = std::accumulate(y.data(), y.data() + y.size(), 0.0) / n;
        const Vector p0 = predict(fit(ModelKind::DFR, X, y, stump, 1), probe);
        for (Eigen::Index i = 0; i < p0.size(); ++i) mean_mismatches += p0[i] != mean;

        const Vector p = predict(fit(ModelKind::DFR, X, y, HyperParams{}, 2), probe);
        for (Eigen::Index i = 0; i < p.size(); ++i) {
            range_violations += p[i] < y.minCoeff() || p[i] > y.maxCoeff();
        }
    }
    return {mean_mismatches == 0 && range_violations == 0,
            std::to_string(mean_mismatches) + " mean mismatches, " + std::to_string(range_violations) +
                " out-of-range predictions"};
}

bool bands_consistent(const ErrorBands& b) {
    const double sum = b.pct[0] + b.pct[1] + b.pct[2] + b.pct[3];
    return std::abs(sum - 100.0) <= 0.03 && b.pct[0] <= b.cum_0_2 && b.cum_0_2 <= b.cum_0_3 && b.cum_0_3 <= 100.0;
}

Outcome band_arithmetic(const StudyReport& study) {
    const auto b = bands_from_counts({14, 8, 2, 0});
    const bool row = b.pct[0] == 58.33 && b.pct[1] == 33.33 && b.pct[2] == 8.33 && b.cum_0_2 == 91.67 &&
                     b.cum_0_3 == 100.00;
    int bad = 0;
    int tables = 0;
    std::mt19937_64 gen(606);
    for (int trial = 0; trial < 10000; ++trial) {
        std::array<std::size_t, 4> counts{};
        for (auto& c : counts) c = static_cast<std::size_t>(random_int(gen, 0, 40));
        if (counts[0] + counts[1] + counts[2] + counts[3] == 0) continue;
        ++tables;
        bad += !bands_consistent(bands_from_counts(counts));
    }
    for (const auto& e : study.entries) {
        ++tables;
        bad += !bands_consistent(e.bands);
    }
    return {row && bad == 0, std::string("published row ") + (row ? "exact" : "MISMATCH") + ", " +
                                 std::to_string(bad) + " of " + std::to_string(tables) + " tables inconsistent"};
}

Outcome histogram() {
    const std::vector<ModelKind> winners{ModelKind::BLR, ModelKind::DFR, ModelKind::LR,  ModelKind::BLR,
                                         ModelKind::BLR, ModelKind::BLR, ModelKind::BLR, ModelKind::BLR,
                                         ModelKind::BLR, ModelKind::NNR, ModelKind::NNR, ModelKind::BDTR};
    const auto h = tally(winners);
    const bool ok = h.at(ModelKind::BLR) == 7 && h.at(ModelKind::NNR) == 2 && h.at(ModelKind::DFR) == 1 &&
                    h.at(ModelKind::BDTR) == 1 && h.at(ModelKind::LR) == 1;
    std::string detail;
    for (const auto& [k, n] : h) detail += std::string(abbreviation(k)) + "=" + std::to_string(n) + " ";
    return {ok, detail};
}

Outcome end_to_end(StudyReport& report_out) {
    const auto start = Clock::now();
    const StudyConfig config;
    const Cohort cohort = generate_synthetic_cohort(80, config.seed);
    const StudyResult result = run_study(cohort, config);
    const double elapsed = seconds_since(start);
    report_out = result.report;

    const auto split = split_cohort(cohort, SplitSpec{});
    const SyntheticSpec spec = SyntheticSpec::defaults();
    int shape_ok = result.report.entries.size() == 12 && result.report.n_test == 24;
    int beats_baseline = 0;
    int linear_winners = 0;
    int within_noise = 0;
    double worst_ratio = 0.0;
    for (const auto& e : result.report.entries) {
        shape_ok &= e.bands.n_test == 24;
        const Vector train_y = label_vector(split.train, e.channel);
        const Vector test_y = label_vector(split.test, e.channel);
        const double baseline = rmse(Vector::Constant(test_y.size(), train_y.mean()), test_y);
        beats_baseline += e.rmse < baseline;
        linear_winners += e.kind == ModelKind::LR || e.kind == ModelKind::BLR;
        const double ratio = e.rmse / spec.channels[e.channel.offset()].noise_sd;
        worst_ratio = std::max(worst_ratio, ratio);
        within_noise += ratio <= 1.5;
    }
    const bool ok = shape_ok && elapsed < 60.0 && beats_baseline >= 10 && linear_winners >= 10 && within_noise == 12;
    return {ok, "cohort seed " + std::to_string(config.seed) + ", " + fmt("%.1f", elapsed) + " s; beats baseline " + std::to_string(beats_baseline) + "/12; LR/BLR wins " +
                    std::to_string(linear_winners) + "/12; RMSE <= 1.5 sigma on " + std::to_string(within_noise) +
                    "/12 (worst " + fmt("%.2f", worst_ratio) + " sigma)"};
}

Outcome determinism(const fs::path& dir) {
    std::ostringstream out;
    std::ostringstream err;
    const auto data = (dir / "cohort.csv").string();
    if (run_cli({"generate", "--n", "80", "--seed", "7", "--out", data}, out, err) != kExitOk) {
        return {false, "generate failed: " + err.str()};
    }
    const auto study = [&](const std::string& tag, const std::string& threads) {
        return run_cli({"study", "--data", data, "--seed", "7", "--threads", threads, "--out-report",
                        (dir / (tag + "_report.json")).string(), "--out-models", (dir / (tag + "_models.json")).string()},
                       out, err);
    };
    if (study("a", "1") != kExitOk || study("b", "1") != kExitOk || study("c", "8") != kExitOk) {
        return {false, "study failed: " + err.str()};
    }
    const auto same = [&](const std::string& x, const std::string& y, const std::string& kind) {
        return slurp(dir / (x + "_" + kind + ".json")) == slurp(dir / (y + "_" + kind + ".json"));
    };
    const bool repeat = same("a", "b", "report") && same("a", "b", "models");
    const bool threads = same("a", "c", "report") && same("a", "c", "models");
    return {repeat && threads, std::string("repeat run ") + (repeat ? "identical" : "DIFFERS") +
                                   ", threads 1 vs 8 " + (threads ? "identical" : "DIFFER")};
}

Outcome round_trips(const fs::path& dir) {
    int csv_failures = 0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const Cohort c = generate_synthetic_cohort(50, seed);
        const std::string text = serialize_cohort_csv(c);
        const Cohort back = parse_cohort_csv(text);
        csv_failures += !(back == c) || serialize_cohort_csv(back) != text;
    }

    StudyConfig config;
    config.hyper.dfr.trees = 30;
    config.hyper.bdtr.trees = 60;
    config.hyper.nnr.epochs = 300;
    const ModelBundle bundle = run_study(generate_synthetic_cohort(60, 3), config).bundle;
    const fs::path path = dir / "bundle.json";
    write_text_file(path, dump(to_json(bundle)));
    const ModelBundle loaded = bundle_from_json(read_json_file(path));
    int prediction_mismatches = 0;
    for (const auto& rec : generate_synthetic_cohort(40, 77).records) {
        const auto a = predict_one(bundle, rec);
        const auto b = predict_one(loaded, rec);
        for (std::size_t i = 0; i < a.size(); ++i) {
            prediction_mismatches += std::bit_cast<std::uint64_t>(a[i].kohm) != std::bit_cast<std::uint64_t>(b[i].kohm);
        }
    }
    return {csv_failures == 0 && prediction_mismatches == 0 && loaded == bundle,
            std::to_string(csv_failures) + " CSV round-trip failures, " + std::to_string(prediction_mismatches) +
                " prediction mismatches after reload"};
}

}  // namespace

int main() {
    std::random_device rd;
    const fs::path dir = fs::temp_directory_path() / ("impforecast_acceptance_" + std::to_string(rd()));
    fs::create_directories(dir);

    StudyReport study;
    std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
        {"OLS oracle", ols_oracle},
        {"BLR closed form", blr_closed_form},
        {"NNR gradient check", gradient_check},
        {"Boosting monotonicity", boosting_monotone},
        {"Forest degenerate case", forest_degenerate},
        {"End-to-end synthetic study", [&] { return end_to_end(study); }},
        {"Error-band arithmetic", [&] { return band_arithmetic(study); }},
        {"Histogram reproduction", histogram},
        {"Determinism", [&] { return determinism(dir); }},
        {"Round-trips", [&] { return round_trips(dir); }},
    };
    // Display numbering follows the criterion list, not evaluation order.
    const std::vector<int> number{1, 2, 3, 4, 5, 8, 6, 7, 9, 10};

    int failures = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        failures += !o.pass;
        std::printf("[%s] %2d %-28s %s\n", o.pass ? "PASS" : "FAIL", number[i], criteria[i].first.c_str(),
                    o.detail.c_str());
        std::fflush(stdout);
    }
    fs::remove_all(dir);
    std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
    return failures == 0 ? 0 : 1;
}
