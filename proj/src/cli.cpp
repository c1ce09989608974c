#include "impforecast/cli.hpp"

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <thread>

#include "CLI11.hpp"

#include "impforecast/dataio.hpp"
#include "impforecast/error.hpp"
#include "impforecast/pipeline.hpp"
#include "impforecast/report.hpp"
#include "impforecast/serialize.hpp"

namespace impforecast {

namespace {

namespace fs = std::filesystem;

constexpr const char* kThreadsEnv = "IMP_FORECAST_THREADS";

struct Options {
    // generate
    std::size_t n = 80;
    std::string out_path;
    // study
    std::string data_path;
    std::string report_path;
    std::string models_path;
    double test_fraction = 0.30;
    std::string selection = "test_set";
    std::vector<std::string> overrides;
    std::size_t threads = 0;
    // predict / report
    std::string in_path;
    std::string format = "text";
    int decimals_rmse = 6;
    int decimals_pct = 2;
    std::uint64_t seed = 42;
};

class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

void require_writable_parent(const std::string& path, const char* flag) {
    const fs::path parent = fs::path(path).parent_path();
    if (!parent.empty() && !fs::is_directory(parent)) {
        throw UsageError(std::string(flag) + ": directory does not exist: " + parent.string());
    }
}

std::size_t resolve_threads(std::size_t flag, std::ostream& err) {
    if (flag > 0) return flag;
    if (const char* env = std::getenv(kThreadsEnv); env != nullptr && *env != '\0') {
        char* end = nullptr;
        const unsigned long value = std::strtoul(env, &end, 10);
        if (end != nullptr && *end == '\0' && value > 0) return value;
        err << "warning: ignoring invalid " << kThreadsEnv << "='" << env << "'\n";
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

HyperParams parse_overrides(const std::vector<std::string>& overrides) {
    HyperParams hyper;
    for (const std::string& kv : overrides) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos || eq == 0) throw UsageError("--set expects key=value, got '" + kv + "'");
        try {
            hyper.set(std::string_view(kv).substr(0, eq), std::string_view(kv).substr(eq + 1));
        } catch (const Error& e) {
            throw UsageError(e.what());
        }
    }
    try {
        hyper.validate();
    } catch (const Error& e) {
        throw UsageError(e.what());
    }
    return hyper;
}

void report_validation(const ValidationReport& v, std::ostream& err) {
    for (const auto& w : v.warnings) err << "warning: row " << w.row << " " << w.column << ": " << w.message << "\n";
    for (const auto& e : v.errors) err << "error: row " << e.row << " " << e.column << ": " << e.message << "\n";
}

int cmd_generate(const Options& o, std::ostream& err) {
    require_writable_parent(o.out_path, "--out");
    if (o.n == 0) throw UsageError("--n must be at least 1");
    const Cohort cohort = generate_synthetic_cohort(o.n, o.seed);
    write_cohort_csv(cohort, o.out_path);
    err << "wrote " << cohort.size() << " synthetic records to " << o.out_path << "\n";
    return kExitOk;
}

int cmd_study(const Options& o, std::ostream& err) {
    require_writable_parent(o.report_path, "--out-report");
    require_writable_parent(o.models_path, "--out-models");
    const auto selection = selection_from_string(o.selection);
    if (!selection) throw UsageError("--selection must be test_set or inner_validation");
    if (!(o.test_fraction > 0.0 && o.test_fraction < 1.0)) throw UsageError("--test-fraction must lie in (0, 1)");

    StudyConfig config;
    config.seed = o.seed;
    config.split = SplitSpec{o.test_fraction, o.seed};
    config.hyper = parse_overrides(o.overrides);
    config.selection = *selection;
    config.threads = resolve_threads(o.threads, err);

    const Cohort cohort = read_cohort_csv(o.data_path);
    const ValidationReport validation = validate_cohort(cohort);
    report_validation(validation, err);
    if (!validation.ok()) return kExitData;
    if (!cohort.labeled()) {
        err << "error: study needs labeled data; columns ei_1m_1..ei_1m_12 are missing\n";
        return kExitData;
    }

    const StudyResult result = run_study(cohort, config);
    write_text_file(o.report_path, dump(to_json(result.report)));
    write_text_file(o.models_path, dump(to_json(result.bundle)));
    err << "study complete: " << result.report.n_train << " training / " << result.report.n_test
        << " test records; report " << o.report_path << ", models " << o.models_path << "\n";
    return kExitOk;
}

int cmd_predict(const Options& o, std::ostream& err) {
    require_writable_parent(o.out_path, "--out");
    const ModelBundle bundle = bundle_from_json(read_json_file(o.models_path));
    const Cohort cohort = read_cohort_csv(o.data_path);
    const ValidationReport validation = validate_cohort(cohort);
    report_validation(validation, err);
    if (!validation.ok()) return kExitData;

    std::string csv = "row,channel,label,kind,group,prediction_kohm,study_rmse_kohm\n";
    for (std::size_t i = 0; i < cohort.size(); ++i) {
        for (const ChannelPrediction& p : predict_one(bundle, cohort.records[i])) {
            char value[64];
            char hint[64];
            std::snprintf(value, sizeof value, "%.6f", p.kohm);
            std::snprintf(hint, sizeof hint, "%.6f", p.study_rmse);
            csv += std::to_string(i + 1) + "," + std::to_string(p.channel.index()) + "," + label_name(p.channel) +
                   "," + std::string(abbreviation(p.kind)) + "," + std::to_string(group_number(p.group)) + "," +
                   value + "," + hint + "\n";
        }
    }
    write_text_file(o.out_path, csv);
    err << "wrote predictions for " << cohort.size() << " records to " << o.out_path << "\n";
    return kExitOk;
}

int cmd_report(const Options& o, std::ostream& out) {
    const auto format = format_from_string(o.format);
    if (!format) throw UsageError("--format must be text, csv or json");
    RenderOptions opts{*format, o.decimals_rmse, o.decimals_pct};
    try {
        opts.validate();
    } catch (const Error& e) {
        throw UsageError(e.what());
    }
    const StudyReport report = report_from_json(read_json_file(o.in_path));
    const std::string text = *format == OutputFormat::Text ? render_text(report, opts) : export_study(report, opts);
    if (o.out_path.empty()) {
        out << text;
    } else {
        require_writable_parent(o.out_path, "--out");
        write_text_file(o.out_path, text);
    }
    return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    Options o;
    CLI::App app{"Per-channel electrode impedance forecasting: synthetic data, model selection, prediction, reports",
                 "impforecast"};
    app.require_subcommand(1);
    app.set_help_all_flag("--help-all", "Show help for all subcommands");

    auto* generate = app.add_subcommand("generate", "Write a synthetic labeled cohort CSV");
    generate->add_option("--n", o.n, "Number of patients")->capture_default_str();
    generate->add_option("--seed", o.seed, "Random seed")->capture_default_str();
    generate->add_option("--out", o.out_path, "Output CSV path")->required();

    auto* study = app.add_subcommand("study", "Train all candidates per channel and select the best");
    study->add_option("--data", o.data_path, "Labeled cohort CSV")->required()->check(CLI::ExistingFile);
    study->add_option("--seed", o.seed, "Master seed (split and per-task seeds)")->capture_default_str();
    study->add_option("--out-report", o.report_path, "Study report JSON output")->required();
    study->add_option("--out-models", o.models_path, "Model bundle JSON output")->required();
    study->add_option("--test-fraction", o.test_fraction, "Held-out test fraction")->capture_default_str();
    study->add_option("--selection", o.selection, "Ranking data: test_set or inner_validation")
        ->capture_default_str();
    study->add_option("--set", o.overrides, "Hyperparameter override key=value (repeatable), e.g. nnr.epochs=500")
        ->take_all();
    study->add_option("--threads", o.threads,
                      std::string("Worker threads; falls back to ") + kThreadsEnv + ", then the core count");

    auto* predict_cmd = app.add_subcommand("predict", "Predict one-month impedances with a model bundle");
    predict_cmd->add_option("--models", o.models_path, "Model bundle JSON from `study`")
        ->required()
        ->check(CLI::ExistingFile);
    predict_cmd->add_option("--data", o.data_path, "Cohort CSV (labels optional)")->required()->check(CLI::ExistingFile);
    predict_cmd->add_option("--out", o.out_path, "Predictions CSV output")->required();

    auto* report = app.add_subcommand("report", "Render a study report");
    report->add_option("--in", o.in_path, "Study report JSON")->required()->check(CLI::ExistingFile);
    report->add_option("--format", o.format, "text, csv or json")->capture_default_str();
    report->add_option("--out", o.out_path, "Write to a file instead of standard output");
    report->add_option("--decimals-rmse", o.decimals_rmse, "Decimals for RMSE in text tables")->capture_default_str();
    report->add_option("--decimals-pct", o.decimals_pct, "Decimals for percentages in text tables")
        ->capture_default_str();

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        CLI::App* target = &app;
        for (CLI::App* sub : app.get_subcommands()) target = sub;
        out << target->help();
        return kExitOk;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "usage error: " << e.what() << "\n";
        err << "run with --help for usage\n";
        return kExitUsage;
    }

    try {
        if (generate->parsed()) return cmd_generate(o, err);
        if (study->parsed()) return cmd_study(o, err);
        if (predict_cmd->parsed()) return cmd_predict(o, err);
        if (report->parsed()) return cmd_report(o, out);
        return kExitUsage;
    } catch (const UsageError& e) {
        err << "usage error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const Error& e) {
        err << "error (" << to_string(e.code()) << "): " << e.what() << "\n";
        return is_data_error(e.code()) ? kExitData : kExitInternal;
    } catch (const std::exception& e) {
        err << "internal error: " << e.what() << "\n";
        return kExitInternal;
    }
}

}  // namespace impforecast
