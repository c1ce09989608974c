#include "impforecast/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <thread>

#include "impforecast/error.hpp"
#include "impforecast/random.hpp"

namespace impforecast {

namespace {

constexpr std::size_t kMinStudySize = 10;

// Runs fn(i) for i in [0, count) on up to `threads` workers. Each index is
// written by exactly one worker, so callers can store into pre-sized slots.
template <typename Fn>
void parallel_for(std::size_t count, std::size_t threads, Fn&& fn) {
    threads = std::clamp<std::size_t>(threads, 1, std::max<std::size_t>(count, 1));
    if (threads == 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::exception_ptr> failures(threads);
    std::vector<std::thread> workers;
    workers.reserve(threads);
    for (std::size_t w = 0; w < threads; ++w) {
        workers.emplace_back([&, w] {
            try {
                for (std::size_t i = next++; i < count; i = next++) fn(i);
            } catch (...) {
                failures[w] = std::current_exception();
            }
        });
    }
    for (auto& t : workers) t.join();
    for (auto& f : failures) {
        if (f) std::rethrow_exception(f);
    }
}

struct Candidate {
    ModelKind kind;
    FeatureGroup group;
};

std::vector<Candidate> candidate_grid() {
    std::vector<Candidate> grid;
    for (ModelKind kind : kModelKinds) {
        for (FeatureGroup group : kFeatureGroups) grid.push_back({kind, group});
    }
    return grid;
}

struct Scored {
    CandidateScore score;
    std::optional<CandidateResult> result;
};

Scored score_candidate(const Candidate& c, ChannelId channel, const Cohort& train, const Cohort& test,
                       const StudyConfig& config) {
    Scored out;
    out.score.kind = c.kind;
    out.score.group = c.group;
    try {
        CandidateResult r = evaluate_candidate(c.kind, c.group, channel, train, test, config.hyper,
                                               task_seed(config.seed, channel, c.kind, c.group));
        out.score.rmse = r.rmse;
        out.result = std::move(r);
    } catch (const Error& e) {
        // A failing candidate (e.g. a diverged network) drops out of the grid.
        out.score.error = std::string(to_string(e.code())) + ": " + e.what();
    }
    return out;
}

Cohort inner_train_view(const Cohort& train, const StudyConfig& config, ChannelId channel, bool validation) {
    const SplitSpec inner{config.split.test_fraction,
                          hash64({config.seed, 0x1a4e5u, static_cast<std::uint64_t>(channel.index())})};
    CohortSplit s = split_cohort(train, inner);
    return validation ? std::move(s.test) : std::move(s.train);
}

// Selection for one channel given already-scored candidates in grid order.
ChannelSelection finish_channel(ChannelId channel, std::vector<Scored> scored, const Cohort& train,
                                const Cohort& test, const StudyConfig& config) {
    std::vector<CandidateScore> scores;
    scores.reserve(scored.size());
    for (const auto& s : scored) scores.push_back(s.score);
    const std::size_t best = pick_best(scores);

    CandidateResult winner;
    if (config.selection == SelectionMode::TestSet) {
        winner = std::move(*scored[best].result);
    } else {
        winner = evaluate_candidate(scores[best].kind, scores[best].group, channel, train, test, config.hyper,
                                    task_seed(config.seed, channel, scores[best].kind, scores[best].group));
    }

    ChannelSelection out;
    out.entry.channel = channel;
    out.entry.kind = scores[best].kind;
    out.entry.group = scores[best].group;
    out.entry.rmse = winner.rmse;
    out.entry.bands = winner.bands;
    out.entry.candidates = std::move(scores);
    out.model = std::move(winner.model);
    return out;
}

}  // namespace

double rmse(const Vector& predicted, const Vector& actual) {
    if (predicted.size() != actual.size()) {
        throw Error(ErrorCode::LengthMismatch, "prediction and target lengths differ");
    }
    if (predicted.size() == 0) throw Error(ErrorCode::Empty, "cannot compute RMSE of no samples");
    double ss = 0.0;
    for (Eigen::Index i = 0; i < predicted.size(); ++i) {
        const double e = predicted[i] - actual[i];
        ss += e * e;
    }
    return std::sqrt(ss / static_cast<double>(predicted.size()));
}

double round2(double value) { return std::round(value * 100.0) / 100.0; }

ErrorBands bands_from_counts(const std::array<std::size_t, 4>& counts) {
    ErrorBands b;
    b.counts = counts;
    b.n_test = counts[0] + counts[1] + counts[2] + counts[3];
    if (b.n_test == 0) throw Error(ErrorCode::Empty, "error bands need at least one sample");
    const double n = static_cast<double>(b.n_test);
    auto percent = [n](std::size_t count) { return round2(100.0 * static_cast<double>(count) / n); };
    for (std::size_t i = 0; i < 4; ++i) b.pct[i] = percent(counts[i]);
    b.cum_0_2 = percent(counts[0] + counts[1]);
    b.cum_0_3 = percent(counts[0] + counts[1] + counts[2]);
    return b;
}

ErrorBands error_bands(const Vector& predicted, const Vector& actual) {
    if (predicted.size() != actual.size()) {
        throw Error(ErrorCode::LengthMismatch, "prediction and target lengths differ");
    }
    if (predicted.size() == 0) throw Error(ErrorCode::Empty, "error bands need at least one sample");
    std::array<std::size_t, 4> counts{};
    for (Eigen::Index i = 0; i < predicted.size(); ++i) {
        const double e = std::abs(predicted[i] - actual[i]);
        const std::size_t bin = e < 1.0 ? 0 : e < 2.0 ? 1 : e < 3.0 ? 2 : 3;
        ++counts[bin];
    }
    return bands_from_counts(counts);
}

std::string_view to_string(SelectionMode mode) noexcept {
    return mode == SelectionMode::TestSet ? "test_set" : "inner_validation";
}

std::optional<SelectionMode> selection_from_string(std::string_view text) noexcept {
    if (text == "test_set") return SelectionMode::TestSet;
    if (text == "inner_validation") return SelectionMode::InnerValidation;
    return std::nullopt;
}

std::uint64_t task_seed(std::uint64_t master_seed, ChannelId channel, ModelKind kind, FeatureGroup group) {
    return hash64({master_seed, static_cast<std::uint64_t>(channel.index()), static_cast<std::uint64_t>(kind),
                   static_cast<std::uint64_t>(group_number(group))});
}

Matrix feature_matrix(const Cohort& cohort, FeatureGroup group) {
    const auto d = static_cast<Eigen::Index>(feature_dimension(group));
    Matrix X(static_cast<Eigen::Index>(cohort.size()), d);
    for (std::size_t i = 0; i < cohort.size(); ++i) {
        const std::vector<double> row = assemble_features(cohort.records[i], group);
        for (Eigen::Index j = 0; j < d; ++j) X(static_cast<Eigen::Index>(i), j) = row[static_cast<std::size_t>(j)];
    }
    return X;
}

Vector label_vector(const Cohort& cohort, ChannelId channel) {
    Vector y(static_cast<Eigen::Index>(cohort.size()));
    for (std::size_t i = 0; i < cohort.size(); ++i) {
        const auto& labels = cohort.records[i].ei_1m;
        if (!labels) throw Error(ErrorCode::UnlabeledCohort, "record " + std::to_string(i + 1) + " has no labels");
        y[static_cast<Eigen::Index>(i)] = (*labels)[channel.offset()];
    }
    return y;
}

CandidateResult evaluate_candidate(ModelKind kind, FeatureGroup group, ChannelId channel, const Cohort& train,
                                   const Cohort& test, const HyperParams& hyper, std::uint64_t seed) {
    const Matrix X_train = feature_matrix(train, group);
    const Vector y_train = label_vector(train, channel);
    const Matrix X_test = feature_matrix(test, group);
    const Vector y_test = label_vector(test, channel);

    CandidateResult out;
    out.model = TrainedModel{channel, group, fit(kind, X_train, y_train, hyper, seed)};
    const Vector predicted = predict(out.model.model, X_test);
    out.rmse = rmse(predicted, y_test);
    out.bands = error_bands(predicted, y_test);
    return out;
}

std::size_t pick_best(std::span<const CandidateScore> candidates) {
    std::optional<std::size_t> best;
    auto rank = [](const CandidateScore& c) {
        return std::make_tuple(*c.rmse, static_cast<int>(c.kind), group_number(c.group));
    };
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        if (!candidates[i].rmse) continue;
        if (!best || rank(candidates[i]) < rank(candidates[*best])) best = i;
    }
    if (!best) throw Error(ErrorCode::AllCandidatesFailed, "every candidate model failed to fit");
    return *best;
}

ChannelSelection select_best(ChannelId channel, const Cohort& train, const Cohort& test, const StudyConfig& config) {
    const std::vector<Candidate> grid = candidate_grid();
    std::vector<Scored> scored(grid.size());
    if (config.selection == SelectionMode::TestSet) {
        parallel_for(grid.size(), config.threads,
                     [&](std::size_t i) { scored[i] = score_candidate(grid[i], channel, train, test, config); });
    } else {
        const Cohort inner_train = inner_train_view(train, config, channel, false);
        const Cohort validation = inner_train_view(train, config, channel, true);
        parallel_for(grid.size(), config.threads, [&](std::size_t i) {
            scored[i] = score_candidate(grid[i], channel, inner_train, validation, config);
        });
    }
    return finish_channel(channel, std::move(scored), train, test, config);
}

KindHistogram tally(std::span<const ModelKind> winners) {
    KindHistogram h;
    for (ModelKind k : kModelKinds) h[k] = 0;
    for (ModelKind k : winners) ++h[k];
    return h;
}

StudyResult run_study(const Cohort& cohort, const StudyConfig& config) {
    const ValidationReport validation = validate_cohort(cohort);
    if (!validation.ok()) {
        const auto& first = validation.errors.front();
        throw Error(ErrorCode::InvalidCohort,
                    "cohort failed validation (" + std::to_string(validation.errors.size()) +
                        " errors); first: row " + std::to_string(first.row) + " " + first.column + ": " +
                        first.message,
                    first.row, first.column);
    }
    if (!cohort.labeled()) throw Error(ErrorCode::UnlabeledCohort, "study requires one-month labels");
    if (cohort.size() < kMinStudySize) {
        throw Error(ErrorCode::TooSmall, "study requires at least " + std::to_string(kMinStudySize) + " records");
    }
    config.hyper.validate();

    const CohortSplit split = split_cohort(cohort, config.split);
    const auto channels = ChannelId::all();
    const std::vector<Candidate> grid = candidate_grid();

    // Flatten (channel, candidate) into one task list so both levels share the
    // worker pool; results land in fixed slots and are reduced in order.
    std::vector<Cohort> fit_sets(kChannelCount);
    std::vector<Cohort> score_sets(kChannelCount);
    for (ChannelId ch : channels) {
        if (config.selection == SelectionMode::TestSet) {
            fit_sets[ch.offset()] = split.train;
            score_sets[ch.offset()] = split.test;
        } else {
            fit_sets[ch.offset()] = inner_train_view(split.train, config, ch, false);
            score_sets[ch.offset()] = inner_train_view(split.train, config, ch, true);
        }
    }
    std::vector<Scored> scored(kChannelCount * grid.size());
    parallel_for(scored.size(), config.threads, [&](std::size_t task) {
        const ChannelId ch = channels[task / grid.size()];
        scored[task] = score_candidate(grid[task % grid.size()], ch, fit_sets[ch.offset()],
                                       score_sets[ch.offset()], config);
    });

    std::vector<ChannelSelection> selections(kChannelCount);
    parallel_for(kChannelCount, config.threads, [&](std::size_t c) {
        std::vector<Scored> mine(std::make_move_iterator(scored.begin() + static_cast<std::ptrdiff_t>(c * grid.size())),
                                 std::make_move_iterator(scored.begin() +
                                                         static_cast<std::ptrdiff_t>((c + 1) * grid.size())));
        selections[c] = finish_channel(channels[c], std::move(mine), split.train, split.test, config);
    });

    StudyResult result;
    result.report.config = config;
    result.report.n_train = split.train.size();
    result.report.n_test = split.test.size();
    std::vector<ModelKind> winners;
    for (auto& s : selections) {
        winners.push_back(s.entry.kind);
        result.bundle.models.push_back(BundleEntry{std::move(s.model), s.entry.rmse});
        result.report.entries.push_back(std::move(s.entry));
    }
    result.report.histogram = tally(winners);
    return result;
}

std::string ChannelPrediction::hint() const {
    char buf[64];
    std::snprintf(buf, sizeof buf, "RMSE %.2f kΩ", study_rmse);
    return buf;
}

std::vector<ChannelPrediction> predict_one(const ModelBundle& bundle, const PatientRecord& record) {
    if (bundle.format_version != kBundleFormatVersion) {
        throw Error(ErrorCode::IncompatibleBundle,
                    "unsupported model bundle format_version " + std::to_string(bundle.format_version));
    }
    std::vector<ChannelPrediction> out;
    for (ChannelId ch : ChannelId::all()) {
        const auto it = std::find_if(bundle.models.begin(), bundle.models.end(),
                                     [&](const BundleEntry& e) { return e.model.channel == ch; });
        if (it == bundle.models.end()) {
            throw Error(ErrorCode::IncompatibleBundle, "model bundle has no model for channel " +
                                                           std::to_string(ch.index()));
        }
        const std::vector<double> features = assemble_features(record, it->model.group);
        if (it->model.model.input_dim != features.size()) {
            throw Error(ErrorCode::IncompatibleBundle,
                        "model for channel " + std::to_string(ch.index()) + " expects " +
                            std::to_string(it->model.model.input_dim) + " features, group " +
                            std::to_string(group_number(it->model.group)) + " provides " +
                            std::to_string(features.size()));
        }
        const Matrix X = Eigen::Map<const Eigen::RowVectorXd>(features.data(), static_cast<Eigen::Index>(features.size()));
        const double value = predict(it->model.model, X)[0];
        out.push_back(ChannelPrediction{ch, it->model.model.kind, it->model.group, value, it->study_rmse});
    }
    return out;
}

}  // namespace impforecast
