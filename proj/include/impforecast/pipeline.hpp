#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "impforecast/dataio.hpp"
#include "impforecast/domain.hpp"
#include "impforecast/regress.hpp"

namespace impforecast {

inline constexpr int kReportFormatVersion = 1;
inline constexpr int kBundleFormatVersion = 1;

// ---------------------------------------------------------------------------
// Metrics
// ---------------------------------------------------------------------------

/// Root mean squared error. Throws LengthMismatch or Empty.
double rmse(const Vector& predicted, const Vector& actual);

/// Rounds to 2 decimals, halves away from zero.
double round2(double value);

/// Absolute-error histogram over [0,1), [1,2), [2,3), [3,inf) kOhm.
/// Percentages and cumulative values are each rounded from the raw counts.
struct ErrorBands {
    std::array<std::size_t, 4> counts{};
    std::size_t n_test = 0;
    std::array<double, 4> pct{};
    double cum_0_2 = 0.0;
    double cum_0_3 = 0.0;

    bool operator==(const ErrorBands&) const = default;
};

ErrorBands bands_from_counts(const std::array<std::size_t, 4>& counts);
/// Throws LengthMismatch or Empty.
ErrorBands error_bands(const Vector& predicted, const Vector& actual);

// ---------------------------------------------------------------------------
// Study configuration and results
// ---------------------------------------------------------------------------

enum class SelectionMode {
    TestSet,          // rank candidates by held-out test RMSE
    InnerValidation,  // rank on a nested split of the training set, refit the winner
};

std::string_view to_string(SelectionMode mode) noexcept;
std::optional<SelectionMode> selection_from_string(std::string_view text) noexcept;

struct StudyConfig {
    std::uint64_t seed = 42;  // master seed for per-task seeds
    SplitSpec split{};
    HyperParams hyper{};
    SelectionMode selection = SelectionMode::TestSet;
    /// Worker threads; results do not depend on it and it is not echoed.
    std::size_t threads = 1;

    bool operator==(const StudyConfig& o) const {
        return seed == o.seed && split.test_fraction == o.split.test_fraction && split.seed == o.split.seed &&
               hyper == o.hyper && selection == o.selection;
    }
};

/// Seed of one (channel, kind, group) fit, independent of scheduling.
std::uint64_t task_seed(std::uint64_t master_seed, ChannelId channel, ModelKind kind, FeatureGroup group);

Matrix feature_matrix(const Cohort& cohort, FeatureGroup group);
/// One-month labels for a channel. Throws UnlabeledCohort.
Vector label_vector(const Cohort& cohort, ChannelId channel);

struct CandidateScore {
    ModelKind kind = ModelKind::LR;
    FeatureGroup group = FeatureGroup::G1;
    std::optional<double> rmse;  // empty when the fit failed
    std::string error;

    bool operator==(const CandidateScore&) const = default;
};

struct CandidateResult {
    double rmse = 0.0;
    ErrorBands bands;
    TrainedModel model;
};

/// Fits on `train` only and scores on `test` only.
CandidateResult evaluate_candidate(ModelKind kind, FeatureGroup group, ChannelId channel, const Cohort& train,
                                   const Cohort& test, const HyperParams& hyper, std::uint64_t seed);

/// Index of the lowest-RMSE candidate; exact ties go to the simpler kind, then
/// to G1. Throws AllCandidatesFailed if no candidate has a score.
std::size_t pick_best(std::span<const CandidateScore> candidates);

struct SelectionEntry {
    ChannelId channel{1};
    ModelKind kind = ModelKind::LR;
    FeatureGroup group = FeatureGroup::G2;
    double rmse = 0.0;  // held-out test RMSE of the selected model
    ErrorBands bands;
    /// Every evaluated candidate in grid order (kinds in simplicity order,
    /// G1 before G2) with the score used for ranking.
    std::vector<CandidateScore> candidates;

    bool operator==(const SelectionEntry&) const = default;
};

struct ChannelSelection {
    SelectionEntry entry;
    TrainedModel model;
};

/// Evaluates the 5 x 2 candidate grid for one channel and keeps the best.
ChannelSelection select_best(ChannelId channel, const Cohort& train, const Cohort& test, const StudyConfig& config);

using KindHistogram = std::map<ModelKind, int>;

/// Counts per kind, with every kind present (zero if never selected).
KindHistogram tally(std::span<const ModelKind> winners);

struct StudyReport {
    int format_version = kReportFormatVersion;
    StudyConfig config;
    std::size_t n_train = 0;
    std::size_t n_test = 0;
    std::vector<SelectionEntry> entries;  // sorted by channel
    KindHistogram histogram;

    bool operator==(const StudyReport&) const = default;
};

struct BundleEntry {
    TrainedModel model;
    double study_rmse = 0.0;

    bool operator==(const BundleEntry&) const = default;
};

/// The per-channel winners, used for prediction on new patients.
struct ModelBundle {
    int format_version = kBundleFormatVersion;
    std::vector<BundleEntry> models;  // sorted by channel

    bool operator==(const ModelBundle&) const = default;
};

struct StudyResult {
    StudyReport report;
    ModelBundle bundle;
};

/// Validates and splits the cohort once, then selects a model per channel.
/// Throws InvalidCohort (validation errors), UnlabeledCohort, TooSmall (n < 10)
/// or AllCandidatesFailed.
StudyResult run_study(const Cohort& cohort, const StudyConfig& config);

// ---------------------------------------------------------------------------
// Prediction
// ---------------------------------------------------------------------------

struct ChannelPrediction {
    ChannelId channel{1};
    ModelKind kind = ModelKind::LR;
    FeatureGroup group = FeatureGroup::G2;
    double kohm = 0.0;
    double study_rmse = 0.0;

    /// Uncertainty hint such as "RMSE 0.87 kΩ".
    std::string hint() const;
};

/// Predicts all 12 channels for one patient. Throws IncompatibleBundle when
/// the bundle has a wrong version or is missing a channel.
std::vector<ChannelPrediction> predict_one(const ModelBundle& bundle, const PatientRecord& record);

}  // namespace impforecast
