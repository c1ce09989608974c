#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "impforecast/domain.hpp"

namespace impforecast {

// ---------------------------------------------------------------------------
// CSV
// ---------------------------------------------------------------------------

/// Canonical column names in file order: age, ei_intra_1..12, ei_1m_1..12.
std::vector<std::string> cohort_columns(bool labeled);

/// Parses a cohort from CSV text. Columns are matched by header name; extra
/// unknown columns are ignored. Labels are read only when all twelve ei_1m_*
/// columns are present; a partial label set is a MissingColumn error.
/// Throws Error with EmptyFile, MissingColumn, WrongArity, BadNumber or
/// NonPositive (row is 1-based over data rows).
Cohort parse_cohort_csv(std::string_view text);
Cohort read_cohort_csv(const std::filesystem::path& path);

/// Writes the canonical header and one row per record. Numbers use the
/// shortest decimal form that parses back to the same double.
std::string serialize_cohort_csv(const Cohort& cohort);
void write_cohort_csv(const Cohort& cohort, const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Validation
// ---------------------------------------------------------------------------

struct ValidationIssue {
    long row;  // 1-based data row; 0 for cohort-level issues
    std::string column;
    std::string message;

    bool operator==(const ValidationIssue&) const = default;
};

struct ValidationReport {
    std::vector<ValidationIssue> errors;
    std::vector<ValidationIssue> warnings;

    bool ok() const noexcept { return errors.empty(); }
};

/// Structural problems (non-finite values, non-positive impedances or ages,
/// empty cohort) are errors. One-month labels outside the published range of
/// their channel are warnings; the bounds are inclusive. Issues are sorted by
/// row, then by schema column order.
ValidationReport validate_cohort(const Cohort& cohort);

// ---------------------------------------------------------------------------
// Synthetic cohorts
// ---------------------------------------------------------------------------

/// Per-channel generative rule:
///   ei_1m = slope_intra * ei_intra + slope_age * age + offset + Normal(0, noise_sd^2)
/// clipped to the channel's published one-month range.
struct SyntheticChannelRule {
    double slope_intra;
    double slope_age;
    double offset;
    double noise_sd;
    double intra_min;
    double intra_max;
};

struct SyntheticSpec {
    std::array<SyntheticChannelRule, kChannelCount> channels;
    double age_min = 1.0;
    double age_max = 6.0;

    /// The documented default coefficients. These are a modeling convenience
    /// for exercising the pipeline, not clinical ground truth.
    static SyntheticSpec defaults();
    /// Same rule with every channel's noise replaced by `noise_sd`.
    SyntheticSpec with_noise(double noise_sd) const;
};

/// Labeled cohort of n records, deterministic in (n, seed, spec). All values
/// are quantized to 6 decimals. Throws InvalidCount for n == 0.
Cohort generate_synthetic_cohort(std::size_t n, std::uint64_t seed);
Cohort generate_synthetic_cohort(std::size_t n, std::uint64_t seed, const SyntheticSpec& spec);

// ---------------------------------------------------------------------------
// Splitting
// ---------------------------------------------------------------------------

struct SplitSpec {
    double test_fraction = 0.30;
    std::uint64_t seed = 42;
};

/// round(n * fraction) clamped to [1, n-1]. Requires n >= 2.
std::size_t test_count(std::size_t n, double test_fraction);

struct CohortSplit {
    Cohort train;
    Cohort test;
    // Original record positions of each part, ascending.
    std::vector<std::size_t> train_indices;
    std::vector<std::size_t> test_indices;
};

/// Seeded shuffle; the first test_count positions of the permutation form the
/// test set. Each part keeps the original relative record order.
/// Throws TooSmall (n < 2), UnlabeledCohort, or InvalidArgument for a
/// fraction outside (0, 1).
CohortSplit split_cohort(const Cohort& cohort, const SplitSpec& spec);

}  // namespace impforecast
