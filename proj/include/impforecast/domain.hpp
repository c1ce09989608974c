#pragma once

#include <array>
#include <compare>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace impforecast {

inline constexpr std::size_t kChannelCount = 12;

/// Electrode channel on the 12-contact array, numbered 1..12.
class ChannelId {
public:
    /// Throws std::out_of_range outside 1..12.
    explicit ChannelId(int index);

    int index() const noexcept { return index_; }
    /// Zero-based position for array access.
    std::size_t offset() const noexcept { return static_cast<std::size_t>(index_ - 1); }

    auto operator<=>(const ChannelId&) const = default;

    static std::array<ChannelId, kChannelCount> all();

private:
    int index_;
};

/// Impedance in kilo-ohms; finite and strictly positive.
class ImpedanceKOhm {
public:
    /// Throws std::invalid_argument for non-finite or non-positive values.
    explicit ImpedanceKOhm(double value);
    double value() const noexcept { return value_; }
    auto operator<=>(const ImpedanceKOhm&) const = default;

private:
    double value_;
};

using ChannelValues = std::array<double, kChannelCount>;

/// One patient row. Values are plain doubles so that a record read from an
/// untrusted source can be inspected by validate_cohort before training.
struct PatientRecord {
    double age_at_implantation = 0.0;  // decimal years
    ChannelValues ei_intra{};
    std::optional<ChannelValues> ei_1m;

    bool labeled() const noexcept { return ei_1m.has_value(); }
    bool operator==(const PatientRecord&) const = default;
};

struct Cohort {
    std::vector<PatientRecord> records;

    /// True iff the cohort is nonempty and every record carries one-month labels.
    bool labeled() const noexcept;
    std::size_t size() const noexcept { return records.size(); }
    bool empty() const noexcept { return records.empty(); }
    bool operator==(const Cohort&) const = default;
};

enum class FeatureGroup { G1, G2 };

inline constexpr std::array<FeatureGroup, 2> kFeatureGroups{FeatureGroup::G1, FeatureGroup::G2};

/// Number of model inputs produced by a feature group: 1 for G1, 13 for G2.
std::size_t feature_dimension(FeatureGroup group) noexcept;
/// 1 or 2, as printed in result tables.
int group_number(FeatureGroup group) noexcept;
std::optional<FeatureGroup> group_from_number(int number) noexcept;

/// The five regression families, declared in simplicity order; the
/// enumerator order is the tie-break order used by model selection.
enum class ModelKind { LR, BLR, DFR, BDTR, NNR };

inline constexpr std::array<ModelKind, 5> kModelKinds{ModelKind::LR, ModelKind::BLR, ModelKind::DFR,
                                                      ModelKind::BDTR, ModelKind::NNR};

std::string_view abbreviation(ModelKind kind) noexcept;
std::string_view long_name(ModelKind kind) noexcept;
std::optional<ModelKind> kind_from_abbreviation(std::string_view abbrev) noexcept;

struct ChannelRange {
    ChannelId channel;
    ImpedanceKOhm min;
    ImpedanceKOhm max;
    ImpedanceKOhm range;
};

/// Published one-month min/max/range for a channel, in kOhm.
ChannelRange published_range(ChannelId channel);

/// Model input vector: G1 is [age]; G2 is [age, ei_intra_1, ..., ei_intra_12].
std::vector<double> assemble_features(const PatientRecord& record, FeatureGroup group);

/// Column label used in CSV headers and tables, e.g. "EI_1M_10".
std::string label_name(ChannelId channel);

}  // namespace impforecast
