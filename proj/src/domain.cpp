#include "impforecast/domain.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace impforecast {

namespace {

struct RangeRow {
    double min;
    double max;
    double range;
};

// One-month impedance bounds observed in the clinical cohort (kOhm).
constexpr std::array<RangeRow, kChannelCount> kPublishedRanges{{
    {4.48, 16.86, 12.38},
    {5.37, 17.64, 12.27},
    {4.19, 14.57, 10.38},
    {3.38, 17.47, 14.09},
    {2.71, 16.5, 13.79},
    {2.1, 10.55, 8.45},
    {1.97, 8.94, 6.97},
    {2.34, 8.59, 6.25},
    {2.34, 8.3, 5.96},
    {2.12, 8.0, 5.88},
    {2.12, 9.62, 7.5},
    {2.12, 9.31, 7.19},
}};

}  // namespace

ChannelId::ChannelId(int index) : index_(index) {
    if (index < 1 || index > static_cast<int>(kChannelCount)) {
        throw std::out_of_range("channel index must be in 1..12, got " + std::to_string(index));
    }
}

std::array<ChannelId, kChannelCount> ChannelId::all() {
    return {ChannelId{1}, ChannelId{2}, ChannelId{3}, ChannelId{4},  ChannelId{5},  ChannelId{6},
            ChannelId{7}, ChannelId{8}, ChannelId{9}, ChannelId{10}, ChannelId{11}, ChannelId{12}};
}

ImpedanceKOhm::ImpedanceKOhm(double value) : value_(value) {
    if (!std::isfinite(value) || value <= 0.0) {
        throw std::invalid_argument("impedance must be finite and positive");
    }
}

bool Cohort::labeled() const noexcept {
    return !records.empty() &&
           std::all_of(records.begin(), records.end(), [](const PatientRecord& r) { return r.labeled(); });
}

std::size_t feature_dimension(FeatureGroup group) noexcept {
    return group == FeatureGroup::G1 ? 1 : 1 + kChannelCount;
}

int group_number(FeatureGroup group) noexcept { return group == FeatureGroup::G1 ? 1 : 2; }

std::optional<FeatureGroup> group_from_number(int number) noexcept {
    if (number == 1) return FeatureGroup::G1;
    if (number == 2) return FeatureGroup::G2;
    return std::nullopt;
}

std::string_view abbreviation(ModelKind kind) noexcept {
    switch (kind) {
        case ModelKind::LR: return "LR";
        case ModelKind::BLR: return "BLR";
        case ModelKind::DFR: return "DFR";
        case ModelKind::BDTR: return "BDTR";
        case ModelKind::NNR: return "NNR";
    }
    return "?";
}

std::string_view long_name(ModelKind kind) noexcept {
    switch (kind) {
        case ModelKind::LR: return "Linear Regression";
        case ModelKind::BLR: return "Bayesian Linear Regression";
        case ModelKind::DFR: return "Decision Forest Regression";
        case ModelKind::BDTR: return "Boosted Decision Tree Regression";
        case ModelKind::NNR: return "Neural Network Regression";
    }
    return "?";
}

std::optional<ModelKind> kind_from_abbreviation(std::string_view abbrev) noexcept {
    for (ModelKind k : kModelKinds) {
        if (abbreviation(k) == abbrev) return k;
    }
    return std::nullopt;
}

ChannelRange published_range(ChannelId channel) {
    const RangeRow& row = kPublishedRanges[channel.offset()];
    return ChannelRange{channel, ImpedanceKOhm{row.min}, ImpedanceKOhm{row.max}, ImpedanceKOhm{row.range}};
}

std::vector<double> assemble_features(const PatientRecord& record, FeatureGroup group) {
    std::vector<double> out;
    out.reserve(feature_dimension(group));
    out.push_back(record.age_at_implantation);
    if (group == FeatureGroup::G2) {
        out.insert(out.end(), record.ei_intra.begin(), record.ei_intra.end());
    }
    return out;
}

std::string label_name(ChannelId channel) { return "EI_1M_" + std::to_string(channel.index()); }

}  // namespace impforecast
