#pragma once

#include <string>
#include <string_view>
#include <optional>

#include "impforecast/pipeline.hpp"

namespace impforecast {

enum class OutputFormat { Text, Csv, Json };

std::optional<OutputFormat> format_from_string(std::string_view text) noexcept;

struct RenderOptions {
    OutputFormat format = OutputFormat::Text;
    int decimals_rmse = 6;
    int decimals_pct = 2;

    /// Throws InvalidArgument unless both decimal counts lie in [0, 10].
    void validate() const;
};

/// Best model per channel: label, algorithm (with abbreviation), feature
/// group, RMSE. Rows follow channel order whatever the entry order.
std::string render_selection_table(const StudyReport& report, const RenderOptions& opts = {});

/// Error-band percentages per channel: 0-1, 1-2, 2-3, 0-2, 0-3, and >=3.
std::string render_band_table(const StudyReport& report, const RenderOptions& opts = {});

/// Count of channels won by each algorithm.
std::string render_histogram_table(const StudyReport& report);

/// All three tables, separated by blank lines.
std::string render_text(const StudyReport& report, const RenderOptions& opts = {});

/// CSV (one row per channel) or the StudyReport JSON document. Byte-stable
/// for a given report. Throws UnsupportedFormat for text.
std::string export_study(const StudyReport& report, const RenderOptions& opts);

}  // namespace impforecast
