#pragma once

#include <filesystem>
#include <string>

#include "json.hpp"

#include "impforecast/pipeline.hpp"
#include "impforecast/regress.hpp"

namespace impforecast {

/// Insertion-ordered JSON so emitted documents follow the documented field order.
using Json = nlohmann::ordered_json;

inline constexpr int kModelFormatVersion = 1;

Json to_json(const HyperParams& hyper);
HyperParams hyper_from_json(const Json& j);

/// {format_version, channel, kind, group, input_dim, standardizer, params, hyper, seed}
Json to_json(const TrainedModel& model);
TrainedModel model_from_json(const Json& j);

Json to_json(const ErrorBands& bands);
ErrorBands bands_from_json(const Json& j);

/// {format_version, config, n_train, n_test, entries, histogram}
Json to_json(const StudyReport& report);
StudyReport report_from_json(const Json& j);

/// {format_version, models: [model + study_rmse]}
Json to_json(const ModelBundle& bundle);
/// Throws IncompatibleBundle on version mismatch, missing or duplicate
/// channels, or models whose input size does not match their feature group.
ModelBundle bundle_from_json(const Json& j);

/// Compact-but-readable dump with a trailing newline; byte-stable.
std::string dump(const Json& j);
/// Throws ParseError with the file name on malformed input.
Json read_json_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace impforecast
