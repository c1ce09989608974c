#include "impforecast/dataio.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <optional>
#include <sstream>

#include "impforecast/error.hpp"
#include "impforecast/random.hpp"

namespace impforecast {

namespace {

std::string intra_column(std::size_t offset) { return "ei_intra_" + std::to_string(offset + 1); }
std::string label_column(std::size_t offset) { return "ei_1m_" + std::to_string(offset + 1); }

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

std::vector<std::string_view> split_fields(std::string_view line) {
    std::vector<std::string_view> fields;
    std::size_t start = 0;
    while (true) {
        const std::size_t comma = line.find(',', start);
        if (comma == std::string_view::npos) {
            fields.push_back(trim(line.substr(start)));
            break;
        }
        fields.push_back(trim(line.substr(start, comma - start)));
        start = comma + 1;
    }
    return fields;
}

std::string to_lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::tolower(c); });
    return out;
}

double parse_number(std::string_view field, long row, const std::string& column) {
    double value = 0.0;
    const char* first = field.data();
    const char* last = field.data() + field.size();
    if (!field.empty() && *first == '+') ++first;
    const auto [ptr, ec] = std::from_chars(first, last, value);
    if (field.empty() || ec != std::errc{} || ptr != last || !std::isfinite(value)) {
        throw Error(ErrorCode::BadNumber,
                    "row " + std::to_string(row) + ", column " + column + ": not a finite number: '" +
                        std::string(field) + "'",
                    row, column);
    }
    return value;
}

double parse_positive(std::string_view field, long row, const std::string& column) {
    const double value = parse_number(field, row, column);
    if (value <= 0.0) {
        throw Error(ErrorCode::NonPositive,
                    "row " + std::to_string(row) + ", column " + column + ": value must be positive, got " +
                        std::string(field),
                    row, column);
    }
    return value;
}

void append_number(std::string& out, double value) {
    char buf[32];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
    out.append(buf, ptr);
}

std::string format_bound(double v) {
    std::ostringstream os;
    os << v;
    return os.str();
}

double quantize6(double v) { return std::round(v * 1e6) / 1e6; }

}  // namespace

std::vector<std::string> cohort_columns(bool labeled) {
    std::vector<std::string> cols{"age"};
    for (std::size_t c = 0; c < kChannelCount; ++c) cols.push_back(intra_column(c));
    if (labeled) {
        for (std::size_t c = 0; c < kChannelCount; ++c) cols.push_back(label_column(c));
    }
    return cols;
}

Cohort parse_cohort_csv(std::string_view text) {
    std::vector<std::string_view> lines;
    std::size_t start = 0;
    while (start <= text.size()) {
        std::size_t nl = text.find('\n', start);
        if (nl == std::string_view::npos) nl = text.size();
        std::string_view line = text.substr(start, nl - start);
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (!trim(line).empty()) lines.push_back(line);
        start = nl + 1;
    }
    if (lines.empty()) throw Error(ErrorCode::EmptyFile, "cohort CSV is empty");

    std::string_view header_line = lines.front();
    if (header_line.starts_with("\xEF\xBB\xBF")) header_line.remove_prefix(3);
    const auto header = split_fields(header_line);
    std::map<std::string, std::size_t> position;
    for (std::size_t i = 0; i < header.size(); ++i) position.emplace(to_lower(header[i]), i);

    auto require = [&](const std::string& name) {
        const auto it = position.find(name);
        if (it == position.end()) {
            throw Error(ErrorCode::MissingColumn, "missing required column '" + name + "'", 0, name);
        }
        return it->second;
    };

    const std::size_t age_pos = require("age");
    std::array<std::size_t, kChannelCount> intra_pos{};
    for (std::size_t c = 0; c < kChannelCount; ++c) intra_pos[c] = require(intra_column(c));

    std::size_t label_columns_present = 0;
    for (std::size_t c = 0; c < kChannelCount; ++c) label_columns_present += position.count(label_column(c));
    const bool has_labels = label_columns_present > 0;
    std::array<std::size_t, kChannelCount> label_pos{};
    if (has_labels) {
        for (std::size_t c = 0; c < kChannelCount; ++c) label_pos[c] = require(label_column(c));
    }

    Cohort cohort;
    cohort.records.reserve(lines.size() - 1);
    for (std::size_t i = 1; i < lines.size(); ++i) {
        const long row = static_cast<long>(i);
        const auto fields = split_fields(lines[i]);
        if (fields.size() != header.size()) {
            throw Error(ErrorCode::WrongArity,
                        "row " + std::to_string(row) + ": expected " + std::to_string(header.size()) +
                            " fields, found " + std::to_string(fields.size()),
                        row);
        }
        PatientRecord rec;
        rec.age_at_implantation = parse_positive(fields[age_pos], row, "age");
        for (std::size_t c = 0; c < kChannelCount; ++c) {
            rec.ei_intra[c] = parse_positive(fields[intra_pos[c]], row, intra_column(c));
        }
        if (has_labels) {
            ChannelValues labels{};
            for (std::size_t c = 0; c < kChannelCount; ++c) {
                labels[c] = parse_positive(fields[label_pos[c]], row, label_column(c));
            }
            rec.ei_1m = labels;
        }
        cohort.records.push_back(rec);
    }
    return cohort;
}

Cohort read_cohort_csv(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::EmptyFile, "cannot open cohort file " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_cohort_csv(buf.str());
}

std::string serialize_cohort_csv(const Cohort& cohort) {
    const bool labeled = cohort.labeled();
    std::string out;
    const auto cols = cohort_columns(labeled);
    for (std::size_t i = 0; i < cols.size(); ++i) {
        if (i) out += ',';
        out += cols[i];
    }
    out += '\n';
    for (const PatientRecord& rec : cohort.records) {
        append_number(out, rec.age_at_implantation);
        for (double v : rec.ei_intra) {
            out += ',';
            append_number(out, v);
        }
        if (labeled) {
            for (double v : *rec.ei_1m) {
                out += ',';
                append_number(out, v);
            }
        }
        out += '\n';
    }
    return out;
}

void write_cohort_csv(const Cohort& cohort, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::InvalidArgument, "cannot write " + path.string());
    out << serialize_cohort_csv(cohort);
}

ValidationReport validate_cohort(const Cohort& cohort) {
    ValidationReport report;
    if (cohort.empty()) {
        report.errors.push_back({0, "", "cohort has no records"});
        return report;
    }
    auto structural = [&](long row, const std::string& column, double v) {
        if (!std::isfinite(v)) {
            report.errors.push_back({row, column, "value is not finite"});
        } else if (v <= 0.0) {
            report.errors.push_back({row, column, "value must be positive"});
        }
    };
    for (std::size_t i = 0; i < cohort.records.size(); ++i) {
        const long row = static_cast<long>(i + 1);
        const PatientRecord& rec = cohort.records[i];
        structural(row, "age", rec.age_at_implantation);
        for (std::size_t c = 0; c < kChannelCount; ++c) structural(row, intra_column(c), rec.ei_intra[c]);
        if (!rec.ei_1m) continue;
        for (std::size_t c = 0; c < kChannelCount; ++c) {
            const double v = (*rec.ei_1m)[c];
            const std::string column = label_column(c);
            structural(row, column, v);
            if (!std::isfinite(v)) continue;
            const ChannelRange range = published_range(ChannelId{static_cast<int>(c + 1)});
            if (v > range.max.value()) {
                report.warnings.push_back({row, column, "above published max " + format_bound(range.max.value())});
            } else if (v < range.min.value()) {
                report.warnings.push_back({row, column, "below published min " + format_bound(range.min.value())});
            }
        }
    }
    return report;
}

SyntheticSpec SyntheticSpec::defaults() {
    // Documented coefficients. Intraoperative values are drawn over the same
    // per-channel bounds as the one-month labels. The rule is centred so that
    // the noiseless response stays inside the published range:
    //   offset = mid * (1 - slope_intra) - slope_age * 3.5
    // with noise_sd = 0.02 * range.
    constexpr std::array<double, kChannelCount> slope_intra{0.60, 0.62, 0.58, 0.55, 0.57, 0.60,
                                                            0.63, 0.61, 0.59, 0.62, 0.60, 0.58};
    constexpr std::array<double, kChannelCount> slope_age{0.10, 0.08, 0.12, 0.10, 0.09, 0.07,
                                                          0.06, 0.05, 0.06, 0.05, 0.06, 0.07};
    SyntheticSpec spec{};
    for (ChannelId ch : ChannelId::all()) {
        const std::size_t c = ch.offset();
        const ChannelRange range = published_range(ch);
        const double lo = range.min.value();
        const double hi = range.max.value();
        const double mid = 0.5 * (lo + hi);
        spec.channels[c] = SyntheticChannelRule{
            slope_intra[c],
            slope_age[c],
            mid * (1.0 - slope_intra[c]) - slope_age[c] * 3.5,
            0.02 * (hi - lo),
            lo,
            hi,
        };
    }
    return spec;
}

SyntheticSpec SyntheticSpec::with_noise(double noise_sd) const {
    SyntheticSpec copy = *this;
    for (auto& rule : copy.channels) rule.noise_sd = noise_sd;
    return copy;
}

Cohort generate_synthetic_cohort(std::size_t n, std::uint64_t seed) {
    return generate_synthetic_cohort(n, seed, SyntheticSpec::defaults());
}

Cohort generate_synthetic_cohort(std::size_t n, std::uint64_t seed, const SyntheticSpec& spec) {
    if (n == 0) throw Error(ErrorCode::InvalidCount, "synthetic cohort size must be at least 1");
    Rng rng(hash64({seed, 0x5e17u}));
    Cohort cohort;
    cohort.records.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        PatientRecord rec;
        rec.age_at_implantation = quantize6(rng.uniform(spec.age_min, spec.age_max));
        for (std::size_t c = 0; c < kChannelCount; ++c) {
            const auto& rule = spec.channels[c];
            rec.ei_intra[c] = quantize6(rng.uniform(rule.intra_min, rule.intra_max));
        }
        ChannelValues labels{};
        for (ChannelId ch : ChannelId::all()) {
            const std::size_t c = ch.offset();
            const auto& rule = spec.channels[c];
            const ChannelRange range = published_range(ch);
            const double mean =
                rule.slope_intra * rec.ei_intra[c] + rule.slope_age * rec.age_at_implantation + rule.offset;
            const double draw = mean + rule.noise_sd * rng.normal();
            labels[c] = quantize6(std::clamp(draw, range.min.value(), range.max.value()));
        }
        rec.ei_1m = labels;
        cohort.records.push_back(rec);
    }
    return cohort;
}

std::size_t test_count(std::size_t n, double test_fraction) {
    if (n < 2) throw Error(ErrorCode::TooSmall, "need at least 2 records to split");
    if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
        throw Error(ErrorCode::InvalidArgument, "test fraction must lie in (0, 1)");
    }
    const auto k = static_cast<std::size_t>(std::llround(static_cast<double>(n) * test_fraction));
    return std::clamp<std::size_t>(k, 1, n - 1);
}

CohortSplit split_cohort(const Cohort& cohort, const SplitSpec& spec) {
    const std::size_t n = cohort.size();
    if (n < 2) throw Error(ErrorCode::TooSmall, "need at least 2 records to split");
    if (!cohort.labeled()) throw Error(ErrorCode::UnlabeledCohort, "cannot split an unlabeled cohort");
    const std::size_t k = test_count(n, spec.test_fraction);

    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    Rng rng(hash64({spec.seed, 0x5b117u}));
    for (std::size_t i = n - 1; i > 0; --i) {
        const auto j = static_cast<std::size_t>(rng.below(i + 1));
        std::swap(perm[i], perm[j]);
    }

    CohortSplit out;
    out.test_indices.assign(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(k));
    out.train_indices.assign(perm.begin() + static_cast<std::ptrdiff_t>(k), perm.end());
    std::sort(out.test_indices.begin(), out.test_indices.end());
    std::sort(out.train_indices.begin(), out.train_indices.end());
    for (std::size_t i : out.train_indices) out.train.records.push_back(cohort.records[i]);
    for (std::size_t i : out.test_indices) out.test.records.push_back(cohort.records[i]);
    return out;
}

}  // namespace impforecast
