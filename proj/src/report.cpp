#include "impforecast/report.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <vector>

#include "impforecast/error.hpp"
#include "impforecast/serialize.hpp"

namespace impforecast {

namespace {

using Row = std::vector<std::string>;

std::string fixed(double value, int decimals) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", decimals, value);
    return buf;
}

std::string shortest(double value) {
    char buf[32];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
    return std::string(buf, ptr);
}

// UTF-8 aware width so "kΩ"-style headers would still align.
std::size_t display_width(const std::string& s) {
    return static_cast<std::size_t>(
        std::count_if(s.begin(), s.end(), [](char c) { return (static_cast<unsigned char>(c) & 0xC0) != 0x80; }));
}

std::string render_table(const std::string& title, const Row& header, const std::vector<Row>& rows) {
    std::vector<std::size_t> widths(header.size(), 0);
    auto widen = [&](const Row& r) {
        for (std::size_t i = 0; i < r.size(); ++i) widths[i] = std::max(widths[i], display_width(r[i]));
    };
    widen(header);
    for (const Row& r : rows) widen(r);

    auto line = [&](const Row& r) {
        std::string out;
        for (std::size_t i = 0; i < r.size(); ++i) {
            if (i) out += " | ";
            out += r[i];
            if (i + 1 < r.size()) out.append(widths[i] - display_width(r[i]), ' ');
        }
        return out + "\n";
    };

    std::string out = title + "\n" + line(header);
    for (std::size_t i = 0; i < widths.size(); ++i) {
        if (i) out += "-+-";
        out.append(widths[i], '-');
    }
    out += "\n";
    for (const Row& r : rows) out += line(r);
    return out;
}

std::vector<const SelectionEntry*> by_channel(const StudyReport& report) {
    std::vector<const SelectionEntry*> sorted;
    for (const auto& e : report.entries) sorted.push_back(&e);
    std::stable_sort(sorted.begin(), sorted.end(),
                     [](const SelectionEntry* a, const SelectionEntry* b) { return a->channel < b->channel; });
    return sorted;
}

std::string algorithm_name(ModelKind kind) {
    return std::string(long_name(kind)) + " (" + std::string(abbreviation(kind)) + ")";
}

}  // namespace

std::optional<OutputFormat> format_from_string(std::string_view text) noexcept {
    if (text == "text") return OutputFormat::Text;
    if (text == "csv") return OutputFormat::Csv;
    if (text == "json") return OutputFormat::Json;
    return std::nullopt;
}

void RenderOptions::validate() const {
    if (decimals_rmse < 0 || decimals_rmse > 10 || decimals_pct < 0 || decimals_pct > 10) {
        throw Error(ErrorCode::InvalidArgument, "decimal counts must lie in [0, 10]");
    }
}

std::string render_selection_table(const StudyReport& report, const RenderOptions& opts) {
    opts.validate();
    std::vector<Row> rows;
    for (const SelectionEntry* e : by_channel(report)) {
        rows.push_back({label_name(e->channel), algorithm_name(e->kind), std::to_string(group_number(e->group)),
                        fixed(e->rmse, opts.decimals_rmse)});
    }
    return render_table("Best algorithm and RMSE per channel",
                        {"Label", "Best Algorithm", "Features Group", "RMSE"}, rows);
}

std::string render_band_table(const StudyReport& report, const RenderOptions& opts) {
    opts.validate();
    std::vector<Row> rows;
    for (const SelectionEntry* e : by_channel(report)) {
        const ErrorBands& b = e->bands;
        const int p = opts.decimals_pct;
        rows.push_back({label_name(e->channel), fixed(b.pct[0], p), fixed(b.pct[1], p), fixed(b.pct[2], p),
                        fixed(b.cum_0_2, p), fixed(b.cum_0_3, p), fixed(b.pct[3], p)});
    }
    return render_table("Prediction error percentage by range (kOhm)",
                        {"Label", "0-1", "1-2", "2-3", "0-2", "0-3", ">=3"}, rows);
}

std::string render_histogram_table(const StudyReport& report) {
    std::vector<std::pair<ModelKind, int>> counts;
    for (ModelKind k : kModelKinds) {
        const auto it = report.histogram.find(k);
        counts.emplace_back(k, it == report.histogram.end() ? 0 : it->second);
    }
    // Most frequent first; the stable sort keeps simplicity order among equals.
    std::stable_sort(counts.begin(), counts.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
    std::vector<Row> rows;
    for (const auto& [kind, count] : counts) rows.push_back({algorithm_name(kind), std::to_string(count)});
    return render_table("Channels won per algorithm", {"Algorithm", "Count of Labels"}, rows);
}

std::string render_text(const StudyReport& report, const RenderOptions& opts) {
    return render_selection_table(report, opts) + "\n" + render_histogram_table(report) + "\n" +
           render_band_table(report, opts);
}

std::string export_study(const StudyReport& report, const RenderOptions& opts) {
    switch (opts.format) {
        case OutputFormat::Json:
            return dump(to_json(report));
        case OutputFormat::Csv: {
            std::string out =
                "label,channel,kind,algorithm,group,rmse,n_test,count_0_1,count_1_2,count_2_3,count_3_plus,"
                "pct_0_1,pct_1_2,pct_2_3,pct_3_plus,cum_0_2,cum_0_3\n";
            for (const SelectionEntry* e : by_channel(report)) {
                const ErrorBands& b = e->bands;
                out += label_name(e->channel) + "," + std::to_string(e->channel.index()) + "," +
                       std::string(abbreviation(e->kind)) + "," + std::string(long_name(e->kind)) + "," +
                       std::to_string(group_number(e->group)) + "," + shortest(e->rmse) + "," +
                       std::to_string(b.n_test);
                for (std::size_t c : b.counts) out += "," + std::to_string(c);
                for (double p : b.pct) out += "," + fixed(p, 2);
                out += "," + fixed(b.cum_0_2, 2) + "," + fixed(b.cum_0_3, 2) + "\n";
            }
            return out;
        }
        case OutputFormat::Text:
            break;
    }
    throw Error(ErrorCode::UnsupportedFormat, "export supports csv and json; use render_text for text");
}

}  // namespace impforecast
