#include "xtask/eval/export.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>

#include <fmt/format.h>

#include "xtask/core/config.hpp"
#include "xtask/error.hpp"

namespace xtask::eval {

namespace {

constexpr std::string_view kHeader = "subject,condition,channel_set,train_sets,test_set,tpr,tnr,ba";

void check_field(std::string_view field) {
    if (field.find_first_of(",\n\r\"") != std::string_view::npos) {
        throw Error(ErrorKind::invalid_argument, fmt::format("CSV field '{}' contains a delimiter", field));
    }
}

std::string join_sets(const std::vector<int>& sets) {
    std::string out;
    for (std::size_t i = 0; i < sets.size(); ++i) out += fmt::format("{}{}", i ? ";" : "", sets[i]);
    return out;
}

void write_file(const std::filesystem::path& path, std::string_view text) {
    std::ofstream out(path, std::ios::binary);
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!out) throw Error(ErrorKind::io, fmt::format("cannot write {}", path.string()));
}

// Linear-interpolation quantile of sorted data.
double quantile(const std::vector<double>& sorted, double q) {
    if (sorted.size() == 1) return sorted.front();
    const double pos = q * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(pos);
    const auto hi = std::min(lo + 1, sorted.size() - 1);
    return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

}  // namespace

std::string results_csv(std::span<const SplitResult> results) {
    std::string out(kHeader);
    out += '\n';
    for (const auto& r : results) {
        check_field(r.subject);
        check_field(r.channel_set);
        out += fmt::format("{},{},{},{},{},{},{},{}\n", r.subject, r.condition, r.channel_set, join_sets(r.train_sets),
                           r.test_set, r.tpr, r.tnr, r.ba);
    }
    return out;
}

std::vector<SplitResult> parse_results_csv(std::string_view text, std::string_view source) {
    std::vector<SplitResult> out;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    bool header = true;
    while (pos < text.size()) {
        auto end = text.find('\n', pos);
        if (end == std::string_view::npos) end = text.size();
        const auto line = trim(text.substr(pos, end - pos));
        pos = end + 1;
        ++line_no;
        if (line.empty()) continue;
        if (header) {
            if (line != kHeader) throw ParseError(std::string(source), line_no, "unexpected CSV header", "malformed_key");
            header = false;
            continue;
        }
        std::vector<std::string> fields;
        std::size_t start = 0;
        while (true) {
            const auto comma = line.find(',', start);
            fields.push_back(line.substr(start, comma == std::string::npos ? std::string::npos : comma - start));
            if (comma == std::string::npos) break;
            start = comma + 1;
        }
        if (fields.size() != 8) {
            throw ParseError(std::string(source), line_no, fmt::format("expected 8 fields, found {}", fields.size()));
        }
        SplitResult r;
        r.subject = fields[0];
        if (fields[1].size() != 1) throw ParseError(std::string(source), line_no, "condition must be one character");
        r.condition = fields[1][0];
        r.channel_set = fields[2];
        for (const auto& s : split_list(fields[3], ';')) {
            const auto v = parse_int(s);
            if (!v) throw ParseError(std::string(source), line_no, fmt::format("bad set index '{}'", s));
            r.train_sets.push_back(static_cast<int>(*v));
        }
        const auto test = parse_int(fields[4]);
        const auto tpr = parse_double(fields[5]);
        const auto tnr = parse_double(fields[6]);
        const auto ba = parse_double(fields[7]);
        if (!test || !tpr || !tnr || !ba) throw ParseError(std::string(source), line_no, "non-numeric field");
        r.test_set = static_cast<int>(*test);
        r.tpr = *tpr;
        r.tnr = *tnr;
        r.ba = *ba;
        out.push_back(std::move(r));
    }
    return out;
}

std::string summary_csv(std::span<const CellSummary> cells) {
    std::string out = "condition,channel_set,count,mean_ba,sd_ba,mean_tpr,mean_tnr,imbalanced\n";
    for (const auto& c : cells) {
        out += fmt::format("{},{},{},{},{},{},{},{}\n", c.condition, c.channel_set, c.count, c.mean_ba, c.sd_ba,
                           c.mean_tpr, c.mean_tnr, c.imbalanced ? "true" : "false");
    }
    return out;
}

std::string cell_svg_name(char condition, std::string_view channel_set) {
    return fmt::format("{}_{}.svg", condition, channel_set);
}

std::string cell_svg(const CellSummary& cell, std::span<const SplitResult> results) {
    constexpr double width = 360, height = 300, left = 50, right = 20, top = 40, bottom = 40;
    const double plot_h = height - top - bottom;
    const auto y_of = [&](double v) { return top + (1.0 - std::clamp(v, 0.0, 1.0)) * plot_h; };

    std::string svg = fmt::format(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{}\" height=\"{}\" font-family=\"sans-serif\" "
        "font-size=\"11\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
        "<text x=\"{}\" y=\"20\" text-anchor=\"middle\" font-size=\"13\">Condition {}, {} (n={}{})</text>\n",
        width, height, width / 2, cell.condition, cell.channel_set, cell.count,
        cell.imbalanced ? ", TPR/TNR imbalanced" : "");
    for (int tick = 0; tick <= 10; tick += 2) {
        const double v = tick / 10.0;
        svg += fmt::format("<line x1=\"{}\" x2=\"{}\" y1=\"{:.2f}\" y2=\"{:.2f}\" stroke=\"#ddd\"/>\n"
                           "<text x=\"{}\" y=\"{:.2f}\" text-anchor=\"end\">{:.1f}</text>\n",
                           left, width - right, y_of(v), y_of(v), left - 6, y_of(v) + 4, v);
    }

    const std::array<std::pair<const char*, double SplitResult::*>, 3> metrics{
        {{"BA", &SplitResult::ba}, {"TPR", &SplitResult::tpr}, {"TNR", &SplitResult::tnr}}};
    const double slot = (width - left - right) / static_cast<double>(metrics.size());
    for (std::size_t m = 0; m < metrics.size(); ++m) {
        const double cx = left + slot * (static_cast<double>(m) + 0.5);
        svg += fmt::format("<text x=\"{:.2f}\" y=\"{}\" text-anchor=\"middle\">{}</text>\n", cx, height - bottom + 18,
                           metrics[m].first);
        std::vector<double> v;
        for (const auto& r : results) v.push_back(r.*(metrics[m].second));
        if (v.empty()) continue;
        std::sort(v.begin(), v.end());
        const double q1 = quantile(v, 0.25), med = quantile(v, 0.5), q3 = quantile(v, 0.75);
        const double iqr = q3 - q1;
        double lo = q1, hi = q3;
        for (const double x : v) {
            if (x >= q1 - 1.5 * iqr) lo = std::min(lo, x);
            if (x <= q3 + 1.5 * iqr) hi = std::max(hi, x);
        }
        const double half = slot * 0.25;
        svg += fmt::format("<line x1=\"{0:.2f}\" x2=\"{0:.2f}\" y1=\"{1:.2f}\" y2=\"{2:.2f}\" stroke=\"black\"/>\n", cx,
                           y_of(lo), y_of(hi));
        svg += fmt::format(
            "<rect x=\"{:.2f}\" y=\"{:.2f}\" width=\"{:.2f}\" height=\"{:.2f}\" fill=\"#9ecae1\" stroke=\"black\"/>\n",
            cx - half, y_of(q3), 2 * half, std::max(0.5, y_of(q1) - y_of(q3)));
        svg += fmt::format("<line x1=\"{:.2f}\" x2=\"{:.2f}\" y1=\"{:.2f}\" y2=\"{:.2f}\" stroke=\"black\" "
                           "stroke-width=\"2\"/>\n",
                           cx - half, cx + half, y_of(med), y_of(med));
        for (const double x : v) {
            if (x < lo || x > hi) {
                svg += fmt::format("<circle cx=\"{:.2f}\" cy=\"{:.2f}\" r=\"2.5\" fill=\"none\" stroke=\"black\"/>\n",
                                   cx, y_of(x));
            }
        }
    }
    svg += "</svg>\n";
    return svg;
}

void export_report(const StudyReport& report, const std::string& directory, bool svg) {
    const std::filesystem::path dir(directory);
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw Error(ErrorKind::io, fmt::format("cannot create {}: {}", directory, ec.message()));
    write_file(dir / "results.csv", results_csv(report.results));
    const auto cells = report.cells();
    write_file(dir / "summary.csv", summary_csv(cells));
    if (!svg) return;
    for (const auto& cell : cells) {
        std::vector<SplitResult> members;
        for (const auto& r : report.results) {
            if (r.condition == cell.condition && r.channel_set == cell.channel_set) members.push_back(r);
        }
        write_file(dir / cell_svg_name(cell.condition, cell.channel_set), cell_svg(cell, members));
    }
}

}  // namespace xtask::eval
