#include "xtask/ingest/motion.hpp"

#include <array>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include <fmt/format.h>

#include "xtask/core/config.hpp"
#include "xtask/error.hpp"

namespace xtask::ingest {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::optional<double> rate_from_comment(const std::string& line) {
    // "# rate = 500"
    auto body = trim(std::string_view(line).substr(1));
    const auto eq = body.find('=');
    if (eq == std::string::npos) return std::nullopt;
    if (trim(std::string_view(body).substr(0, eq)) != "rate") return std::nullopt;
    return parse_double(std::string_view(body).substr(eq + 1));
}

std::optional<double> rate_from_sidecar(const std::string& path) {
    const auto sidecar = path + ".cfg";
    if (!std::filesystem::exists(sidecar)) return std::nullopt;
    const auto cfg = KeyValueConfig::load(sidecar);
    if (!cfg.contains("rate")) return std::nullopt;
    return cfg.get_double("rate", 0.0);
}

bool is_missing(std::string_view cell) {
    const auto s = trim(cell);
    return s.empty() || s == "NaN" || s == "nan" || s == "NA";
}

}  // namespace

std::optional<std::size_t> MotionTrace::marker_index(const std::string& name) const {
    for (std::size_t i = 0; i < marker_names.size(); ++i) {
        if (marker_names[i] == name) return i;
    }
    return std::nullopt;
}

bool MotionTrace::has_gap(std::size_t marker, std::size_t begin, std::size_t end) const {
    for (const auto& g : flagged_gaps) {
        if (g.marker == marker && g.begin < end && begin < g.end) return true;
    }
    return false;
}

bool MotionTrace::operator==(const MotionTrace& other) const {
    if (marker_names != other.marker_names || rate != other.rate || flagged_gaps != other.flagged_gaps ||
        positions.size() != other.positions.size()) {
        return false;
    }
    for (std::size_t i = 0; i < positions.size(); ++i) {
        if (positions[i].rows() != other.positions[i].rows() || positions[i] != other.positions[i]) return false;
    }
    return true;
}

std::vector<GapSpan> fill_gaps(std::vector<PositionMatrix>& positions) {
    std::vector<GapSpan> flagged;
    for (std::size_t m = 0; m < positions.size(); ++m) {
        auto& p = positions[m];
        const auto n = static_cast<std::size_t>(p.rows());
        auto missing = [&](std::size_t i) { return p.row(i).hasNaN(); };
        std::size_t i = 0;
        bool any_valid = false;
        for (std::size_t k = 0; k < n; ++k) any_valid = any_valid || !missing(k);
        if (n > 0 && !any_valid) {
            throw Error(ErrorKind::format, fmt::format("motion marker #{} has no valid samples", m));
        }
        while (i < n) {
            if (!missing(i)) {
                ++i;
                continue;
            }
            std::size_t j = i;
            while (j < n && missing(j)) ++j;
            const std::size_t len = j - i;
            if (i == 0) {
                for (std::size_t k = i; k < j; ++k) p.row(k) = p.row(j);
            } else if (j == n) {
                for (std::size_t k = i; k < j; ++k) p.row(k) = p.row(i - 1);
            } else {
                const Eigen::RowVector3d a = p.row(i - 1);
                const Eigen::RowVector3d b = p.row(j);
                for (std::size_t k = i; k < j; ++k) {
                    const double t = static_cast<double>(k - (i - 1)) / static_cast<double>(len + 1);
                    p.row(k) = a + t * (b - a);
                }
            }
            if (len > kMaxInterpolatedGap) flagged.push_back({m, i, j});
            i = j;
        }
    }
    return flagged;
}

MotionTrace parse_motion_csv(const std::string& text, const std::string& source, std::optional<double> rate_override) {
    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;
    std::optional<double> rate = rate_override;
    std::optional<double> comment_rate;
    std::vector<std::string> header;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (trim(line).empty()) continue;
        if (line.front() == '#') {
            if (auto r = rate_from_comment(line)) comment_rate = r;
            continue;
        }
        header = split_list(line);
        break;
    }
    if (header.empty()) throw ParseError(source, line_no, "missing header row");

    // marker name -> column index per axis
    std::vector<std::string> names;
    std::vector<std::array<int, 3>> columns;
    static constexpr std::array<std::string_view, 3> kAxes{"_x", "_y", "_z"};
    for (std::size_t c = 0; c < header.size(); ++c) {
        const auto& col = header[c];
        int axis = -1;
        for (int a = 0; a < 3; ++a) {
            if (col.size() > 2 && col.ends_with(kAxes[a])) axis = a;
        }
        if (axis < 0) continue;  // time/frame columns are ignored
        const auto marker = col.substr(0, col.size() - 2);
        std::size_t m = 0;
        while (m < names.size() && names[m] != marker) ++m;
        if (m == names.size()) {
            names.push_back(marker);
            columns.push_back({-1, -1, -1});
        }
        columns[m][axis] = static_cast<int>(c);
    }
    if (names.empty()) throw ParseError(source, line_no, "no <marker>_x/_y/_z columns in header");
    for (std::size_t m = 0; m < names.size(); ++m) {
        for (int a = 0; a < 3; ++a) {
            if (columns[m][a] < 0) {
                throw ParseError(source, line_no,
                                 fmt::format("missing marker column '{}{}'", names[m], kAxes[a]));
            }
        }
    }

    std::vector<std::vector<std::array<double, 3>>> rows(names.size());
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (trim(line).empty() || line.front() == '#') continue;
        std::vector<std::string_view> cells;
        std::size_t start = 0;
        while (true) {
            const auto end = line.find(',', start);
            cells.emplace_back(std::string_view(line).substr(start, end == std::string::npos ? std::string::npos : end - start));
            if (end == std::string::npos) break;
            start = end + 1;
        }
        if (cells.size() != header.size()) {
            throw ParseError(source, line_no,
                             fmt::format("expected {} cells, found {}", header.size(), cells.size()));
        }
        for (std::size_t m = 0; m < names.size(); ++m) {
            std::array<double, 3> xyz{};
            for (int a = 0; a < 3; ++a) {
                const auto cell = cells[static_cast<std::size_t>(columns[m][a])];
                if (is_missing(cell)) {
                    xyz[a] = kNaN;
                    continue;
                }
                const auto v = parse_double(cell);
                if (!v) {
                    throw ParseError(source, line_no,
                                     fmt::format("non-numeric cell '{}' in column '{}{}'", trim(cell), names[m], kAxes[a]));
                }
                xyz[a] = *v;
            }
            rows[m].push_back(xyz);
        }
    }

    if (!rate) rate = comment_rate;
    if (!rate) rate = rate_from_sidecar(source);
    if (!rate || !(*rate > 0.0)) {
        throw ParseError(source, 0, "sampling rate not declared (use '# rate = <Hz>' or a .cfg sidecar)");
    }

    MotionTrace trace;
    trace.marker_names = names;
    trace.rate = *rate;
    for (const auto& r : rows) {
        PositionMatrix p(r.size(), 3);
        for (std::size_t i = 0; i < r.size(); ++i) p.row(i) << r[i][0], r[i][1], r[i][2];
        trace.positions.push_back(std::move(p));
    }
    trace.flagged_gaps = fill_gaps(trace.positions);
    return trace;
}

MotionTrace read_motion_csv(const std::string& path, std::optional<double> rate_override) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::io, fmt::format("cannot open motion file '{}'", path));
    std::stringstream buffer;
    buffer << in.rdbuf();
    return parse_motion_csv(buffer.str(), path, rate_override);
}

void write_motion_csv(const MotionTrace& trace, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorKind::io, fmt::format("cannot write motion file '{}'", path));
    out << fmt::format("# rate = {}\n", trace.rate);
    for (std::size_t m = 0; m < trace.marker_names.size(); ++m) {
        const auto& n = trace.marker_names[m];
        out << (m ? "," : "") << n << "_x," << n << "_y," << n << "_z";
    }
    out << '\n';
    std::string row;
    for (std::size_t i = 0; i < trace.sample_count(); ++i) {
        row.clear();
        for (std::size_t m = 0; m < trace.positions.size(); ++m) {
            const auto& p = trace.positions[m];
            row += fmt::format("{}{},{},{}", m ? "," : "", p(i, 0), p(i, 1), p(i, 2));
        }
        row += '\n';
        out << row;
    }
}

}  // namespace xtask::ingest
