#include "xtask/ingest/brainvision.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <vector>

#include <fmt/format.h>

#include "xtask/core/config.hpp"
#include "xtask/error.hpp"

namespace xtask::ingest {

static_assert(std::endian::native == std::endian::little, "binary readers assume a little-endian host");

namespace {

namespace fs = std::filesystem;

struct IniLine {
    std::size_t line = 0;
    std::string value;
};

using IniSection = std::map<std::string, IniLine, std::less<>>;
using Ini = std::map<std::string, IniSection, std::less<>>;

std::string read_text(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::io, fmt::format("cannot open '{}'", path));
    std::stringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

// Section/key text with the identification line checked.
Ini parse_ini(const std::string& text, const std::string& path, std::string_view kind) {
    std::istringstream in(text);
    std::string raw;
    std::size_t line_no = 0;
    bool identified = false;
    std::string section;
    Ini ini;
    while (std::getline(in, raw)) {
        ++line_no;
        if (!raw.empty() && raw.back() == '\r') raw.pop_back();
        if (line_no == 1 && raw.starts_with("\xEF\xBB\xBF")) raw.erase(0, 3);
        const auto line = trim(raw);
        if (!identified) {
            if (line.empty()) continue;
            if (!(line.starts_with("Brain Vision") || line.starts_with("BrainVision")) ||
                line.find(kind) == std::string::npos) {
                throw ParseError(path, line_no, fmt::format("not a BrainVision {} file", kind), "identification");
            }
            identified = true;
            continue;
        }
        if (line.empty() || line.front() == ';') continue;
        if (line.front() == '[') {
            if (line.back() != ']') throw ParseError(path, line_no, "unterminated section header", "malformed_key");
            section = line.substr(1, line.size() - 2);
            ini[section];
            continue;
        }
        // The free-text comment section has no key/value structure.
        if (section == "Comment") continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos || eq == 0 || section.empty()) {
            throw ParseError(path, line_no, fmt::format("malformed header key line '{}'", line), "malformed_key");
        }
        ini[section][trim(std::string_view(line).substr(0, eq))] = {line_no, std::string(std::string_view(line).substr(eq + 1))};
    }
    if (!identified) throw ParseError(path, 0, fmt::format("empty BrainVision {} file", kind), "identification");
    return ini;
}

const IniLine& require(const Ini& ini, std::string_view section, std::string_view key, const std::string& path) {
    const auto s = ini.find(section);
    if (s != ini.end()) {
        const auto k = s->second.find(key);
        if (k != s->second.end()) return k->second;
    }
    throw ParseError(path, 0, fmt::format("missing [{}] {}", section, key), "missing_key");
}

std::vector<std::string> split_fields(std::string_view text) {
    // Commas inside fields are escaped as "\1".
    std::vector<std::string> fields;
    std::string current;
    for (std::size_t i = 0; i < text.size(); ++i) {
        if (text[i] == ',') {
            fields.push_back(current);
            current.clear();
        } else if (text[i] == '\\' && i + 1 < text.size() && text[i + 1] == '1') {
            current += ',';
            ++i;
        } else {
            current += text[i];
        }
    }
    fields.push_back(current);
    return fields;
}

std::string escape_field(std::string_view text) {
    std::string out;
    for (char c : text) {
        if (c == ',') out += "\\1";
        else out += c;
    }
    return out;
}

double unit_to_microvolts(std::string_view unit, const std::string& path, std::size_t line) {
    const auto u = trim(unit);
    if (u.empty() || u == "µV" || u == "uV" || u == "\xB5V") return 1.0;
    if (u == "mV") return 1e3;
    if (u == "V") return 1e6;
    if (u == "nV") return 1e-3;
    throw ParseError(path, line, fmt::format("unsupported channel unit '{}'", u), "malformed_key");
}

std::size_t parse_index_suffix(std::string_view key, std::string_view prefix, const std::string& path, std::size_t line) {
    if (!key.starts_with(prefix)) {
        throw ParseError(path, line, fmt::format("unexpected key '{}'", key), "malformed_key");
    }
    const auto n = parse_int(key.substr(prefix.size()));
    if (!n || *n < 1) throw ParseError(path, line, fmt::format("malformed key '{}'", key), "malformed_key");
    return static_cast<std::size_t>(*n);
}

std::vector<Marker> read_markers(const std::string& path, std::size_t sample_count) {
    const auto ini = parse_ini(read_text(path), path, "Marker");
    std::vector<std::pair<std::size_t, Marker>> numbered;
    const auto section = ini.find("Marker Infos");
    if (section == ini.end()) return {};
    for (const auto& [key, entry] : section->second) {
        const auto index = parse_index_suffix(key, "Mk", path, entry.line);
        const auto fields = split_fields(entry.value);
        if (fields.size() < 5) {
            throw ParseError(path, entry.line, fmt::format("marker entry '{}' needs at least 5 fields", key), "malformed_key");
        }
        const auto position = parse_int(fields[2]);
        if (!position || *position < 0) {
            throw ParseError(path, entry.line, fmt::format("marker position '{}' is not a sample index", fields[2]),
                             "malformed_key");
        }
        if (static_cast<std::size_t>(*position) >= sample_count) {
            throw ParseError(path, entry.line,
                             fmt::format("marker position {} outside recording of {} samples", *position, sample_count),
                             "marker_out_of_range");
        }
        const auto description = trim(fields[1]);
        numbered.push_back({index, Marker{static_cast<std::size_t>(*position), description.empty() ? trim(fields[0]) : description}});
    }
    std::sort(numbered.begin(), numbered.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    std::vector<Marker> markers;
    markers.reserve(numbered.size());
    for (auto& [i, m] : numbered) markers.push_back(std::move(m));
    return markers;
}

}  // namespace

RawRecording read_brainvision(const std::string& header_path) {
    const auto ini = parse_ini(read_text(header_path), header_path, "Header");
    const auto dir = fs::path(header_path).parent_path();

    const auto& data_format = require(ini, "Common Infos", "DataFormat", header_path);
    if (trim(data_format.value) != "BINARY") {
        throw ParseError(header_path, data_format.line, fmt::format("unsupported DataFormat '{}'", data_format.value),
                         "unsupported_format");
    }
    const auto& orientation = require(ini, "Common Infos", "DataOrientation", header_path);
    if (trim(orientation.value) != "MULTIPLEXED") {
        throw ParseError(header_path, orientation.line,
                         fmt::format("unsupported DataOrientation '{}'", orientation.value), "unsupported_format");
    }
    const auto& channels_entry = require(ini, "Common Infos", "NumberOfChannels", header_path);
    const auto n_channels = parse_int(channels_entry.value);
    if (!n_channels || *n_channels < 1) {
        throw ParseError(header_path, channels_entry.line, "NumberOfChannels must be a positive integer", "malformed_key");
    }
    const auto& interval_entry = require(ini, "Common Infos", "SamplingInterval", header_path);
    const auto interval_us = parse_double(interval_entry.value);
    if (!interval_us || !(*interval_us > 0.0)) {
        throw ParseError(header_path, interval_entry.line, "SamplingInterval must be positive", "malformed_key");
    }
    const auto& binary_entry = require(ini, "Binary Infos", "BinaryFormat", header_path);
    const auto binary = trim(binary_entry.value);
    std::size_t sample_size = 0;
    if (binary == "INT_16") sample_size = 2;
    else if (binary == "IEEE_FLOAT_32") sample_size = 4;
    else {
        throw ParseError(header_path, binary_entry.line, fmt::format("unsupported BinaryFormat '{}'", binary),
                         "unsupported_format");
    }

    const auto count = static_cast<std::size_t>(*n_channels);
    std::vector<std::string> names(count);
    std::vector<double> scale(count, 1.0);
    const auto channel_section = ini.find("Channel Infos");
    if (channel_section == ini.end()) throw ParseError(header_path, 0, "missing [Channel Infos]", "missing_key");
    for (const auto& [key, entry] : channel_section->second) {
        const auto index = parse_index_suffix(key, "Ch", header_path, entry.line);
        if (index > count) {
            throw ParseError(header_path, entry.line, fmt::format("{} exceeds NumberOfChannels={}", key, count),
                             "malformed_key");
        }
        const auto fields = split_fields(entry.value);
        const auto name = trim(fields[0]);
        if (name.empty()) throw ParseError(header_path, entry.line, fmt::format("{} has no name", key), "malformed_key");
        double resolution = 1.0;
        if (fields.size() > 2 && !trim(fields[2]).empty()) {
            const auto r = parse_double(fields[2]);
            if (!r) throw ParseError(header_path, entry.line, fmt::format("bad resolution '{}'", fields[2]), "malformed_key");
            resolution = *r;
        }
        const double unit = fields.size() > 3 ? unit_to_microvolts(fields[3], header_path, entry.line) : 1.0;
        names[index - 1] = name;
        scale[index - 1] = resolution * unit;
    }
    for (std::size_t c = 0; c < count; ++c) {
        if (names[c].empty()) throw ParseError(header_path, 0, fmt::format("missing Ch{} entry", c + 1), "missing_key");
    }

    const auto data_path = (dir / trim(require(ini, "Common Infos", "DataFile", header_path).value)).string();
    const auto bytes = read_text(data_path);
    const std::size_t frame = count * sample_size;
    if (bytes.size() % frame != 0) {
        throw ParseError(data_path, 0,
                         fmt::format("truncated file: {} bytes is not a multiple of {} channels x {} bytes", bytes.size(),
                                     count, sample_size),
                         "truncated");
    }
    const std::size_t samples = bytes.size() / frame;
    SignalMatrix data(count, samples);
    const char* p = bytes.data();
    for (std::size_t s = 0; s < samples; ++s) {
        for (std::size_t c = 0; c < count; ++c) {
            double raw = 0.0;
            if (sample_size == 2) {
                std::int16_t v;
                std::memcpy(&v, p, 2);
                raw = v;
            } else {
                float v;
                std::memcpy(&v, p, 4);
                raw = v;
            }
            data(c, s) = raw * scale[c];
            p += sample_size;
        }
    }

    std::vector<Marker> markers;
    const auto marker_file = ini.find("Common Infos")->second.find("MarkerFile");
    if (marker_file != ini.find("Common Infos")->second.end()) {
        markers = read_markers((dir / trim(marker_file->second.value)).string(), samples);
    }
    return RawRecording(std::move(data), 1e6 / *interval_us, std::move(names), std::move(markers));
}

void write_brainvision(const RawRecording& rec, const std::string& header_path, BinaryFormat format, double resolution) {
    const fs::path header(header_path);
    const auto stem = header.stem().string();
    const auto dir = header.parent_path();
    const auto data_name = stem + ".eeg";
    const auto marker_name = stem + ".vmrk";
    const double res = format == BinaryFormat::int16 ? resolution : 1.0;

    {
        std::ofstream out(header_path, std::ios::binary);
        if (!out) throw Error(ErrorKind::io, fmt::format("cannot write '{}'", header_path));
        out << "Brain Vision Data Exchange Header File Version 1.0\n"
            << "[Common Infos]\nCodepage=UTF-8\n"
            << "DataFile=" << data_name << "\nMarkerFile=" << marker_name << "\n"
            << "DataFormat=BINARY\nDataOrientation=MULTIPLEXED\n"
            << "NumberOfChannels=" << rec.channel_count() << "\n"
            << fmt::format("SamplingInterval={}\n", 1e6 / rec.rate())
            << "\n[Binary Infos]\nBinaryFormat=" << (format == BinaryFormat::int16 ? "INT_16" : "IEEE_FLOAT_32") << "\n"
            << "\n[Channel Infos]\n";
        for (std::size_t c = 0; c < rec.channel_count(); ++c) {
            out << fmt::format("Ch{}={},,{},µV\n", c + 1, escape_field(rec.channel_names()[c]), res);
        }
    }
    {
        std::ofstream out((dir / data_name).string(), std::ios::binary);
        if (!out) throw Error(ErrorKind::io, fmt::format("cannot write '{}'", (dir / data_name).string()));
        const auto& d = rec.data();
        std::vector<char> buffer;
        buffer.reserve(rec.channel_count() * rec.sample_count() * (format == BinaryFormat::int16 ? 2 : 4));
        for (Eigen::Index s = 0; s < d.cols(); ++s) {
            for (Eigen::Index c = 0; c < d.rows(); ++c) {
                if (format == BinaryFormat::int16) {
                    const double scaled = std::round(d(c, s) / res);
                    const auto v = static_cast<std::int16_t>(std::clamp(scaled, -32768.0, 32767.0));
                    const auto* b = reinterpret_cast<const char*>(&v);
                    buffer.insert(buffer.end(), b, b + 2);
                } else {
                    const auto v = static_cast<float>(d(c, s));
                    const auto* b = reinterpret_cast<const char*>(&v);
                    buffer.insert(buffer.end(), b, b + 4);
                }
            }
        }
        out.write(buffer.data(), static_cast<std::streamsize>(buffer.size()));
    }
    {
        std::ofstream out((dir / marker_name).string(), std::ios::binary);
        if (!out) throw Error(ErrorKind::io, fmt::format("cannot write '{}'", (dir / marker_name).string()));
        out << "Brain Vision Data Exchange Marker File, Version 1.0\n"
            << "[Common Infos]\nCodepage=UTF-8\nDataFile=" << data_name << "\n\n[Marker Infos]\n";
        for (std::size_t i = 0; i < rec.markers().size(); ++i) {
            const auto& m = rec.markers()[i];
            out << fmt::format("Mk{}=Stimulus,{},{},1,0\n", i + 1, escape_field(m.code), m.sample);
        }
    }
}

}  // namespace xtask::ingest
