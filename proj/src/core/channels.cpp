#include "xtask/core/channels.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <numbers>

#include <fmt/format.h>
#include <fmt/ranges.h>

#include "xtask/core/config.hpp"
#include "xtask/error.hpp"

namespace xtask {

namespace {

constexpr std::array<std::string_view, 64> kCap{
    "Fp1", "Fz",  "F3",  "F7",  "FT9", "FC5", "FC1", "C3",  "T7",  "TP9", "CP5", "CP1", "Pz",  "P3",  "P7",  "O1",
    "Oz",  "O2",  "P4",  "P8",  "TP10", "CP6", "CP2", "Cz", "C4",  "T8",  "FT10", "FC6", "FC2", "F4", "F8",  "Fp2",
    "AF7", "AF3", "AFz", "F1",  "F5",  "FT7", "FC3", "C1",  "C5",  "TP7", "CP3", "P1",  "P5",  "PO7", "PO3", "POz",
    "PO4", "PO8", "P6",  "P2",  "CPz", "CP4", "TP8", "C6",  "C2",  "FC4", "FT8", "F6",  "AF8", "AF4", "F2",  "Iz",
};

// Custom sets: the N left-hemisphere electrodes closest to C1 (ties in cap
// order); custom-32 exceeds the 28 left electrodes and adds the nearest
// midline sites. Standard sets: 16-channel double banana subset, the 10-20
// montage with TP9/TP10 in place of the ear electrodes, and the 32-channel
// actiCap layout.
constexpr std::string_view kDefaultSets = R"(# name = comma-separated channels
custom-4 = C1, C3, FC1, CP1
custom-8 = C1, C3, FC1, CP1, FC3, CP3, C5, F1
custom-16 = C1, C3, FC1, CP1, FC3, CP3, C5, F1, P1, FC5, CP5, F3, P3, F5, P5, T7
custom-21 = C1, C3, FC1, CP1, FC3, CP3, C5, F1, P1, FC5, CP5, F3, P3, F5, P5, T7, FT7, TP7, AF3, PO3, F7
custom-32 = C1, C3, FC1, CP1, FC3, CP3, C5, F1, P1, FC5, CP5, F3, P3, F5, P5, T7, FT7, TP7, AF3, PO3, F7, P7, AF7, PO7, Fp1, O1, FT9, TP9, Cz, CPz, Fz, Pz
standard-16 = Fp1, Fp2, F7, F3, F4, F8, T7, C3, C4, T8, P7, P3, P4, P8, O1, O2
standard-21 = Fp1, Fp2, F7, F3, Fz, F4, F8, T7, C3, Cz, C4, T8, P7, P3, Pz, P4, P8, O1, O2, TP9, TP10
standard-32 = Fp1, Fz, F3, F7, FT9, FC5, FC1, C3, T7, TP9, CP5, CP1, Pz, P3, P7, O1, Oz, O2, P4, P8, TP10, CP6, CP2, Cz, C4, T8, FT10, FC6, FC2, F4, F8, Fp2
)";

struct Row {
    std::string_view prefix;
    double midline_y;
    double outer_angle_deg;  // angle of the "7" electrode from +y
};

// Longest prefixes first so "FT" wins over "F".
constexpr std::array<Row, 13> kRows{{
    {"Fp", 4.0, 18.0},
    {"AF", 3.0, 36.0},
    {"FT", 1.0, 72.0},
    {"FC", 1.0, 72.0},
    {"TP", -1.0, 108.0},
    {"CP", -1.0, 108.0},
    {"PO", -3.0, 144.0},
    {"F", 2.0, 54.0},
    {"C", 0.0, 90.0},
    {"T", 0.0, 90.0},
    {"P", -2.0, 126.0},
    {"O", -4.0, 162.0},
    {"I", -5.0, 180.0},
}};

constexpr double kOuterRadius = 4.0;

struct ParsedLabel {
    const Row* row = nullptr;
    int number = 0;  // 0 for midline
};

ParsedLabel parse_label(std::string_view name) {
    const auto canonical = canonical_channel(name);
    if (!canonical) throw Error(ErrorKind::registry, fmt::format("'{}' is not an electrode of the 64-channel cap", name));
    std::string_view label = *canonical;
    for (const auto& row : kRows) {
        if (label.substr(0, row.prefix.size()) != row.prefix) continue;
        const auto suffix = label.substr(row.prefix.size());
        if (suffix == "z") return {&row, 0};
        const auto n = parse_int(suffix);
        if (n && *n > 0) return {&row, static_cast<int>(*n)};
    }
    throw Error(ErrorKind::registry, fmt::format("cannot parse electrode label '{}'", name));
}

std::string lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::tolower(c); });
    return out;
}

ChannelSetKind kind_from_name(std::string_view name) {
    return name.starts_with("standard") ? ChannelSetKind::standard : ChannelSetKind::custom;
}

}  // namespace

std::span<const std::string_view> cap_vocabulary() { return kCap; }

std::optional<std::string> canonical_channel(std::string_view name) {
    const auto key = lower(trim(name));
    for (auto c : kCap) {
        if (lower(c) == key) return std::string(c);
    }
    return std::nullopt;
}

Hemisphere hemisphere(std::string_view name) {
    const auto p = parse_label(name);
    if (p.number == 0) return Hemisphere::midline;
    return p.number % 2 == 1 ? Hemisphere::left : Hemisphere::right;
}

std::string mirror_channel(std::string_view name) {
    const auto p = parse_label(name);
    if (p.number == 0) return *canonical_channel(name);
    const int mirrored = p.number % 2 == 1 ? p.number + 1 : p.number - 1;
    return fmt::format("{}{}", p.row->prefix, mirrored);
}

ScalpPosition scalp_position(std::string_view name) {
    const auto p = parse_label(name);
    const double mid_y = p.row->midline_y;
    if (p.number == 0) return {0.0, mid_y};
    const double angle = p.row->outer_angle_deg * std::numbers::pi / 180.0;
    const double outer_x = kOuterRadius * std::sin(angle);
    const double outer_y = kOuterRadius * std::cos(angle);
    // Fp1/Fp2 and O1/O2 sit on the outer ring despite their low numbers.
    const bool ring_row = p.row->prefix == "Fp" || p.row->prefix == "O";
    const int rank = p.number % 2 == 1 ? p.number + 1 : p.number;
    const double fraction = ring_row ? 1.0 : rank / 8.0;
    const double side = p.number % 2 == 1 ? -1.0 : 1.0;
    return {side * fraction * outer_x, mid_y + fraction * (outer_y - mid_y)};
}

double scalp_distance(std::string_view a, std::string_view b) {
    const auto pa = scalp_position(a);
    const auto pb = scalp_position(b);
    return std::hypot(pa.x - pb.x, pa.y - pb.y);
}

ChannelRegistry ChannelRegistry::with_defaults() {
    ChannelRegistry registry;
    registry.load_config(kDefaultSets, "<default channel sets>");
    return registry;
}

std::string_view ChannelRegistry::default_config_text() { return kDefaultSets; }

void ChannelRegistry::add(ChannelSet set) {
    if (set.channels.empty()) {
        throw Error(ErrorKind::registry, fmt::format("channel set '{}' is empty", set.name));
    }
    std::vector<std::string> seen;
    for (auto& ch : set.channels) {
        const auto canonical = canonical_channel(ch);
        if (!canonical) {
            throw Error(ErrorKind::registry,
                        fmt::format("channel set '{}': '{}' is not an electrode of the 64-channel cap", set.name, ch));
        }
        if (std::find(seen.begin(), seen.end(), *canonical) != seen.end()) {
            throw Error(ErrorKind::registry, fmt::format("channel set '{}': duplicate channel '{}'", set.name, *canonical));
        }
        ch = *canonical;
        seen.push_back(ch);
    }
    auto name = set.name;
    sets_.insert_or_assign(std::move(name), std::move(set));
}

void ChannelRegistry::load_config(std::string_view text, std::string_view source) {
    const auto config = KeyValueConfig::parse(text, source);
    for (const auto& e : config.entries()) {
        add(ChannelSet{e.key, split_list(e.value), kind_from_name(e.key)});
    }
}

const ChannelSet& ChannelRegistry::get(std::string_view name) const {
    const auto it = sets_.find(name);
    if (it == sets_.end()) {
        throw Error(ErrorKind::registry,
                    fmt::format("unknown channel set '{}' (available: {})", name, fmt::join(names(), ", ")));
    }
    return it->second;
}

bool ChannelRegistry::contains(std::string_view name) const { return sets_.find(name) != sets_.end(); }

std::vector<std::string> ChannelRegistry::names() const {
    std::vector<std::string> out;
    out.reserve(sets_.size());
    for (const auto& [name, set] : sets_) out.push_back(name);
    return out;
}

ChannelSet make_channel_set(std::string_view name) {
    static const ChannelRegistry registry = ChannelRegistry::with_defaults();
    return registry.get(name);
}

std::vector<std::size_t> channel_indices(const std::vector<std::string>& names, const ChannelSet& set) {
    std::vector<std::size_t> rows;
    rows.reserve(set.channels.size());
    for (const auto& ch : set.channels) {
        const auto it = std::find(names.begin(), names.end(), ch);
        if (it == names.end()) {
            throw Error(ErrorKind::registry,
                        fmt::format("channel '{}' of set '{}' is not present in the recording", ch, set.name));
        }
        rows.push_back(static_cast<std::size_t>(it - names.begin()));
    }
    return rows;
}

RawRecording select_channels(const RawRecording& rec, const ChannelSet& set) {
    const auto rows = channel_indices(rec.channel_names(), set);
    SignalMatrix data(rows.size(), rec.data().cols());
    for (std::size_t i = 0; i < rows.size(); ++i) data.row(i) = rec.data().row(rows[i]);
    return RawRecording(std::move(data), rec.rate(), set.channels, rec.markers());
}

}  // namespace xtask
