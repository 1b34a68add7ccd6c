#include "xtask/core/config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include <fmt/format.h>

#include "xtask/error.hpp"

namespace xtask {

std::string trim(std::string_view text) {
    const auto first = text.find_first_not_of(" \t\r\n");
    if (first == std::string_view::npos) return {};
    const auto last = text.find_last_not_of(" \t\r\n");
    return std::string(text.substr(first, last - first + 1));
}

std::vector<std::string> split_list(std::string_view text, char separator) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (start <= text.size()) {
        const auto end = text.find(separator, start);
        const auto piece = trim(text.substr(start, end == std::string_view::npos ? text.size() - start : end - start));
        if (!piece.empty()) out.push_back(piece);
        if (end == std::string_view::npos) break;
        start = end + 1;
    }
    return out;
}

std::optional<double> parse_double(std::string_view text) {
    const auto s = trim(text);
    if (s.empty()) return std::nullopt;
    const char* begin = s.data();
    if (*begin == '+') ++begin;
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(begin, s.data() + s.size(), value);
    if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
    return value;
}

std::optional<long long> parse_int(std::string_view text) {
    const auto s = trim(text);
    if (s.empty()) return std::nullopt;
    long long value = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
    if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
    return value;
}

KeyValueConfig KeyValueConfig::parse(std::string_view text, std::string_view source) {
    KeyValueConfig config;
    std::size_t line_no = 0;
    std::size_t start = 0;
    while (start < text.size()) {
        auto end = text.find('\n', start);
        if (end == std::string_view::npos) end = text.size();
        const auto line = trim(text.substr(start, end - start));
        ++line_no;
        start = end + 1;
        if (line.empty() || line.front() == '#') continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw ParseError(std::string(source), line_no, fmt::format("expected 'key = value', got '{}'", line));
        }
        auto key = trim(std::string_view(line).substr(0, eq));
        if (key.empty()) throw ParseError(std::string(source), line_no, "empty key");
        config.set(std::move(key), trim(std::string_view(line).substr(eq + 1)));
    }
    return config;
}

KeyValueConfig KeyValueConfig::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::io, fmt::format("cannot open config file '{}'", path));
    std::stringstream buffer;
    buffer << in.rdbuf();
    return parse(buffer.str(), path);
}

void KeyValueConfig::set(std::string key, std::string value) {
    for (auto& e : entries_) {
        if (e.key == key) {
            e.value = std::move(value);
            return;
        }
    }
    entries_.push_back({std::move(key), std::move(value)});
}

bool KeyValueConfig::contains(std::string_view key) const { return get(key).has_value(); }

std::optional<std::string> KeyValueConfig::get(std::string_view key) const {
    for (const auto& e : entries_) {
        if (e.key == key) return e.value;
    }
    return std::nullopt;
}

std::string KeyValueConfig::get_or(std::string_view key, std::string fallback) const {
    auto v = get(key);
    return v ? *v : std::move(fallback);
}

double KeyValueConfig::get_double(std::string_view key, double fallback) const {
    const auto v = get(key);
    if (!v) return fallback;
    const auto parsed = parse_double(*v);
    if (!parsed) throw Error(ErrorKind::invalid_argument, fmt::format("config key '{}': '{}' is not a number", key, *v));
    return *parsed;
}

long long KeyValueConfig::get_int(std::string_view key, long long fallback) const {
    const auto v = get(key);
    if (!v) return fallback;
    const auto parsed = parse_int(*v);
    if (!parsed) throw Error(ErrorKind::invalid_argument, fmt::format("config key '{}': '{}' is not an integer", key, *v));
    return *parsed;
}

std::string KeyValueConfig::to_text() const {
    std::string out;
    for (const auto& e : entries_) out += fmt::format("{} = {}\n", e.key, e.value);
    return out;
}

}  // namespace xtask
