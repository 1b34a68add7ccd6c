#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace xtask {

/// Plain-text `key = value` configuration. Lines starting with `#` are
/// comments. A later assignment to the same key overrides an earlier one,
/// which is how command-line overrides are layered on top of a file.
class KeyValueConfig {
public:
    struct Entry {
        std::string key;
        std::string value;
    };

    static KeyValueConfig parse(std::string_view text, std::string_view source = "<config>");
    static KeyValueConfig load(const std::string& path);

    void set(std::string key, std::string value);
    bool contains(std::string_view key) const;
    std::optional<std::string> get(std::string_view key) const;
    std::string get_or(std::string_view key, std::string fallback) const;
    double get_double(std::string_view key, double fallback) const;
    long long get_int(std::string_view key, long long fallback) const;

    /// Entries in first-assignment order with their final values.
    const std::vector<Entry>& entries() const noexcept { return entries_; }

    /// Canonical text form; parsing it yields an identical config.
    std::string to_text() const;

private:
    std::vector<Entry> entries_;
};

std::string trim(std::string_view text);
std::vector<std::string> split_list(std::string_view text, char separator = ',');

/// Locale-independent number parsing; the whole token must be consumed.
std::optional<double> parse_double(std::string_view text);
std::optional<long long> parse_int(std::string_view text);

}  // namespace xtask
