#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

namespace xtask::ingest {

/// Single-file container shared by dataset caches and fitted models.
///
/// Byte layout (all integers little-endian):
///
///   offset  size  field
///   0       8     magic "XTASKCNT"
///   8       4     schema version (u32, currently 1)
///   12      4     header length H in bytes (u32)
///   16      4     CRC-32 of the header bytes (u32)
///   20      H     header: UTF-8 JSON object
///                   { "kind": str, "meta": {...},
///                     "blocks": [ { "name", "dtype" ("f64"|"u8"), "shape": [...],
///                                   "offset", "size", "crc32" }, ... ] }
///   20+H    ...   block payloads, concatenated; `offset` is relative to 20+H
///
/// f64 blocks hold IEEE-754 doubles in row-major order of `shape`.
class ContainerWriter {
public:
    explicit ContainerWriter(std::string kind);

    nlohmann::json& meta() noexcept { return meta_; }

    void add_f64(const std::string& name, std::span<const double> values, std::vector<std::size_t> shape);
    void add_bytes(const std::string& name, std::span<const std::uint8_t> bytes);

    std::string serialize() const;
    void write(const std::string& path) const;

private:
    std::string kind_;
    nlohmann::json meta_ = nlohmann::json::object();
    nlohmann::json blocks_ = nlohmann::json::array();
    std::string payload_;
};

class ContainerReader {
public:
    static constexpr std::uint32_t kSchemaVersion = 1;

    /// Validates magic, version, and every checksum up front.
    static ContainerReader parse(std::string bytes, const std::string& source);
    static ContainerReader read(const std::string& path);

    const std::string& kind() const noexcept { return kind_; }
    const nlohmann::json& meta() const noexcept { return meta_; }

    bool has_block(const std::string& name) const;
    std::vector<std::size_t> shape(const std::string& name) const;
    std::vector<double> f64(const std::string& name) const;
    std::vector<std::uint8_t> bytes(const std::string& name) const;

private:
    const nlohmann::json& block(const std::string& name) const;

    std::string source_;
    std::string data_;
    std::size_t payload_offset_ = 0;
    std::string kind_;
    nlohmann::json meta_;
    nlohmann::json blocks_;
};

struct ContainerHeader {
    std::string kind;
    nlohmann::json meta;
};

/// Reads and checks only the preamble and header; block payloads are not read.
ContainerHeader read_container_header(const std::string& path);

std::uint32_t crc32_of(std::string_view bytes);

}  // namespace xtask::ingest
