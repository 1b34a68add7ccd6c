#include "xtask/ingest/container.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include <fmt/format.h>
#include <zlib.h>

#include "xtask/error.hpp"

namespace xtask::ingest {

namespace {

constexpr std::string_view kMagic = "XTASKCNT";
constexpr std::size_t kPreamble = 20;

void put_u32(std::string& out, std::uint32_t v) {
    char b[4];
    std::memcpy(b, &v, 4);
    out.append(b, 4);
}

std::uint32_t get_u32(const std::string& data, std::size_t offset) {
    std::uint32_t v;
    std::memcpy(&v, data.data() + offset, 4);
    return v;
}

}  // namespace

std::uint32_t crc32_of(std::string_view bytes) {
    uLong crc = ::crc32(0L, Z_NULL, 0);
    // zlib takes uInt lengths; feed in chunks for large payloads.
    std::size_t done = 0;
    while (done < bytes.size()) {
        const auto chunk = static_cast<uInt>(std::min<std::size_t>(bytes.size() - done, 1u << 30));
        crc = ::crc32(crc, reinterpret_cast<const Bytef*>(bytes.data() + done), chunk);
        done += chunk;
    }
    return static_cast<std::uint32_t>(crc);
}

ContainerWriter::ContainerWriter(std::string kind) : kind_(std::move(kind)) {}

void ContainerWriter::add_f64(const std::string& name, std::span<const double> values, std::vector<std::size_t> shape) {
    std::size_t expected = 1;
    for (auto s : shape) expected *= s;
    if (expected != values.size()) {
        throw Error(ErrorKind::invalid_argument,
                    fmt::format("block '{}': shape holds {} values, got {}", name, expected, values.size()));
    }
    const std::string_view raw(reinterpret_cast<const char*>(values.data()), values.size() * sizeof(double));
    blocks_.push_back({{"name", name},
                       {"dtype", "f64"},
                       {"shape", shape},
                       {"offset", payload_.size()},
                       {"size", raw.size()},
                       {"crc32", crc32_of(raw)}});
    payload_.append(raw);
}

void ContainerWriter::add_bytes(const std::string& name, std::span<const std::uint8_t> bytes) {
    const std::string_view raw(reinterpret_cast<const char*>(bytes.data()), bytes.size());
    blocks_.push_back({{"name", name},
                       {"dtype", "u8"},
                       {"shape", {bytes.size()}},
                       {"offset", payload_.size()},
                       {"size", raw.size()},
                       {"crc32", crc32_of(raw)}});
    payload_.append(raw);
}

std::string ContainerWriter::serialize() const {
    const nlohmann::json header{{"kind", kind_}, {"meta", meta_}, {"blocks", blocks_}};
    const auto text = header.dump();
    std::string out;
    out.reserve(kPreamble + text.size() + payload_.size());
    out.append(kMagic);
    put_u32(out, ContainerReader::kSchemaVersion);
    put_u32(out, static_cast<std::uint32_t>(text.size()));
    put_u32(out, crc32_of(text));
    out.append(text);
    out.append(payload_);
    return out;
}

void ContainerWriter::write(const std::string& path) const {
    const auto bytes = serialize();
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorKind::io, fmt::format("cannot write '{}'", path));
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error(ErrorKind::io, fmt::format("write to '{}' failed", path));
}

namespace {

struct ParsedHeader {
    std::string kind;
    nlohmann::json meta, blocks;
    std::size_t size = 0;
};

ParsedHeader parse_header(const std::string& bytes, const std::string& source) {
    if (bytes.size() < kPreamble || std::string_view(bytes).substr(0, kMagic.size()) != kMagic) {
        throw Error(ErrorKind::format, fmt::format("{}: not an xtask container (bad magic bytes)", source));
    }
    const auto version = get_u32(bytes, 8);
    if (version > ContainerReader::kSchemaVersion) {
        throw Error(ErrorKind::format, fmt::format("{}: unsupported container schema version {} (this build reads {})",
                                                   source, version, ContainerReader::kSchemaVersion));
    }
    if (version != ContainerReader::kSchemaVersion) {
        throw Error(ErrorKind::format, fmt::format("{}: container schema version mismatch: {} (expected {})", source,
                                                   version, ContainerReader::kSchemaVersion));
    }
    const auto header_size = get_u32(bytes, 12);
    if (kPreamble + header_size > bytes.size()) {
        throw Error(ErrorKind::format, fmt::format("{}: truncated container header", source));
    }
    const std::string_view header_text(bytes.data() + kPreamble, header_size);
    if (crc32_of(header_text) != get_u32(bytes, 16)) {
        throw Error(ErrorKind::format, fmt::format("{}: header checksum mismatch", source));
    }
    ParsedHeader out;
    out.size = header_size;
    try {
        const auto header = nlohmann::json::parse(header_text);
        out.kind = header.at("kind").get<std::string>();
        out.meta = header.at("meta");
        out.blocks = header.at("blocks");
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::format, fmt::format("{}: malformed container header: {}", source, e.what()));
    }
    return out;
}

}  // namespace

ContainerReader ContainerReader::parse(std::string bytes, const std::string& source) {
    auto header = parse_header(bytes, source);
    ContainerReader reader;
    reader.kind_ = std::move(header.kind);
    reader.meta_ = std::move(header.meta);
    reader.blocks_ = std::move(header.blocks);
    const auto header_size = header.size;
    reader.source_ = source;
    reader.payload_offset_ = kPreamble + header_size;
    reader.data_ = std::move(bytes);
    for (const auto& b : reader.blocks_) {
        const auto offset = b.at("offset").get<std::size_t>();
        const auto size = b.at("size").get<std::size_t>();
        if (reader.payload_offset_ + offset + size > reader.data_.size()) {
            throw Error(ErrorKind::format,
                        fmt::format("{}: block '{}' extends past end of file", source, b.at("name").get<std::string>()));
        }
        const std::string_view raw(reader.data_.data() + reader.payload_offset_ + offset, size);
        if (crc32_of(raw) != b.at("crc32").get<std::uint32_t>()) {
            throw Error(ErrorKind::format,
                        fmt::format("{}: checksum failure in block '{}'", source, b.at("name").get<std::string>()));
        }
    }
    return reader;
}

ContainerReader ContainerReader::read(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::io, fmt::format("cannot open '{}'", path));
    std::stringstream buffer;
    buffer << in.rdbuf();
    return parse(buffer.str(), path);
}

ContainerHeader read_container_header(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::io, fmt::format("cannot open '{}'", path));
    std::string preamble(kPreamble, '\0');
    in.read(preamble.data(), static_cast<std::streamsize>(preamble.size()));
    if (in.gcount() != static_cast<std::streamsize>(kPreamble)) preamble.resize(static_cast<std::size_t>(in.gcount()));
    std::string bytes = preamble;
    if (bytes.size() == kPreamble) {
        std::string header(get_u32(bytes, 12), '\0');
        in.read(header.data(), static_cast<std::streamsize>(header.size()));
        header.resize(static_cast<std::size_t>(in.gcount()));
        bytes += header;
    }
    auto header = parse_header(bytes, path);
    return {std::move(header.kind), std::move(header.meta)};
}

const nlohmann::json& ContainerReader::block(const std::string& name) const {
    for (const auto& b : blocks_) {
        if (b.at("name") == name) return b;
    }
    throw Error(ErrorKind::format, fmt::format("{}: missing block '{}'", source_, name));
}

bool ContainerReader::has_block(const std::string& name) const {
    for (const auto& b : blocks_) {
        if (b.at("name") == name) return true;
    }
    return false;
}

std::vector<std::size_t> ContainerReader::shape(const std::string& name) const {
    return block(name).at("shape").get<std::vector<std::size_t>>();
}

std::vector<double> ContainerReader::f64(const std::string& name) const {
    const auto& b = block(name);
    if (b.at("dtype") != "f64") throw Error(ErrorKind::format, fmt::format("{}: block '{}' is not f64", source_, name));
    const auto size = b.at("size").get<std::size_t>();
    std::vector<double> out(size / sizeof(double));
    std::memcpy(out.data(), data_.data() + payload_offset_ + b.at("offset").get<std::size_t>(), size);
    return out;
}

std::vector<std::uint8_t> ContainerReader::bytes(const std::string& name) const {
    const auto& b = block(name);
    const auto size = b.at("size").get<std::size_t>();
    const auto* start = reinterpret_cast<const std::uint8_t*>(data_.data() + payload_offset_ + b.at("offset").get<std::size_t>());
    return {start, start + size};
}

}  // namespace xtask::ingest
