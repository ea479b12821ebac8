#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include <zlib.h>

#include "error.hpp"

namespace embodied {

constexpr std::uint32_t kIdxImageMagic = 0x00000803u;
constexpr std::uint32_t kIdxLabelMagic = 0x00000801u;

struct RawImageSet {
    std::size_t count = 0;
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<std::uint8_t> pixels;
};

struct LabelSet {
    std::size_t count = 0;
    std::vector<std::uint8_t> labels;
};

namespace detail {

inline std::uint32_t read_be32(const std::vector<std::uint8_t>& b, std::size_t off) {
    return (std::uint32_t(b[off]) << 24) | (std::uint32_t(b[off + 1]) << 16) |
           (std::uint32_t(b[off + 2]) << 8) | std::uint32_t(b[off + 3]);
}

inline void write_be32(std::vector<std::uint8_t>& b, std::uint32_t v) {
    b.push_back(std::uint8_t(v >> 24));
    b.push_back(std::uint8_t(v >> 16));
    b.push_back(std::uint8_t(v >> 8));
    b.push_back(std::uint8_t(v));
}

inline bool looks_gzipped(const std::vector<std::uint8_t>& b) {
    return b.size() >= 2 && b[0] == 0x1f && b[1] == 0x8b;
}

inline std::vector<std::uint8_t> gunzip(const std::vector<std::uint8_t>& in) {
    z_stream zs{};
    // 15+32: zlib auto-detects gzip or zlib headers.
    if (inflateInit2(&zs, 15 + 32) != Z_OK)
        throw ParseError("zlib inflateInit failed");
    std::vector<std::uint8_t> out;
    out.reserve(in.size() * 4);
    std::vector<std::uint8_t> buf(1 << 16);
    zs.next_in = const_cast<Bytef*>(in.data());
    zs.avail_in = static_cast<uInt>(in.size());
    int rc = Z_OK;
    do {
        zs.next_out = buf.data();
        zs.avail_out = static_cast<uInt>(buf.size());
        rc = inflate(&zs, Z_NO_FLUSH);
        if (rc != Z_OK && rc != Z_STREAM_END) {
            inflateEnd(&zs);
            throw ParseError("gzip decompression failed (rc " + std::to_string(rc) + ")");
        }
        out.insert(out.end(), buf.data(), buf.data() + (buf.size() - zs.avail_out));
    } while (rc != Z_STREAM_END);
    inflateEnd(&zs);
    return out;
}

} // namespace detail

inline std::vector<std::uint8_t> read_file_bytes(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw DataMissing("cannot open " + path);
    std::vector<std::uint8_t> bytes{std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
    if (detail::looks_gzipped(bytes)) return detail::gunzip(bytes);
    return bytes;
}

inline RawImageSet parse_idx_images(const std::vector<std::uint8_t>& bytes) {
    if (bytes.size() < 16) throw Truncated("image header needs 16 bytes, got " + std::to_string(bytes.size()));
    const std::uint32_t magic = detail::read_be32(bytes, 0);
    if (magic != kIdxImageMagic)
        throw BadMagic("expected 0x00000803, got 0x" + [&] {
            char buf[16];
            std::snprintf(buf, sizeof buf, "%08x", magic);
            return std::string(buf);
        }());
    RawImageSet set;
    set.count = detail::read_be32(bytes, 4);
    set.rows = detail::read_be32(bytes, 8);
    set.cols = detail::read_be32(bytes, 12);
    const std::size_t payload = set.count * set.rows * set.cols;
    if (bytes.size() < 16 + payload)
        throw Truncated("image payload promises " + std::to_string(payload) + " bytes, file has " +
                        std::to_string(bytes.size() - 16));
    if (bytes.size() > 16 + payload)
        throw TrailingBytes(std::to_string(bytes.size() - 16 - payload) + " extra bytes after image payload");
    set.pixels.assign(bytes.begin() + 16, bytes.end());
    return set;
}

inline LabelSet parse_idx_labels(const std::vector<std::uint8_t>& bytes) {
    if (bytes.size() < 8) throw Truncated("label header needs 8 bytes, got " + std::to_string(bytes.size()));
    const std::uint32_t magic = detail::read_be32(bytes, 0);
    if (magic != kIdxLabelMagic)
        throw BadMagic("expected 0x00000801, got 0x" + [&] {
            char buf[16];
            std::snprintf(buf, sizeof buf, "%08x", magic);
            return std::string(buf);
        }());
    LabelSet set;
    set.count = detail::read_be32(bytes, 4);
    if (bytes.size() < 8 + set.count)
        throw Truncated("label payload promises " + std::to_string(set.count) + " bytes, file has " +
                        std::to_string(bytes.size() - 8));
    if (bytes.size() > 8 + set.count)
        throw TrailingBytes(std::to_string(bytes.size() - 8 - set.count) + " extra bytes after label payload");
    set.labels.assign(bytes.begin() + 8, bytes.end());
    for (std::size_t i = 0; i < set.labels.size(); ++i)
        if (set.labels[i] > 9)
            throw LabelOutOfRange("label " + std::to_string(int(set.labels[i])) + " at index " + std::to_string(i));
    return set;
}

inline std::vector<std::uint8_t> serialize_idx_images(const RawImageSet& set) {
    std::vector<std::uint8_t> out;
    out.reserve(16 + set.pixels.size());
    detail::write_be32(out, kIdxImageMagic);
    detail::write_be32(out, std::uint32_t(set.count));
    detail::write_be32(out, std::uint32_t(set.rows));
    detail::write_be32(out, std::uint32_t(set.cols));
    out.insert(out.end(), set.pixels.begin(), set.pixels.end());
    return out;
}

inline std::vector<std::uint8_t> serialize_idx_labels(const LabelSet& set) {
    std::vector<std::uint8_t> out;
    out.reserve(8 + set.labels.size());
    detail::write_be32(out, kIdxLabelMagic);
    detail::write_be32(out, std::uint32_t(set.count));
    out.insert(out.end(), set.labels.begin(), set.labels.end());
    return out;
}

} // namespace embodied
