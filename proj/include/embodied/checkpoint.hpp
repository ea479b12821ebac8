#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

#include "error.hpp"
#include "model.hpp"
#include "tensor.hpp"

namespace embodied {

// Checkpoints are little-endian binary: an 8-byte magic+version, a variant
// tag, the finger-code-table hash, then named f64 tensors. Raw IEEE-754 bytes
// round-trip losslessly.
inline constexpr char kCheckpointMagic[8] = {'E', 'M', 'B', 'C', 'K', 'P', 'T', '1'};

namespace detail {

inline void wr_u32(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(char((v >> (8 * i)) & 0xff));
}
inline void wr_u64(std::string& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(char((v >> (8 * i)) & 0xff));
}
inline void wr_f64(std::string& out, double v) { wr_u64(out, std::bit_cast<std::uint64_t>(v)); }

struct ByteReader {
    const std::string& bytes;
    std::size_t pos = 0;

    void need(std::size_t n) const {
        if (pos + n > bytes.size()) throw Truncated("checkpoint ends mid-field");
    }
    std::uint32_t u32() {
        need(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= std::uint32_t(std::uint8_t(bytes[pos + i])) << (8 * i);
        pos += 4;
        return v;
    }
    std::uint64_t u64() {
        need(8);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= std::uint64_t(std::uint8_t(bytes[pos + i])) << (8 * i);
        pos += 8;
        return v;
    }
    double f64() { return std::bit_cast<double>(u64()); }
    std::string str(std::size_t n) {
        need(n);
        std::string s = bytes.substr(pos, n);
        pos += n;
        return s;
    }
};

} // namespace detail

struct Checkpoint {
    std::string variant_tag;
    std::uint64_t finger_hash = 0;
    std::vector<std::pair<std::string, Tensor<double>>> tensors;

    const Tensor<double>& find(const std::string& name) const {
        for (const auto& [n, t] : tensors)
            if (n == name) return t;
        throw ParseError("checkpoint is missing tensor '" + name + "'");
    }
    bool has(const std::string& name) const {
        for (const auto& [n, t] : tensors)
            if (n == name) return true;
        return false;
    }
};

inline void save_checkpoint(const std::string& path, const std::string& variant_tag,
                            std::uint64_t finger_hash,
                            const std::vector<std::pair<std::string, const Tensor<double>*>>& tensors) {
    std::string out;
    out.append(kCheckpointMagic, 8);
    detail::wr_u32(out, std::uint32_t(variant_tag.size()));
    out += variant_tag;
    detail::wr_u64(out, finger_hash);
    detail::wr_u32(out, std::uint32_t(tensors.size()));
    for (const auto& [name, t] : tensors) {
        detail::wr_u32(out, std::uint32_t(name.size()));
        out += name;
        detail::wr_u32(out, std::uint32_t(t->rank()));
        for (std::size_t d = 0; d < t->rank(); ++d) detail::wr_u64(out, t->dim(d));
        for (std::size_t i = 0; i < t->size(); ++i) detail::wr_f64(out, (*t)[i]);
    }
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw DataMissing("cannot open checkpoint for writing: " + path);
    f.write(out.data(), std::streamsize(out.size()));
    if (!f) throw DataMissing("short write on checkpoint: " + path);
}

inline Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw DataMissing("cannot open checkpoint: " + path);
    std::string bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    if (bytes.size() < 8 || std::memcmp(bytes.data(), kCheckpointMagic, 8) != 0)
        throw BadMagic("not a checkpoint file: " + path);
    detail::ByteReader r{bytes, 8};
    Checkpoint ck;
    ck.variant_tag = r.str(r.u32());
    ck.finger_hash = r.u64();
    const std::uint32_t count = r.u32();
    ck.tensors.reserve(count);
    for (std::uint32_t k = 0; k < count; ++k) {
        std::string name = r.str(r.u32());
        const std::uint32_t rank = r.u32();
        std::vector<std::size_t> shape(rank);
        for (std::uint32_t d = 0; d < rank; ++d) shape[d] = std::size_t(r.u64());
        Tensor<double> t(shape);
        for (std::size_t i = 0; i < t.size(); ++i) t[i] = r.f64();
        ck.tensors.emplace_back(std::move(name), std::move(t));
    }
    if (r.pos != bytes.size()) throw TrailingBytes("checkpoint has bytes past the last tensor");
    return ck;
}

// ----------------------------------------------------------- link checkpoints

inline void save_link(const std::string& path, const PretrainedLink& link, std::uint64_t finger_hash) {
    Tensor<double> log({3});
    log[0] = double(link.steps_used);
    log[1] = link.final_loss;
    log[2] = link.final_accuracy;
    save_checkpoint(path, "link", finger_hash,
                    {{"link.weights", &link.weights}, {"link.bias", &link.bias}, {"link.log", &log}});
}

inline PretrainedLink load_link(const std::string& path, std::uint64_t* finger_hash = nullptr) {
    Checkpoint ck = load_checkpoint(path);
    if (ck.variant_tag != "link")
        throw ParseError("checkpoint '" + path + "' holds a '" + ck.variant_tag + "', not a link");
    PretrainedLink link;
    link.weights = ck.find("link.weights");
    link.bias = ck.find("link.bias");
    if (link.weights.rank() != 2 || link.weights.dim(0) != 16 || link.weights.dim(1) != 10 ||
        link.bias.size() != 10)
        throw ShapeMismatch("link checkpoint tensors have unexpected shapes");
    if (ck.has("link.log")) {
        const Tensor<double>& log = ck.find("link.log");
        if (log.size() == 3) {
            link.steps_used = (long long)(log[0]);
            link.final_loss = log[1];
            link.final_accuracy = log[2];
        }
    }
    if (finger_hash) *finger_hash = ck.finger_hash;
    return link;
}

// ---------------------------------------------------------- model checkpoints

template <typename T>
void save_model(const std::string& path, Network<T>& net, std::uint64_t finger_hash) {
    static_assert(std::is_same_v<T, double>, "checkpoints are f64");
    std::vector<std::pair<std::string, const Tensor<double>*>> named;
    const auto names = net.parameter_names();
    auto params = net.parameters();
    for (std::size_t i = 0; i < params.size(); ++i) named.emplace_back(names[i], params[i]);
    for (auto& [name, t] : net.running_stats()) named.emplace_back(name, t);
    save_checkpoint(path, variant_name(net.variant), finger_hash, named);
}

template <typename T = double>
Network<T> load_model(const std::string& path, const NetworkConfig& config = NetworkConfig{}) {
    Checkpoint ck = load_checkpoint(path);
    ModelSpec spec;
    spec.variant = parse_variant(ck.variant_tag);
    if (spec.variant == Variant::Embodied) spec.pretrained_link = PretrainedLink{}; // overwritten below
    Network<T> net = build_model<T>(spec, 0, config);
    const auto names = net.parameter_names();
    auto params = net.parameters();
    for (std::size_t i = 0; i < params.size(); ++i) {
        const Tensor<double>& stored = ck.find(names[i]);
        if (stored.shape() != params[i]->shape())
            throw ShapeMismatch("checkpoint tensor '" + names[i] + "' shape mismatch");
        *params[i] = stored;
    }
    for (auto& [name, t] : net.running_stats()) {
        const Tensor<double>& stored = ck.find(name);
        if (stored.shape() != t->shape())
            throw ShapeMismatch("checkpoint tensor '" + name + "' shape mismatch");
        *t = stored;
    }
    return net;
}

} // namespace embodied
