#pragma once

#include <array>
#include <cstdlib>
#include <optional>
#include <string>
#include <vector>

#include "idx.hpp"
#include "rng.hpp"
#include "tensor.hpp"

namespace embodied {

enum class DatasetRole { TrainSubset, Test, Whole };

template <typename T = double>
struct Dataset {
    Tensor<T> images;                 // (count, 28, 28), values in [0,1]
    std::vector<std::uint8_t> labels; // each in [0,9]
    DatasetRole role = DatasetRole::Whole;
    std::optional<std::uint64_t> subset_seed;
    std::optional<std::size_t> subset_size;

    std::size_t count() const { return labels.size(); }
};

template <typename T = double>
Tensor<T> normalize_pixels(const RawImageSet& raw) {
    Tensor<T> out({raw.count, raw.rows, raw.cols});
    for (std::size_t i = 0; i < raw.pixels.size(); ++i)
        out[i] = T(raw.pixels[i]) / T(255);
    return out;
}

template <typename T = double>
Dataset<T> make_dataset(const RawImageSet& imgs, const LabelSet& labs, DatasetRole role) {
    if (imgs.count != labs.count)
        throw ShapeMismatch("image count " + std::to_string(imgs.count) + " vs label count " +
                            std::to_string(labs.count));
    Dataset<T> ds;
    ds.images = normalize_pixels<T>(imgs);
    ds.labels = labs.labels;
    ds.role = role;
    return ds;
}

// Resolves the MNIST directory: explicit argument, then $EMBODIED_DATA_DIR,
// then ./data.
inline std::string resolve_data_dir(const std::string& flag_value = "") {
    if (!flag_value.empty()) return flag_value;
    if (const char* env = std::getenv("EMBODIED_DATA_DIR"); env && *env) return env;
    return "data";
}

namespace detail {
inline std::string pick_existing(const std::string& dir, const std::string& stem) {
    const std::array<std::string, 2> candidates = {dir + "/" + stem, dir + "/" + stem + ".gz"};
    for (const auto& p : candidates) {
        std::ifstream f(p, std::ios::binary);
        if (f) return p;
    }
    throw DataMissing(stem + " (or .gz) not found under " + dir);
}
} // namespace detail

template <typename T = double>
Dataset<T> load_mnist_train(const std::string& dir) {
    auto imgs = parse_idx_images(read_file_bytes(detail::pick_existing(dir, "train-images-idx3-ubyte")));
    auto labs = parse_idx_labels(read_file_bytes(detail::pick_existing(dir, "train-labels-idx1-ubyte")));
    return make_dataset<T>(imgs, labs, DatasetRole::Whole);
}

template <typename T = double>
Dataset<T> load_mnist_test(const std::string& dir) {
    auto imgs = parse_idx_images(read_file_bytes(detail::pick_existing(dir, "t10k-images-idx3-ubyte")));
    auto labs = parse_idx_labels(read_file_bytes(detail::pick_existing(dir, "t10k-labels-idx1-ubyte")));
    return make_dataset<T>(imgs, labs, DatasetRole::Test);
}

// Seeded stratified sample: every class receives floor(size/10); the remainder
// goes to classes picked by a seeded shuffle of the class list; per-class picks
// and the final example order are drawn from the same stream. Deterministic in
// (seed, size). A uniform (non-stratified) mode is kept behind a flag for
// sensitivity checks.
template <typename T>
Dataset<T> stratified_subset(const Dataset<T>& full, std::size_t size, std::uint64_t seed,
                             bool stratified = true) {
    if (size < 1 || size > full.count())
        throw SizeTooLarge("subset size " + std::to_string(size) + " vs available " +
                           std::to_string(full.count()));
    RngStream rng(seed, "subset");
    std::vector<std::size_t> chosen;
    chosen.reserve(size);

    if (!stratified) {
        auto perm = rng.permutation(full.count());
        chosen.assign(perm.begin(), perm.begin() + size);
    } else {
        std::vector<std::vector<std::size_t>> byclass(10);
        for (std::size_t i = 0; i < full.count(); ++i) byclass[full.labels[i]].push_back(i);

        std::vector<std::size_t> quota(10, size / 10);
        std::vector<std::size_t> order(10);
        for (std::size_t c = 0; c < 10; ++c) order[c] = c;
        rng.shuffle(order);
        for (std::size_t r = 0; r < size % 10; ++r) quota[order[r]] += 1;

        for (std::size_t c = 0; c < 10; ++c) {
            auto& pool = byclass[c];
            std::size_t want = std::min(quota[c], pool.size());
            rng.shuffle(pool);
            chosen.insert(chosen.end(), pool.begin(), pool.begin() + want);
        }
        // Classes can run dry only for sizes near the full set; top up uniformly.
        if (chosen.size() < size) {
            std::vector<bool> used(full.count(), false);
            for (auto i : chosen) used[i] = true;
            auto perm = rng.permutation(full.count());
            for (auto i : perm) {
                if (chosen.size() == size) break;
                if (!used[i]) chosen.push_back(i);
            }
        }
        rng.shuffle(chosen);
    }

    Dataset<T> out;
    out.images = Tensor<T>({size, full.images.dim(1), full.images.dim(2)});
    out.labels.resize(size);
    const std::size_t px = full.images.dim(1) * full.images.dim(2);
    for (std::size_t k = 0; k < size; ++k) {
        const std::size_t src = chosen[k];
        std::copy(full.images.data() + src * px, full.images.data() + (src + 1) * px,
                  out.images.data() + k * px);
        out.labels[k] = full.labels[src];
    }
    out.role = DatasetRole::TrainSubset;
    out.subset_seed = seed;
    out.subset_size = size;
    return out;
}

} // namespace embodied
