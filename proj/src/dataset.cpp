#include "qudio/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <numeric>
#include <stdexcept>

#include <zlib.h>

namespace qudio {

namespace {

// gzread handles plain files transparently, so one reader covers raw and .gz.
std::vector<std::uint8_t> read_maybe_gz(const std::filesystem::path& path) {
    std::filesystem::path actual = path;
    if (!std::filesystem::exists(actual)) {
        std::filesystem::path gz = path;
        gz += ".gz";
        if (std::filesystem::exists(gz)) actual = gz;
    }
    gzFile f = gzopen(actual.string().c_str(), "rb");
    if (!f) throw std::runtime_error("cannot open " + actual.string());
    std::vector<std::uint8_t> out;
    std::array<std::uint8_t, 1 << 16> chunk;
    int got = 0;
    while ((got = gzread(f, chunk.data(), chunk.size())) > 0)
        out.insert(out.end(), chunk.begin(), chunk.begin() + got);
    const bool bad = got < 0;
    gzclose(f);
    if (bad) throw std::runtime_error("decompression error in " + actual.string());
    return out;
}

std::uint32_t read_be32(const std::uint8_t* p) {
    return (std::uint32_t(p[0]) << 24) | (std::uint32_t(p[1]) << 16) | (std::uint32_t(p[2]) << 8) |
           std::uint32_t(p[3]);
}

} // namespace

std::vector<RawExample> load_idx(const std::filesystem::path& images,
                                 const std::filesystem::path& labels) {
    const std::vector<std::uint8_t> img = read_maybe_gz(images);
    const std::vector<std::uint8_t> lab = read_maybe_gz(labels);
    if (img.size() < 16) throw std::runtime_error(images.string() + ": truncated IDX header");
    if (lab.size() < 8) throw std::runtime_error(labels.string() + ": truncated IDX header");
    if (read_be32(img.data()) != 0x00000803u)
        throw std::runtime_error(images.string() + ": bad IDX image magic");
    if (read_be32(lab.data()) != 0x00000801u)
        throw std::runtime_error(labels.string() + ": bad IDX label magic");
    const std::uint32_t n_img = read_be32(img.data() + 4);
    const std::uint32_t rows = read_be32(img.data() + 8);
    const std::uint32_t cols = read_be32(img.data() + 12);
    const std::uint32_t n_lab = read_be32(lab.data() + 4);
    if (rows != kImageSide || cols != kImageSide)
        throw std::runtime_error(images.string() + ": expected 28x28 images");
    if (n_img != n_lab)
        throw std::runtime_error("image/label counts differ (" + std::to_string(n_img) + " vs " +
                                 std::to_string(n_lab) + ")");
    const std::size_t pixel_bytes = std::size_t(n_img) * kImageSide * kImageSide;
    if (img.size() != 16 + pixel_bytes)
        throw std::runtime_error(images.string() + ": payload length mismatch");
    if (lab.size() != 8 + std::size_t(n_lab))
        throw std::runtime_error(labels.string() + ": payload length mismatch");
    std::vector<RawExample> out(n_img);
    for (std::uint32_t i = 0; i < n_img; ++i) {
        std::memcpy(out[i].pixels.data(), img.data() + 16 + std::size_t(i) * kImageSide * kImageSide,
                    kImageSide * kImageSide);
        out[i].label = lab[8 + i];
    }
    return out;
}

std::vector<double> downsample_8x8(const std::uint8_t* pixels) {
    // 28/8 = 3.5 source pixels per output cell; boundary pixels contribute
    // fractional overlap to both neighbours.
    constexpr double scale = double(kImageSide) / kPooledSide; // 3.5
    std::vector<double> out(kFeatureDim, 0.0);
    for (int r = 0; r < kImageSide; ++r) {
        for (int c = 0; c < kImageSide; ++c) {
            const double v = pixels[r * kImageSide + c] / 255.0;
            if (v == 0.0) continue;
            for (int orow = int(r / scale); orow * scale < r + 1 && orow < kPooledSide; ++orow) {
                const double row_overlap =
                    std::min<double>(r + 1, (orow + 1) * scale) - std::max<double>(r, orow * scale);
                for (int ocol = int(c / scale); ocol * scale < c + 1 && ocol < kPooledSide; ++ocol) {
                    const double col_overlap = std::min<double>(c + 1, (ocol + 1) * scale) -
                                               std::max<double>(c, ocol * scale);
                    out[orow * kPooledSide + ocol] += v * row_overlap * col_overlap;
                }
            }
        }
    }
    for (double& v : out) v /= scale * scale;
    return out;
}

StateVector amplitude_encode(const std::vector<double>& features) {
    if (features.size() != kFeatureDim)
        throw std::invalid_argument("amplitude encoding expects 64 features");
    double norm_sq = 0.0;
    for (double v : features) norm_sq += v * v;
    if (norm_sq <= 0.0) throw std::invalid_argument("cannot amplitude-encode a zero vector");
    const double inv = 1.0 / std::sqrt(norm_sq);
    StateVector state(kEncodedQubits);
    for (int i = 0; i < kFeatureDim; ++i) state.amplitudes[i] = cxd(features[i] * inv, 0.0);
    return state;
}

namespace {

EncodedExample encode_example(const RawExample& raw) {
    EncodedExample out;
    out.features = downsample_8x8(raw.pixels.data());
    out.state = amplitude_encode(out.features);
    double norm_sq = 0.0;
    for (double v : out.features) norm_sq += v * v;
    const double inv = 1.0 / std::sqrt(norm_sq);
    for (double& v : out.features) v *= inv;
    out.label = raw.label;
    return out;
}

bool has_signal(const RawExample& raw) {
    for (std::uint8_t p : raw.pixels)
        if (p) return true;
    return false;
}

std::vector<int> shuffled_class_indices(const std::vector<RawExample>& split, int label, Rng& rng) {
    std::vector<int> idx;
    for (int i = 0; i < int(split.size()); ++i)
        if (split[i].label == label) idx.push_back(i);
    for (int i = int(idx.size()) - 1; i > 0; --i)
        std::swap(idx[i], idx[std::size_t(uniform01(rng) * (i + 1))]);
    return idx;
}

std::vector<EncodedExample> select_from_split(const std::vector<RawExample>& split, int count,
                                              bool balanced, Rng& rng) {
    std::vector<EncodedExample> out;
    out.reserve(count);
    if (balanced) {
        const std::array<int, 2> want = {count - count / 2, count / 2};
        for (int label = 0; label < 2; ++label) {
            std::vector<int> pool = shuffled_class_indices(split, label, rng);
            int taken = 0;
            for (int i : pool) {
                if (taken == want[label]) break;
                if (!has_signal(split[i])) continue; // redraw: move to the next candidate
                out.push_back(encode_example(split[i]));
                ++taken;
            }
            if (taken < want[label])
                throw std::runtime_error("not enough examples of digit " + std::to_string(label));
        }
    } else {
        std::vector<int> pool;
        for (int i = 0; i < int(split.size()); ++i)
            if (split[i].label <= 1) pool.push_back(i);
        for (int i = int(pool.size()) - 1; i > 0; --i)
            std::swap(pool[i], pool[std::size_t(uniform01(rng) * (i + 1))]);
        for (int i : pool) {
            if (int(out.size()) == count) break;
            if (!has_signal(split[i])) continue;
            out.push_back(encode_example(split[i]));
        }
        if (int(out.size()) < count) throw std::runtime_error("not enough 0/1 examples");
    }
    return out;
}

} // namespace

DistilledDataset distill(const std::vector<RawExample>& train_split,
                         const std::vector<RawExample>& test_split,
                         const DistillOptions& options) {
    if (options.train_count < 1 || options.test_count < 1)
        throw std::invalid_argument("distill counts must be positive");
    Rng train_rng = make_stream(options.seed, 0x44495354ULL, 0);
    Rng test_rng = make_stream(options.seed, 0x44495354ULL, 1);
    DistilledDataset out;
    out.train = select_from_split(train_split, options.train_count, options.balanced, train_rng);
    out.test = select_from_split(test_split, options.test_count, options.balanced, test_rng);
    return out;
}

ShardPlan shard(int n_examples, int shards, std::uint64_t seed) {
    if (shards < 1 || shards > n_examples)
        throw std::invalid_argument("shard count must be in [1, n_examples]");
    std::vector<int> order(n_examples);
    std::iota(order.begin(), order.end(), 0);
    Rng rng = make_stream(seed, 0x5348415244ULL);
    for (int i = n_examples - 1; i > 0; --i)
        std::swap(order[i], order[std::size_t(uniform01(rng) * (i + 1))]);
    ShardPlan plan;
    plan.assignments.resize(shards);
    const int base = n_examples / shards;
    const int extra = n_examples % shards;
    int cursor = 0;
    for (int s = 0; s < shards; ++s) {
        const int size = base + (s < extra ? 1 : 0);
        plan.assignments[s].assign(order.begin() + cursor, order.begin() + cursor + size);
        cursor += size;
    }
    return plan;
}

MnistPaths MnistPaths::in(const std::filesystem::path& dir) {
    return {dir / "train-images-idx3-ubyte", dir / "train-labels-idx1-ubyte",
            dir / "t10k-images-idx3-ubyte", dir / "t10k-labels-idx1-ubyte"};
}

bool MnistPaths::all_present() const {
    auto present = [](const std::filesystem::path& p) {
        std::filesystem::path gz = p;
        gz += ".gz";
        return std::filesystem::exists(p) || std::filesystem::exists(gz);
    };
    return present(train_images) && present(train_labels) && present(test_images) &&
           present(test_labels);
}

std::filesystem::path resolve_dataset_dir(const std::string& flag_value) {
    if (!flag_value.empty()) return flag_value;
    if (const char* env = std::getenv("QUDIO_DATA")) return env;
    return "data/mnist";
}

} // namespace qudio
