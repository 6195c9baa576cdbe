#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "qudio/statevector.hpp"

namespace qudio {

inline constexpr int kImageSide = 28;
inline constexpr int kPooledSide = 8;
inline constexpr int kFeatureDim = kPooledSide * kPooledSide;
inline constexpr int kEncodedQubits = 6;

struct RawExample {
    std::array<std::uint8_t, kImageSide * kImageSide> pixels;
    std::uint8_t label = 0;
};

struct EncodedExample {
    std::vector<double> features; // unit l2 norm, length 64
    int label = 0;                // in {0,1}
    StateVector state;            // cached amplitude encoding, 6 qubits
};

// Reads an IDX image/label file pair (raw or gzip; a missing path also tries
// `<path>.gz`). Validates magic numbers, dimensions, and matching counts.
std::vector<RawExample> load_idx(const std::filesystem::path& images,
                                 const std::filesystem::path& labels);

// Area-weighted 28x28 -> 8x8 average pooling, row-major, scaled to [0,1].
std::vector<double> downsample_8x8(const std::uint8_t* pixels);

// l2-normalize and place the 64 entries as 6-qubit amplitudes.
StateVector amplitude_encode(const std::vector<double>& features);

struct DistillOptions {
    int train_count = 256;
    int test_count = 500;
    std::uint64_t seed = 0;
    bool balanced = true;
};

struct DistilledDataset {
    std::vector<EncodedExample> train;
    std::vector<EncodedExample> test;
};

// Seeded selection of 0-vs-1 examples: train from the train split, test from
// the test split. Balanced mode keeps class counts within one of each other;
// zero-norm images are skipped and redrawn.
DistilledDataset distill(const std::vector<RawExample>& train_split,
                         const std::vector<RawExample>& test_split, const DistillOptions& options);

struct ShardPlan {
    std::vector<std::vector<int>> assignments;

    int n_shards() const { return static_cast<int>(assignments.size()); }
};

// Seeded shuffle then contiguous near-equal split of [0, n_examples).
ShardPlan shard(int n_examples, int shards, std::uint64_t seed);

// Conventional MNIST file names under `dir`.
struct MnistPaths {
    std::filesystem::path train_images, train_labels, test_images, test_labels;
    static MnistPaths in(const std::filesystem::path& dir);
    bool all_present() const;
};

// --dataset-dir flag, then QUDIO_DATA, then ./data/mnist.
std::filesystem::path resolve_dataset_dir(const std::string& flag_value);

// Downloads the four canonical MNIST files into `dir` when absent. Returns
// false (with a message on `err`) if no mirror is reachable.
bool fetch_mnist(const std::filesystem::path& dir, std::string& err);

} // namespace qudio
