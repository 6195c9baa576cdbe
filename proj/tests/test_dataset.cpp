#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "qudio/dataset.hpp"

using namespace qudio;

namespace {

const std::filesystem::path kDataDir = "data/mnist";

void write_bytes(const std::filesystem::path& p, const std::vector<std::uint8_t>& bytes) {
    std::ofstream out(p, std::ios::binary);
    out.write(reinterpret_cast<const char*>(bytes.data()), std::streamsize(bytes.size()));
}

void push_be32(std::vector<std::uint8_t>& v, std::uint32_t x) {
    v.push_back(x >> 24);
    v.push_back((x >> 16) & 0xff);
    v.push_back((x >> 8) & 0xff);
    v.push_back(x & 0xff);
}

struct TempIdxPair {
    std::filesystem::path images, labels;

    TempIdxPair(int count, bool corrupt_magic, bool truncate) {
        const auto dir = std::filesystem::temp_directory_path();
        images = dir / "qudio_test_images_idx";
        labels = dir / "qudio_test_labels_idx";
        std::vector<std::uint8_t> img;
        push_be32(img, corrupt_magic ? 0x00000804u : 0x00000803u);
        push_be32(img, count);
        push_be32(img, 28);
        push_be32(img, 28);
        for (int i = 0; i < count * 28 * 28; ++i) img.push_back(std::uint8_t(i % 251));
        if (truncate) img.resize(img.size() - 10);
        write_bytes(images, img);
        std::vector<std::uint8_t> lab;
        push_be32(lab, 0x00000801u);
        push_be32(lab, count);
        for (int i = 0; i < count; ++i) lab.push_back(std::uint8_t(i % 2));
        write_bytes(labels, lab);
    }
    ~TempIdxPair() {
        std::error_code ec;
        std::filesystem::remove(images, ec);
        std::filesystem::remove(labels, ec);
    }
};

} // namespace

TEST_CASE("idx loader on the shipped files") {
    const MnistPaths paths = MnistPaths::in(kDataDir);
    REQUIRE(paths.all_present());
    const auto test_split = load_idx(paths.test_images, paths.test_labels);
    CHECK(test_split.size() == 10000);
    int zeros = 0, ones = 0;
    for (const RawExample& e : test_split) {
        if (e.label == 0) ++zeros;
        if (e.label == 1) ++ones;
    }
    CHECK(zeros == 980);
    CHECK(ones == 1135);
}

TEST_CASE("idx loader error paths") {
    {
        TempIdxPair ok(3, false, false);
        CHECK(load_idx(ok.images, ok.labels).size() == 3);
    }
    {
        TempIdxPair bad_magic(3, true, false);
        CHECK_THROWS_WITH_AS(load_idx(bad_magic.images, bad_magic.labels),
                             doctest::Contains("magic"), std::runtime_error);
    }
    {
        TempIdxPair truncated(3, false, true);
        CHECK_THROWS_WITH_AS(load_idx(truncated.images, truncated.labels),
                             doctest::Contains("length"), std::runtime_error);
    }
    CHECK_THROWS_AS(load_idx("no/such/images", "no/such/labels"), std::runtime_error);
}

TEST_CASE("downsampling") {
    std::vector<std::uint8_t> zeros(28 * 28, 0);
    const auto z = downsample_8x8(zeros.data());
    for (double v : z) CHECK(v == 0.0);

    std::vector<std::uint8_t> bright(28 * 28, 255);
    const auto b = downsample_8x8(bright.data());
    for (double v : b) CHECK(v == doctest::Approx(1.0).epsilon(1e-12));

    // one lit pixel at (10, 3): row 10 straddles output rows 2|3 (boundary at
    // 10.5) and column 3 straddles output cols 0|1 (boundary 3.5), so exactly
    // four cells receive weight 0.5*0.5 / (3.5*3.5) = 1/49
    std::vector<std::uint8_t> single(28 * 28, 0);
    single[10 * 28 + 3] = 255;
    const auto s = downsample_8x8(single.data());
    int nonzero = 0;
    for (int r = 0; r < 8; ++r)
        for (int c = 0; c < 8; ++c)
            if (s[r * 8 + c] != 0.0) {
                ++nonzero;
                CHECK(r >= 2);
                CHECK(r <= 3);
                CHECK(c <= 1);
                CHECK(s[r * 8 + c] == doctest::Approx(1.0 / 49.0).epsilon(1e-12));
            }
    CHECK(nonzero == 4);
}

TEST_CASE("amplitude encoding") {
    std::vector<double> e0(64, 0.0);
    e0[0] = 0.7; // any positive scale normalizes away
    const StateVector s = amplitude_encode(e0);
    CHECK(s.n_qubits == 6);
    CHECK(std::abs(s.amplitudes[0] - cxd(1.0, 0.0)) < 1e-12);

    std::vector<double> uniform(64, 3.0);
    const StateVector u = amplitude_encode(uniform);
    for (const auto& a : u.amplitudes) CHECK(std::norm(a) == doctest::Approx(1.0 / 64));

    std::vector<double> zero(64, 0.0);
    CHECK_THROWS_AS(amplitude_encode(zero), std::invalid_argument);
    CHECK_THROWS_AS(amplitude_encode(std::vector<double>(10, 1.0)), std::invalid_argument);
}

TEST_CASE("distillation of the 0-vs-1 subset") {
    const MnistPaths paths = MnistPaths::in(kDataDir);
    REQUIRE(paths.all_present());
    const auto train_split = load_idx(paths.train_images, paths.train_labels);
    const auto test_split = load_idx(paths.test_images, paths.test_labels);

    DistillOptions options;
    options.seed = 12345;
    const DistilledDataset d = distill(train_split, test_split, options);
    CHECK(d.train.size() == 256);
    CHECK(d.test.size() == 500);
    int train_ones = 0, test_ones = 0;
    for (const auto& e : d.train) {
        CHECK((e.label == 0 || e.label == 1));
        train_ones += e.label;
        CHECK(std::abs(e.state.norm_sq() - 1.0) < 1e-10);
        double feat_norm = 0.0;
        for (double f : e.features) feat_norm += f * f;
        CHECK(std::abs(feat_norm - 1.0) < 1e-10);
    }
    for (const auto& e : d.test) test_ones += e.label;
    CHECK(train_ones == 128);
    CHECK(test_ones == 250);

    // determinism: identical seed, identical selection
    const DistilledDataset d2 = distill(train_split, test_split, options);
    for (std::size_t i = 0; i < d.train.size(); ++i) {
        CHECK(d.train[i].label == d2.train[i].label);
        CHECK(d.train[i].features == d2.train[i].features);
    }
    // a different seed picks a different set
    DistillOptions other = options;
    other.seed = 999;
    const DistilledDataset d3 = distill(train_split, test_split, other);
    bool any_difference = false;
    for (std::size_t i = 0; i < d.train.size() && !any_difference; ++i)
        any_difference = d.train[i].features != d3.train[i].features;
    CHECK(any_difference);

    // unbalanced mode keeps only the counts contract
    DistillOptions unbalanced = options;
    unbalanced.balanced = false;
    const DistilledDataset d4 = distill(train_split, test_split, unbalanced);
    CHECK(d4.train.size() == 256);
    CHECK(d4.test.size() == 500);
}

TEST_CASE("sharding") {
    const ShardPlan plan32 = shard(256, 32, 7);
    CHECK(plan32.n_shards() == 32);
    for (const auto& s : plan32.assignments) CHECK(s.size() == 8);

    const ShardPlan whole = shard(256, 1, 7);
    CHECK(whole.assignments[0].size() == 256);

    const ShardPlan plan3 = shard(256, 3, 7);
    CHECK(plan3.assignments[0].size() == 86);
    CHECK(plan3.assignments[1].size() == 85);
    CHECK(plan3.assignments[2].size() == 85);

    // disjoint and exhaustive
    std::vector<bool> seen(256, false);
    for (const auto& s : plan3.assignments)
        for (int idx : s) {
            CHECK(!seen[idx]);
            seen[idx] = true;
        }
    for (bool b : seen) CHECK(b);

    // deterministic in the seed
    const ShardPlan again = shard(256, 3, 7);
    CHECK(again.assignments == plan3.assignments);
    const ShardPlan different = shard(256, 3, 8);
    CHECK(different.assignments != plan3.assignments);

    CHECK_THROWS_AS(shard(10, 0, 1), std::invalid_argument);
    CHECK_THROWS_AS(shard(10, 11, 1), std::invalid_argument);
}

TEST_CASE("dataset dir resolution") {
    CHECK(resolve_dataset_dir("/explicit/path") == std::filesystem::path("/explicit/path"));
    // without a flag the fallback chain ends at the repo default
    if (!std::getenv("QUDIO_DATA"))
        CHECK(resolve_dataset_dir("") == std::filesystem::path("data/mnist"));
}
