#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <random>

#include "voxnav/volume.hpp"

using namespace voxnav;

namespace {

std::filesystem::path temp_dir() {
    auto d = std::filesystem::temp_directory_path() / "voxnav_test_volume";
    std::filesystem::create_directories(d);
    return d;
}

void write_bytes(const std::filesystem::path& p, std::size_t n, unsigned char fill = 0) {
    std::ofstream out(p, std::ios::binary);
    std::vector<char> buf(n, static_cast<char>(fill));
    out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
}

Volume random_volume(Int3 dims, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<float> u(0.0f, 1.0f);
    ScalarField f(dims);
    for (auto& v : f.values) v = u(rng);
    return Volume("random", {1, 1, 1}, std::move(f));
}

} // namespace

TEST(LoadVolume, AllZerosU8) {
    const auto p = temp_dir() / "zeros.raw";
    write_bytes(p, 256u * 256u * 256u);
    const Volume v = load_volume(p, {256, 256, 256}, VoxelType::U8, {1, 1, 1});
    EXPECT_EQ(v.dims(), (Int3{256, 256, 256}));
    for (float x : v.voxels()) ASSERT_EQ(x, 0.0f);
}

TEST(LoadVolume, CarpSizedFileKeepsDims) {
    const auto p = temp_dir() / "carp.raw";
    write_bytes(p, 256u * 256u * 512u, 17);
    const Volume v = load_volume(p, {256, 256, 512}, VoxelType::U8, {1, 1, 1}, "carp");
    EXPECT_EQ(v.dims(), (Int3{256, 256, 512}));
    EXPECT_EQ(v.name(), "carp");
    EXPECT_FLOAT_EQ(v.voxels().front(), 17.0f / 255.0f);
}

TEST(LoadVolume, OneByteShortReportsBothCounts) {
    const auto p = temp_dir() / "short.raw";
    write_bytes(p, 8 * 8 * 8 - 1);
    try {
        load_volume(p, {8, 8, 8}, VoxelType::U8, {1, 1, 1});
        FAIL() << "expected malformed input";
    } catch (const MalformedInputError& e) {
        EXPECT_EQ(e.code(), "malformed_input");
        EXPECT_NE(std::string(e.what()).find("511"), std::string::npos);
        EXPECT_NE(std::string(e.what()).find("512"), std::string::npos);
    }
}

TEST(LoadVolume, MissingFileIsIoError) {
    EXPECT_THROW(load_volume(temp_dir() / "nope.raw", {2, 2, 2}, VoxelType::U8, {1, 1, 1}), IoError);
}

TEST(LoadVolume, U16NormalizesIntoUnitRange) {
    const auto p = temp_dir() / "u16.raw";
    {
        std::ofstream out(p, std::ios::binary);
        const unsigned vals[8] = {0, 1, 255, 256, 1000, 40000, 65534, 65535};
        for (unsigned v : vals) {
            out.put(static_cast<char>(v & 0xff));
            out.put(static_cast<char>(v >> 8));
        }
    }
    const Volume v = load_volume(p, {2, 2, 2}, VoxelType::U16LE, {1, 1, 1});
    EXPECT_EQ(v.voxels().front(), 0.0f);
    EXPECT_EQ(v.voxels().back(), 1.0f);
    EXPECT_NEAR(v.voxels()[4], 1000.0 / 65535.0, 1e-7);
    for (float x : v.voxels()) {
        EXPECT_GE(x, 0.0f);
        EXPECT_LE(x, 1.0f);
    }
}

TEST(LoadVolume, MetadataRoundTrip) {
    VolumeMetadata m{"skull", {4, 6, 8}, VoxelType::U16LE, {0.5, 1, 2}};
    const auto parsed = parse_metadata(format_metadata(m));
    EXPECT_EQ(parsed.name, "skull");
    EXPECT_EQ(parsed.dims, (Int3{4, 6, 8}));
    EXPECT_EQ(parsed.dtype, VoxelType::U16LE);
    EXPECT_EQ(parsed.spacing, (Vec3{0.5, 1, 2}));
    EXPECT_THROW(parse_metadata("dims=1,2,3\ncolour=red\n"), MalformedInputError);
}

TEST(VolumeInvariants, RejectsBadInputs) {
    EXPECT_THROW(Volume("v", {1, 1, 1}, ScalarField({2, 2, 2}, 1.5f)), MalformedInputError);
    EXPECT_THROW(Volume("v", {0, 1, 1}, ScalarField({2, 2, 2})), MalformedInputError);
}

TEST(TransferFunctionTest, PiecewiseLinearAndValidated) {
    auto tf = parse_transfer_function("0 0 0 0 0\n0.5 1 0 0 0.5\n1 1 1 1 1\n");
    const Rgba mid = tf.lookup(0.25);
    EXPECT_DOUBLE_EQ(mid.r, 0.5);
    EXPECT_DOUBLE_EQ(mid.a, 0.25);
    EXPECT_EQ(tf.lookup(1.0), (Rgba{1, 1, 1, 1}));
    EXPECT_THROW(parse_transfer_function("0 0 0 0 0\n0.5 0 0 0 0\n0.5 0 0 0 0\n1 0 0 0 0\n"), MalformedInputError);
    EXPECT_THROW(parse_transfer_function("0.1 0 0 0 0\n1 0 0 0 0\n"), MalformedInputError);
    const auto again = parse_transfer_function(format_transfer_function(tf));
    EXPECT_EQ(again.lookup(0.7), tf.lookup(0.7));
}

TEST(Partition, TableOneCarp) {
    const Volume v("carp", {1, 1, 1}, ScalarField({256, 256, 512}));
    const auto g = partition(v, {4, 4, 4});
    EXPECT_EQ(g.size(), 64u);
    for (const auto& b : g.blocks()) EXPECT_EQ(b.extent(), (Int3{64, 64, 128}));
}

TEST(Partition, CoarseGrid) {
    const Volume v("carp", {1, 1, 1}, ScalarField({256, 256, 512}));
    const auto g = partition(v, {2, 2, 2});
    EXPECT_EQ(g.size(), 8u);
    for (const auto& b : g.blocks()) EXPECT_EQ(b.extent(), (Int3{128, 128, 256}));
}

TEST(Partition, IdentityPartitionIsWholeVolume) {
    const Volume v = random_volume({6, 4, 10}, 3);
    const auto g = partition(v, {1, 1, 1});
    ASSERT_EQ(g.size(), 1u);
    EXPECT_EQ(g[0].center, (Vec3{0, 0, 0}));
    EXPECT_EQ(block_voxels(v, g[0]).values, v.voxels());
}

TEST(Partition, NonDivisibleNamesAxis) {
    const Volume v("v", {1, 1, 1}, ScalarField({8, 9, 8}));
    try {
        partition(v, {2, 2, 2});
        FAIL();
    } catch (const ConfigError& e) {
        EXPECT_NE(std::string(e.what()).find("axis y"), std::string::npos);
    }
}

TEST(Partition, CentersAreWorldMidpoints) {
    const Volume v("v", {0.5, 1, 2}, ScalarField({8, 8, 8}));
    const auto g = partition(v, {2, 4, 1});
    for (const auto& b : g.blocks()) {
        const Vec3 lo = v.voxel_to_world({double(b.voxel_lo.x), double(b.voxel_lo.y), double(b.voxel_lo.z)});
        const Vec3 hi = v.voxel_to_world({double(b.voxel_hi.x), double(b.voxel_hi.y), double(b.voxel_hi.z)});
        EXPECT_EQ(b.center, (lo + hi) * 0.5);
    }
    EXPECT_EQ(g.block({1, 3, 0}).index, (Int3{1, 3, 0}));
}

TEST(Partition, CompletenessOnRandomGrids) {
    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 20; ++trial) {
        Int3 grid, dims;
        for (int a = 0; a < 3; ++a) {
            grid[a] = 1 + static_cast<int>(rng() % 4);
            dims[a] = grid[a] * (1 + static_cast<int>(rng() % 4));
        }
        const Volume v("v", {1, 1, 1}, ScalarField(dims));
        const auto g = partition(v, grid);
        ASSERT_EQ(static_cast<std::int64_t>(g.size()), grid.product());
        std::vector<int> cover(static_cast<std::size_t>(dims.product()), 0);
        for (const auto& b : g.blocks())
            for (int z = b.voxel_lo.z; z < b.voxel_hi.z; ++z)
                for (int y = b.voxel_lo.y; y < b.voxel_hi.y; ++y)
                    for (int x = b.voxel_lo.x; x < b.voxel_hi.x; ++x) ++cover[v.field().index(x, y, z)];
        for (int c : cover) ASSERT_EQ(c, 1);
    }
}

TEST(BlockVoxels, ZeroVolumeGivesZeros) {
    const Volume v("v", {1, 1, 1}, ScalarField({8, 8, 8}));
    const auto g = partition(v, {2, 2, 2});
    for (float x : block_voxels(v, g[5]).values) EXPECT_EQ(x, 0.0f);
}

TEST(BlockVoxels, SingleNonzeroAtOrigin) {
    ScalarField f({8, 8, 8});
    f.at(0, 0, 0) = 1.0f;
    const Volume v("v", {1, 1, 1}, f);
    const auto g = partition(v, {2, 2, 2});
    const auto sub = block_voxels(v, g, {0, 0, 0});
    EXPECT_EQ(sub.dims, (Int3{4, 4, 4}));
    EXPECT_EQ(sub.at(0, 0, 0), 1.0f);
    float sum = 0;
    for (float x : sub.values) sum += x;
    EXPECT_EQ(sum, 1.0f);
}

TEST(BlockVoxels, OutOfGridIsLogicError) {
    const Volume v("v", {1, 1, 1}, ScalarField({8, 8, 8}));
    const auto g = partition(v, {2, 2, 2});
    EXPECT_THROW(block_voxels(v, g, {2, 0, 0}), LogicError);
    EXPECT_THROW(block_voxels(v, g, {0, -1, 0}), LogicError);
}

TEST(BlockVoxels, ReassemblyIsBitExact) {
    const Volume v = random_volume({12, 8, 6}, 11);
    const auto g = partition(v, {3, 2, 3});
    ScalarField rebuilt(v.dims(), -1.0f);
    for (const auto& b : g.blocks()) {
        const auto sub = block_voxels(v, b);
        for (int z = 0; z < sub.dims.z; ++z)
            for (int y = 0; y < sub.dims.y; ++y)
                for (int x = 0; x < sub.dims.x; ++x)
                    rebuilt.at(b.voxel_lo.x + x, b.voxel_lo.y + y, b.voxel_lo.z + z) = sub.at(x, y, z);
    }
    EXPECT_EQ(rebuilt.values, v.voxels());
}

TEST(BlockStatsTest, ConstantAndZeroFields) {
    const Volume half("v", {1, 1, 1}, ScalarField({8, 8, 8}, 0.5f));
    for (const auto& s : block_stats(half, partition(half, {2, 2, 2}))) {
        EXPECT_DOUBLE_EQ(s.mean, 0.5);
        EXPECT_DOUBLE_EQ(s.max, 0.5);
    }
    const Volume zero("v", {1, 1, 1}, ScalarField({8, 8, 8}));
    for (const auto& s : block_stats(zero, partition(zero, {2, 2, 2}))) {
        EXPECT_EQ(s.mean, 0.0);
        EXPECT_EQ(s.max, 0.0);
    }
}

TEST(BlockStatsTest, MatchesNaiveLoop) {
    const Volume v = random_volume({8, 12, 4}, 5);
    const auto g = partition(v, {2, 3, 2});
    const auto stats = block_stats(v, g);
    const Int3 bd = g.block_dims();
    for (std::size_t i = 0; i < g.size(); ++i) {
        const Int3 idx = g[i].index;
        double sum = 0, mx = 0;
        int n = 0;
        for (int z = 0; z < v.dims().z; ++z)
            for (int y = 0; y < v.dims().y; ++y)
                for (int x = 0; x < v.dims().x; ++x)
                    if (x / bd.x == idx.x && y / bd.y == idx.y && z / bd.z == idx.z) {
                        const double val = v.field().at(x, y, z);
                        sum += val;
                        mx = std::max(mx, val);
                        ++n;
                    }
        EXPECT_NEAR(stats[i].mean, sum / n, 1e-12);
        EXPECT_EQ(stats[i].max, mx);
        EXPECT_LE(stats[i].mean, stats[i].max);
        EXPECT_DOUBLE_EQ(g[i].mean_density, stats[i].mean);
    }
}
