#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "llbar/initial_data.hpp"
#include "llbar/snapshot.hpp"

using namespace llbar;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    auto dir = fs::temp_directory_path() / "llbar_test_snapshot";
    fs::create_directories(dir);
    return dir / name;
}

Field sample_field(const Grid& g, std::uint64_t seed) {
    InitialDataSpec s;
    s.seed = seed;
    s.profile_r = 1.0;
    return random_field(g, s);
}

bool bit_equal(const Field& a, const Field& b) {
    if (!(a.grid() == b.grid()) || a.representation() != b.representation()) return false;
    for (std::size_t i = 0; i < a.data().size(); ++i)
        if (a.data()[i] != b.data()[i]) return false;
    return true;
}

}  // namespace

TEST(Snapshot, PhysicalRoundTripIsBitExact) {
    Grid g(2, 32, 5.5);
    Field f = sample_field(g, 1);
    auto path = scratch("phys.snap");
    save_snapshot(f, path, 1.25);
    Field back = load_snapshot(path, g);
    EXPECT_TRUE(bit_equal(f, back));
    EXPECT_EQ(fs::file_size(path), kSnapshotHeaderBytes + 3 * 8 * g.size());
}

TEST(Snapshot, SpectralRoundTripKeepsTimestamp) {
    Grid g(3, 8);
    Field f = to_spectral(sample_field(g, 2));
    std::stringstream ss;
    write_snapshot(ss, f, 3.5);
    Snapshot s = read_snapshot(ss);
    EXPECT_TRUE(bit_equal(f, s.field));
    EXPECT_EQ(s.timestamp, 3.5);
}

TEST(Snapshot, HeaderLayout) {
    Grid g(1, 16, 2.0);
    std::stringstream ss;
    write_snapshot(ss, Field(g), 0.0);
    std::string bytes = ss.str();
    ASSERT_EQ(bytes.size(), kSnapshotHeaderBytes + 3 * 8 * 16);
    EXPECT_EQ(bytes.substr(0, 6), "LLBAR1");
    std::int32_t dim = 0, n = 0;
    double L = 0.0;
    std::memcpy(&dim, bytes.data() + 8, 4);
    std::memcpy(&n, bytes.data() + 12, 4);
    std::memcpy(&L, bytes.data() + 16, 8);
    EXPECT_EQ(dim, 1);
    EXPECT_EQ(n, 16);
    EXPECT_EQ(L, 2.0);
}

TEST(Snapshot, TruncatedFileIsFormatError) {
    Grid g(2, 16);
    std::stringstream ss;
    write_snapshot(ss, sample_field(g, 3));
    std::string bytes = ss.str();
    for (std::size_t cut : {std::size_t{4}, std::size_t{20}, bytes.size() - 1}) {
        std::stringstream part(bytes.substr(0, cut));
        EXPECT_THROW(read_snapshot(part), FormatError) << "cut at " << cut;
    }
}

TEST(Snapshot, BadMagicIsFormatError) {
    std::stringstream ss("NOTASNAPSHOT and some more bytes to fill the header region....");
    EXPECT_THROW(read_snapshot(ss), FormatError);
}

TEST(Snapshot, GridMismatchIsFormatError) {
    auto path = scratch("small.snap");
    save_snapshot(sample_field(Grid(2, 32), 4), path);
    EXPECT_THROW(load_snapshot(path, Grid(2, 64)), FormatError);
    EXPECT_THROW(load_snapshot(path, Grid(3, 32)), FormatError);
    EXPECT_NO_THROW(load_snapshot(path));
}

TEST(Snapshot, InvalidHeaderGridIsFormatError) {
    Grid g(2, 16);
    std::stringstream ss;
    write_snapshot(ss, Field(g));
    std::string bytes = ss.str();
    std::int32_t bad = 7;
    std::memcpy(bytes.data() + 8, &bad, 4);
    std::stringstream in(bytes);
    EXPECT_THROW(read_snapshot(in), FormatError);
}

TEST(Snapshot, MissingFileIsIoError) {
    EXPECT_THROW(load_snapshot(scratch("does_not_exist.snap")), IoError);
    EXPECT_THROW(save_snapshot(Field(Grid(1, 8)), "/nonexistent_dir/x.snap"), IoError);
}

TEST(Checkpoint, RoundTripWithPrevious) {
    Grid g(2, 16);
    Field u = sample_field(g, 5), prev = sample_field(g, 6);
    auto path = scratch("state.ckpt");
    save_checkpoint(path, u, {0.75, 1e-3, 750}, prev);
    Checkpoint ck = load_checkpoint(path, g);
    EXPECT_TRUE(bit_equal(u, ck.field));
    ASSERT_TRUE(ck.previous.has_value());
    EXPECT_TRUE(bit_equal(prev, *ck.previous));
    EXPECT_EQ(ck.state.t, 0.75);
    EXPECT_EQ(ck.state.dt, 1e-3);
    EXPECT_EQ(ck.state.steps, 750);
}

TEST(Checkpoint, WithoutPreviousAndPlainSnapshotRejected) {
    Grid g(1, 16);
    auto path = scratch("nostate.ckpt");
    save_checkpoint(path, sample_field(g, 7), {0.1, 0.01, 10});
    EXPECT_FALSE(load_checkpoint(path).previous.has_value());
    auto snap = scratch("plain.snap");
    save_snapshot(sample_field(g, 7), snap);
    EXPECT_THROW(load_checkpoint(snap), FormatError);
}
