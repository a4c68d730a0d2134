#include <gtest/gtest.h>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>
#include <span>
#include <tuple>
#include <vector>

#include "blocktri/io.hpp"
#include "blocktri/synthgen.hpp"

using namespace blocktri;
namespace fs = std::filesystem;

namespace {

class TempDir {
public:
    TempDir()
        : path_(fs::temp_directory_path() /
                ("blocktri_io_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()))) {
        fs::create_directories(path_);
    }
    ~TempDir() { fs::remove_all(path_); }
    fs::path operator/(const std::string& name) const { return path_ / name; }

private:
    fs::path path_;
};

std::vector<char> read_bytes(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_bytes(const fs::path& p, const std::vector<char>& bytes) {
    std::ofstream out(p, std::ios::binary);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

bool bitwise_equal(std::span<const double> a, std::span<const double> b) {
    return a.size() == b.size() && std::memcmp(a.data(), b.data(), a.size_bytes()) == 0;
}

} // namespace

TEST(BtdFile, RoundTripIsBitwise) {
    TempDir dir;
    for (auto [N, n, d] : {std::tuple{1, 1, 1}, {5, 3, 1}, {8, 2, 4}}) {
        auto sys = generate_spd_btd(N, n, d, 42);
        sys.rhs[0](0, 0) = -0.0;
        sys.matrix.diag(0)(0, 0) = std::numeric_limits<double>::denorm_min();
        const auto path = dir / "sys.btd";
        io::write_btd(path, sys.matrix, sys.rhs);
        const auto back = io::read_btd(path);
        EXPECT_TRUE(bitwise_equal(back.matrix.diag_arena().values(), sys.matrix.diag_arena().values()));
        EXPECT_TRUE(bitwise_equal(back.matrix.sub_arena().values(), sys.matrix.sub_arena().values()));
        ASSERT_TRUE(back.rhs.has_value());
        EXPECT_TRUE(bitwise_equal(back.rhs->arena().values(), sys.rhs.arena().values()));
        EXPECT_TRUE(std::signbit(back.rhs->operator[](0)(0, 0)));
    }
}

TEST(BtdFile, MatrixOnly) {
    TempDir dir;
    const auto sys = generate_spd_btd(4, 2, 1, 1);
    io::write_btd(dir / "a.btd", sys.matrix);
    const auto back = io::read_btd(dir / "a.btd");
    EXPECT_EQ(back.matrix, sys.matrix);
    EXPECT_FALSE(back.rhs.has_value());
    const auto h = io::read_btd_header(dir / "a.btd");
    EXPECT_FALSE(h.has_rhs());
    EXPECT_EQ(h.rhs_cols, 0u);
}

TEST(BtdFile, HeaderLayout) {
    TempDir dir;
    const auto sys = generate_spd_btd(3, 2, 5, 1);
    io::write_btd(dir / "h.btd", sys.matrix, sys.rhs);
    const auto bytes = read_bytes(dir / "h.btd");
    const std::uint64_t doubles = 3 * 4 + 2 * 4 + 3 * 2 * 5;
    ASSERT_EQ(bytes.size(), io::kHeaderBytes + 8 * doubles);
    EXPECT_EQ(std::string(bytes.data(), 4), "BTD1");
    std::uint32_t version, n, d, flags;
    std::uint64_t N;
    std::memcpy(&version, bytes.data() + 4, 4);
    std::memcpy(&N, bytes.data() + 8, 8);
    std::memcpy(&n, bytes.data() + 16, 4);
    std::memcpy(&d, bytes.data() + 20, 4);
    std::memcpy(&flags, bytes.data() + 24, 4);
    EXPECT_EQ(version, 1u);
    EXPECT_EQ(N, 3u);
    EXPECT_EQ(n, 2u);
    EXPECT_EQ(d, 5u);
    EXPECT_EQ(flags, 1u);
    for (int i = 28; i < 40; ++i) EXPECT_EQ(bytes[static_cast<std::size_t>(i)], 0);
    // First payload value is A(0,0)(0,0).
    double first;
    std::memcpy(&first, bytes.data() + 40, 8);
    EXPECT_EQ(first, sys.matrix.diag(0)(0, 0));
    const auto h = io::read_btd_header(dir / "h.btd");
    EXPECT_EQ(h.file_size(), bytes.size());
}

TEST(BtdFile, BadMagic) {
    TempDir dir;
    io::write_btd(dir / "m.btd", generate_spd_btd(2, 2, 1, 1).matrix);
    auto bytes = read_bytes(dir / "m.btd");
    std::memcpy(bytes.data(), "XXXX", 4);
    write_bytes(dir / "m.btd", bytes);
    EXPECT_THROW(io::read_btd(dir / "m.btd"), BadMagic);
}

TEST(BtdFile, UnsupportedVersion) {
    TempDir dir;
    io::write_btd(dir / "v.btd", generate_spd_btd(2, 2, 1, 1).matrix);
    auto bytes = read_bytes(dir / "v.btd");
    const std::uint32_t v = 2;
    std::memcpy(bytes.data() + 4, &v, 4);
    write_bytes(dir / "v.btd", bytes);
    try {
        io::read_btd(dir / "v.btd");
        FAIL() << "expected VersionUnsupported";
    } catch (const VersionUnsupported& e) {
        EXPECT_EQ(e.version(), 2u);
    }
}

TEST(BtdFile, TruncatedPayload) {
    TempDir dir;
    const auto sys = generate_spd_btd(3, 2, 1, 1);
    io::write_btd(dir / "t.btd", sys.matrix, sys.rhs);
    auto bytes = read_bytes(dir / "t.btd");
    const auto full = bytes.size();
    bytes.resize(full - 9);
    write_bytes(dir / "t.btd", bytes);
    try {
        io::read_btd(dir / "t.btd");
        FAIL() << "expected TruncatedPayload";
    } catch (const TruncatedPayload& e) {
        EXPECT_EQ(e.expected(), full);
        EXPECT_EQ(e.actual(), full - 9);
    }
}

TEST(BtdFile, TruncatedHeaderAndTrailingBytes) {
    TempDir dir;
    write_bytes(dir / "short.btd", {'B', 'T', 'D', '1'});
    EXPECT_THROW(io::read_btd(dir / "short.btd"), Error);
    io::write_btd(dir / "long.btd", generate_spd_btd(2, 1, 1, 1).matrix);
    auto bytes = read_bytes(dir / "long.btd");
    bytes.push_back(0);
    write_bytes(dir / "long.btd", bytes);
    EXPECT_THROW(io::read_btd(dir / "long.btd"), IoError);
    EXPECT_THROW(io::read_btd(dir / "missing.btd"), IoError);
}
