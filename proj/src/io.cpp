#include "blocktri/io.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <span>
#include <string>
#include <vector>

namespace blocktri::io {

namespace {

constexpr std::array<char, 4> kMagic{'B', 'T', 'D', '1'};

template <typename T>
void put_le(unsigned char* out, T value) {
    for (std::size_t i = 0; i < sizeof(T); ++i) out[i] = static_cast<unsigned char>(value >> (8 * i));
}

template <typename T>
T get_le(const unsigned char* in) {
    T value = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) value |= static_cast<T>(in[i]) << (8 * i);
    return value;
}

void write_values(std::ofstream& out, std::span<const double> values) {
    std::vector<unsigned char> buf(values.size() * 8);
    for (std::size_t i = 0; i < values.size(); ++i)
        put_le(buf.data() + 8 * i, std::bit_cast<std::uint64_t>(values[i]));
    out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
}

void read_values(std::ifstream& in, std::span<double> values) {
    std::vector<unsigned char> buf(values.size() * 8);
    in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
    if (!in) throw IoError("read failed while loading BTD payload");
    for (std::size_t i = 0; i < values.size(); ++i)
        values[i] = std::bit_cast<double>(get_le<std::uint64_t>(buf.data() + 8 * i));
}

BtdFileHeader parse_header(std::ifstream& in, std::uint64_t actual_size) {
    if (actual_size < kHeaderBytes) throw TruncatedPayload(kHeaderBytes, actual_size);
    std::array<unsigned char, kHeaderBytes> raw{};
    in.read(reinterpret_cast<char*>(raw.data()), raw.size());
    if (!in) throw IoError("read failed while loading BTD header");
    if (std::memcmp(raw.data(), kMagic.data(), kMagic.size()) != 0) throw BadMagic("not a BTD file (bad magic)");
    BtdFileHeader h;
    h.version = get_le<std::uint32_t>(raw.data() + 4);
    if (h.version != kFormatVersion) throw VersionUnsupported(h.version);
    h.num_blocks = get_le<std::uint64_t>(raw.data() + 8);
    h.block_size = get_le<std::uint32_t>(raw.data() + 16);
    h.rhs_cols = get_le<std::uint32_t>(raw.data() + 20);
    h.flags = get_le<std::uint32_t>(raw.data() + 24);
    if (h.num_blocks < 1 || h.block_size < 1 || (h.has_rhs() && h.rhs_cols < 1))
        throw IoError("BTD header has zero dimensions");
    const std::uint64_t expected = h.file_size();
    if (actual_size < expected) throw TruncatedPayload(expected, actual_size);
    if (actual_size > expected)
        throw IoError("BTD file has " + std::to_string(actual_size - expected) + " trailing bytes");
    return h;
}

std::uint64_t file_size_of(std::ifstream& in) {
    in.seekg(0, std::ios::end);
    const auto size = static_cast<std::uint64_t>(in.tellg());
    in.seekg(0, std::ios::beg);
    return size;
}

std::ifstream open_for_read(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string() + " for reading");
    return in;
}

} // namespace

std::uint64_t BtdFileHeader::file_size() const {
    const std::uint64_t n2 = std::uint64_t(block_size) * block_size;
    std::uint64_t values = num_blocks * n2 + (num_blocks - 1) * n2;
    if (has_rhs()) values += num_blocks * block_size * rhs_cols;
    return kHeaderBytes + 8 * values;
}

void write_btd(const std::filesystem::path& path, const BlockTridiagonalMatrix<double>& A,
               const BlockRhs<double>* B) {
    if (B && (B->num_blocks() != A.num_blocks() || B->block_size() != A.block_size()))
        throw DimensionMismatch("write_btd: right-hand side is not conformal with the matrix");
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");

    std::array<unsigned char, kHeaderBytes> raw{};
    std::memcpy(raw.data(), kMagic.data(), kMagic.size());
    put_le(raw.data() + 4, kFormatVersion);
    put_le(raw.data() + 8, static_cast<std::uint64_t>(A.num_blocks()));
    put_le(raw.data() + 16, static_cast<std::uint32_t>(A.block_size()));
    put_le(raw.data() + 20, static_cast<std::uint32_t>(B ? B->cols() : 0));
    put_le(raw.data() + 24, static_cast<std::uint32_t>(B ? 1u : 0u));
    out.write(reinterpret_cast<const char*>(raw.data()), raw.size());

    write_values(out, A.diag_arena().values());
    write_values(out, A.sub_arena().values());
    if (B) write_values(out, B->arena().values());
    if (!out) throw IoError("write failed for " + path.string());
}

BtdFileHeader read_btd_header(const std::filesystem::path& path) {
    auto in = open_for_read(path);
    return parse_header(in, file_size_of(in));
}

BtdFile read_btd(const std::filesystem::path& path) {
    auto in = open_for_read(path);
    const BtdFileHeader h = parse_header(in, file_size_of(in));
    const auto N = static_cast<Index>(h.num_blocks);
    const auto n = static_cast<Index>(h.block_size);
    BtdFile file{BlockTridiagonalMatrix<double>(N, n), std::nullopt};
    read_values(in, file.matrix.diag_arena().values());
    read_values(in, file.matrix.sub_arena().values());
    if (h.has_rhs()) {
        file.rhs.emplace(N, n, static_cast<Index>(h.rhs_cols));
        read_values(in, file.rhs->arena().values());
    }
    return file;
}

} // namespace blocktri::io
