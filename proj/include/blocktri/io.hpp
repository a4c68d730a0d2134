#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>

#include "blocktri/core.hpp"

namespace blocktri::io {

/// BTD1 binary layout (all little-endian):
///
///   offset  size  field
///        0     4  magic "BTD1"
///        4     4  version (u32) = 1
///        8     8  N (u64)
///       16     4  n (u32)
///       20     4  d (u32), 0 when no right-hand side is stored
///       24     4  flags (u32), bit 0 = right-hand side present
///       28    12  reserved, zero
///       40     -  payload: N diag blocks, N-1 sub blocks, then N RHS
///                 panels if present; f64, block-major, row-major
struct BtdFileHeader {
    std::uint32_t version = 1;
    std::uint64_t num_blocks = 0;
    std::uint32_t block_size = 0;
    std::uint32_t rhs_cols = 0;
    std::uint32_t flags = 0;

    bool has_rhs() const { return (flags & 1u) != 0; }
    /// Total file size implied by the header.
    std::uint64_t file_size() const;
};

inline constexpr std::uint64_t kHeaderBytes = 40;
inline constexpr std::uint32_t kFormatVersion = 1;

struct BtdFile {
    BlockTridiagonalMatrix<double> matrix;
    std::optional<BlockRhs<double>> rhs;
};

void write_btd(const std::filesystem::path& path, const BlockTridiagonalMatrix<double>& A,
               const BlockRhs<double>* B = nullptr);
inline void write_btd(const std::filesystem::path& path, const BlockTridiagonalMatrix<double>& A,
                      const BlockRhs<double>& B) {
    write_btd(path, A, &B);
}

/// Throws IoError, BadMagic, VersionUnsupported or TruncatedPayload. The
/// matrix is returned as stored, without symmetry validation.
BtdFile read_btd(const std::filesystem::path& path);

/// Reads and checks only the header.
BtdFileHeader read_btd_header(const std::filesystem::path& path);

} // namespace blocktri::io
