#pragma once

#include <cstdint>
#include <utility>

#include "blocktri/core.hpp"

namespace blocktri {

struct SyntheticSystem {
    BlockTridiagonalMatrix<double> matrix;
    BlockRhs<double> rhs;
};

/// Random strictly block-diagonally-dominant (hence SPD) block-tridiagonal
/// system. Off-diagonal entries are uniform in [-1, 1]; each diagonal block
/// is a random symmetric block plus a row-wise dominance shift. RHS entries
/// are standard normal. Deterministic per seed.
SyntheticSystem generate_spd_btd(Index num_blocks, Index block_size, Index rhs_cols,
                                 std::uint64_t seed);

} // namespace blocktri
