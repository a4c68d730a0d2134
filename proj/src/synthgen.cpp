#include "blocktri/synthgen.hpp"

#include <random>

namespace blocktri {

SyntheticSystem generate_spd_btd(Index num_blocks, Index block_size, Index rhs_cols,
                                 std::uint64_t seed) {
    if (num_blocks < 1 || block_size < 1 || rhs_cols < 1)
        throw InvalidDimensions("generate_spd_btd needs N, n, d >= 1");
    const Index n = block_size;
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> uniform(-1.0, 1.0);
    std::normal_distribution<double> normal(0.0, 1.0);

    SyntheticSystem sys{BlockTridiagonalMatrix<double>(num_blocks, n),
                        BlockRhs<double>(num_blocks, n, rhs_cols)};
    auto& A = sys.matrix;
    for (Index i = 0; i + 1 < num_blocks; ++i)
        for (double& v : std::span<double>(A.sub_arena().block_data(i), static_cast<std::size_t>(n * n)))
            v = uniform(rng);

    Block<double> R(n, n);
    for (Index i = 0; i < num_blocks; ++i) {
        for (Index r = 0; r < n; ++r)
            for (Index c = 0; c < n; ++c) R(r, c) = uniform(rng);
        auto D = A.diag(i);
        D = (R + R.transpose()) / 2.0;
        // Row r of block row i touches D, A(i,i-1) row r and A(i+1,i) column r.
        double shift = 0;
        for (Index r = 0; r < n; ++r) {
            double row = D.row(r).cwiseAbs().sum();
            if (i > 0) row += A.sub(i - 1).row(r).cwiseAbs().sum();
            if (i + 1 < num_blocks) row += A.sub(i).col(r).cwiseAbs().sum();
            shift = std::max(shift, row);
        }
        D.diagonal().array() += 1.0 + shift;
    }

    for (double& v : sys.rhs.arena().values()) v = normal(rng);
    return sys;
}

} // namespace blocktri
