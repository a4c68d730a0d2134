#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace blocktri {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class DimensionMismatch : public Error {
public:
    using Error::Error;
};

class AsymmetricBlock : public Error {
public:
    AsymmetricBlock(std::ptrdiff_t block, double asymmetry, double tolerance)
        : Error("diagonal block " + std::to_string(block) + " is not symmetric (max |D - D^T| = " +
                std::to_string(asymmetry) + ", tolerance " + std::to_string(tolerance) + ")"),
          block_(block), asymmetry_(asymmetry) { }

    std::ptrdiff_t block() const { return block_; }
    double asymmetry() const { return asymmetry_; }

private:
    std::ptrdiff_t block_;
    double asymmetry_;
};

/// A Cholesky pivot was not strictly positive.
///
/// Coordinates are filled in as the error travels outward: the kernel knows
/// the pivot, the batch knows the member, the block sweep knows the block row
/// and the recursion knows the level. `pivot` is 1-based (LAPACK `info`
/// convention); the others are 0-based.
class NotPositiveDefinite : public Error {
public:
    explicit NotPositiveDefinite(std::ptrdiff_t pivot, std::ptrdiff_t block = 0,
                                 std::ptrdiff_t member = 0, std::ptrdiff_t level = 0)
        : Error(format(pivot, block, member, level)),
          pivot_(pivot), block_(block), member_(member), level_(level) { }

    std::ptrdiff_t pivot() const { return pivot_; }
    std::ptrdiff_t block() const { return block_; }
    std::ptrdiff_t member() const { return member_; }
    std::ptrdiff_t level() const { return level_; }

    NotPositiveDefinite at_block(std::ptrdiff_t block) const {
        return NotPositiveDefinite(pivot_, block, member_, level_);
    }
    NotPositiveDefinite at_member(std::ptrdiff_t member) const {
        return NotPositiveDefinite(pivot_, block_, member, level_);
    }
    NotPositiveDefinite at_level(std::ptrdiff_t level) const {
        return NotPositiveDefinite(pivot_, block_, member_, level);
    }

private:
    static std::string format(std::ptrdiff_t pivot, std::ptrdiff_t block, std::ptrdiff_t member,
                              std::ptrdiff_t level) {
        return "matrix is not positive definite (level " + std::to_string(level) + ", member " +
               std::to_string(member) + ", block " + std::to_string(block) + ", pivot " +
               std::to_string(pivot) + ")";
    }

    std::ptrdiff_t pivot_;
    std::ptrdiff_t block_;
    std::ptrdiff_t member_;
    std::ptrdiff_t level_;
};

class SingularDiagonal : public Error {
public:
    explicit SingularDiagonal(std::ptrdiff_t index)
        : Error("triangular factor has a zero diagonal entry at " + std::to_string(index)),
          index_(index) { }
    std::ptrdiff_t index() const { return index_; }

private:
    std::ptrdiff_t index_;
};

/// Wraps a non-Cholesky error raised by one member of a batch.
class BatchMemberError : public Error {
public:
    BatchMemberError(std::ptrdiff_t member, const std::string& what)
        : Error("batch member " + std::to_string(member) + ": " + what), member_(member) { }
    std::ptrdiff_t member() const { return member_; }

private:
    std::ptrdiff_t member_;
};

class LevelOverflow : public Error {
public:
    explicit LevelOverflow(std::ptrdiff_t max_levels)
        : Error("recursion exceeded max_levels = " + std::to_string(max_levels)) { }
};

class ZeroPivot : public Error {
public:
    explicit ZeroPivot(std::ptrdiff_t index)
        : Error("zero pivot at row " + std::to_string(index)), index_(index) { }
    std::ptrdiff_t index() const { return index_; }

private:
    std::ptrdiff_t index_;
};

class InvalidDimensions : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

class BadMagic : public IoError {
public:
    using IoError::IoError;
};

class VersionUnsupported : public IoError {
public:
    explicit VersionUnsupported(unsigned version)
        : IoError("unsupported BTD file version " + std::to_string(version)), version_(version) { }
    unsigned version() const { return version_; }

private:
    unsigned version_;
};

class TruncatedPayload : public IoError {
public:
    TruncatedPayload(std::size_t expected, std::size_t actual)
        : IoError("truncated BTD file: expected " + std::to_string(expected) + " bytes, got " +
                  std::to_string(actual)),
          expected_(expected), actual_(actual) { }
    std::size_t expected() const { return expected_; }
    std::size_t actual() const { return actual_; }

private:
    std::size_t expected_;
    std::size_t actual_;
};

} // namespace blocktri
