#pragma once

#include "trace/modmath.hpp"

#include <optional>
#include <vector>

namespace trace {

class DimensionMismatch : public Error {
public:
    explicit DimensionMismatch(const std::string& what) : Error(what) {}
};

/// Dense matrix over Z_p, row major. All entries share the field's modulus.
class MatrixZp {
public:
    MatrixZp(int rows, int cols, ZpPtr field);
    static MatrixZp identity(int n, const ZpPtr& field);

    int rows() const { return rows_; }
    int cols() const { return cols_; }
    const ZpPtr& field() const { return field_; }

    const BigInt& raw(int r, int c) const { return e_[index(r, c)]; }
    Residue at(int r, int c) const { return Residue(e_[index(r, c)], field_); }
    void set(int r, int c, BigInt v);
    void set(int r, int c, const Residue& v) { set(r, c, v.value()); }

private:
    std::size_t index(int r, int c) const { return static_cast<std::size_t>(r) * cols_ + c; }
    int rows_, cols_;
    ZpPtr field_;
    std::vector<BigInt> e_;
};

class VectorZp {
public:
    VectorZp(int length, ZpPtr field);

    int length() const { return len_; }
    const ZpPtr& field() const { return field_; }

    const BigInt& raw(int i) const { return e_[i]; }
    Residue at(int i) const { return Residue(e_[i], field_); }
    void set(int i, BigInt v);
    void set(int i, const Residue& v) { set(i, v.value()); }

    bool is_zero() const;
    bool operator==(const VectorZp& o) const;

private:
    int len_;
    ZpPtr field_;
    std::vector<BigInt> e_;
};

/// Classified result of solving M x = b over Z_p.
struct SolveOutcome {
    enum class Tag { Unique, Underdetermined, Inconsistent };

    Tag tag;
    int rank = 0;                      // rank of M in every case
    std::optional<VectorZp> solution;  // present iff tag == Unique

    bool unique() const { return tag == Tag::Unique; }
};

/// Row rank over Z_p by exact Gaussian elimination.
int rank(const MatrixZp& m);

/// Unique solution when rank equals the number of unknowns and the system is
/// consistent; Underdetermined(rank) when consistent with rank < cols;
/// Inconsistent when no solution exists. Extra rows of an overdetermined
/// system act as consistency checks.
SolveOutcome solve(const MatrixZp& m, const VectorZp& b);

/// M x - b componentwise in Z_p.
VectorZp residual(const MatrixZp& m, const VectorZp& x, const VectorZp& b);

}  // namespace trace
