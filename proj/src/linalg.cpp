#include "trace/linalg.hpp"

namespace trace {

MatrixZp::MatrixZp(int rows, int cols, ZpPtr field)
    : rows_(rows), cols_(cols), field_(std::move(field)) {
    if (rows < 0 || cols < 0) throw DimensionMismatch("negative matrix dimension");
    if (!field_) throw Error("matrix without a field");
    e_.assign(static_cast<std::size_t>(rows_) * cols_, BigInt(0));
}

MatrixZp MatrixZp::identity(int n, const ZpPtr& field) {
    MatrixZp m(n, n, field);
    for (int i = 0; i < n; ++i) m.set(i, i, BigInt(1));
    return m;
}

void MatrixZp::set(int r, int c, BigInt v) {
    mpz_fdiv_r(v.get_mpz_t(), v.get_mpz_t(), field_->prime().get_mpz_t());
    e_[index(r, c)] = std::move(v);
}

VectorZp::VectorZp(int length, ZpPtr field) : len_(length), field_(std::move(field)) {
    if (length < 0) throw DimensionMismatch("negative vector length");
    if (!field_) throw Error("vector without a field");
    e_.assign(static_cast<std::size_t>(len_), BigInt(0));
}

void VectorZp::set(int i, BigInt v) {
    mpz_fdiv_r(v.get_mpz_t(), v.get_mpz_t(), field_->prime().get_mpz_t());
    e_[i] = std::move(v);
}

bool VectorZp::is_zero() const {
    for (const BigInt& v : e_)
        if (v != 0) return false;
    return true;
}

bool VectorZp::operator==(const VectorZp& o) const {
    return len_ == o.len_ && field_->prime() == o.field_->prime() && e_ == o.e_;
}

namespace {

// Gauss-Jordan elimination on a row-major working copy. `width` may exceed
// `cols` by one when the right-hand side is carried along. Pivots are the
// first nonzero entry in each column; every pivot column is fully reduced.
struct Echelon {
    std::vector<BigInt> a;
    int rows, cols, width;
    std::vector<int> pivot_cols;  // pivot of row k sits in column pivot_cols[k]

    BigInt& at(int r, int c) { return a[static_cast<std::size_t>(r) * width + c]; }

    void run(const BigInt& p) {
        BigInt tmp;
        int row = 0;
        for (int col = 0; col < cols && row < rows; ++col) {
            int pr = -1;
            for (int r = row; r < rows; ++r)
                if (at(r, col) != 0) {
                    pr = r;
                    break;
                }
            if (pr < 0) continue;
            if (pr != row)
                for (int c = col; c < width; ++c) std::swap(at(pr, c), at(row, c));

            BigInt inv = mod_inv(at(row, col), p);
            for (int c = col; c < width; ++c) {
                tmp = at(row, c) * inv;
                mpz_fdiv_r(at(row, c).get_mpz_t(), tmp.get_mpz_t(), p.get_mpz_t());
            }
            for (int r = 0; r < rows; ++r) {
                if (r == row || at(r, col) == 0) continue;
                BigInt factor = at(r, col);
                for (int c = col; c < width; ++c) {
                    tmp = at(row, c) * factor;
                    at(r, c) -= tmp;
                    mpz_fdiv_r(at(r, c).get_mpz_t(), at(r, c).get_mpz_t(), p.get_mpz_t());
                }
            }
            pivot_cols.push_back(col);
            ++row;
        }
    }
};

Echelon eliminate(const MatrixZp& m, const VectorZp* b) {
    Echelon e;
    e.rows = m.rows();
    e.cols = m.cols();
    e.width = e.cols + (b ? 1 : 0);
    e.a.reserve(static_cast<std::size_t>(e.rows) * e.width);
    for (int r = 0; r < e.rows; ++r) {
        for (int c = 0; c < e.cols; ++c) e.a.push_back(m.raw(r, c));
        if (b) e.a.push_back(b->raw(r));
    }
    e.run(m.field()->prime());
    return e;
}

}  // namespace

int rank(const MatrixZp& m) {
    return static_cast<int>(eliminate(m, nullptr).pivot_cols.size());
}

SolveOutcome solve(const MatrixZp& m, const VectorZp& b) {
    if (m.rows() != b.length()) throw DimensionMismatch("solve: rows != rhs length");

    Echelon e = eliminate(m, &b);
    const int rk = static_cast<int>(e.pivot_cols.size());

    // rows below the last pivot have zero coefficients; a nonzero rhs there
    // certifies that no solution exists
    for (int r = rk; r < e.rows; ++r)
        if (e.at(r, e.cols) != 0) return SolveOutcome{SolveOutcome::Tag::Inconsistent, rk, {}};

    if (rk < m.cols()) return SolveOutcome{SolveOutcome::Tag::Underdetermined, rk, {}};

    VectorZp x(m.cols(), m.field());
    for (int k = 0; k < rk; ++k) x.set(e.pivot_cols[k], e.at(k, e.cols));
    return SolveOutcome{SolveOutcome::Tag::Unique, rk, std::move(x)};
}

VectorZp residual(const MatrixZp& m, const VectorZp& x, const VectorZp& b) {
    if (m.cols() != x.length() || m.rows() != b.length())
        throw DimensionMismatch("residual: shapes do not conform");
    const BigInt& p = m.field()->prime();
    VectorZp r(m.rows(), m.field());
    BigInt acc, tmp;
    for (int i = 0; i < m.rows(); ++i) {
        acc = 0;
        for (int c = 0; c < m.cols(); ++c) {
            tmp = m.raw(i, c) * x.raw(c);
            acc += tmp;
        }
        acc -= b.raw(i);
        mpz_fdiv_r(acc.get_mpz_t(), acc.get_mpz_t(), p.get_mpz_t());
        r.set(i, acc);
    }
    return r;
}

}  // namespace trace
