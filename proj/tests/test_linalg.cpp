#include "oracles.hpp"
#include "trace/linalg.hpp"

#include <doctest.h>

#include <algorithm>

using namespace trace;

namespace {

MatrixZp from_rows(const std::vector<std::vector<int>>& rows, const ZpPtr& f) {
    MatrixZp m(static_cast<int>(rows.size()), static_cast<int>(rows[0].size()), f);
    for (std::size_t r = 0; r < rows.size(); ++r)
        for (std::size_t c = 0; c < rows[r].size(); ++c) m.set(r, c, BigInt(rows[r][c]));
    return m;
}

VectorZp from_entries(const std::vector<int>& v, const ZpPtr& f) {
    VectorZp out(static_cast<int>(v.size()), f);
    for (std::size_t i = 0; i < v.size(); ++i) out.set(i, BigInt(v[i]));
    return out;
}

}  // namespace

TEST_SUITE_BEGIN("linalg");

TEST_CASE("rank of zero and identity matrices") {
    ZpPtr f = Zp::make(7);
    CHECK(rank(MatrixZp(3, 3, f)) == 0);
    CHECK(rank(MatrixZp::identity(5, f)) == 5);
}

TEST_CASE("solve on the identity returns the rhs") {
    ZpPtr f = Zp::make(1009);
    VectorZp b = from_entries({5, 900, 3}, f);
    SolveOutcome out = solve(MatrixZp::identity(3, f), b);
    REQUIRE(out.unique());
    CHECK(*out.solution == b);
    CHECK(residual(MatrixZp::identity(3, f), *out.solution, b).is_zero());
}

TEST_CASE("small unique system over Z_7") {
    ZpPtr f = Zp::make(7);
    SolveOutcome out = solve(from_rows({{2, 1}, {1, 1}}, f), from_entries({5, 3}, f));
    REQUIRE(out.unique());
    CHECK(out.solution->raw(0) == 2);
    CHECK(out.solution->raw(1) == 1);
}

TEST_CASE("inconsistent and underdetermined systems are classified") {
    ZpPtr f = Zp::make(7);
    MatrixZp m = from_rows({{1, 1}, {2, 2}}, f);

    SolveOutcome bad = solve(m, from_entries({1, 3}, f));
    CHECK(bad.tag == SolveOutcome::Tag::Inconsistent);
    CHECK(bad.rank == 1);

    SolveOutcome under = solve(m, from_entries({1, 2}, f));
    CHECK(under.tag == SolveOutcome::Tag::Underdetermined);
    CHECK(under.rank == 1);
}

TEST_CASE("overdetermined rows act as consistency checks") {
    ZpPtr f = Zp::make(101);
    MatrixZp m = from_rows({{1, 0}, {0, 1}, {1, 1}, {2, 1}}, f);
    SolveOutcome good = solve(m, from_entries({4, 9, 13, 17}, f));
    REQUIRE(good.unique());
    CHECK(good.solution->raw(0) == 4);
    CHECK(good.solution->raw(1) == 9);

    SolveOutcome bad = solve(m, from_entries({4, 9, 13, 18}, f));
    CHECK(bad.tag == SolveOutcome::Tag::Inconsistent);
}

TEST_CASE("residual definition") {
    ZpPtr f = Zp::make(13);
    MatrixZp m = from_rows({{3, 1}, {0, 2}}, f);
    VectorZp b = from_entries({7, 5}, f);
    VectorZp zero(2, f);
    VectorZp r = residual(m, zero, b);
    CHECK(r.raw(0) == (13 - 7));
    CHECK(r.raw(1) == (13 - 5));
}

TEST_CASE("shape mismatches throw") {
    ZpPtr f = Zp::make(13);
    CHECK_THROWS_AS(solve(MatrixZp(2, 2, f), VectorZp(3, f)), DimensionMismatch);
    CHECK_THROWS_AS(residual(MatrixZp(2, 2, f), VectorZp(3, f), VectorZp(2, f)),
                    DimensionMismatch);
}

TEST_CASE("rank is invariant under row permutation and scaling") {
    ZpPtr f = Zp::make(1009);
    SeededRng rng(21);
    for (int iter = 0; iter < 20; ++iter) {
        const int n = 2 + static_cast<int>(rng.below_u64(5));
        const int rows = n + static_cast<int>(rng.below_u64(3));
        MatrixZp m(rows, n, f);
        for (int r = 0; r < rows; ++r)
            for (int c = 0; c < n; ++c) m.set(r, c, rng.below(1009));
        const int base = rank(m);

        std::vector<int> perm(rows);
        for (int r = 0; r < rows; ++r) perm[r] = r;
        for (int r = rows - 1; r > 0; --r)
            std::swap(perm[r], perm[rng.below_u64(static_cast<std::uint64_t>(r) + 1)]);

        MatrixZp shuffled(rows, n, f);
        for (int r = 0; r < rows; ++r) {
            BigInt scale = 1 + rng.below(1008);
            for (int c = 0; c < n; ++c) shuffled.set(perm[r], c, m.raw(r, c) * scale);
        }
        CHECK(rank(shuffled) == base);
    }
}

TEST_CASE("agreement with the determinant/adjugate oracle") {
    const BigInt p = 1009;
    ZpPtr f = Zp::make(p);
    SeededRng rng(77);

    for (int iter = 0; iter < 60; ++iter) {
        const int n = 1 + static_cast<int>(rng.below_u64(6));
        std::vector<std::vector<BigInt>> rows(n, std::vector<BigInt>(n));
        std::vector<BigInt> rhs(n);

        // a third of the systems are built rank-deficient
        if (iter % 3 == 0 && n >= 2) {
            const int inner = 1 + static_cast<int>(rng.below_u64(n - 1));
            std::vector<std::vector<BigInt>> left(n, std::vector<BigInt>(inner));
            std::vector<std::vector<BigInt>> right(inner, std::vector<BigInt>(n));
            for (auto& row : left)
                for (auto& v : row) v = rng.below(p);
            for (auto& row : right)
                for (auto& v : row) v = rng.below(p);
            for (int r = 0; r < n; ++r)
                for (int c = 0; c < n; ++c) {
                    BigInt acc = 0;
                    for (int k = 0; k < inner; ++k) acc += left[r][k] * right[k][c];
                    rows[r][c] = acc % p;
                }
        } else {
            for (auto& row : rows)
                for (auto& v : row) v = rng.below(p);
        }
        for (auto& v : rhs) v = rng.below(p);

        MatrixZp m(n, n, f);
        VectorZp b(n, f);
        for (int r = 0; r < n; ++r) {
            for (int c = 0; c < n; ++c) m.set(r, c, rows[r][c]);
            b.set(r, rhs[r]);
        }

        const oracles::CramerOutcome expect = oracles::cramer_solve(rows, rhs, p);
        const SolveOutcome got = solve(m, b);
        CHECK(got.rank == expect.rank);
        switch (expect.tag) {
            case oracles::CramerOutcome::Tag::Unique:
                REQUIRE(got.unique());
                for (int c = 0; c < n; ++c) CHECK(got.solution->raw(c) == expect.solution[c]);
                break;
            case oracles::CramerOutcome::Tag::Underdetermined:
                CHECK(got.tag == SolveOutcome::Tag::Underdetermined);
                break;
            case oracles::CramerOutcome::Tag::Inconsistent:
                CHECK(got.tag == SolveOutcome::Tag::Inconsistent);
                break;
        }
    }
}

TEST_SUITE_END();
