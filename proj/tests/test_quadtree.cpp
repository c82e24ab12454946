#include "trace/quadtree.hpp"

#include <doctest.h>

using namespace trace;

namespace {

QuadNode unit4() { return axis_aligned_quad(0, 0, 2, 2); }

}  // namespace

TEST_SUITE_BEGIN("quadtree");

TEST_CASE("side quantities on a small square") {
    SideSigns s = side_signs(Point{1, 1}, unit4());
    for (int j = 0; j < 4; ++j) CHECK(s.s[j] == 2);

    s = side_signs(Point{3, 1}, unit4());
    CHECK(s.s[1] == -2);
    CHECK(s.s[0] >= 0);
    CHECK(s.s[2] >= 0);
    CHECK(s.s[3] >= 0);

    s = side_signs(Point{0, 0}, unit4());
    CHECK(s.s[0] == 0);
    CHECK(s.s[3] == 0);
}

TEST_CASE("containment includes the boundary") {
    CHECK(contains(Point{1, 1}, unit4()));
    CHECK_FALSE(contains(Point{3, 1}, unit4()));
    CHECK(contains(Point{0, 0}, unit4()));
    CHECK(strictly_inside(Point{1, 1}, unit4()));
    CHECK_FALSE(strictly_inside(Point{0, 0}, unit4()));
}

TEST_CASE("mirroring across an edge flips that side quantity") {
    const QuadNode q = axis_aligned_quad(2, 2, 6, 6);
    const Point p{3, 3};
    const SideSigns base = side_signs(p, q);

    // reflections across edges 1..4 of the axis-aligned square
    const Point mirrored[4] = {{3, 1}, {9, 3}, {3, 9}, {1, 3}};
    for (int j = 0; j < 4; ++j) {
        const SideSigns m = side_signs(mirrored[j], q);
        CHECK(m.s[j] == -base.s[j]);
    }
}

TEST_CASE("containment agrees with interval comparison on axis-aligned quads") {
    SeededRng rng(31);
    for (int iter = 0; iter < 10; ++iter) {
        BigInt x0 = rng.below(1000), x1 = x0 + 1 + rng.below(1000);
        BigInt y0 = rng.below(1000), y1 = y0 + 1 + rng.below(1000);
        const QuadNode q = axis_aligned_quad(x0, y0, x1, y1);
        for (int k = 0; k < 1000; ++k) {
            Point p{rng.below(2200), rng.below(2200)};
            const bool interval = p.x >= x0 && p.x <= x1 && p.y >= y0 && p.y <= y1;
            CHECK(contains(p, q) == interval);
        }
    }
}

TEST_CASE("locate on a single-node tree") {
    Quadtree t(axis_aligned_quad(0, 0, 10, 10));
    CHECK(locate(t, Point{3, 7}) == std::vector<int>{1});
    CHECK_THROWS_AS(locate(t, Point{11, 3}), OutsideRoot);
}

TEST_CASE("locate descends into the containing child") {
    Quadtree t(axis_aligned_quad(0, 0, 10, 10));
    t.split(1, Point{5, 5});
    REQUIRE(t.node_count() == 5);
    const std::vector<int> path = locate(t, Point{2, 2});
    REQUIRE(path.size() == 2);
    CHECK(path[0] == 1);
    CHECK(contains(Point{2, 2}, t.node(path[1])));
    // lowest-index rule on the shared center point
    CHECK(locate(t, Point{5, 5})[1] == 2);
}

TEST_CASE("node counts must be 1 mod 4") {
    SeededRng rng(5);
    const QuadNode bounds = axis_aligned_quad(0, 0, 1000, 1000);
    CHECK_THROWS_AS(gen_random_quadtree(bounds, 50, 20, rng), Error);
    CHECK(round_node_count(1) == 1);
    CHECK(round_node_count(49) == 49);
    CHECK(round_node_count(50) == 53);
    CHECK(round_node_count(100) == 101);
}

TEST_CASE("generator produces the requested tree") {
    SeededRng rng(6);
    const QuadNode bounds = axis_aligned_quad(0, 0, 1 << 16, 1 << 16);
    CHECK(gen_random_quadtree(bounds, 1, 20, rng).node_count() == 1);

    Quadtree t = gen_random_quadtree(bounds, 53, 20, rng);
    CHECK(t.node_count() == 53);

    // each non-leaf's children partition it: interior sample points land in
    // at least one child, and in exactly one strictly
    for (int id = 1; id <= t.node_count(); ++id) {
        const QuadNode& n = t.node(id);
        if (n.leaf()) continue;
        for (int k = 0; k < 50; ++k) {
            const BigInt w = n.v[2].x - n.v[0].x, h = n.v[2].y - n.v[0].y;
            Point p{n.v[0].x + 1 + rng.below(w - 1), n.v[0].y + 1 + rng.below(h - 1)};
            int weak = 0, strict = 0;
            for (int c : n.children) {
                if (contains(p, t.node(c))) ++weak;
                if (strictly_inside(p, t.node(c))) ++strict;
            }
            CHECK(weak >= 1);
            const bool on_internal_edge = strict == 0;
            CHECK((strict == 1 || on_internal_edge));
            if (on_internal_edge) CHECK(weak >= 2);
        }
    }
}

TEST_CASE("every node on a locate path contains the point") {
    SeededRng rng(8);
    const QuadNode bounds = axis_aligned_quad(100, 100, 1 << 18, 1 << 18);
    Quadtree t = gen_random_quadtree(bounds, 29, 20, rng);
    for (int k = 0; k < 100; ++k) {
        const BigInt w = bounds.v[2].x - bounds.v[0].x, h = bounds.v[2].y - bounds.v[0].y;
        Point p{bounds.v[0].x + rng.below(w + 1), bounds.v[0].y + rng.below(h + 1)};
        const std::vector<int> path = locate(t, p);
        CHECK(path.front() == 1);
        CHECK(t.node(path.back()).leaf());
        for (int id : path) CHECK(contains(p, t.node(id)));
    }
}

TEST_CASE("unsplittable leaves are reported") {
    SeededRng rng(9);
    const QuadNode bounds = axis_aligned_quad(0, 0, 2, 2);
    // the first split must fail: every child would have side 1
    CHECK(gen_random_quadtree(bounds, 5, 4, rng).node_count() == 5);
    const QuadNode tiny = axis_aligned_quad(0, 0, 1, 5);
    CHECK_THROWS_AS(gen_random_quadtree(tiny, 5, 4, rng), Unsplittable);
}

TEST_CASE("malformed child links are rejected") {
    std::vector<QuadNode> nodes(5, axis_aligned_quad(0, 0, 10, 10));
    nodes[0].children = {2, 0, 3, 0};
    CHECK_THROWS_AS(Quadtree(std::move(nodes)), Error);

    std::vector<QuadNode> bad_id(2, axis_aligned_quad(0, 0, 10, 10));
    bad_id[0].children = {2, 3, 4, 5};  // links beyond the node list
    CHECK_THROWS_AS(Quadtree(std::move(bad_id)), Error);
}

TEST_CASE("json round-trip preserves the tree") {
    SeededRng rng(10);
    Quadtree t = gen_random_quadtree(axis_aligned_quad(0, 0, 1 << 15, 1 << 15), 13, 20, rng);
    Quadtree back = quadtree_from_json(quadtree_to_json(t));
    REQUIRE(back.node_count() == t.node_count());
    for (int id = 1; id <= t.node_count(); ++id) {
        CHECK(back.node(id).v == t.node(id).v);
        CHECK(back.node(id).children == t.node(id).children);
    }
}

TEST_SUITE_END();
