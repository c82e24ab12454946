#pragma once

#include "trace/modmath.hpp"

#include <json.hpp>

#include <array>
#include <vector>

namespace trace {

class OutsideRoot : public Error {
public:
    OutsideRoot() : Error("point lies outside the root quadrant") {}
};

class Unsplittable : public Error {
public:
    Unsplittable() : Error("chosen leaf has no interior grid point") {}
};

struct Point {
    BigInt x, y;
    bool operator==(const Point& o) const { return x == o.x && y == o.y; }
    bool operator!=(const Point& o) const { return !(*this == o); }
};

/// Signed side quantities S_1..S_4 of the four edges of a quadrant.
struct SideSigns {
    std::array<BigInt, 4> s;
};

/// One quadrant: four vertices in anticlockwise order, and optionally four
/// child node ids. Id 0 means no child.
struct QuadNode {
    std::array<Point, 4> v;
    std::array<int, 4> children{0, 0, 0, 0};

    bool leaf() const { return children[0] == 0; }
};

/// Axis-aligned quadrant (x0,y0)-(x1,y1), vertices anticlockwise starting
/// from the minimum corner.
QuadNode axis_aligned_quad(BigInt x0, BigInt y0, BigInt x1, BigInt y1);

/// Axis-aligned bounding box of a quadrant's vertices.
struct Box {
    BigInt min_x, min_y, max_x, max_y;
    bool intersects(const Box& o) const;
};
Box bounding_box(const QuadNode& q);

/// Spatial division. Node ids are 1-based; node 1 is the root.
class Quadtree {
public:
    explicit Quadtree(QuadNode root);
    Quadtree(std::vector<QuadNode> nodes);

    int node_count() const { return static_cast<int>(nodes_.size()); }
    const QuadNode& node(int id) const { return nodes_[id - 1]; }
    const std::vector<QuadNode>& nodes() const { return nodes_; }
    std::vector<int> leaf_ids() const;

    /// Split the axis-aligned leaf `id` at an interior point; appends four
    /// children (SW, SE, NE, NW) and returns the id of the first.
    int split(int id, const Point& center);

private:
    std::vector<QuadNode> nodes_;
};

/// S_j = (x*y_j + y*x_j' + x_j*y_j') - (x*y_j' + y*x_j + x_j'*y_j) with
/// j' = (j mod 4) + 1, evaluated exactly over the integers.
SideSigns side_signs(const Point& p, const QuadNode& q);

/// True iff every S_j >= 0; the boundary counts as inside.
bool contains(const Point& p, const QuadNode& q);

/// True iff every S_j > 0.
bool strictly_inside(const Point& p, const QuadNode& q);

/// Root-to-leaf id path. At each level the lowest-index child containing the
/// point is taken. Throws OutsideRoot when the root does not contain it.
std::vector<int> locate(const Quadtree& tree, const Point& p);

/// Smallest node count of the form 1 + 4t that is >= m.
int round_node_count(int m);

/// Random tree with exactly m nodes (m = 1 mod 4): repeatedly picks a random
/// leaf and splits it at a uniformly random interior grid point.
Quadtree gen_random_quadtree(const QuadNode& bounds, int m, unsigned coord_bits, SeededRng& rng);

nlohmann::json quadtree_to_json(const Quadtree& tree);
Quadtree quadtree_from_json(const nlohmann::json& j);

}  // namespace trace
