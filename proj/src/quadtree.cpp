#include "trace/quadtree.hpp"

#include <algorithm>

namespace trace {

QuadNode axis_aligned_quad(BigInt x0, BigInt y0, BigInt x1, BigInt y1) {
    if (x0 >= x1 || y0 >= y1) throw Error("degenerate axis-aligned quadrant");
    QuadNode q;
    q.v = {Point{x0, y0}, Point{x1, y0}, Point{x1, y1}, Point{x0, y1}};
    return q;
}

bool Box::intersects(const Box& o) const {
    return min_x <= o.max_x && o.min_x <= max_x && min_y <= o.max_y && o.min_y <= max_y;
}

Box bounding_box(const QuadNode& q) {
    Box b{q.v[0].x, q.v[0].y, q.v[0].x, q.v[0].y};
    for (int j = 1; j < 4; ++j) {
        b.min_x = std::min(b.min_x, q.v[j].x);
        b.min_y = std::min(b.min_y, q.v[j].y);
        b.max_x = std::max(b.max_x, q.v[j].x);
        b.max_y = std::max(b.max_y, q.v[j].y);
    }
    return b;
}

Quadtree::Quadtree(QuadNode root) { nodes_.push_back(std::move(root)); }

Quadtree::Quadtree(std::vector<QuadNode> nodes) : nodes_(std::move(nodes)) {
    if (nodes_.empty()) throw Error("quadtree needs at least a root");
    for (const QuadNode& n : nodes_) {
        int links = 0;
        for (int c : n.children) {
            if (c < 0 || c > node_count() || c == 1) throw Error("invalid child link");
            if (c != 0) ++links;
        }
        if (links != 0 && links != 4) throw Error("node must have zero or four children");
    }
}

std::vector<int> Quadtree::leaf_ids() const {
    std::vector<int> out;
    for (int id = 1; id <= node_count(); ++id)
        if (node(id).leaf()) out.push_back(id);
    return out;
}

int Quadtree::split(int id, const Point& center) {
    QuadNode& q = nodes_[id - 1];
    if (!q.leaf()) throw Error("split: node is not a leaf");
    const BigInt x0 = q.v[0].x, y0 = q.v[0].y, x1 = q.v[2].x, y1 = q.v[2].y;
    if (center.x <= x0 || center.x >= x1 || center.y <= y0 || center.y >= y1)
        throw Error("split: center not strictly inside");
    const int first = node_count() + 1;
    q.children = {first, first + 1, first + 2, first + 3};
    nodes_.push_back(axis_aligned_quad(x0, y0, center.x, center.y));
    nodes_.push_back(axis_aligned_quad(center.x, y0, x1, center.y));
    nodes_.push_back(axis_aligned_quad(center.x, center.y, x1, y1));
    nodes_.push_back(axis_aligned_quad(x0, center.y, center.x, y1));
    return first;
}

SideSigns side_signs(const Point& p, const QuadNode& q) {
    SideSigns out;
    for (int j = 0; j < 4; ++j) {
        const Point& a = q.v[j];
        const Point& b = q.v[(j + 1) % 4];
        out.s[j] = (p.x * a.y + p.y * b.x + a.x * b.y) - (p.x * b.y + p.y * a.x + b.x * a.y);
    }
    return out;
}

bool contains(const Point& p, const QuadNode& q) {
    for (int j = 0; j < 4; ++j) {
        const Point& a = q.v[j];
        const Point& b = q.v[(j + 1) % 4];
        if ((p.x * a.y + p.y * b.x + a.x * b.y) - (p.x * b.y + p.y * a.x + b.x * a.y) < 0)
            return false;
    }
    return true;
}

bool strictly_inside(const Point& p, const QuadNode& q) {
    for (int j = 0; j < 4; ++j) {
        const Point& a = q.v[j];
        const Point& b = q.v[(j + 1) % 4];
        if ((p.x * a.y + p.y * b.x + a.x * b.y) - (p.x * b.y + p.y * a.x + b.x * a.y) <= 0)
            return false;
    }
    return true;
}

std::vector<int> locate(const Quadtree& tree, const Point& p) {
    if (!contains(p, tree.node(1))) throw OutsideRoot();
    std::vector<int> path{1};
    int cur = 1;
    while (!tree.node(cur).leaf()) {
        int next = 0;
        for (int child : tree.node(cur).children)
            if (contains(p, tree.node(child))) {
                next = child;
                break;
            }
        if (next == 0) throw Error("children do not cover the parent quadrant");
        path.push_back(next);
        cur = next;
    }
    return path;
}

int round_node_count(int m) {
    if (m < 1) throw Error("node count must be positive");
    return m + (((1 - m) % 4) + 4) % 4;
}

Quadtree gen_random_quadtree(const QuadNode& bounds, int m, unsigned coord_bits, SeededRng& rng) {
    if (m < 1 || m % 4 != 1) throw Error("node count must be 1 mod 4");
    const BigInt limit = BigInt(1) << coord_bits;
    for (const Point& p : bounds.v)
        if (p.x < 0 || p.y < 0 || p.x >= limit || p.y >= limit)
            throw Error("bounds exceed the coordinate range");

    Quadtree tree(bounds);
    std::vector<int> leaves{1};
    while (tree.node_count() < m) {
        const std::size_t pick = rng.below_u64(leaves.size());
        const int id = leaves[pick];
        const QuadNode& q = tree.node(id);
        const BigInt w = q.v[2].x - q.v[0].x;
        const BigInt h = q.v[2].y - q.v[0].y;
        if (w < 2 || h < 2) throw Unsplittable();
        const Point center{q.v[0].x + 1 + rng.below(w - 1), q.v[0].y + 1 + rng.below(h - 1)};
        const int first = tree.split(id, center);
        leaves[pick] = leaves.back();
        leaves.pop_back();
        for (int k = 0; k < 4; ++k) leaves.push_back(first + k);
    }
    return tree;
}

nlohmann::json quadtree_to_json(const Quadtree& tree) {
    nlohmann::json nodes = nlohmann::json::array();
    for (const QuadNode& n : tree.nodes()) {
        nlohmann::json v = nlohmann::json::array();
        for (const Point& p : n.v) v.push_back({p.x.get_str(), p.y.get_str()});
        nlohmann::json jn{{"v", std::move(v)}};
        if (n.leaf())
            jn["children"] = nullptr;
        else
            jn["children"] = n.children;
        nodes.push_back(std::move(jn));
    }
    return nlohmann::json{{"m", tree.node_count()}, {"nodes", std::move(nodes)}};
}

Quadtree quadtree_from_json(const nlohmann::json& j) {
    std::vector<QuadNode> nodes;
    for (const auto& jn : j.at("nodes")) {
        QuadNode n;
        const auto& v = jn.at("v");
        for (int k = 0; k < 4; ++k)
            n.v[k] = Point{BigInt(v.at(k).at(0).get<std::string>()),
                           BigInt(v.at(k).at(1).get<std::string>())};
        if (!jn.at("children").is_null())
            for (int k = 0; k < 4; ++k) n.children[k] = jn.at("children").at(k).get<int>();
        nodes.push_back(std::move(n));
    }
    Quadtree tree(std::move(nodes));
    if (j.contains("m") && j.at("m").get<int>() != tree.node_count())
        throw Error("node count mismatch in serialized quadtree");
    return tree;
}

}  // namespace trace
