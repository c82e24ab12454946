#pragma once

#include "trace/linalg.hpp"
#include "trace/protocol.hpp"

#include <set>
#include <utility>

namespace trace {

class UnderdeterminedSystem : public Error {
public:
    explicit UnderdeterminedSystem(int rank)
        : Error("batch system is underdetermined (rank " + std::to_string(rank) + ")"),
          rank(rank) {}
    int rank;
};

class InconsistentSystem : public Error {
public:
    InconsistentSystem() : Error("batch system is inconsistent") {}
};

class AmbiguousIntersection : public Error {
public:
    explicit AmbiguousIntersection(std::set<std::pair<BigInt, BigInt>> candidates)
        : Error("candidate intersection has " + std::to_string(candidates.size()) + " elements"),
          candidates(std::move(candidates)) {}
    std::set<std::pair<BigInt, BigInt>> candidates;
};

/// Linear system in the 16 unknown vertex coordinates of one node pair,
/// built purely from masked-quadtree differences. Unknown order:
/// (x_i1, y_i1, ..., x_i4, y_i4, x_i'1, ..., y_i'4).
struct PairSystem {
    MatrixZp p;  // 28 x 16
    VectorZp q;  // 28
};

/// All six pairwise systems of a four-node batch stacked block-wise:
/// 168 equations in the 32 unknown coordinates.
struct QuadBatchSystem {
    MatrixZp p;  // 168 x 32
    VectorZp q;  // 168
    std::array<int, 4> nodes;  // 0-based node indices
};

/// Per-node candidate locations surviving the block-order enumeration.
/// Coordinates are signed representatives.
struct CandidateSet {
    int node;
    std::set<std::pair<BigInt, BigInt>> candidates;
};

/// i and i_prime are 0-based node indices, i != i_prime.
PairSystem build_pair_system(const MaskedQuadtree& en, int i, int i_prime);

QuadBatchSystem build_quad_system(const MaskedQuadtree& en, const std::array<int, 4>& nodes);

struct BatchOutcome {
    std::array<int, 4> nodes;  // 0-based
    SolveOutcome::Tag tag;
    int rank;
    bool padding_consistent = true;  // re-solved padded nodes matched earlier values
};

/// Full quadtree-recovery run with per-batch diagnostics; never throws on a
/// failed batch.
struct QuadtreeRecovery {
    std::vector<std::optional<std::array<Point, 4>>> vertices;  // per node
    std::vector<BatchOutcome> batches;

    bool complete() const;
    int min_rank() const;
};
QuadtreeRecovery recover_quadtree_report(const MaskedQuadtree& en);

/// Vertices of all nodes, recovered four nodes at a time. Throws
/// UnderdeterminedSystem or InconsistentSystem when a batch cannot be solved
/// (the expected outcome under per-node masking randomness).
std::vector<std::array<Point, 4>> recover_quadtree(const MaskedQuadtree& en);

/// One node's four (A_ij1, A_ij2) blocks.
using NodeBlocks = std::array<std::array<Residue, 2>, 4>;
NodeBlocks node_blocks(const MaskedPoint& a, int i);

/// Reorder blocks: input block j lands in output slot rho[j]. The order
/// within each block is untouched.
NodeBlocks permute_block(const NodeBlocks& blocks, const std::array<int, 4>& rho);

/// All locations consistent with node i under some block order: for each of
/// the 24 orders, two of the four component-ratio equations are solved for
/// (x, y) and the remaining ones must check out.
CandidateSet candidate_locations(const MaskedPoint& a, const MaskedQuadtree& en, int i);

struct LocationRecovery {
    std::set<std::pair<BigInt, BigInt>> intersection;
    std::vector<int> set_sizes;  // |S_i| per node

    bool unique() const { return intersection.size() == 1; }
    int max_set_size() const;
};
LocationRecovery recover_location_report(const MaskedPoint& a, const MaskedQuadtree& en);

/// The unique location consistent with every node. Throws
/// AmbiguousIntersection when more than one candidate survives.
Point recover_location(const MaskedPoint& a, const MaskedQuadtree& en);

/// Recovers the four square corners and returns their exact center.
Point recover_pickup(const std::vector<MaskedPoint>& corners, const MaskedQuadtree& en);

Point recover_takeoff(const MaskedPoint& c5, const MaskedQuadtree& en);

}  // namespace trace
