#include "trace/attacks.hpp"

#include <algorithm>

namespace trace {

namespace {

// columns of node-slot b (0..3) within a batch system
int col_x(int b, int j) { return b * 8 + 2 * j; }
int col_y(int b, int j) { return b * 8 + 2 * j + 1; }

// Scatter the 28 pair equations for (node u, node v) into `m` at row offset
// `row0`, with node u's unknowns at block `bu` and node v's at block `bv`.
void emit_pair_rows(const MaskedQuadtree& en, int u, int v, MatrixZp& m, VectorZp& q, int row0,
                    int bu, int bv) {
    for (int j = 0; j < 4; ++j) {
        const int jn = (j + 1) % 4;
        Residue d1 = en.at(u, j, 0) - en.at(v, j, 0);
        Residue d2 = en.at(u, j, 1) - en.at(v, j, 1);
        Residue d3 = en.at(u, j, 2) - en.at(v, j, 2);
        Residue d4 = en.at(u, j, 3) - en.at(v, j, 3);
        Residue d5 = en.at(u, j, 4) - en.at(v, j, 4);
        Residue d6 = en.at(u, j, 5) - en.at(v, j, 5);
        const int r = row0 + j * 7;

        // d1*y_{u,j'} + d4*x_{v,j} = d5
        m.set(r + 0, col_y(bu, jn), d1);
        m.set(r + 0, col_x(bv, j), d4);
        q.set(r + 0, d5);
        // d1*y_{v,j'} + d4*x_{u,j} = d5
        m.set(r + 1, col_y(bv, jn), d1);
        m.set(r + 1, col_x(bu, j), d4);
        q.set(r + 1, d5);
        // d2*x_{u,j'} + d3*y_{v,j} = d6
        m.set(r + 2, col_x(bu, jn), d2);
        m.set(r + 2, col_y(bv, j), d3);
        q.set(r + 2, d6);
        // d2*x_{v,j'} + d3*y_{u,j} = d6
        m.set(r + 3, col_x(bv, jn), d2);
        m.set(r + 3, col_y(bu, j), d3);
        q.set(r + 3, d6);
        // d2*(x_{u,j} - x_{v,j}) - d1*(y_{u,j} - y_{v,j}) = 0
        m.set(r + 4, col_x(bu, j), d2);
        m.set(r + 4, col_x(bv, j), -d2);
        m.set(r + 4, col_y(bu, j), -d1);
        m.set(r + 4, col_y(bv, j), d1);
        // d3*(y_{u,j} - y_{v,j}) - d2*(x_{u,j'} - x_{v,j'}) = 0
        m.set(r + 5, col_y(bu, j), d3);
        m.set(r + 5, col_y(bv, j), -d3);
        m.set(r + 5, col_x(bu, jn), -d2);
        m.set(r + 5, col_x(bv, jn), d2);
        // d4*(x_{u,j'} - x_{v,j'}) - d3*(y_{u,j'} - y_{v,j'}) = 0
        m.set(r + 6, col_x(bu, jn), d4);
        m.set(r + 6, col_x(bv, jn), -d4);
        m.set(r + 6, col_y(bu, jn), -d3);
        m.set(r + 6, col_y(bv, jn), d3);
    }
}

}  // namespace

PairSystem build_pair_system(const MaskedQuadtree& en, int i, int i_prime) {
    if (i == i_prime) throw Error("pair system needs two distinct nodes");
    MatrixZp m(28, 16, en.field);
    VectorZp q(28, en.field);
    emit_pair_rows(en, i, i_prime, m, q, 0, 0, 1);
    return PairSystem{std::move(m), std::move(q)};
}

QuadBatchSystem build_quad_system(const MaskedQuadtree& en, const std::array<int, 4>& nodes) {
    for (int u = 0; u < 4; ++u)
        for (int v = u + 1; v < 4; ++v)
            if (nodes[u] == nodes[v]) throw Error("batch nodes must be distinct");
    MatrixZp m(168, 32, en.field);
    VectorZp q(168, en.field);
    int row = 0;
    for (int u = 0; u < 4; ++u)
        for (int v = u + 1; v < 4; ++v) {
            emit_pair_rows(en, nodes[u], nodes[v], m, q, row, u, v);
            row += 28;
        }
    return QuadBatchSystem{std::move(m), std::move(q), nodes};
}

bool QuadtreeRecovery::complete() const {
    return std::all_of(vertices.begin(), vertices.end(),
                       [](const auto& v) { return v.has_value(); });
}

int QuadtreeRecovery::min_rank() const {
    int r = -1;
    for (const BatchOutcome& b : batches)
        if (r < 0 || b.rank < r) r = b.rank;
    return r;
}

namespace {

bool same_en_slice(const MaskedQuadtree& en, int i, int i_prime) {
    for (int j = 0; j < 4; ++j)
        for (int h = 0; h < 6; ++h)
            if (en.at(i, j, h) != en.at(i_prime, j, h)) return false;
    return true;
}

}  // namespace

QuadtreeRecovery recover_quadtree_report(const MaskedQuadtree& en) {
    const int m = en.m;
    if (m < 4) throw Error("quadtree recovery needs at least four nodes");

    QuadtreeRecovery out;
    out.vertices.assign(m, std::nullopt);

    std::vector<int> order(m);
    for (int i = 0; i < m; ++i) order[i] = i;

    std::size_t pos = 0;
    while (pos < order.size()) {
        const std::size_t take = std::min<std::size_t>(4, order.size() - pos);

        // two nodes with identical slices would zero out their difference
        // equations; pull a later node forward when one is available
        if (take == 4)
            for (std::size_t u = 0; u < 4; ++u)
                for (std::size_t v = u + 1; v < 4; ++v) {
                    if (!same_en_slice(en, order[pos + u], order[pos + v])) continue;
                    for (std::size_t cand = pos + 4; cand < order.size(); ++cand) {
                        bool clash = false;
                        for (std::size_t w = 0; w < 4; ++w)
                            if (w != v && same_en_slice(en, order[pos + w], order[cand]))
                                clash = true;
                        if (!clash) {
                            std::swap(order[pos + v], order[cand]);
                            break;
                        }
                    }
                }

        std::array<int, 4> batch;
        for (std::size_t k = 0; k < take; ++k) batch[k] = order[pos + k];
        // pad a short final batch with the lowest node indices not already in
        // it; their re-solved values double as a consistency check
        for (std::size_t k = take; k < 4; ++k) {
            int cand = 0;
            while (std::find(batch.begin(), batch.begin() + k, cand) != batch.begin() + k) ++cand;
            batch[k] = cand;
        }

        QuadBatchSystem sys = build_quad_system(en, batch);
        SolveOutcome res = solve(sys.p, sys.q);
        BatchOutcome diag{batch, res.tag, res.rank, true};
        if (res.unique()) {
            for (int b = 0; b < 4; ++b) {
                std::array<Point, 4> quad;
                for (int j = 0; j < 4; ++j)
                    quad[j] = Point{signed_rep(res.solution->at(col_x(b, j))),
                                    signed_rep(res.solution->at(col_y(b, j)))};
                const int node = batch[b];
                if (out.vertices[node]) {
                    if (*out.vertices[node] != quad) diag.padding_consistent = false;
                } else {
                    out.vertices[node] = quad;
                }
            }
        }
        out.batches.push_back(std::move(diag));
        pos += take;
    }
    return out;
}

std::vector<std::array<Point, 4>> recover_quadtree(const MaskedQuadtree& en) {
    QuadtreeRecovery rep = recover_quadtree_report(en);
    if (!rep.complete()) {
        for (const BatchOutcome& b : rep.batches) {
            if (b.tag == SolveOutcome::Tag::Underdetermined) throw UnderdeterminedSystem(b.rank);
            if (b.tag == SolveOutcome::Tag::Inconsistent) throw InconsistentSystem();
        }
        throw Error("quadtree recovery incomplete");
    }
    std::vector<std::array<Point, 4>> out;
    out.reserve(rep.vertices.size());
    for (const auto& v : rep.vertices) out.push_back(*v);
    return out;
}

NodeBlocks node_blocks(const MaskedPoint& a, int i) {
    NodeBlocks out{{{a.at(i, 0, 0), a.at(i, 0, 1)},
                    {a.at(i, 1, 0), a.at(i, 1, 1)},
                    {a.at(i, 2, 0), a.at(i, 2, 1)},
                    {a.at(i, 3, 0), a.at(i, 3, 1)}}};
    return out;
}

NodeBlocks permute_block(const NodeBlocks& blocks, const std::array<int, 4>& rho) {
    NodeBlocks out = blocks;
    for (int j = 0; j < 4; ++j) out[rho[j]] = blocks[j];
    return out;
}

CandidateSet candidate_locations(const MaskedPoint& a, const MaskedQuadtree& en, int i) {
    const ZpPtr& field = en.field;
    const BigInt& p = field->prime();
    CandidateSet out{i, {}};
    const NodeBlocks received = node_blocks(a, i);

    std::array<int, 4> rho{0, 1, 2, 3};
    do {
        NodeBlocks blocks = permute_block(received, rho);

        // coefficient of x, coefficient of y, and right-hand side of the
        // component-ratio equation for each vertex index j
        std::array<BigInt, 4> cx, cy, rhs;
        for (int j = 0; j < 4; ++j) {
            const Residue& a1 = blocks[j][0];
            const Residue& a2 = blocks[j][1];
            cx[j] = (a1 * en.at(i, j, 1) - a2 * en.at(i, j, 3)).value();
            cy[j] = (a1 * en.at(i, j, 2) - a2 * en.at(i, j, 0)).value();
            rhs[j] = (a2 * en.at(i, j, 5) - a1 * en.at(i, j, 4)).value();
        }

        // first nonsingular equation pair pins the only possible solution;
        // the remaining equations then decide whether this order survives
        static constexpr int kPairs[6][2] = {{0, 1}, {0, 2}, {0, 3}, {1, 2}, {1, 3}, {2, 3}};
        for (const auto& pr : kPairs) {
            const int u = pr[0], v = pr[1];
            BigInt det = cx[u] * cy[v] - cx[v] * cy[u];
            mpz_fdiv_r(det.get_mpz_t(), det.get_mpz_t(), p.get_mpz_t());
            if (det == 0) continue;
            const BigInt det_inv = mod_inv(det, p);
            BigInt x = (rhs[u] * cy[v] - rhs[v] * cy[u]) * det_inv;
            mpz_fdiv_r(x.get_mpz_t(), x.get_mpz_t(), p.get_mpz_t());
            BigInt y = (cx[u] * rhs[v] - cx[v] * rhs[u]) * det_inv;
            mpz_fdiv_r(y.get_mpz_t(), y.get_mpz_t(), p.get_mpz_t());

            bool consistent = true;
            for (int w = 0; w < 4 && consistent; ++w) {
                if (w == u || w == v) continue;
                BigInt lhs = cx[w] * x + cy[w] * y - rhs[w];
                mpz_fdiv_r(lhs.get_mpz_t(), lhs.get_mpz_t(), p.get_mpz_t());
                consistent = lhs == 0;
            }
            if (consistent) out.candidates.emplace(signed_rep(x, p), signed_rep(y, p));
            break;
        }
    } while (std::next_permutation(rho.begin(), rho.end()));
    return out;
}

int LocationRecovery::max_set_size() const {
    int mx = 0;
    for (int s : set_sizes) mx = std::max(mx, s);
    return mx;
}

LocationRecovery recover_location_report(const MaskedPoint& a, const MaskedQuadtree& en) {
    if (a.m != en.m || a.m < 1) throw Error("masked point does not match the masked quadtree");
    LocationRecovery out;
    out.set_sizes.reserve(a.m);
    for (int i = 0; i < a.m; ++i) {
        CandidateSet s = candidate_locations(a, en, i);
        out.set_sizes.push_back(static_cast<int>(s.candidates.size()));
        if (i == 0) {
            out.intersection = std::move(s.candidates);
        } else {
            std::set<std::pair<BigInt, BigInt>> kept;
            for (const auto& c : out.intersection)
                if (s.candidates.count(c)) kept.insert(c);
            out.intersection = std::move(kept);
        }
    }
    return out;
}

Point recover_location(const MaskedPoint& a, const MaskedQuadtree& en) {
    LocationRecovery rep = recover_location_report(a, en);
    if (rep.intersection.empty())
        throw Error("empty candidate intersection; the true order always survives");
    if (rep.intersection.size() > 1) throw AmbiguousIntersection(std::move(rep.intersection));
    const auto& c = *rep.intersection.begin();
    return Point{c.first, c.second};
}

Point recover_pickup(const std::vector<MaskedPoint>& corners, const MaskedQuadtree& en) {
    if (corners.size() != 4) throw Error("expected four masked corners");
    BigInt sx = 0, sy = 0;
    for (const MaskedPoint& c : corners) {
        Point corner = recover_location(c, en);
        sx += corner.x;
        sy += corner.y;
    }
    if (!mpz_divisible_ui_p(sx.get_mpz_t(), 4) || !mpz_divisible_ui_p(sy.get_mpz_t(), 4))
        throw Error("recovered corners are not a centered square");
    return Point{sx / 4, sy / 4};
}

Point recover_takeoff(const MaskedPoint& c5, const MaskedQuadtree& en) {
    return recover_location(c5, en);
}

}  // namespace trace
