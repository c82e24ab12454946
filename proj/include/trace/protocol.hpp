#pragma once

#include "trace/quadtree.hpp"

#include <map>
#include <optional>

namespace trace {

class InvalidParams : public Error {
public:
    explicit InvalidParams(const std::string& what) : Error(what) {}
};

class NoContainingChild : public Error {
public:
    explicit NoContainingChild(const std::string& what) : Error(what) {}
};

class PickupTooCloseToOrigin : public Error {
public:
    PickupTooCloseToOrigin() : Error("square corners would have negative coordinates") {}
};

/// Bit lengths of the masking randomness and of coordinates.
///
/// validate() enforces the constraints every run relies on:
///   k2 + k3 < k1               (mask term stays below p)
///   k3 + k4 < k2               (additive noise stays below alpha)
///   coord_bits + k3 + 4 < k2   (floor division after unmasking cannot flip
///                               the sign of a nonzero side quantity)
///
/// exact_unmasking() additionally reports whether
///   k4 + 2*k2 + 2*coord_bits + 4 <= k1,
/// which guarantees the masked sums never wrap modulo p, making quadrant
/// identification and the range filter exact. The folklore (2048,1000,400,400)
/// sizing fails this bound for any coordinate range, so it is reported rather
/// than enforced: the recovery attacks do not need it.
struct SecurityParams {
    int k1, k2, k3, k4;
    unsigned coord_bits;

    void validate() const;
    bool exact_unmasking() const;
};

enum class MaskMode { Shared, Fresh };

/// Everything the server publishes in Step 0. Carries the parameter block and
/// the field handle so later steps need no extra context.
struct PublicParams {
    SecurityParams sp;
    BigInt p;
    BigInt alpha;
    BigInt alpha_sq;
    ZpPtr field;
};

/// Server-side masking secret: s and the additive randoms. Shared mode keeps
/// one 4x6 block for the whole tree; fresh mode keeps one block per node.
struct RsSecret {
    Residue s;
    MaskMode mode;
    int m;
    std::vector<BigInt> a;  // shared: 24 entries; fresh: m*24

    // i, j, h are 0-based
    const BigInt& a_at(int i, int j, int h) const {
        return mode == MaskMode::Shared ? a[j * 6 + h] : a[(i * 4 + j) * 6 + h];
    }
};

/// Masked quadtree EN: per node, per vertex, six components in Z_p.
struct MaskedQuadtree {
    int m;
    ZpPtr field;
    std::vector<Residue> en;  // m*4*6

    const Residue& at(int i, int j, int h) const { return en[(i * 4 + j) * 6 + h]; }
};

/// A vehicle's (or rider corner's) masked location: per node four blocks of
/// two components, block order scrambled per node.
struct MaskedPoint {
    int m;
    ZpPtr field;
    std::vector<Residue> a;  // m*4*2

    const Residue& at(int i, int slot, int comp) const { return a[(i * 4 + slot) * 2 + comp]; }
};

/// The vehicle-side randomness behind a MaskedPoint. r is indexed by the
/// original vertex index j; perm[i] maps block j to its output slot.
struct VehicleMaskSecret {
    std::vector<BigInt> r;                   // m*4
    std::vector<std::array<int, 4>> perm;    // m entries
};

/// Result of stripping s and the alpha^2 mask from one component pair.
/// b = b2 - b1 has the sign of the side quantity S_j.
struct UnmaskedPair {
    BigInt b1, b2, b;
};

struct RiderSecret {
    BigInt p_prime;
    BigInt alpha_prime;
    BigInt alpha_prime_sq;
    ZpPtr field;
    Residue s_prime;
    std::array<BigInt, 4> d;
};

/// Ride request as assembled by the rider. pickup/square/radius are the
/// plaintext ground truth; only c, d_msg and e travel to the server.
struct RideRequest {
    Point pickup;
    BigInt radius;
    std::array<Point, 4> square;
    std::vector<MaskedPoint> c;  // four corners
    std::array<Residue, 4> d_msg;
    BigInt e;
};

struct SrvSecret {
    BigInt r1, r2, r3;
};

struct SrvResponse {
    Residue f;
    BigInt i_val;
    SrvSecret secret;
};

struct FilterResult {
    BigInt k;
    bool within;
};

std::pair<PublicParams, RsSecret> setup(const SecurityParams& sp, MaskMode mode, int m,
                                        SeededRng& rng);

/// Step-1 masking of arbitrary quadrants (the attack is geometry agnostic).
MaskedQuadtree mask_nodes(const std::vector<QuadNode>& nodes, const PublicParams& pub,
                          const RsSecret& sec);
MaskedQuadtree mask_quadtree(const Quadtree& tree, const PublicParams& pub, const RsSecret& sec);

/// Step-2 masking of a location against EN.
std::pair<MaskedPoint, VehicleMaskSecret> mask_point(const MaskedQuadtree& en, const Point& p,
                                                     const PublicParams& pub, SeededRng& rng);

/// Step-3 unmasking of one component pair.
UnmaskedPair unmask_pair(const Residue& a1, const Residue& a2, const PublicParams& pub,
                         const Residue& s);

/// Step-3 descent: root-to-leaf path of the quadrant containing the masked
/// location. A node is accepted when b >= 0 for all four blocks, so the
/// unknown per-node block order is irrelevant.
std::vector<int> identify_quadrant(const MaskedPoint& a, const Quadtree& tree,
                                   const PublicParams& pub, const RsSecret& sec);

/// Step 4: build the rider's square, corner maskings and the D/E tuple.
std::pair<RideRequest, RiderSecret> rc_build_request(const Point& pickup, const BigInt& radius,
                                                     const MaskedQuadtree& en,
                                                     const PublicParams& pub, SeededRng& rng);

/// Rider-side D/E tuple alone (no square, no corner maskings).
struct RiderTuple {
    std::array<Residue, 4> d_msg;
    BigInt e;
};
std::pair<RiderSecret, RiderTuple> rc_build_tuple(const Point& pickup, const BigInt& radius,
                                                  const SecurityParams& sp, SeededRng& rng);
RiderTuple rc_tuple_from_secret(const Point& pickup, const BigInt& radius,
                                const RiderSecret& rsec);

/// Step 5: corners are located, the enclosing region is the set of leaves
/// whose bounding box meets the bounding box of the corner leaves, and the
/// selected vehicles are those whose leaf lies in that region.
std::vector<int> rs_select_srvs(const std::vector<MaskedPoint>& corners, const Quadtree& tree,
                                const PublicParams& pub, const RsSecret& sec,
                                const std::map<int, int>& vehicle_leaves);

/// Step 6: the selected vehicle folds its location into the rider tuple.
SrvResponse srv_respond(const std::array<Residue, 4>& d_msg, const BigInt& e, const Point& loc,
                        const BigInt& p_prime, const BigInt& alpha_prime,
                        const SecurityParams& sp, SeededRng& rng);

/// Same computation with caller-chosen randomness.
SrvResponse srv_respond_with(const std::array<Residue, 4>& d_msg, const BigInt& e,
                             const Point& loc, const BigInt& alpha_prime, SrvSecret secret);

/// Step 7: the rider decides whether the responder is within distance R.
FilterResult rc_filter(const SrvResponse& resp, const RiderSecret& rsec);

/// Step 8: locate the masked take-off point and pick a uniform interior grid
/// point of that leaf as the agreed take-off position.
Point rs_pick_atp(const MaskedPoint& c5, const Quadtree& tree, const PublicParams& pub,
                  const RsSecret& sec, SeededRng& rng);

/// Plaintext messages exchanged in one full run, in wire form. Optional
/// fields are absent when the scenario did not produce them.
struct Transcript {
    SecurityParams sp{512, 160, 75, 75, 20};
    MaskMode mode = MaskMode::Shared;
    int m = 0;
    BigInt p, alpha;
    std::optional<MaskedQuadtree> en;
    std::optional<MaskedPoint> a;
    std::optional<std::vector<MaskedPoint>> c;
    BigInt p_prime, alpha_prime;
    std::optional<std::array<Residue, 4>> d;
    std::optional<BigInt> e;
    std::optional<Residue> f;
    std::optional<BigInt> i_val;
    std::optional<MaskedPoint> c5;
};

nlohmann::json transcript_to_json(const Transcript& t);
Transcript transcript_from_json(const nlohmann::json& j);

}  // namespace trace
