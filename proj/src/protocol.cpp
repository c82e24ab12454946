#include "trace/protocol.hpp"

#include <algorithm>

namespace trace {

void SecurityParams::validate() const {
    if (k1 < 2 || k2 < 2 || k3 < 1 || k4 < 1 || coord_bits < 1)
        throw InvalidParams("parameter bit lengths must be positive");
    if (k2 + k3 >= k1) throw InvalidParams("k2 + k3 must be < k1");
    if (k3 + k4 >= k2) throw InvalidParams("k3 + k4 must be < k2");
    if (static_cast<int>(coord_bits) + k3 + 4 >= k2)
        throw InvalidParams("coord_bits + k3 + 4 must be < k2");
}

bool SecurityParams::exact_unmasking() const {
    return k4 + 2 * k2 + 2 * static_cast<int>(coord_bits) + 4 <= k1;
}

std::pair<PublicParams, RsSecret> setup(const SecurityParams& sp, MaskMode mode, int m,
                                        SeededRng& rng) {
    sp.validate();
    if (m < 1) throw InvalidParams("node count must be positive");

    PublicParams pub;
    pub.sp = sp;
    pub.p = gen_prime(sp.k1, rng);
    pub.alpha = gen_prime(sp.k2, rng);
    pub.alpha_sq = pub.alpha * pub.alpha;
    pub.field = Zp::make(pub.p);

    Residue s(1 + rng.below(pub.p - 1), pub.field);
    const int blocks = mode == MaskMode::Shared ? 1 : m;
    std::vector<BigInt> a;
    a.reserve(static_cast<std::size_t>(blocks) * 24);
    for (int k = 0; k < blocks * 24; ++k) a.push_back(rng.rand_bits(sp.k3));
    return {std::move(pub), RsSecret{std::move(s), mode, m, std::move(a)}};
}

namespace {

void check_coord(const Point& p, const PublicParams& pub) {
    const BigInt limit = BigInt(1) << pub.sp.coord_bits;
    if (p.x < 0 || p.y < 0 || p.x >= limit || p.y >= limit)
        throw Error("coordinate outside [0, 2^coord_bits)");
}

}  // namespace

MaskedQuadtree mask_nodes(const std::vector<QuadNode>& nodes, const PublicParams& pub,
                          const RsSecret& sec) {
    const int m = static_cast<int>(nodes.size());
    if (sec.mode == MaskMode::Fresh && sec.m < m)
        throw InvalidParams("fresh-mode secret has fewer blocks than nodes");

    MaskedQuadtree out{m, pub.field, {}};
    out.en.reserve(static_cast<std::size_t>(m) * 24);
    const BigInt& s = sec.s.value();
    BigInt t;
    for (int i = 0; i < m; ++i) {
        for (const Point& p : nodes[i].v) check_coord(p, pub);
        for (int j = 0; j < 4; ++j) {
            const int jn = (j + 1) % 4;
            const BigInt& xj = nodes[i].v[j].x;
            const BigInt& yj = nodes[i].v[j].y;
            const BigInt& xn = nodes[i].v[jn].x;
            const BigInt& yn = nodes[i].v[jn].y;
            const BigInt plain[6] = {xj * pub.alpha,      yj * pub.alpha, xn * pub.alpha,
                                     yn * pub.alpha,      xj * yn * pub.alpha,
                                     xn * yj * pub.alpha};
            for (int h = 0; h < 6; ++h) {
                t = s * (plain[h] + sec.a_at(i, j, h));
                out.en.emplace_back(std::move(t), pub.field);
            }
        }
    }
    return out;
}

MaskedQuadtree mask_quadtree(const Quadtree& tree, const PublicParams& pub, const RsSecret& sec) {
    return mask_nodes(tree.nodes(), pub, sec);
}

std::pair<MaskedPoint, VehicleMaskSecret> mask_point(const MaskedQuadtree& en, const Point& p,
                                                     const PublicParams& pub, SeededRng& rng) {
    check_coord(p, pub);
    const int m = en.m;
    MaskedPoint out{m, pub.field, {}};
    out.a.assign(static_cast<std::size_t>(m) * 8, Residue(BigInt(0), pub.field));
    VehicleMaskSecret sec;
    sec.r.reserve(static_cast<std::size_t>(m) * 4);
    sec.perm.reserve(m);

    BigInt t;
    for (int i = 0; i < m; ++i) {
        std::array<std::array<BigInt, 2>, 4> block;
        for (int j = 0; j < 4; ++j) {
            BigInt r = rng.rand_bits(pub.sp.k4);
            t = p.x * en.at(i, j, 3).value() + p.y * en.at(i, j, 0).value() +
                en.at(i, j, 5).value();
            block[j][0] = r * pub.alpha * t;
            t = p.x * en.at(i, j, 1).value() + p.y * en.at(i, j, 2).value() +
                en.at(i, j, 4).value();
            block[j][1] = r * pub.alpha * t;
            sec.r.push_back(std::move(r));
        }
        // Fisher-Yates; block j lands in slot perm[j]
        std::array<int, 4> perm{0, 1, 2, 3};
        for (int k = 3; k > 0; --k)
            std::swap(perm[k], perm[rng.below_u64(static_cast<std::uint64_t>(k) + 1)]);
        for (int j = 0; j < 4; ++j) {
            out.a[(i * 4 + perm[j]) * 2 + 0] = Residue(std::move(block[j][0]), pub.field);
            out.a[(i * 4 + perm[j]) * 2 + 1] = Residue(std::move(block[j][1]), pub.field);
        }
        sec.perm.push_back(perm);
    }
    return {std::move(out), std::move(sec)};
}

namespace {

UnmaskedPair unmask_with_inverse(const Residue& a1, const Residue& a2, const PublicParams& pub,
                                 const BigInt& s_inv) {
    BigInt b1 = a1.value() * s_inv;
    mpz_fdiv_r(b1.get_mpz_t(), b1.get_mpz_t(), pub.p.get_mpz_t());
    mpz_fdiv_q(b1.get_mpz_t(), b1.get_mpz_t(), pub.alpha_sq.get_mpz_t());
    BigInt b2 = a2.value() * s_inv;
    mpz_fdiv_r(b2.get_mpz_t(), b2.get_mpz_t(), pub.p.get_mpz_t());
    mpz_fdiv_q(b2.get_mpz_t(), b2.get_mpz_t(), pub.alpha_sq.get_mpz_t());
    BigInt b = b2 - b1;
    return UnmaskedPair{std::move(b1), std::move(b2), std::move(b)};
}

bool node_accepts(const MaskedPoint& a, int i, const PublicParams& pub, const BigInt& s_inv) {
    for (int slot = 0; slot < 4; ++slot) {
        UnmaskedPair u = unmask_with_inverse(a.at(i, slot, 0), a.at(i, slot, 1), pub, s_inv);
        if (u.b < 0) return false;
    }
    return true;
}

}  // namespace

UnmaskedPair unmask_pair(const Residue& a1, const Residue& a2, const PublicParams& pub,
                         const Residue& s) {
    return unmask_with_inverse(a1, a2, pub, mod_inv(s.value(), pub.p));
}

std::vector<int> identify_quadrant(const MaskedPoint& a, const Quadtree& tree,
                                   const PublicParams& pub, const RsSecret& sec) {
    if (a.m != tree.node_count()) throw Error("masked point does not match the tree");
    const BigInt s_inv = mod_inv(sec.s.value(), pub.p);
    if (!node_accepts(a, 0, pub, s_inv)) throw NoContainingChild("root rejects the point");
    std::vector<int> path{1};
    int cur = 1;
    while (!tree.node(cur).leaf()) {
        int next = 0;
        for (int child : tree.node(cur).children)
            if (node_accepts(a, child - 1, pub, s_inv)) {
                next = child;
                break;
            }
        if (next == 0) throw NoContainingChild("no child accepts the point");
        path.push_back(next);
        cur = next;
    }
    return path;
}

RiderTuple rc_tuple_from_secret(const Point& pickup, const BigInt& radius,
                                const RiderSecret& rsec) {
    const BigInt& s = rsec.s_prime.value();
    const ZpPtr& field = rsec.field;
    std::array<Residue, 4> d_msg{Residue(s * (pickup.x * rsec.alpha_prime + rsec.d[0]), field),
                                 Residue(s * (pickup.y * rsec.alpha_prime + rsec.d[1]), field),
                                 Residue(s * rsec.d[2], field), Residue(s * rsec.d[3], field)};
    BigInt e = pickup.x * pickup.x + pickup.y * pickup.y - radius * radius;
    return RiderTuple{std::move(d_msg), std::move(e)};
}

std::pair<RiderSecret, RiderTuple> rc_build_tuple(const Point& pickup, const BigInt& radius,
                                                  const SecurityParams& sp, SeededRng& rng) {
    BigInt p_prime = gen_prime(sp.k1, rng);
    BigInt alpha_prime = gen_prime(sp.k2, rng);
    BigInt alpha_prime_sq = alpha_prime * alpha_prime;
    ZpPtr field = Zp::make(p_prime);
    Residue s_prime(1 + rng.below(p_prime - 1), field);
    std::array<BigInt, 4> d;
    for (int k = 0; k < 4; ++k) d[k] = rng.rand_bits(sp.k4);

    RiderSecret rsec{std::move(p_prime), std::move(alpha_prime), std::move(alpha_prime_sq),
                     std::move(field),   std::move(s_prime),     std::move(d)};
    RiderTuple tuple = rc_tuple_from_secret(pickup, radius, rsec);
    return {std::move(rsec), std::move(tuple)};
}

std::pair<RideRequest, RiderSecret> rc_build_request(const Point& pickup, const BigInt& radius,
                                                     const MaskedQuadtree& en,
                                                     const PublicParams& pub, SeededRng& rng) {
    if (radius < 1) throw InvalidParams("radius must be positive");
    if (pickup.x < radius || pickup.y < radius) throw PickupTooCloseToOrigin();
    const BigInt limit = BigInt(1) << pub.sp.coord_bits;
    if (pickup.x + radius >= limit || pickup.y + radius >= limit)
        throw Error("square corners exceed the coordinate range");

    std::array<Point, 4> square{
        Point{pickup.x - radius, pickup.y - radius}, Point{pickup.x + radius, pickup.y - radius},
        Point{pickup.x + radius, pickup.y + radius}, Point{pickup.x - radius, pickup.y + radius}};
    std::vector<MaskedPoint> c;
    c.reserve(4);
    for (const Point& corner : square) c.push_back(mask_point(en, corner, pub, rng).first);

    auto [rsec, tuple] = rc_build_tuple(pickup, radius, pub.sp, rng);
    RideRequest req{pickup, radius, square, std::move(c), std::move(tuple.d_msg),
                    std::move(tuple.e)};
    return {std::move(req), std::move(rsec)};
}

std::vector<int> rs_select_srvs(const std::vector<MaskedPoint>& corners, const Quadtree& tree,
                                const PublicParams& pub, const RsSecret& sec,
                                const std::map<int, int>& vehicle_leaves) {
    if (corners.size() != 4) throw Error("expected four masked corners");
    Box region{0, 0, 0, 0};
    bool first = true;
    for (const MaskedPoint& c : corners) {
        const int leaf = identify_quadrant(c, tree, pub, sec).back();
        const Box b = bounding_box(tree.node(leaf));
        if (first) {
            region = b;
            first = false;
        } else {
            region.min_x = std::min(region.min_x, b.min_x);
            region.min_y = std::min(region.min_y, b.min_y);
            region.max_x = std::max(region.max_x, b.max_x);
            region.max_y = std::max(region.max_y, b.max_y);
        }
    }
    std::vector<int> enclosing;
    for (int id : tree.leaf_ids())
        if (bounding_box(tree.node(id)).intersects(region)) enclosing.push_back(id);

    std::vector<int> srvs;
    for (const auto& [vehicle, leaf] : vehicle_leaves)
        if (std::find(enclosing.begin(), enclosing.end(), leaf) != enclosing.end())
            srvs.push_back(vehicle);
    return srvs;
}

SrvResponse srv_respond_with(const std::array<Residue, 4>& d_msg, const BigInt& e,
                             const Point& loc, const BigInt& alpha_prime, SrvSecret secret) {
    const ZpPtr& field = d_msg[0].field();
    Residue f1 = Residue(loc.x * alpha_prime, field) * d_msg[0];
    Residue f2 = Residue(loc.y * alpha_prime, field) * d_msg[1];
    Residue f3 = Residue(secret.r1, field) * d_msg[2];
    Residue f4 = Residue(secret.r2, field) * d_msg[3];
    Residue f = Residue(secret.r3, field) * (f1 + f2 + f3 + f4);
    BigInt i_val = secret.r3 * (loc.x * loc.x + loc.y * loc.y + e);
    return SrvResponse{std::move(f), std::move(i_val), std::move(secret)};
}

SrvResponse srv_respond(const std::array<Residue, 4>& d_msg, const BigInt& e, const Point& loc,
                        const BigInt& p_prime, const BigInt& alpha_prime,
                        const SecurityParams& sp, SeededRng& rng) {
    const BigInt limit = BigInt(1) << sp.coord_bits;
    if (loc.x < 0 || loc.y < 0 || loc.x >= limit || loc.y >= limit)
        throw Error("coordinate outside [0, 2^coord_bits)");
    if (d_msg[0].field()->prime() != p_prime) throw Error("rider tuple does not match p'");
    SrvSecret secret{rng.rand_bits(sp.k4), rng.rand_bits(sp.k4), rng.rand_bits(sp.k4)};
    return srv_respond_with(d_msg, e, loc, alpha_prime, std::move(secret));
}

FilterResult rc_filter(const SrvResponse& resp, const RiderSecret& rsec) {
    BigInt j = resp.f.value() * mod_inv(rsec.s_prime.value(), rsec.p_prime);
    mpz_fdiv_r(j.get_mpz_t(), j.get_mpz_t(), rsec.p_prime.get_mpz_t());
    mpz_fdiv_q(j.get_mpz_t(), j.get_mpz_t(), rsec.alpha_prime_sq.get_mpz_t());
    BigInt k = resp.i_val - 2 * j;
    const bool within = k <= 0;
    return FilterResult{std::move(k), within};
}

Point rs_pick_atp(const MaskedPoint& c5, const Quadtree& tree, const PublicParams& pub,
                  const RsSecret& sec, SeededRng& rng) {
    const int leaf = identify_quadrant(c5, tree, pub, sec).back();
    const QuadNode& q = tree.node(leaf);
    const Box b = bounding_box(q);
    const BigInt w = b.max_x - b.min_x;
    const BigInt h = b.max_y - b.min_y;
    if (w < 2 || h < 2) throw Error("leaf has no interior grid point");
    for (int attempt = 0; attempt < 10000; ++attempt) {
        Point p{b.min_x + 1 + rng.below(w - 1), b.min_y + 1 + rng.below(h - 1)};
        if (strictly_inside(p, q)) return p;
    }
    throw Error("failed to sample an interior point of the leaf");
}

namespace {

nlohmann::json residues_to_json(const std::vector<Residue>& v, int m, int inner) {
    nlohmann::json out = nlohmann::json::array();
    std::size_t idx = 0;
    for (int i = 0; i < m; ++i) {
        nlohmann::json node = nlohmann::json::array();
        for (int j = 0; j < 4; ++j) {
            nlohmann::json block = nlohmann::json::array();
            for (int h = 0; h < inner; ++h) block.push_back(v[idx++].value().get_str());
            node.push_back(std::move(block));
        }
        out.push_back(std::move(node));
    }
    return out;
}

std::vector<Residue> residues_from_json(const nlohmann::json& j, int m, int inner,
                                        const ZpPtr& field) {
    std::vector<Residue> out;
    out.reserve(static_cast<std::size_t>(m) * 4 * inner);
    for (int i = 0; i < m; ++i)
        for (int jj = 0; jj < 4; ++jj)
            for (int h = 0; h < inner; ++h)
                out.emplace_back(BigInt(j.at(i).at(jj).at(h).get<std::string>()), field);
    return out;
}

nlohmann::json masked_point_json(const MaskedPoint& p) { return residues_to_json(p.a, p.m, 2); }

MaskedPoint masked_point_from_json(const nlohmann::json& j, int m, const ZpPtr& field) {
    return MaskedPoint{m, field, residues_from_json(j, m, 2, field)};
}

}  // namespace

nlohmann::json transcript_to_json(const Transcript& t) {
    nlohmann::json messages = nlohmann::json::array();
    messages.push_back({{"step", 0},
                        {"from", "RS"},
                        {"to", "ALL"},
                        {"kind", "params"},
                        {"p", t.p.get_str()},
                        {"alpha", t.alpha.get_str()}});
    if (t.en)
        messages.push_back({{"step", 1},
                            {"from", "RS"},
                            {"to", "RV"},
                            {"kind", "EN"},
                            {"en", residues_to_json(t.en->en, t.en->m, 6)}});
    if (t.a)
        messages.push_back({{"step", 2},
                            {"from", "RV"},
                            {"to", "RS"},
                            {"kind", "A"},
                            {"a", masked_point_json(*t.a)}});
    if (t.c) {
        nlohmann::json corners = nlohmann::json::array();
        for (const MaskedPoint& c : *t.c) corners.push_back(masked_point_json(c));
        messages.push_back(
            {{"step", 4}, {"from", "RC"}, {"to", "RS"}, {"kind", "C"}, {"c", std::move(corners)}});
    }
    if (t.d) {
        nlohmann::json d = nlohmann::json::array();
        for (const Residue& r : *t.d) d.push_back(r.value().get_str());
        messages.push_back({{"step", 4},
                            {"from", "RC"},
                            {"to", "RS"},
                            {"kind", "D"},
                            {"p_prime", t.p_prime.get_str()},
                            {"alpha_prime", t.alpha_prime.get_str()},
                            {"d", std::move(d)}});
    }
    if (t.e)
        messages.push_back(
            {{"step", 4}, {"from", "RC"}, {"to", "RS"}, {"kind", "E"}, {"e", t.e->get_str()}});
    if (t.f)
        messages.push_back({{"step", 6},
                            {"from", "SRV"},
                            {"to", "RC"},
                            {"kind", "F"},
                            {"f", t.f->value().get_str()}});
    if (t.i_val)
        messages.push_back(
            {{"step", 6}, {"from", "SRV"}, {"to", "RC"}, {"kind", "I"}, {"i", t.i_val->get_str()}});
    if (t.c5)
        messages.push_back({{"step", 8},
                            {"from", "RC"},
                            {"to", "RS"},
                            {"kind", "C5"},
                            {"c5", masked_point_json(*t.c5)}});

    return nlohmann::json{{"params",
                           {{"k1", t.sp.k1},
                            {"k2", t.sp.k2},
                            {"k3", t.sp.k3},
                            {"k4", t.sp.k4},
                            {"coord_bits", t.sp.coord_bits}}},
                          {"mode", t.mode == MaskMode::Shared ? "shared" : "fresh"},
                          {"m", t.m},
                          {"messages", std::move(messages)}};
}

Transcript transcript_from_json(const nlohmann::json& j) {
    Transcript t;
    const auto& sp = j.at("params");
    t.sp = SecurityParams{sp.at("k1").get<int>(), sp.at("k2").get<int>(), sp.at("k3").get<int>(),
                          sp.at("k4").get<int>(), sp.at("coord_bits").get<unsigned>()};
    t.mode = j.at("mode").get<std::string>() == "fresh" ? MaskMode::Fresh : MaskMode::Shared;
    t.m = j.at("m").get<int>();

    ZpPtr field;
    ZpPtr rider_field;
    for (const auto& msg : j.at("messages")) {
        const std::string kind = msg.at("kind").get<std::string>();
        if (kind == "params") {
            t.p = BigInt(msg.at("p").get<std::string>());
            t.alpha = BigInt(msg.at("alpha").get<std::string>());
            field = Zp::make(t.p);
        } else if (kind == "EN") {
            t.en = MaskedQuadtree{t.m, field, residues_from_json(msg.at("en"), t.m, 6, field)};
        } else if (kind == "A") {
            t.a = masked_point_from_json(msg.at("a"), t.m, field);
        } else if (kind == "C") {
            std::vector<MaskedPoint> corners;
            for (const auto& c : msg.at("c"))
                corners.push_back(masked_point_from_json(c, t.m, field));
            t.c = std::move(corners);
        } else if (kind == "D") {
            t.p_prime = BigInt(msg.at("p_prime").get<std::string>());
            t.alpha_prime = BigInt(msg.at("alpha_prime").get<std::string>());
            rider_field = Zp::make(t.p_prime);
            const auto& d = msg.at("d");
            t.d = std::array<Residue, 4>{Residue(BigInt(d.at(0).get<std::string>()), rider_field),
                                         Residue(BigInt(d.at(1).get<std::string>()), rider_field),
                                         Residue(BigInt(d.at(2).get<std::string>()), rider_field),
                                         Residue(BigInt(d.at(3).get<std::string>()), rider_field)};
        } else if (kind == "E") {
            t.e = BigInt(msg.at("e").get<std::string>());
        } else if (kind == "F") {
            t.f = Residue(BigInt(msg.at("f").get<std::string>()), rider_field);
        } else if (kind == "I") {
            t.i_val = BigInt(msg.at("i").get<std::string>());
        } else if (kind == "C5") {
            t.c5 = masked_point_from_json(msg.at("c5"), t.m, field);
        }
    }
    return t;
}

}  // namespace trace
