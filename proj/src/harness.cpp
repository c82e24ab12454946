#include "trace/harness.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <thread>

namespace trace {

const char* experiment_name(Experiment e) {
    switch (e) {
        case Experiment::QuadtreeAttack: return "quadtree-attack";
        case Experiment::LocationAttack: return "location-attack";
        case Experiment::PickupAttack: return "pickup-attack";
        case Experiment::ProtocolRoundtrip: return "protocol-roundtrip";
        case Experiment::Countermeasure: return "countermeasure";
    }
    return "unknown";
}

Experiment experiment_from_name(const std::string& name) {
    if (name == "quadtree-attack") return Experiment::QuadtreeAttack;
    if (name == "location-attack") return Experiment::LocationAttack;
    if (name == "pickup-attack") return Experiment::PickupAttack;
    if (name == "protocol-roundtrip") return Experiment::ProtocolRoundtrip;
    if (name == "countermeasure") return Experiment::Countermeasure;
    throw ConfigError("unknown experiment: " + name);
}

void ExperimentConfig::validate() const {
    try {
        params.validate();
    } catch (const InvalidParams& e) {
        throw ConfigError(e.what());
    }
    if (trials < 1) throw ConfigError("trials must be >= 1");
    if (m < 1) throw ConfigError("m must be >= 1");
    if (points_per_trial < 1) throw ConfigError("points per trial must be >= 1");
    if (threads < 0) throw ConfigError("threads must be >= 0");
}

namespace {

using Clock = std::chrono::steady_clock;

double elapsed(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

BigInt bmin(const BigInt& a, const BigInt& b) { return a < b ? a : b; }
BigInt bmax(const BigInt& a, const BigInt& b) { return a > b ? a : b; }

QuadNode gen_root_box(unsigned coord_bits, SeededRng& rng) {
    const BigInt hi = BigInt(1) << coord_bits;
    BigInt x0, x1, y0, y1;
    do {
        x0 = rng.below(hi);
        x1 = rng.below(hi);
        if (x0 > x1) std::swap(x0, x1);
    } while (x1 - x0 < 8);
    do {
        y0 = rng.below(hi);
        y1 = rng.below(hi);
        if (y0 > y1) std::swap(y0, y1);
    } while (y1 - y0 < 8);
    return axis_aligned_quad(x0, y0, x1, y1);
}

struct TrialEnv {
    SeededRng rng;
    Quadtree tree;
    PublicParams pub;
    RsSecret sec;
    MaskedQuadtree en;
};

TrialEnv make_trial_env(const ExperimentConfig& cfg, int trial) {
    SeededRng rng = SeededRng(cfg.seed).child(trial);
    const int m = round_node_count(cfg.m);
    // random splitting can dead-end in a leaf with no interior grid point;
    // redraw the instance when that happens (deterministic, the rng advances)
    for (int attempt = 0;; ++attempt) {
        QuadNode root = gen_root_box(cfg.params.coord_bits, rng);
        try {
            Quadtree tree = gen_random_quadtree(root, m, cfg.params.coord_bits, rng);
            auto [pub, sec] = setup(cfg.params, cfg.mode, m, rng);
            MaskedQuadtree en = mask_quadtree(tree, pub, sec);
            return TrialEnv{std::move(rng), std::move(tree), std::move(pub), std::move(sec),
                            std::move(en)};
        } catch (const Unsplittable&) {
            if (attempt >= 50) throw;
        }
    }
}

/// True iff the point touches no edge line of any node, so every descent
/// decision about it is strict.
bool clean_point(const Quadtree& tree, const Point& p) {
    for (const QuadNode& n : tree.nodes()) {
        const SideSigns s = side_signs(p, n);
        if (s.s[0] == 0 || s.s[1] == 0 || s.s[2] == 0 || s.s[3] == 0) return false;
    }
    return true;
}

/// Uniform grid point strictly inside the root whose side quantities are
/// nonzero against every node.
Point sample_interior(const Quadtree& tree, SeededRng& rng) {
    const QuadNode& root = tree.node(1);
    const BigInt x0 = root.v[0].x, y0 = root.v[0].y, x1 = root.v[2].x, y1 = root.v[2].y;
    for (;;) {
        Point p{x0 + 1 + rng.below(x1 - x0 - 1), y0 + 1 + rng.below(y1 - y0 - 1)};
        if (clean_point(tree, p)) return p;
    }
}

nlohmann::json point_json(const Point& p) {
    return nlohmann::json{{"x", p.x.get_str()}, {"y", p.y.get_str()}};
}

nlohmann::json vertices_json(const std::vector<std::optional<std::array<Point, 4>>>& vs) {
    nlohmann::json out = nlohmann::json::array();
    for (const auto& quad : vs) {
        if (!quad) {
            out.push_back(nullptr);
            continue;
        }
        nlohmann::json jq = nlohmann::json::array();
        for (const Point& p : *quad) jq.push_back({p.x.get_str(), p.y.get_str()});
        out.push_back(std::move(jq));
    }
    return out;
}

bool quadtree_attack_failed_everywhere(const Quadtree& truth, const QuadtreeRecovery& rep) {
    for (const BatchOutcome& b : rep.batches) {
        if (b.tag != SolveOutcome::Tag::Unique) continue;
        bool all_match = true;
        for (int slot = 0; slot < 4 && all_match; ++slot) {
            const int node = b.nodes[slot];
            if (!rep.vertices[node] || !(truth.node(node + 1).v == *rep.vertices[node]))
                all_match = false;
        }
        if (all_match) return false;
    }
    return true;
}

const char* tag_name(SolveOutcome::Tag t) {
    switch (t) {
        case SolveOutcome::Tag::Unique: return "unique";
        case SolveOutcome::Tag::Underdetermined: return "underdetermined";
        case SolveOutcome::Tag::Inconsistent: return "inconsistent";
    }
    return "?";
}

nlohmann::json batch_diagnostics(const QuadtreeRecovery& rep) {
    nlohmann::json ranks = nlohmann::json::array();
    nlohmann::json tags = nlohmann::json::array();
    for (const BatchOutcome& b : rep.batches) {
        ranks.push_back(b.rank);
        tags.push_back(tag_name(b.tag));
    }
    return nlohmann::json{{"batch_ranks", std::move(ranks)}, {"batch_tags", std::move(tags)}};
}

bool recovery_matches_tree(const Quadtree& truth, const QuadtreeRecovery& rep) {
    if (!rep.complete()) return false;
    for (int id = 1; id <= truth.node_count(); ++id)
        if (!(truth.node(id).v == *rep.vertices[id - 1])) return false;
    return true;
}

TrialReport quadtree_attack_trial(TrialEnv& env) {
    TrialReport r;
    const auto t0 = Clock::now();
    QuadtreeRecovery rep = recover_quadtree_report(env.en);
    r.seconds = elapsed(t0);
    r.success = recovery_matches_tree(env.tree, rep);
    r.rank_min = rep.min_rank();
    r.ground_truth = quadtree_to_json(env.tree);
    r.recovered = vertices_json(rep.vertices);
    r.diagnostics = batch_diagnostics(rep);
    return r;
}

TrialReport location_attack_trial(TrialEnv& env) {
    TrialReport r;
    const Point loc = sample_interior(env.tree, env.rng);
    MaskedPoint a = mask_point(env.en, loc, env.pub, env.rng).first;

    const auto t0 = Clock::now();
    LocationRecovery rep = recover_location_report(a, env.en);
    r.seconds = elapsed(t0);

    const bool exact =
        rep.unique() && rep.intersection.begin()->first == loc.x &&
        rep.intersection.begin()->second == loc.y;
    r.success = exact;
    r.ambiguous = rep.intersection.size() > 1 ? 1 : 0;
    r.max_candidates = rep.max_set_size();
    r.ground_truth = point_json(loc);
    nlohmann::json inter = nlohmann::json::array();
    for (const auto& c : rep.intersection)
        inter.push_back({c.first.get_str(), c.second.get_str()});
    r.recovered = std::move(inter);
    r.diagnostics = nlohmann::json{{"set_sizes", rep.set_sizes}};
    return r;
}

struct PickupScenario {
    Point pickup;
    Point takeoff;
    BigInt radius;
};

PickupScenario sample_pickup_scenario(const Quadtree& tree, unsigned coord_bits, SeededRng& rng) {
    const QuadNode& root = tree.node(1);
    const BigInt x0 = root.v[0].x, y0 = root.v[0].y, x1 = root.v[2].x, y1 = root.v[2].y;
    const BigInt top = (BigInt(1) << coord_bits) - 1;
    const BigInt max_r = bmin(x1 - x0, y1 - y0) / 4;
    const BigInt radius = 1 + rng.below(bmax(max_r, BigInt(1)));

    // keep the whole square strictly inside the root so its corners can be
    // located by the server
    const BigInt lo_x = bmax(x0 + 1 + radius, radius), hi_x = bmin(x1 - 1 - radius, top - radius);
    const BigInt lo_y = bmax(y0 + 1 + radius, radius), hi_y = bmin(y1 - 1 - radius, top - radius);
    if (lo_x > hi_x || lo_y > hi_y) throw Error("root quadrant too small for a pickup square");
    Point pickup{lo_x + rng.below(hi_x - lo_x + 1), lo_y + rng.below(hi_y - lo_y + 1)};

    // take-off close to the pickup, clamped strictly inside the root
    BigInt tx = pickup.x + rng.below(2 * radius + 1) - radius;
    BigInt ty = pickup.y + rng.below(2 * radius + 1) - radius;
    tx = bmin(bmax(tx, x0 + 1), x1 - 1);
    ty = bmin(bmax(ty, y0 + 1), y1 - 1);
    return PickupScenario{std::move(pickup), Point{std::move(tx), std::move(ty)},
                          std::move(radius)};
}

TrialReport pickup_attack_trial(TrialEnv& env) {
    TrialReport r;
    PickupScenario sc = sample_pickup_scenario(env.tree, env.pub.sp.coord_bits, env.rng);
    auto [req, rsec] = rc_build_request(sc.pickup, sc.radius, env.en, env.pub, env.rng);
    MaskedPoint c5 = mask_point(env.en, sc.takeoff, env.pub, env.rng).first;

    const auto t0 = Clock::now();
    try {
        const Point pickup = recover_pickup(req.c, env.en);
        const Point takeoff = recover_takeoff(c5, env.en);
        r.success = pickup == sc.pickup && takeoff == sc.takeoff;
        r.recovered =
            nlohmann::json{{"pickup", point_json(pickup)}, {"takeoff", point_json(takeoff)}};
    } catch (const AmbiguousIntersection&) {
        r.success = false;
        r.ambiguous = 1;
    }
    r.seconds = elapsed(t0);
    r.ground_truth = nlohmann::json{{"pickup", point_json(sc.pickup)},
                                    {"takeoff", point_json(sc.takeoff)},
                                    {"radius", sc.radius.get_str()}};
    return r;
}

TrialReport roundtrip_trial(TrialEnv& env, int points) {
    TrialReport r;
    int mismatches = 0;
    nlohmann::json pts = nlohmann::json::array();
    const auto t0 = Clock::now();
    for (int k = 0; k < points; ++k) {
        const Point loc = sample_interior(env.tree, env.rng);
        pts.push_back(point_json(loc));
        MaskedPoint a = mask_point(env.en, loc, env.pub, env.rng).first;
        try {
            if (identify_quadrant(a, env.tree, env.pub, env.sec) != locate(env.tree, loc))
                ++mismatches;
        } catch (const NoContainingChild&) {
            ++mismatches;
        }
    }
    r.seconds = elapsed(t0);
    r.success = mismatches == 0;
    r.ground_truth = nlohmann::json{{"tree", quadtree_to_json(env.tree)}, {"points", pts}};
    r.diagnostics = nlohmann::json{{"points", points}, {"mismatches", mismatches}};
    return r;
}

TrialReport countermeasure_trial(TrialEnv& env, int points) {
    TrialReport r;
    const auto t0 = Clock::now();

    QuadtreeRecovery attack1 = recover_quadtree_report(env.en);
    const bool attack1_blocked = quadtree_attack_failed_everywhere(env.tree, attack1);

    int mismatches = 0;
    for (int k = 0; k < points; ++k) {
        const Point loc = sample_interior(env.tree, env.rng);
        MaskedPoint a = mask_point(env.en, loc, env.pub, env.rng).first;
        try {
            if (identify_quadrant(a, env.tree, env.pub, env.sec) != locate(env.tree, loc))
                ++mismatches;
        } catch (const NoContainingChild&) {
            ++mismatches;
        }
    }

    const Point loc = sample_interior(env.tree, env.rng);
    MaskedPoint a = mask_point(env.en, loc, env.pub, env.rng).first;
    LocationRecovery attack2 = recover_location_report(a, env.en);
    const bool attack2_exact = attack2.unique() &&
                               attack2.intersection.begin()->first == loc.x &&
                               attack2.intersection.begin()->second == loc.y;

    r.seconds = elapsed(t0);
    r.success = attack1_blocked && mismatches == 0 && attack2_exact;
    r.rank_min = attack1.min_rank();
    r.max_candidates = attack2.max_set_size();
    r.ambiguous = attack2.intersection.size() > 1 ? 1 : 0;
    r.ground_truth = nlohmann::json{{"tree", quadtree_to_json(env.tree)},
                                    {"vehicle", point_json(loc)}};
    r.diagnostics = nlohmann::json{{"attack1_blocked", attack1_blocked},
                                   {"attack1", batch_diagnostics(attack1)},
                                   {"roundtrip_mismatches", mismatches},
                                   {"attack2_exact", attack2_exact}};
    return r;
}

TrialReport run_one_trial(const ExperimentConfig& cfg, int trial) {
    TrialReport r;
    try {
        TrialEnv env = make_trial_env(cfg, trial);
        switch (cfg.experiment) {
            case Experiment::QuadtreeAttack: r = quadtree_attack_trial(env); break;
            case Experiment::LocationAttack: r = location_attack_trial(env); break;
            case Experiment::PickupAttack: r = pickup_attack_trial(env); break;
            case Experiment::ProtocolRoundtrip:
                r = roundtrip_trial(env, cfg.points_per_trial);
                break;
            case Experiment::Countermeasure:
                r = countermeasure_trial(env, cfg.points_per_trial);
                break;
        }
    } catch (const std::exception& e) {
        r.success = false;
        r.diagnostics = nlohmann::json{{"error", e.what()}};
    }
    r.trial = trial;
    if (!cfg.record_timing) r.seconds = 0.0;
    return r;
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& cfg) {
    cfg.validate();

    ExperimentResult out;
    out.config = cfg;
    out.reports.resize(cfg.trials);

    const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
    const int workers =
        std::min(cfg.threads > 0 ? cfg.threads : static_cast<int>(hw), cfg.trials);

    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int w = 0; w < workers; ++w)
        pool.emplace_back([&] {
            for (;;) {
                const int t = next.fetch_add(1);
                if (t >= cfg.trials) return;
                out.reports[t] = run_one_trial(cfg, t);
            }
        });
    for (std::thread& t : pool) t.join();

    ExperimentSummary& s = out.summary;
    s.trials = cfg.trials;
    s.m_actual = round_node_count(cfg.m);
    double total = 0.0;
    for (const TrialReport& r : out.reports) {
        if (r.success) ++s.successes;
        total += r.seconds;
        if (r.trial == 0 || r.seconds < s.min_seconds) s.min_seconds = r.seconds;
        if (r.trial == 0 || r.seconds > s.max_seconds) s.max_seconds = r.seconds;
    }
    s.success_rate = static_cast<double>(s.successes) / s.trials;
    s.mean_seconds = total / s.trials;
    return out;
}

nlohmann::json config_to_json(const ExperimentConfig& cfg) {
    return nlohmann::json{{"k1", cfg.params.k1},
                          {"k2", cfg.params.k2},
                          {"k3", cfg.params.k3},
                          {"k4", cfg.params.k4},
                          {"coord_bits", cfg.params.coord_bits},
                          {"m", cfg.m},
                          {"trials", cfg.trials},
                          {"seed", cfg.seed},
                          {"mode", cfg.mode == MaskMode::Shared ? "shared" : "fresh"},
                          {"experiment", experiment_name(cfg.experiment)},
                          {"points", cfg.points_per_trial},
                          {"threads", cfg.threads},
                          {"record_timing", cfg.record_timing}};
}

ExperimentConfig config_from_json(const nlohmann::json& j) {
    ExperimentConfig cfg;
    if (j.contains("k1")) cfg.params.k1 = j.at("k1").get<int>();
    if (j.contains("k2")) cfg.params.k2 = j.at("k2").get<int>();
    if (j.contains("k3")) cfg.params.k3 = j.at("k3").get<int>();
    if (j.contains("k4")) cfg.params.k4 = j.at("k4").get<int>();
    if (j.contains("coord_bits")) cfg.params.coord_bits = j.at("coord_bits").get<unsigned>();
    if (j.contains("m")) cfg.m = j.at("m").get<int>();
    if (j.contains("trials")) cfg.trials = j.at("trials").get<int>();
    if (j.contains("seed")) cfg.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("mode"))
        cfg.mode = j.at("mode").get<std::string>() == "fresh" ? MaskMode::Fresh
                                                              : MaskMode::Shared;
    if (j.contains("experiment"))
        cfg.experiment = experiment_from_name(j.at("experiment").get<std::string>());
    if (j.contains("points")) cfg.points_per_trial = j.at("points").get<int>();
    if (j.contains("threads")) cfg.threads = j.at("threads").get<int>();
    if (j.contains("record_timing")) cfg.record_timing = j.at("record_timing").get<bool>();
    return cfg;
}

namespace {

nlohmann::json trial_to_json(const TrialReport& r) {
    return nlohmann::json{{"trial", r.trial},
                          {"success", r.success},
                          {"seconds", r.seconds},
                          {"rank_min", r.rank_min},
                          {"max_candidates", r.max_candidates},
                          {"ambiguous", r.ambiguous},
                          {"ground_truth", r.ground_truth},
                          {"recovered", r.recovered},
                          {"diagnostics", r.diagnostics}};
}

}  // namespace

nlohmann::json result_to_json(const ExperimentResult& r) {
    nlohmann::json trials = nlohmann::json::array();
    for (const TrialReport& t : r.reports) trials.push_back(trial_to_json(t));
    return nlohmann::json{{"config", config_to_json(r.config)},
                          {"summary",
                           {{"trials", r.summary.trials},
                            {"successes", r.summary.successes},
                            {"success_rate", r.summary.success_rate},
                            {"mean_seconds", r.summary.mean_seconds},
                            {"min_seconds", r.summary.min_seconds},
                            {"max_seconds", r.summary.max_seconds},
                            {"m_actual", r.summary.m_actual}}},
                          {"trials", std::move(trials)}};
}

void emit_report(const ExperimentResult& r, ReportFormat format, std::ostream& out) {
    if (format == ReportFormat::Json) {
        out << result_to_json(r).dump(2) << "\n";
        return;
    }
    out << "trial,success,seconds,rank_min,max_candidates,ambiguous\n";
    if (r.reports.empty()) return;
    char buf[64];
    int rank_min = -1, max_cand = -1, ambiguous = 0;
    for (const TrialReport& t : r.reports) {
        std::snprintf(buf, sizeof buf, "%.6f", t.seconds);
        out << t.trial << ',' << (t.success ? 1 : 0) << ',' << buf << ',' << t.rank_min << ','
            << t.max_candidates << ',' << t.ambiguous << "\n";
        if (t.rank_min >= 0 && (rank_min < 0 || t.rank_min < rank_min)) rank_min = t.rank_min;
        if (t.max_candidates > max_cand) max_cand = t.max_candidates;
        ambiguous += t.ambiguous;
    }
    std::snprintf(buf, sizeof buf, "%.6f", r.summary.mean_seconds);
    out << "summary," << r.summary.success_rate << ',' << buf << ',' << rank_min << ','
        << max_cand << ',' << ambiguous << "\n";
}

void emit_report_file(const ExperimentResult& r, ReportFormat format, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open " + path);
    emit_report(r, format, out);
    if (!out.good()) throw IoError("failed writing " + path);
}

Transcript simulate_transcript(const SecurityParams& sp, MaskMode mode, int m,
                               std::uint64_t seed) {
    ExperimentConfig cfg;
    cfg.params = sp;
    cfg.m = m;
    cfg.mode = mode;
    cfg.seed = seed;
    TrialEnv env = make_trial_env(cfg, 0);

    Transcript t;
    t.sp = sp;
    t.mode = mode;
    t.m = env.en.m;
    t.p = env.pub.p;
    t.alpha = env.pub.alpha;
    t.en = env.en;

    const Point vehicle = sample_interior(env.tree, env.rng);
    MaskedPoint a = mask_point(env.en, vehicle, env.pub, env.rng).first;
    t.a = a;
    const int vehicle_leaf = identify_quadrant(a, env.tree, env.pub, env.sec).back();

    // corners and take-off get located by the server, so they must not sit
    // on internal boundary lines
    PickupScenario sc;
    for (;;) {
        sc = sample_pickup_scenario(env.tree, sp.coord_bits, env.rng);
        const Point corners[4] = {{sc.pickup.x - sc.radius, sc.pickup.y - sc.radius},
                                  {sc.pickup.x + sc.radius, sc.pickup.y - sc.radius},
                                  {sc.pickup.x + sc.radius, sc.pickup.y + sc.radius},
                                  {sc.pickup.x - sc.radius, sc.pickup.y + sc.radius}};
        bool clean = clean_point(env.tree, sc.takeoff);
        for (const Point& c : corners) clean = clean && clean_point(env.tree, c);
        if (clean) break;
    }
    auto [req, rsec] = rc_build_request(sc.pickup, sc.radius, env.en, env.pub, env.rng);
    t.c = req.c;
    t.p_prime = rsec.p_prime;
    t.alpha_prime = rsec.alpha_prime;
    t.d = req.d_msg;
    t.e = req.e;

    const std::map<int, int> fleet{{0, vehicle_leaf}};
    const std::vector<int> srvs = rs_select_srvs(req.c, env.tree, env.pub, env.sec, fleet);
    if (!srvs.empty()) {
        SrvResponse resp = srv_respond(req.d_msg, req.e, vehicle, rsec.p_prime,
                                       rsec.alpha_prime, sp, env.rng);
        rc_filter(resp, rsec);
        t.f = resp.f;
        t.i_val = resp.i_val;
    }

    MaskedPoint c5 = mask_point(env.en, sc.takeoff, env.pub, env.rng).first;
    t.c5 = c5;
    rs_pick_atp(c5, env.tree, env.pub, env.sec, env.rng);
    return t;
}

}  // namespace trace
