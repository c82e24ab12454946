// Command-line front end: protocol simulation, the two recovery attacks,
// the fresh-randomness countermeasure comparison, and benchmark grids.

#include "trace/harness.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>

using namespace trace;

namespace {

struct SubFlags {
    int k1 = 512, k2 = 160, k3 = 75, k4 = 75;
    unsigned coord_bits = 20;
    int m = 50, trials = 30, points = 200, threads = 0;
    std::uint64_t seed = 1;
    std::string mode = "shared";
    std::string out, format = "json", config, transcript;
    CLI::App* sub = nullptr;
    CLI::Option* points_opt = nullptr;

    void attach(CLI::App* s, bool with_points, bool with_transcript) {
        sub = s;
        s->add_option("--k1", k1, "bits of the server prime p");
        s->add_option("--k2", k2, "bits of the public factor alpha");
        s->add_option("--k3", k3, "bits of the additive masking randoms");
        s->add_option("--k4", k4, "bits of the multiplicative masking randoms");
        s->add_option("--coord-bits", coord_bits, "coordinate range is [0, 2^coord-bits)");
        s->add_option("--m", m, "requested quadtree node count");
        s->add_option("--trials", trials, "independent trials");
        s->add_option("--seed", seed, "master seed; trial i uses (seed, i)");
        s->add_option("--mode", mode, "masking mode: shared|fresh")
            ->check(CLI::IsMember({"shared", "fresh"}));
        s->add_option("--threads", threads, "worker threads (0 = hardware)");
        s->add_option("--out", out, "report file path");
        s->add_option("--format", format, "report format: json|csv")
            ->check(CLI::IsMember({"json", "csv"}));
        s->add_option("--config", config, "JSON config file; explicit flags override it");
        if (with_points) points_opt = s->add_option("--points", points, "descents per trial");
        if (with_transcript)
            s->add_option("--transcript", transcript, "transcript JSON path (write or attack)");
    }

    ExperimentConfig build(Experiment e) const {
        ExperimentConfig cfg;
        if (!config.empty()) {
            std::ifstream in(config);
            if (!in) throw IoError("cannot open config file " + config);
            cfg = config_from_json(nlohmann::json::parse(in));
        }
        cfg.experiment = e;
        if (sub->count("--k1")) cfg.params.k1 = k1;
        if (sub->count("--k2")) cfg.params.k2 = k2;
        if (sub->count("--k3")) cfg.params.k3 = k3;
        if (sub->count("--k4")) cfg.params.k4 = k4;
        if (sub->count("--coord-bits")) cfg.params.coord_bits = coord_bits;
        if (sub->count("--m")) cfg.m = m;
        if (sub->count("--trials")) cfg.trials = trials;
        if (sub->count("--seed")) cfg.seed = seed;
        if (sub->count("--mode")) cfg.mode = mode == "fresh" ? MaskMode::Fresh : MaskMode::Shared;
        if (sub->count("--threads")) cfg.threads = threads;
        if (points_opt && points_opt->count()) cfg.points_per_trial = points;
        return cfg;
    }

    ReportFormat report_format() const {
        return format == "csv" ? ReportFormat::Csv : ReportFormat::Json;
    }
};

void print_summary(const ExperimentResult& r) {
    const ExperimentSummary& s = r.summary;
    std::printf("%s: params=(%d,%d,%d,%d) coord_bits=%u m=%d mode=%s\n",
                experiment_name(r.config.experiment), r.config.params.k1, r.config.params.k2,
                r.config.params.k3, r.config.params.k4, r.config.params.coord_bits, s.m_actual,
                r.config.mode == MaskMode::Fresh ? "fresh" : "shared");
    std::printf("  trials=%d successes=%d success_rate=%.3f\n", s.trials, s.successes,
                s.success_rate);
    std::printf("  seconds: mean=%.3f min=%.3f max=%.3f\n", s.mean_seconds, s.min_seconds,
                s.max_seconds);
}

int run_and_report(const SubFlags& f, Experiment e) {
    ExperimentConfig cfg = f.build(e);
    if (e == Experiment::Countermeasure) cfg.mode = MaskMode::Fresh;
    const bool needs_exact =
        e == Experiment::ProtocolRoundtrip || e == Experiment::Countermeasure;
    if (needs_exact && !cfg.params.exact_unmasking())
        std::fprintf(stderr,
                     "warning: k4 + 2*k2 + 2*coord_bits + 4 > k1 at these sizes; masked sums "
                     "can wrap modulo p and descent decisions are not guaranteed exact\n");
    ExperimentResult r = run_experiment(cfg);
    print_summary(r);
    if (!f.out.empty()) {
        emit_report_file(r, f.report_format(), f.out);
        std::printf("  report written to %s\n", f.out.c_str());
    }
    return r.summary.successes == r.summary.trials ? 0 : 1;
}

Transcript load_transcript(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open transcript " + path);
    return transcript_from_json(nlohmann::json::parse(in));
}

void write_json(const nlohmann::json& j, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open " + path);
    out << j.dump(2) << "\n";
}

int attack_quadtree_transcript(const SubFlags& f) {
    Transcript t = load_transcript(f.transcript);
    if (!t.en) throw ConfigError("transcript has no masked quadtree");
    QuadtreeRecovery rep = recover_quadtree_report(*t.en);
    std::printf("attack-quadtree on %s: %d nodes, %zu batches, %s (min rank %d)\n",
                f.transcript.c_str(), t.en->m, rep.batches.size(),
                rep.complete() ? "recovered" : "failed", rep.min_rank());
    if (!f.out.empty()) {
        nlohmann::json recovered = nlohmann::json::array();
        for (const auto& quad : rep.vertices) {
            if (!quad) {
                recovered.push_back(nullptr);
                continue;
            }
            nlohmann::json jq = nlohmann::json::array();
            for (const Point& p : *quad) jq.push_back({p.x.get_str(), p.y.get_str()});
            recovered.push_back(std::move(jq));
        }
        write_json(nlohmann::json{{"complete", rep.complete()}, {"vertices", recovered}}, f.out);
    }
    return rep.complete() ? 0 : 1;
}

int attack_location_transcript(const SubFlags& f) {
    Transcript t = load_transcript(f.transcript);
    if (!t.en || !t.a) throw ConfigError("transcript has no masked location");
    LocationRecovery rep = recover_location_report(*t.a, *t.en);
    if (rep.unique()) {
        const auto& c = *rep.intersection.begin();
        std::printf("attack-location on %s: (%s, %s)\n", f.transcript.c_str(),
                    c.first.get_str().c_str(), c.second.get_str().c_str());
    } else {
        std::printf("attack-location on %s: %zu candidates survive\n", f.transcript.c_str(),
                    rep.intersection.size());
    }
    return rep.unique() ? 0 : 1;
}

int attack_pickup_transcript(const SubFlags& f) {
    Transcript t = load_transcript(f.transcript);
    if (!t.en || !t.c) throw ConfigError("transcript has no masked square corners");
    const Point pickup = recover_pickup(*t.c, *t.en);
    std::printf("attack-pickup on %s: pickup (%s, %s)\n", f.transcript.c_str(),
                pickup.x.get_str().c_str(), pickup.y.get_str().c_str());
    if (t.c5) {
        const Point takeoff = recover_takeoff(*t.c5, *t.en);
        std::printf("  take-off (%s, %s)\n", takeoff.x.get_str().c_str(),
                    takeoff.y.get_str().c_str());
    }
    return 0;
}

int run_bench(const SubFlags& f, const std::string& sets, const std::vector<int>& m_list) {
    struct Row {
        SecurityParams params;
        int m_actual;
        Experiment experiment;
        int trials;
        double success_rate, mean_seconds;
    };
    std::vector<Row> rows;
    bool all_ok = true;

    std::vector<std::pair<SecurityParams, int>> grids;  // params, default trials
    if (sets == "512" || sets == "both")
        grids.push_back({SecurityParams{512, 160, 75, 75, 20}, 30});
    if (sets == "2048" || sets == "both")
        grids.push_back({SecurityParams{2048, 1000, 400, 400, 50}, 3});

    std::printf("%-22s %5s %-17s %7s %8s %13s\n", "security params", "m", "experiment", "trials",
                "success", "mean seconds");
    for (const auto& [params, default_trials] : grids)
        for (int m : m_list)
            for (Experiment e : {Experiment::QuadtreeAttack, Experiment::LocationAttack}) {
                ExperimentConfig cfg = f.build(e);
                cfg.params = params;
                cfg.m = m;
                if (!f.sub->count("--trials")) cfg.trials = default_trials;
                ExperimentResult r = run_experiment(cfg);
                all_ok = all_ok && r.summary.successes == r.summary.trials;
                char label[64];
                std::snprintf(label, sizeof label, "(%d,%d,%d,%d)", params.k1, params.k2,
                              params.k3, params.k4);
                std::printf("%-22s %5d %-17s %7d %8.3f %13.3f\n", label, r.summary.m_actual,
                            experiment_name(e), r.summary.trials, r.summary.success_rate,
                            r.summary.mean_seconds);
                rows.push_back(Row{params, r.summary.m_actual, e, r.summary.trials,
                                   r.summary.success_rate, r.summary.mean_seconds});
            }

    if (!f.out.empty()) {
        nlohmann::json jrows = nlohmann::json::array();
        for (const Row& row : rows)
            jrows.push_back({{"k1", row.params.k1},
                             {"k2", row.params.k2},
                             {"k3", row.params.k3},
                             {"k4", row.params.k4},
                             {"coord_bits", row.params.coord_bits},
                             {"m", row.m_actual},
                             {"experiment", experiment_name(row.experiment)},
                             {"trials", row.trials},
                             {"success_rate", row.success_rate},
                             {"mean_seconds", row.mean_seconds}});
        write_json(nlohmann::json{{"rows", std::move(jrows)}}, f.out);
        std::printf("bench table written to %s\n", f.out.c_str());
    }
    return all_ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"TRACE ride-hailing protocol simulator and cryptanalysis toolkit"};
    app.require_subcommand(1);

    SubFlags sim, quad, loc, pick, counter, bench;
    std::string bench_sets = "512";
    std::vector<int> bench_m{50, 100};

    sim.attach(app.add_subcommand("simulate",
                                  "run full protocol round-trips and check quadrant descent"),
               true, true);
    quad.attach(app.add_subcommand("attack-quadtree",
                                   "recover the secret quadtree from the masked tree"),
                false, true);
    loc.attach(app.add_subcommand("attack-location",
                                  "recover a vehicle location from its masked report"),
               false, true);
    pick.attach(app.add_subcommand("attack-pickup",
                                   "recover rider pickup and take-off points end to end"),
                false, true);
    counter.attach(app.add_subcommand("countermeasure",
                                      "per-node masking randoms: tree recovery blocked, "
                                      "location recovery and correctness intact"),
                   true, false);
    bench.attach(app.add_subcommand("bench", "timing grid over parameter sets and tree sizes"),
                 false, false);
    bench.sub->add_option("--sets", bench_sets, "parameter sets: 512|2048|both")
        ->check(CLI::IsMember({"512", "2048", "both"}));
    bench.sub->add_option("--m-list", bench_m, "tree sizes to benchmark");

    CLI11_PARSE(app, argc, argv);

    try {
        if (sim.sub->parsed()) {
            if (!sim.transcript.empty()) {
                ExperimentConfig cfg = sim.build(Experiment::ProtocolRoundtrip);
                Transcript t = simulate_transcript(cfg.params, cfg.mode, cfg.m, cfg.seed);
                write_json(transcript_to_json(t), sim.transcript);
                std::printf("transcript written to %s\n", sim.transcript.c_str());
            }
            return run_and_report(sim, Experiment::ProtocolRoundtrip);
        }
        if (quad.sub->parsed())
            return quad.transcript.empty() ? run_and_report(quad, Experiment::QuadtreeAttack)
                                           : attack_quadtree_transcript(quad);
        if (loc.sub->parsed())
            return loc.transcript.empty() ? run_and_report(loc, Experiment::LocationAttack)
                                          : attack_location_transcript(loc);
        if (pick.sub->parsed())
            return pick.transcript.empty() ? run_and_report(pick, Experiment::PickupAttack)
                                           : attack_pickup_transcript(pick);
        if (counter.sub->parsed()) return run_and_report(counter, Experiment::Countermeasure);
        if (bench.sub->parsed()) return run_bench(bench, bench_sets, bench_m);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
    return 0;
}
