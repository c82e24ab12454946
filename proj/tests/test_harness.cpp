#include "trace/harness.hpp"

#include <doctest.h>

#include <sstream>

using namespace trace;

namespace {

ExperimentConfig small_config(Experiment e) {
    ExperimentConfig cfg;
    cfg.params = SecurityParams{320, 100, 30, 30, 20};
    cfg.m = 5;
    cfg.trials = 2;
    cfg.seed = 42;
    cfg.experiment = e;
    cfg.points_per_trial = 3;
    cfg.record_timing = false;
    return cfg;
}

}  // namespace

TEST_SUITE_BEGIN("harness");

TEST_CASE("config validation") {
    ExperimentConfig cfg = small_config(Experiment::LocationAttack);
    CHECK_NOTHROW(cfg.validate());

    cfg.trials = 0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);

    cfg = small_config(Experiment::LocationAttack);
    cfg.params.k4 = 90;  // k3 + k4 >= k2
    CHECK_THROWS_AS(cfg.validate(), ConfigError);

    CHECK(experiment_from_name("quadtree-attack") == Experiment::QuadtreeAttack);
    CHECK_THROWS_AS(experiment_from_name("nope"), ConfigError);
}

TEST_CASE("experiments succeed and are reproducible bit for bit") {
    for (Experiment e : {Experiment::LocationAttack, Experiment::QuadtreeAttack,
                         Experiment::ProtocolRoundtrip, Experiment::PickupAttack}) {
        ExperimentConfig cfg = small_config(e);
        ExperimentResult r1 = run_experiment(cfg);
        ExperimentResult r2 = run_experiment(cfg);
        CHECK(r1.summary.successes == cfg.trials);
        CHECK(result_to_json(r1).dump() == result_to_json(r2).dump());
    }
}

TEST_CASE("countermeasure mode blocks tree recovery but not location recovery") {
    ExperimentConfig cfg = small_config(Experiment::Countermeasure);
    cfg.mode = MaskMode::Fresh;
    ExperimentResult r = run_experiment(cfg);
    CHECK(r.summary.successes == cfg.trials);
    for (const TrialReport& t : r.reports) {
        CHECK(t.diagnostics.at("attack1_blocked").get<bool>());
        CHECK(t.diagnostics.at("attack2_exact").get<bool>());
        CHECK(t.diagnostics.at("roundtrip_mismatches").get<int>() == 0);
    }
}

TEST_CASE("requested node counts are rounded up to 1 mod 4") {
    ExperimentConfig cfg = small_config(Experiment::LocationAttack);
    cfg.m = 6;
    cfg.trials = 1;
    ExperimentResult r = run_experiment(cfg);
    CHECK(r.summary.m_actual == 9);
}

TEST_CASE("summary times are the exact mean of trial times") {
    ExperimentConfig cfg = small_config(Experiment::LocationAttack);
    cfg.record_timing = true;
    cfg.trials = 5;
    ExperimentResult r = run_experiment(cfg);
    double total = 0.0;
    for (const TrialReport& t : r.reports) total += t.seconds;
    CHECK(r.summary.mean_seconds == total / cfg.trials);
}

TEST_CASE("csv reports carry one row per trial plus a summary") {
    ExperimentConfig cfg = small_config(Experiment::LocationAttack);
    cfg.trials = 30;
    ExperimentResult r = run_experiment(cfg);

    std::ostringstream csv;
    emit_report(r, ReportFormat::Csv, csv);
    std::istringstream lines(csv.str());
    std::string line;
    int count = 0;
    std::string last;
    while (std::getline(lines, line)) {
        if (count == 0) CHECK(line == "trial,success,seconds,rank_min,max_candidates,ambiguous");
        last = line;
        ++count;
    }
    CHECK(count == 1 + 30 + 1);
    CHECK(last.substr(0, 8) == "summary,");

    ExperimentResult empty;
    empty.config = cfg;
    std::ostringstream headeronly;
    emit_report(empty, ReportFormat::Csv, headeronly);
    CHECK(headeronly.str() == "trial,success,seconds,rank_min,max_candidates,ambiguous\n");
}

TEST_CASE("json reports mirror the in-memory trial records") {
    ExperimentConfig cfg = small_config(Experiment::LocationAttack);
    ExperimentResult r = run_experiment(cfg);

    std::ostringstream json;
    emit_report(r, ReportFormat::Json, json);
    const nlohmann::json parsed = nlohmann::json::parse(json.str());

    CHECK(parsed.at("summary").at("successes").get<int>() == r.summary.successes);
    CHECK(parsed.at("config").at("m").get<int>() == cfg.m);
    REQUIRE(parsed.at("trials").size() == r.reports.size());
    for (std::size_t i = 0; i < r.reports.size(); ++i) {
        const auto& jt = parsed.at("trials").at(i);
        CHECK(jt.at("trial").get<int>() == r.reports[i].trial);
        CHECK(jt.at("success").get<bool>() == r.reports[i].success);
        CHECK(jt.at("seconds").get<double>() == r.reports[i].seconds);
        CHECK(jt.at("rank_min").get<int>() == r.reports[i].rank_min);
        CHECK(jt.at("max_candidates").get<int>() == r.reports[i].max_candidates);
        CHECK(jt.at("ambiguous").get<int>() == r.reports[i].ambiguous);
        CHECK(jt.at("ground_truth") == r.reports[i].ground_truth);
        CHECK(jt.at("recovered") == r.reports[i].recovered);
    }
}

TEST_CASE("config json mirrors the flags and round-trips") {
    ExperimentConfig cfg = small_config(Experiment::Countermeasure);
    cfg.mode = MaskMode::Fresh;
    cfg.seed = 123456789ULL;
    const nlohmann::json j = config_to_json(cfg);
    const ExperimentConfig back = config_from_json(j);
    CHECK(config_to_json(back).dump() == j.dump());
    CHECK(back.params.k1 == 320);
    CHECK(back.mode == MaskMode::Fresh);
    CHECK(back.experiment == Experiment::Countermeasure);
}

TEST_CASE("simulated transcripts serialize and parse unchanged") {
    const SecurityParams sp{320, 100, 30, 30, 20};
    Transcript t = simulate_transcript(sp, MaskMode::Shared, 5, 7);
    REQUIRE(t.en.has_value());
    REQUIRE(t.a.has_value());
    REQUIRE(t.c.has_value());
    REQUIRE(t.d.has_value());
    REQUIRE(t.e.has_value());
    REQUIRE(t.c5.has_value());

    const nlohmann::json j = transcript_to_json(t);
    Transcript back = transcript_from_json(j);
    CHECK(transcript_to_json(back).dump() == j.dump());
    CHECK(back.p == t.p);
    CHECK(back.en->en.size() == t.en->en.size());
}

TEST_SUITE_END();
