#pragma once

#include "trace/attacks.hpp"

#include <iosfwd>

namespace trace {

class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& what) : Error(what) {}
};

class IoError : public Error {
public:
    explicit IoError(const std::string& what) : Error(what) {}
};

enum class Experiment {
    QuadtreeAttack,
    LocationAttack,
    PickupAttack,
    ProtocolRoundtrip,
    Countermeasure,
};

enum class ReportFormat { Json, Csv };

const char* experiment_name(Experiment e);
Experiment experiment_from_name(const std::string& name);

struct ExperimentConfig {
    SecurityParams params{512, 160, 75, 75, 20};
    int m = 50;
    int trials = 30;
    std::uint64_t seed = 1;
    MaskMode mode = MaskMode::Shared;
    Experiment experiment = Experiment::ProtocolRoundtrip;
    int points_per_trial = 200;  // roundtrip / countermeasure descents per trial
    int threads = 0;             // 0 = hardware concurrency
    bool record_timing = true;   // off gives byte-identical reports across runs

    void validate() const;
};

/// One trial's outcome. Success always means exact equality with the trial's
/// ground truth. The ground truth itself is kept for auditability.
struct TrialReport {
    int trial = 0;
    bool success = false;
    double seconds = 0.0;
    int rank_min = -1;        // quadtree attack: smallest batch rank
    int max_candidates = -1;  // location attack: largest |S_i|
    int ambiguous = 0;        // trials whose candidate intersection was not a singleton
    nlohmann::json ground_truth;
    nlohmann::json recovered;
    nlohmann::json diagnostics;
};

struct ExperimentSummary {
    int trials = 0;
    int successes = 0;
    double success_rate = 0.0;
    double mean_seconds = 0.0;
    double min_seconds = 0.0;
    double max_seconds = 0.0;
    int m_actual = 0;  // generated node count (requested m rounded up to 1+4t)
};

struct ExperimentResult {
    ExperimentConfig config;
    std::vector<TrialReport> reports;
    ExperimentSummary summary;
};

/// Runs cfg.trials independent trials in a worker pool. Each trial derives
/// its randomness from (seed, trial index), generates a fresh quadtree,
/// secrets and locations, and runs the configured pipeline.
ExperimentResult run_experiment(const ExperimentConfig& cfg);

nlohmann::json result_to_json(const ExperimentResult& r);
void emit_report(const ExperimentResult& r, ReportFormat format, std::ostream& out);
void emit_report_file(const ExperimentResult& r, ReportFormat format, const std::string& path);

/// One full protocol run (all steps) in wire form, for the given seed.
Transcript simulate_transcript(const SecurityParams& sp, MaskMode mode, int m,
                               std::uint64_t seed);

nlohmann::json config_to_json(const ExperimentConfig& cfg);
ExperimentConfig config_from_json(const nlohmann::json& j);

}  // namespace trace
