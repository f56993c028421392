#pragma once

#include <string>
#include <vector>

#include "abstain/config.hpp"
#include "abstain/environment.hpp"
#include "abstain/learners.hpp"

namespace abstain {

struct ResultRow {
    long run_id = 0;
    std::uint64_t seed = 0;
    std::string algorithm;
    double epsilon = 0.0;
    double gamma = 0.0;
    double delta = 0.0;
    long T = 0;
    long queries = 0;
    double chow_excess = 0.0;
    double std_excess_randomized = 0.0;
    double abstain_mass = 0.0;
    double proper_abstention_violations = 0.0;  // violating mass
    int fstar_retained = 1;
    double wall_ms = 0.0;
    std::string error;  // empty on success

    int sweep_index = 0;
    int replicate = 0;
};

/// Everything an audit needs about one finished run.
struct RunArtifact {
    ResultRow row;
    AbstainingClassifier classifier;
    Environment env;
    std::vector<Segment> ensemble;  // alg2 only
    long ensemble_horizon = 0;
};

struct ExperimentResult {
    std::vector<ResultRow> rows;
    std::vector<RunArtifact> artifacts;
};

/// Runs every sweep point x replicate: builds the instance, runs the learner,
/// evaluates all metrics by exact region integration, and appends one row.
/// Failed runs carry an error code in their row instead of aborting the sweep.
/// `jobs` > 1 executes runs concurrently; rows are sorted back into
/// (sweep_index, replicate) order so parallelism never changes output bytes.
ExperimentResult run_experiment(const ExperimentConfig& cfg, int jobs = 1,
                                bool keep_artifacts = false);

ResultRow evaluate_run(const ExperimentConfig& cfg, const SweepPoint& point, int replicate,
                       const Instance& instance, const LearnResult& result);

std::string rows_to_csv(const std::vector<ResultRow>& rows);
std::string rows_to_json_summary(const std::vector<ResultRow>& rows);
void write_file(const std::string& path, const std::string& content);

struct AuditEntry {
    std::string name;
    bool pass = true;
    double max_violation = 0.0;
    std::string details;
};

struct AuditReport {
    std::vector<AuditEntry> entries;
    bool all_pass() const;
    std::string to_text() const;
};

/// Mass of regions where a run abstained although |eta - 1/2| > gamma,
/// maximized over runs (Proper abstention audit).
AuditEntry audit_proper_abstention(const std::vector<RunArtifact>& artifacts);
/// std_excess - chow_excess - gamma * abstain_mass must vanish on every row.
AuditEntry audit_identity(const std::vector<ResultRow>& rows);
/// Monte Carlo cross-check of the exact Chow error (explicit sample count).
AuditEntry audit_mc_crosscheck(const std::vector<RunArtifact>& artifacts, long samples,
                               std::uint64_t seed);

AuditReport run_audits(const ExperimentResult& result, long mc_samples, std::uint64_t seed);

}  // namespace abstain
