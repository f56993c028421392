#include "abstain/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <thread>

#include <json.hpp>

namespace abstain {

namespace {

std::string format_double(double v) {
    char buffer[64];
    const auto result = std::to_chars(buffer, buffer + sizeof(buffer), v);
    return std::string(buffer, result.ptr);
}

LearnResult dispatch_run(const ExperimentConfig& cfg, const SweepPoint& point,
                         const Instance& instance, Rng& rng) {
    AlgoConfig algo = cfg.algo;
    algo.epsilon = point.epsilon;
    algo.gamma = point.gamma;
    algo.budget = point.budget;
    algo.T_override = point.T;
    switch (cfg.algorithm) {
        case Algorithm::Alg1: return run_alg1(instance, algo, rng);
        case Algorithm::Alg2: return run_alg2(instance, algo, rng);
        case Algorithm::Alg3: return run_alg3(instance, algo, rng);
        case Algorithm::Uncertainty:
            return run_uncertainty_baseline(instance, algo.budget, algo.delta,
                                            algo.T_override.value_or(0), rng);
        case Algorithm::Passive:
            return run_passive(instance, algo.T_override.value_or(default_horizon(
                                             algo, instance.cls->complexity())), rng);
    }
    throw ConfigError("unreachable algorithm dispatch");
}

}  // namespace

ResultRow evaluate_run(const ExperimentConfig& cfg, const SweepPoint& point, int replicate,
                       const Instance& instance, const LearnResult& result) {
    ResultRow row;
    row.algorithm = algorithm_name(cfg.algorithm);
    row.epsilon = point.epsilon;
    row.gamma = point.gamma;
    row.delta = cfg.algo.delta;
    row.T = result.trace.horizon;
    row.queries = result.trace.queries;
    row.sweep_index = point.index;
    row.replicate = replicate;
    const Environment& env = instance.env;
    const double bayes = bayes_error(env);
    row.chow_excess = chow_error_exact(result.classifier.actions, env, point.gamma) - bayes;
    row.std_excess_randomized =
        standard_error_after_randomization(result.classifier.actions, env) - bayes;
    row.abstain_mass = abstain_mass(result.classifier.actions, env);
    row.proper_abstention_violations =
        improper_abstention_mass(result.classifier.actions, env, point.gamma);
    row.fstar_retained = result.trace.truth_always_active ? 1 : 0;
    row.wall_ms = cfg.timings ? result.trace.wall_ms : 0.0;
    return row;
}

ExperimentResult run_experiment(const ExperimentConfig& cfg, int jobs, bool keep_artifacts) {
    const std::vector<SweepPoint> points = cfg.sweep_points();
    struct Task {
        SweepPoint point;
        int replicate;
    };
    std::vector<Task> tasks;
    for (const SweepPoint& p : points)
        for (int r = 0; r < cfg.replicates; ++r) tasks.push_back(Task{p, r});

    std::vector<ResultRow> rows(tasks.size());
    std::vector<RunArtifact> artifacts(keep_artifacts ? tasks.size() : 0);

    auto worker = [&](std::size_t i) {
        const Task& task = tasks[i];
        const std::uint64_t run_seed =
            derive_seed(cfg.base_seed, static_cast<std::uint64_t>(task.point.index),
                        static_cast<std::uint64_t>(task.replicate));
        ResultRow row;
        row.run_id = static_cast<long>(i);
        row.seed = run_seed;
        try {
            const Instance instance = build_instance(cfg, task.point, derive_seed(run_seed, 1));
            Rng rng(derive_seed(run_seed, 2));
            const LearnResult result = dispatch_run(cfg, task.point, instance, rng);
            row = evaluate_run(cfg, task.point, task.replicate, instance, result);
            row.run_id = static_cast<long>(i);
            row.seed = run_seed;
            if (keep_artifacts) {
                artifacts[i] = RunArtifact{row, result.classifier, instance.env, result.ensemble,
                                           result.ensemble_horizon};
            }
        } catch (const std::exception& e) {
            row.algorithm = algorithm_name(cfg.algorithm);
            row.epsilon = task.point.epsilon;
            row.gamma = task.point.gamma;
            row.delta = cfg.algo.delta;
            row.sweep_index = task.point.index;
            row.replicate = task.replicate;
            row.error = e.what();
            if (keep_artifacts) artifacts[i].row = row;
        }
        rows[i] = std::move(row);
    };

    if (jobs <= 1) {
        for (std::size_t i = 0; i < tasks.size(); ++i) worker(i);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::thread> pool;
        const int n = std::min<int>(jobs, static_cast<int>(tasks.size()));
        for (int j = 0; j < n; ++j) {
            pool.emplace_back([&] {
                for (std::size_t i = next.fetch_add(1); i < tasks.size(); i = next.fetch_add(1))
                    worker(i);
            });
        }
        for (auto& t : pool) t.join();
    }
    // tasks were generated in (sweep_index, replicate) order already
    ExperimentResult out;
    out.rows = std::move(rows);
    out.artifacts = std::move(artifacts);
    return out;
}

std::string rows_to_csv(const std::vector<ResultRow>& rows) {
    std::ostringstream out;
    out << "run_id,seed,algorithm,epsilon,gamma,delta,T,queries,chow_excess,"
           "std_excess_randomized,abstain_mass,proper_abstention_violations,fstar_retained,"
           "wall_ms,error\n";
    for (const ResultRow& r : rows) {
        out << r.run_id << ',' << r.seed << ',' << r.algorithm << ',' << format_double(r.epsilon)
            << ',' << format_double(r.gamma) << ',' << format_double(r.delta) << ',' << r.T << ','
            << r.queries << ',' << format_double(r.chow_excess) << ','
            << format_double(r.std_excess_randomized) << ',' << format_double(r.abstain_mass)
            << ',' << format_double(r.proper_abstention_violations) << ',' << r.fstar_retained
            << ',' << format_double(r.wall_ms) << ',' << r.error << "\n";
    }
    return out.str();
}

std::string rows_to_json_summary(const std::vector<ResultRow>& rows) {
    using json = nlohmann::ordered_json;
    struct Stats {
        std::vector<double> values;
        json summary() const {
            if (values.empty()) return json::object();
            double mean = 0.0, lo = values.front(), hi = values.front();
            for (double v : values) {
                mean += v;
                lo = std::min(lo, v);
                hi = std::max(hi, v);
            }
            mean /= static_cast<double>(values.size());
            double var = 0.0;  // population convention
            for (double v : values) var += (v - mean) * (v - mean);
            var /= static_cast<double>(values.size());
            return json{{"mean", mean}, {"std", std::sqrt(var)}, {"min", lo}, {"max", hi}};
        }
    };
    std::map<int, std::vector<const ResultRow*>> by_point;
    for (const ResultRow& r : rows) by_point[r.sweep_index].push_back(&r);
    json out = json::array();
    for (const auto& [index, group] : by_point) {
        json entry;
        entry["sweep_index"] = index;
        entry["algorithm"] = group.front()->algorithm;
        entry["epsilon"] = group.front()->epsilon;
        entry["gamma"] = group.front()->gamma;
        entry["delta"] = group.front()->delta;
        entry["rows"] = group.size();
        long failed = 0;
        for (const ResultRow* r : group) failed += r->error.empty() ? 0 : 1;
        entry["failed"] = failed;
        const std::vector<std::pair<std::string, double ResultRow::*>> numeric = {
            {"chow_excess", &ResultRow::chow_excess},
            {"std_excess_randomized", &ResultRow::std_excess_randomized},
            {"abstain_mass", &ResultRow::abstain_mass},
            {"proper_abstention_violations", &ResultRow::proper_abstention_violations},
            {"wall_ms", &ResultRow::wall_ms},
        };
        for (const auto& [name, member] : numeric) {
            Stats s;
            for (const ResultRow* r : group)
                if (r->error.empty()) s.values.push_back(r->*member);
            entry[name] = s.summary();
        }
        Stats queries;
        for (const ResultRow* r : group)
            if (r->error.empty()) queries.values.push_back(static_cast<double>(r->queries));
        entry["queries"] = queries.summary();
        out.push_back(std::move(entry));
    }
    return out.dump(2) + "\n";
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot open output file: " + path);
    out << content;
    if (!out) throw ConfigError("failed writing output file: " + path);
}

bool AuditReport::all_pass() const {
    for (const AuditEntry& e : entries)
        if (!e.pass) return false;
    return true;
}

std::string AuditReport::to_text() const {
    std::ostringstream out;
    for (const AuditEntry& e : entries) {
        out << (e.pass ? "[PASS] " : "[FAIL] ") << e.name
            << " (max violation " << format_double(e.max_violation) << ")";
        if (!e.details.empty()) out << " " << e.details;
        out << "\n";
    }
    return out.str();
}

AuditEntry audit_proper_abstention(const std::vector<RunArtifact>& artifacts) {
    AuditEntry entry;
    entry.name = "proper-abstention: decide = abstain implies eta within gamma of 1/2";
    for (const RunArtifact& a : artifacts) {
        if (!a.row.error.empty()) continue;
        const double v = improper_abstention_mass(a.classifier.actions, a.env, a.row.gamma);
        entry.max_violation = std::max(entry.max_violation, v);
    }
    entry.pass = entry.max_violation == 0.0;
    return entry;
}

AuditEntry audit_identity(const std::vector<ResultRow>& rows) {
    AuditEntry entry;
    entry.name = "randomization identity: std_excess - chow_excess = gamma * abstain_mass";
    for (const ResultRow& r : rows) {
        if (!r.error.empty()) continue;
        const double v =
            std::abs(r.std_excess_randomized - r.chow_excess - r.gamma * r.abstain_mass);
        entry.max_violation = std::max(entry.max_violation, v);
    }
    entry.pass = entry.max_violation <= 1e-12;
    return entry;
}

AuditEntry audit_mc_crosscheck(const std::vector<RunArtifact>& artifacts, long samples,
                               std::uint64_t seed) {
    AuditEntry entry;
    entry.name = "monte-carlo crosscheck of exact Chow error";
    entry.details = "samples=" + std::to_string(samples);
    double worst_z = 0.0;
    for (std::size_t i = 0; i < artifacts.size(); ++i) {
        const RunArtifact& a = artifacts[i];
        if (!a.row.error.empty() || a.classifier.actions.empty()) continue;
        Rng rng(derive_seed(seed, i));
        const double gamma = a.row.gamma;
        double total = 0.0;
        for (long s = 0; s < samples; ++s) {
            auto [x, y] = sample(a.env, rng);
            const Action action = a.classifier.decide(x);
            if (action == Action::Abstain)
                total += 0.5 - gamma;
            else
                total += (static_cast<int>(action) == y) ? 0.0 : 1.0;
        }
        const double estimate = total / static_cast<double>(samples);
        const double exact = chow_error_exact(a.classifier.actions, a.env, gamma);
        const double sigma = std::sqrt(0.25 / static_cast<double>(samples));
        worst_z = std::max(worst_z, std::abs(estimate - exact) / sigma);
    }
    entry.max_violation = worst_z;
    entry.pass = worst_z <= 5.0;  // five sigmas of binomial noise
    return entry;
}

AuditReport run_audits(const ExperimentResult& result, long mc_samples, std::uint64_t seed) {
    AuditReport report;
    report.entries.push_back(audit_proper_abstention(result.artifacts));
    report.entries.push_back(audit_identity(result.rows));
    report.entries.push_back(audit_mc_crosscheck(result.artifacts, mc_samples, seed));
    return report;
}

}  // namespace abstain
