#pragma once

#include <optional>
#include <vector>

#include "abstain/environment.hpp"
#include "abstain/oracle.hpp"
#include "abstain/types.hpp"

namespace abstain {

enum class BoundsMode { Exact, Approx };

struct AlgoConfig {
    double epsilon = 0.01;
    double gamma = 0.1;
    double delta = 0.1;
    std::optional<long> T_override;
    double c0 = 8.0;   // C_delta = c0 * complexity * log(T / delta)
    double k_T = 1.0;  // default horizon T = ceil(k_T * complexity / (epsilon * gamma))
    BoundsMode mode = BoundsMode::Exact;
    long budget = 0;  // uncertainty baseline only
    bool record_steps = true;

    void validate() const;
};

/// x -> {+1, -1, abstain}, materialized as one action per region together
/// with the interval evidence it was built from.
struct AbstainingClassifier {
    std::vector<Action> actions;
    std::vector<ConfidenceInterval> intervals;
    int epoch = 0;  // epoch m (alg1/alg3) or step t (alg2)
    int fhat_id = -1;
    std::vector<double> fhat_weights;
    double gamma = 0.0;

    Action decide(const Point& p) const { return actions.at(static_cast<std::size_t>(p.region)); }
};

struct StepRecord {
    long t = 0;
    Point x;
    bool queried = false;
    double y01 = 0.0;
    int epoch = 0;
    ConfidenceInterval interval;
    Action action = Action::Abstain;
    double excess = 0.0;  // pointwise excess of the epoch classifier at x, from true eta
};

struct EpochRecord {
    int m = 0;
    double beta = 0.0;
    long tau_start = 0;
    int fhat_id = -1;
    std::vector<double> fhat_weights;
    bool truth_in_active = true;
    std::vector<ConfidenceInterval> probe_intervals;
};

struct RunTrace {
    std::vector<StepRecord> steps;
    std::vector<EpochRecord> epochs;
    long horizon = 0;  // the T the schedule was built from
    long steps_executed = 0;
    long queries = 0;
    bool truth_always_active = true;  // truth member inside every constructed active set
    std::uint64_t clamp_events = 0;
    double wall_ms = 0.0;
};

struct Segment {
    long t_start = 0;
    AbstainingClassifier classifier;
};

struct LearnResult {
    AbstainingClassifier classifier;
    RunTrace trace;
    std::vector<Segment> ensemble;  // alg2: run-length-encoded per-step classifiers
    long ensemble_horizon = 0;
};

/// Abstains iff [lcb, ucb] fits inside [1/2 - gamma, 1/2 + gamma] (closed
/// containment); otherwise labels sgn(2 fhat(x) - 1).
Action abstain_or_label(const ConfidenceInterval& ci, double fhat_value, double gamma);
/// Queries iff 1/2 lies strictly inside (lcb, ucb) and the decision is not
/// abstain. Exact comparisons, no epsilon.
bool query_flag(const ConfidenceInterval& ci, double gamma, Action decision);

/// Epoch-doubling elimination learner: schedule tau_m = 2^m, M = ceil(log2 T),
/// beta_m = (M - m + 1) * C_delta; streams until tau_{M-1} and returns the
/// final epoch's classifier.
LearnResult run_alg1(const Instance& instance, const AlgoConfig& cfg, Rng& rng,
                     const std::vector<Point>& probes = {});

/// Per-step elimination with fixed beta = log(|F| / delta) / 2; keeps every
/// per-step classifier and returns a uniform draw from them. Pass
/// `adversarial_xs` to replay a fixed input stream instead of sampling D_X.
LearnResult run_alg2(const Instance& instance, const AlgoConfig& cfg, Rng& rng,
                     const std::vector<Point>* adversarial_xs = nullptr);

/// Misspecification-robust variant of the epoch learner: enlarged radius
/// beta_m = (M - m + 1) * (2 eps^2 tau_{M-1} + 2 C_delta); requires
/// gamma in (epsilon, 1/2) and defaults to T = complexity / (eps * gamma).
LearnResult run_alg3(const Instance& instance, const AlgoConfig& cfg, Rng& rng);

/// Queries every x whose interval strictly straddles 1/2 until the budget is
/// spent, then freezes; labels sgn(2 fhat(x) - 1) and never abstains.
LearnResult run_uncertainty_baseline(const Instance& instance, long budget, double delta, long T,
                                     Rng& rng);

/// Queries every step; labels sgn(2 fhat(x) - 1).
LearnResult run_passive(const Instance& instance, long T, Rng& rng);

/// Randomized prediction on the abstention region (+1/-1 with equal
/// probability); exact evaluation uses standard_error_after_randomization
/// instead of sampling this.
int randomize_decision(const AbstainingClassifier& h, const Point& p, Rng& rng);

double gamma_for_massart(double tau0);
double gamma_for_tsybakov(double epsilon, double c, double beta_exp);

long default_horizon(const AlgoConfig& cfg, double complexity);
int epoch_count(long T);
double c_delta(const AlgoConfig& cfg, double complexity, long T);

}  // namespace abstain
