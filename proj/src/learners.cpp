#include "abstain/learners.hpp"

#include <chrono>
#include <cmath>
#include <tuple>

namespace abstain {

namespace {

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point start) {
    return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

constexpr double kExactLinearSlack = 1e-8;

RegressionFunction fit_on_history(const QueryHistory& history) {
    const ClassPtr& cls = history.function_class();
    if (cls->kind() == ClassKind::Finite) return cls->member(history.argmin_id());
    const auto samples = history.compressed_samples();
    return fit(samples, cls);
}

ConfidenceInterval interval_at(const Point& x, const QueryHistory& history, double beta,
                               BoundsMode mode, double gamma, int m, int M) {
    const ClassPtr& cls = history.function_class();
    if (mode == BoundsMode::Approx) return monotone_interval(x, m, M, gamma, history, beta);
    if (cls->kind() == ClassKind::Finite) return exact_bounds(x, history, beta);
    // linear classes have no enumeration route; the convex weight path is
    // exact up to a machine-scale slack
    const double lo = approx_bound(x, history, beta, kExactLinearSlack, BoundSide::Lower);
    const double hi = approx_bound(x, history, beta, kExactLinearSlack, BoundSide::Upper);
    return ConfidenceInterval{lo, hi, BoundMode::Exact, 0.0};
}

struct EpochClassifier {
    AbstainingClassifier h;
    std::vector<bool> query;  // per region
};

EpochClassifier build_classifier(const Instance& instance, const QueryHistory& history,
                                 double beta, const AlgoConfig& cfg, int m, int M,
                                 const RegressionFunction& fhat) {
    const Environment& env = instance.env;
    EpochClassifier out;
    out.h.epoch = m;
    out.h.gamma = cfg.gamma;
    out.h.fhat_id = fhat.id;
    out.h.fhat_weights = fhat.weights;
    out.h.actions.resize(static_cast<std::size_t>(env.regions()));
    out.h.intervals.resize(static_cast<std::size_t>(env.regions()));
    out.query.resize(static_cast<std::size_t>(env.regions()));
    for (int r = 0; r < env.regions(); ++r) {
        const Point rep = env.domain.representative(r);
        const ConfidenceInterval ci = interval_at(rep, history, beta, cfg.mode, cfg.gamma, m, M);
        const Action action = abstain_or_label(ci, fhat(rep), cfg.gamma);
        out.h.intervals[static_cast<std::size_t>(r)] = ci;
        out.h.actions[static_cast<std::size_t>(r)] = action;
        out.query[static_cast<std::size_t>(r)] = query_flag(ci, cfg.gamma, action);
    }
    return out;
}

bool truth_active(const Instance& instance, const QueryHistory& history,
                  const RegressionFunction& fhat, double beta) {
    if (!instance.has_truth()) return true;
    return instance.truth_loss(history) <= history.loss(fhat) + beta;
}

LearnResult run_epoch_family(const Instance& instance, const AlgoConfig& cfg, Rng& rng,
                             const std::vector<Point>& probes, bool misspecification_robust) {
    cfg.validate();
    if (misspecification_robust && !(cfg.gamma > cfg.epsilon))
        throw ConfigError("robust epochs need gamma > epsilon");
    const auto start = Clock::now();
    const Environment& env = instance.env;
    const ClassPtr& cls = instance.cls;
    const std::uint64_t clamp0 = cls->clamp_events();

    const double complexity = cls->complexity();
    long T = cfg.T_override.value_or(
        misspecification_robust
            ? static_cast<long>(std::ceil(complexity / (cfg.epsilon * cfg.gamma)))
            : default_horizon(cfg, complexity));
    if (T < 2) T = 2;
    const int M = epoch_count(T);
    const double C_delta = c_delta(cfg, complexity, T);
    const double tau_last = std::pow(2.0, M - 1);

    QueryHistory history(cls);
    LearnResult result;
    RunTrace& trace = result.trace;
    trace.horizon = T;

    long t = 0;
    for (int m = 1; m <= M; ++m) {
        const double beta =
            misspecification_robust
                ? (M - m + 1) * (2.0 * cfg.epsilon * cfg.epsilon * tau_last + 2.0 * C_delta)
                : (M - m + 1) * C_delta;
        const RegressionFunction fhat = fit_on_history(history);
        const EpochClassifier ec = build_classifier(instance, history, beta, cfg, m, M, fhat);

        EpochRecord er;
        er.m = m;
        er.beta = beta;
        er.tau_start = t + 1;
        er.fhat_id = fhat.id;
        er.fhat_weights = fhat.weights;
        er.truth_in_active = truth_active(instance, history, fhat, beta);
        trace.truth_always_active = trace.truth_always_active && er.truth_in_active;
        for (const Point& p : probes)
            er.probe_intervals.push_back(interval_at(p, history, beta, cfg.mode, cfg.gamma, m, M));
        trace.epochs.push_back(std::move(er));

        if (m == M) {
            result.classifier = ec.h;
            break;
        }
        const long tau_m = 1L << m;
        for (; t < tau_m; ) {
            ++t;
            auto [x, y] = sample(env, rng);
            const auto r = static_cast<std::size_t>(x.region);
            const bool q = ec.query[r];
            const double y01 = (y + 1) / 2;
            if (q) {
                history.append_queried(x, y01);
                ++trace.queries;
            } else {
                history.append_unqueried(x);
            }
            ++trace.steps_executed;
            if (cfg.record_steps) {
                StepRecord sr;
                sr.t = t;
                sr.x = x;
                sr.queried = q;
                sr.y01 = q ? y01 : 0.0;
                sr.epoch = m;
                sr.interval = ec.h.intervals[r];
                sr.action = ec.h.actions[r];
                sr.excess = pointwise_excess(sr.action, env.eta_at(x.region), cfg.gamma);
                trace.steps.push_back(std::move(sr));
            }
        }
    }
    trace.clamp_events = cls->clamp_events() - clamp0;
    trace.wall_ms = elapsed_ms(start);
    return result;
}

// shared machinery for the per-step learners (alg2 / uncertainty / passive)
enum class StepRule { Eliminate, Uncertainty, Passive };

LearnResult run_step_family(const Instance& instance, const AlgoConfig& cfg, long T, double beta,
                            Rng& rng, StepRule rule, long budget,
                            const std::vector<Point>* adversarial_xs) {
    const auto start = Clock::now();
    const Environment& env = instance.env;
    const ClassPtr& cls = instance.cls;
    const std::uint64_t clamp0 = cls->clamp_events();
    if (rule == StepRule::Eliminate && cls->kind() != ClassKind::Finite)
        throw ConfigError("per-step elimination requires a finite class");
    if (T < 1) throw ConfigError("horizon must be >= 1");

    QueryHistory history(cls);
    LearnResult result;
    RunTrace& trace = result.trace;
    trace.horizon = T;
    bool rebuild = true;
    bool frozen = false;

    AbstainingClassifier current;
    std::vector<bool> query_region;
    for (long t = 1; t <= T; ++t) {
        if (rebuild) {
            const RegressionFunction fhat = fit_on_history(history);
            current = AbstainingClassifier{};
            current.epoch = static_cast<int>(t);
            current.gamma = cfg.gamma;
            current.fhat_id = fhat.id;
            current.fhat_weights = fhat.weights;
            current.actions.resize(static_cast<std::size_t>(env.regions()));
            current.intervals.resize(static_cast<std::size_t>(env.regions()));
            query_region.assign(static_cast<std::size_t>(env.regions()), false);
            for (int r = 0; r < env.regions(); ++r) {
                const Point rep = env.domain.representative(r);
                ConfidenceInterval ci;
                if (cls->kind() == ClassKind::Finite) {
                    ci = exact_bounds(rep, history, beta);
                } else {
                    const double lo = approx_bound(rep, history, beta, 1e-6, BoundSide::Lower);
                    const double hi = approx_bound(rep, history, beta, 1e-6, BoundSide::Upper);
                    ci = ConfidenceInterval{lo, hi, BoundMode::Approximate, 1e-6};
                }
                current.intervals[static_cast<std::size_t>(r)] = ci;
                const double v = fhat(rep);
                switch (rule) {
                    case StepRule::Eliminate:
                        current.actions[static_cast<std::size_t>(r)] =
                            abstain_or_label(ci, v, cfg.gamma);
                        query_region[static_cast<std::size_t>(r)] = query_flag(
                            ci, cfg.gamma, current.actions[static_cast<std::size_t>(r)]);
                        break;
                    case StepRule::Uncertainty:
                        current.actions[static_cast<std::size_t>(r)] =
                            v >= 0.5 ? Action::Pos : Action::Neg;
                        query_region[static_cast<std::size_t>(r)] = ci.lcb < 0.5 && 0.5 < ci.ucb;
                        break;
                    case StepRule::Passive:
                        current.actions[static_cast<std::size_t>(r)] =
                            v >= 0.5 ? Action::Pos : Action::Neg;
                        query_region[static_cast<std::size_t>(r)] = true;
                        break;
                }
            }
            trace.truth_always_active =
                trace.truth_always_active && truth_active(instance, history, fhat, beta);
            result.ensemble.push_back(Segment{t, current});
            rebuild = false;
        }
        Point x;
        int y;
        if (adversarial_xs && !adversarial_xs->empty()) {
            x = (*adversarial_xs)[static_cast<std::size_t>((t - 1) % static_cast<long>(adversarial_xs->size()))];
            y = rng.next_double() < env.eta_at(x.region) ? +1 : -1;
        } else {
            std::tie(x, y) = sample(env, rng);
        }
        const auto r = static_cast<std::size_t>(x.region);
        bool q = query_region[r] && !frozen;
        if (rule == StepRule::Uncertainty && trace.queries >= budget) {
            frozen = true;
            q = false;
        }
        const double y01 = (y + 1) / 2;
        if (q) {
            history.append_queried(x, y01);
            ++trace.queries;
            rebuild = !frozen;
            if (rule == StepRule::Uncertainty && trace.queries >= budget) frozen = true;
        } else {
            history.append_unqueried(x);
        }
        ++trace.steps_executed;
        if (cfg.record_steps) {
            StepRecord sr;
            sr.t = t;
            sr.x = x;
            sr.queried = q;
            sr.y01 = q ? y01 : 0.0;
            sr.epoch = current.epoch;
            sr.interval = current.intervals[r];
            sr.action = current.actions[r];
            sr.excess = pointwise_excess(sr.action, env.eta_at(x.region), cfg.gamma);
            trace.steps.push_back(std::move(sr));
        }
    }
    result.ensemble_horizon = T;
    if (rule == StepRule::Eliminate) {
        // uniform draw over the per-step classifiers
        const long pick = 1 + static_cast<long>(rng.next_below(static_cast<std::uint64_t>(T)));
        const Segment* chosen = &result.ensemble.front();
        for (const Segment& seg : result.ensemble)
            if (seg.t_start <= pick) chosen = &seg;
        result.classifier = chosen->classifier;
    } else {
        // frozen (or final) classifier
        result.classifier = result.ensemble.back().classifier;
        if (rebuild) {  // final query happened on the very last step
            const RegressionFunction fhat = fit_on_history(history);
            AbstainingClassifier h;
            h.epoch = static_cast<int>(T);
            h.gamma = cfg.gamma;
            h.fhat_id = fhat.id;
            h.fhat_weights = fhat.weights;
            h.actions.resize(static_cast<std::size_t>(env.regions()));
            h.intervals.resize(static_cast<std::size_t>(env.regions()));
            for (int r = 0; r < env.regions(); ++r) {
                const Point rep = env.domain.representative(r);
                h.intervals[static_cast<std::size_t>(r)] =
                    cls->kind() == ClassKind::Finite
                        ? exact_bounds(rep, history, beta)
                        : ConfidenceInterval{0.0, 1.0, BoundMode::Approximate, 1.0};
                h.actions[static_cast<std::size_t>(r)] =
                    fhat(rep) >= 0.5 ? Action::Pos : Action::Neg;
            }
            result.classifier = h;
        }
    }
    trace.clamp_events = cls->clamp_events() - clamp0;
    trace.wall_ms = elapsed_ms(start);
    return result;
}

}  // namespace

void AlgoConfig::validate() const {
    if (!(epsilon > 0.0)) throw ConfigError("epsilon must be positive");
    if (!(gamma > 0.0 && gamma < 0.5)) throw ConfigError("gamma must lie in (0, 1/2)");
    if (!(delta > 0.0 && delta < 1.0)) throw ConfigError("delta must lie in (0, 1)");
    if (!(c0 > 0.0)) throw ConfigError("c0 must be positive");
    if (!(k_T > 0.0)) throw ConfigError("k_T must be positive");
    if (budget < 0) throw ConfigError("budget must be nonnegative");
}

Action abstain_or_label(const ConfidenceInterval& ci, double fhat_value, double gamma) {
    if (!(ci.lcb <= ci.ucb)) throw ConfigError("invalid confidence interval");
    if (0.5 - gamma <= ci.lcb && ci.ucb <= 0.5 + gamma) return Action::Abstain;
    return fhat_value >= 0.5 ? Action::Pos : Action::Neg;
}

bool query_flag(const ConfidenceInterval& ci, double /*gamma*/, Action decision) {
    return decision != Action::Abstain && ci.lcb < 0.5 && 0.5 < ci.ucb;
}

LearnResult run_alg1(const Instance& instance, const AlgoConfig& cfg, Rng& rng,
                     const std::vector<Point>& probes) {
    return run_epoch_family(instance, cfg, rng, probes, false);
}

LearnResult run_alg3(const Instance& instance, const AlgoConfig& cfg, Rng& rng) {
    return run_epoch_family(instance, cfg, rng, {}, true);
}

LearnResult run_alg2(const Instance& instance, const AlgoConfig& cfg, Rng& rng,
                     const std::vector<Point>* adversarial_xs) {
    cfg.validate();
    if (instance.cls->kind() != ClassKind::Finite)
        throw ConfigError("this learner requires a finite class");
    const long T = cfg.T_override.value_or(default_horizon(cfg, instance.cls->complexity()));
    const double beta = 0.5 * std::log(static_cast<double>(instance.cls->size()) / cfg.delta);
    return run_step_family(instance, cfg, T, beta, rng, StepRule::Eliminate, 0, adversarial_xs);
}

LearnResult run_uncertainty_baseline(const Instance& instance, long budget, double delta, long T,
                                     Rng& rng) {
    if (budget < 0) throw ConfigError("budget must be nonnegative");
    if (T <= 0) T = 2 * std::max(budget, 1L);
    AlgoConfig cfg;
    cfg.delta = delta;
    cfg.budget = budget;
    double beta;
    if (instance.cls->kind() == ClassKind::Finite)
        beta = 0.5 * std::log(static_cast<double>(instance.cls->size()) / delta);
    else
        beta = 0.5 * std::log(1.0 / delta) + 0.5 * instance.cls->complexity();
    return run_step_family(instance, cfg, T, beta, rng, StepRule::Uncertainty, budget, nullptr);
}

LearnResult run_passive(const Instance& instance, long T, Rng& rng) {
    AlgoConfig cfg;
    const double beta =
        instance.cls->kind() == ClassKind::Finite
            ? 0.5 * std::log(static_cast<double>(instance.cls->size()) / cfg.delta)
            : 1.0;
    return run_step_family(instance, cfg, T, beta, rng, StepRule::Passive, 0, nullptr);
}

int randomize_decision(const AbstainingClassifier& h, const Point& p, Rng& rng) {
    const Action a = h.decide(p);
    if (a == Action::Abstain) return rng.next_double() < 0.5 ? +1 : -1;
    return static_cast<int>(a);
}

double gamma_for_massart(double tau0) { return tau0; }

double gamma_for_tsybakov(double epsilon, double c, double beta_exp) {
    return std::pow(epsilon / (2.0 * c), 1.0 / (1.0 + beta_exp));
}

long default_horizon(const AlgoConfig& cfg, double complexity) {
    return static_cast<long>(std::ceil(cfg.k_T * complexity / (cfg.epsilon * cfg.gamma)));
}

int epoch_count(long T) {
    int m = 0;
    while ((1L << m) < T) ++m;
    return std::max(1, m);
}

double c_delta(const AlgoConfig& cfg, double complexity, long T) {
    return cfg.c0 * complexity * std::log(static_cast<double>(T) / cfg.delta);
}

}  // namespace abstain
