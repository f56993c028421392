#pragma once

#include <optional>
#include <span>
#include <vector>

#include "abstain/function_class.hpp"
#include "abstain/types.hpp"

namespace abstain {

struct WeightedSample {
    double weight = 1.0;
    Point x;
    double y01 = 0.0;  // regression target in {0,1}
};

/// Append-only trace of the query stream {(x_t, Q_t, y_t)}. Targets are the
/// {0,1} regression encoding of the +/-1 labels. Carries per-member cumulative
/// loss caches for finite classes and per-region (count, target-sum) aggregates
/// so oracle calls stay small regardless of stream length.
class QueryHistory {
  public:
    struct Step {
        Point x;
        bool queried = false;
        double y01 = 0.0;  // valid iff queried
    };

    explicit QueryHistory(ClassPtr cls);

    void append_queried(const Point& x, double y01);
    void append_unqueried(const Point& x);

    const ClassPtr& function_class() const { return cls_; }
    const std::vector<Step>& steps() const { return steps_; }
    long size() const { return static_cast<long>(steps_.size()); }
    long queried_count() const { return queried_count_; }

    // Cumulative squared loss over queried steps.
    double loss(const RegressionFunction& f) const;
    double loss_of_member(int id) const { return member_loss_.at(static_cast<std::size_t>(id)); }
    double min_loss() const { return min_loss_; }
    int argmin_id() const { return argmin_; }  // lowest-id tie-break

    // Queried stream compressed to <= 2 samples per region; the squared loss
    // of any function on the compressed set equals its loss on the history
    // exactly (targets live in {0,1}).
    std::vector<WeightedSample> compressed_samples() const;

    double region_count(int region) const { return region_n_.at(static_cast<std::size_t>(region)); }
    double region_target_sum(int region) const { return region_sy_.at(static_cast<std::size_t>(region)); }

  private:
    ClassPtr cls_;
    std::vector<Step> steps_;
    std::vector<double> region_n_, region_sy_;
    std::vector<double> member_loss_;  // finite kind
    double min_loss_ = 0.0;
    int argmin_ = 0;
    long queried_count_ = 0;
};

/// Weighted square-loss regression oracle: argmin_f sum w (f(x) - y01)^2.
/// Finite classes by enumeration with lowest-id tie-break; linear classes by
/// exact norm-ball-constrained least squares (min-norm solution when the
/// normal equations are singular, trust-region bisection when the ball binds).
RegressionFunction fit(std::span<const WeightedSample> samples, const ClassPtr& cls);

double empirical_loss(const RegressionFunction& f, const QueryHistory& history);

bool in_active_set(const RegressionFunction& f, const QueryHistory& history,
                   const RegressionFunction& f_hat, double beta);

/// lcb/ucb of f(x) over the loss ball {f : L(f) <= L(fhat) + beta} by full
/// enumeration. Finite-tabular classes only; this is the ground truth the
/// approximate route is tested against.
ConfidenceInterval exact_bounds(const Point& x, const QueryHistory& history, double beta);

enum class BoundSide { Lower, Upper };

/// One-sided approximate bound computed through fit() calls only.
/// Lower: returns v with lcb - alpha <= v <= lcb. Upper: ucb <= v <= ucb + alpha.
double approx_bound(const Point& x, const QueryHistory& history, double beta, double alpha,
                    BoundSide side);

/// Epoch-monotone approximate interval: one-sided slack gamma/(4M) plus
/// padding (M - m) * gamma / (4M), so intervals on a fixed x nest across
/// epochs whenever the active sets nest.
ConfidenceInterval monotone_interval(const Point& x, int epoch, int num_epochs, double gamma,
                                     const QueryHistory& history, double beta);

// Exposed for tests: number of oracle (fit) calls since process start.
std::uint64_t oracle_call_count();

}  // namespace abstain
