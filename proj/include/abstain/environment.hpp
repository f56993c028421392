#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "abstain/function_class.hpp"
#include "abstain/types.hpp"

namespace abstain {

enum class NoiseKind {
    None,
    Massart,
    Tsybakov,
    NoiseSeekingMassart,
    NoiseSeekingTsybakov,
    Trap,
    Misspecified
};

struct NoiseMeta {
    NoiseKind kind = NoiseKind::None;
    double tau0 = 0.0;
    double beta_exp = 0.0;
    double c = 0.0;
    double zeta0 = 0.0;
    double boundary_mass = 0.0;
    double kappa = 0.0;
};

/// A data-generating process (D_X, eta): piecewise-constant conditional
/// probability over finitely many regions, so every error metric below is an
/// exact finite sum, never a Monte Carlo estimate.
struct Environment {
    Domain domain;
    std::vector<double> eta;  // per region
    NoiseMeta meta;
    std::optional<int> truth_member;  // id of the class member realizing eta (if any)

    int regions() const { return domain.size(); }
    double eta_at(int r) const { return eta.at(static_cast<std::size_t>(r)); }
    void validate() const;
    /// Re-checks the declared noise condition as measurable-set mass checks;
    /// throws if the environment fails its own certificate.
    void audit() const;
};

/// Environment plus the regression class the learner is given (and, for
/// linear classes, the weight vector realizing eta when one exists).
struct Instance {
    Environment env;
    ClassPtr cls;
    std::vector<double> truth_weights;  // linear ground truth, empty otherwise

    bool has_truth() const { return env.truth_member.has_value() || !truth_weights.empty(); }
    double truth_loss(const class QueryHistory& history) const;
};

std::pair<Point, int> sample(const Environment& env, Rng& rng);  // y in {+1,-1}

double bayes_error(const Environment& env);
double chow_error_exact(const std::vector<Action>& actions, const Environment& env, double gamma);
double standard_error_after_randomization(const std::vector<Action>& actions, const Environment& env);
double abstain_mass(const std::vector<Action>& actions, const Environment& env);
/// Mass of regions where the classifier abstains although |eta - 1/2| > gamma.
double improper_abstention_mass(const std::vector<Action>& actions, const Environment& env,
                                double gamma);
/// Best per-point value of the abstention-cost objective: min(min(eta,1-eta), 1/2-gamma).
double pointwise_optimal_chow(double eta, double gamma);
/// excess of taking `action` at a point with conditional probability eta
double pointwise_excess(Action action, double eta, double gamma);

Environment make_massart(double tau0, int region_count, std::uint64_t seed);
Environment make_tsybakov(double beta_exp, double c, int region_count, std::uint64_t seed);
Environment make_noise_seeking_massart(double zeta0, double tau0, double boundary_mass,
                                       int region_count, std::uint64_t seed);
Environment make_noise_seeking_tsybakov(double zeta0, double beta_exp, double c,
                                        double boundary_mass, int region_count,
                                        std::uint64_t seed);

struct TrapInstance {
    double easy_mass = 0.0;   // p = 1/(2B)
    double sign_draw = 0.0;   // +1/2 or -1/2
    Instance instance;
};
/// Two-region stream trap: eta = 1/2 on the hard region, eta in {0,1} on an
/// easy region of mass 1/(2B), realizable in a 2-d linear class through the
/// indicator feature of the easy region.
TrapInstance make_trap(long budget, std::uint64_t seed);

/// Perturbs the base instance's eta region-wise by +/- kappa (sup gap exactly
/// kappa); the base truth member becomes the best-in-class approximation.
Instance make_misspecified(const Instance& base, double kappa);

/// Realizable finite-class instances: eta has margins strictly above tau0 and
/// the class holds sign-flipped / boundary-shifted decoys plus eta itself as
/// the last member.
Instance make_finite_massart_instance(double tau0, int margin_regions, int class_size,
                                      std::uint64_t seed);
/// Same with an extra boundary region of the given mass at eta = 1/2 (+/- zeta0).
Instance make_finite_noise_seeking_instance(double zeta0, double tau0, double boundary_mass,
                                            int margin_regions, int class_size,
                                            std::uint64_t seed);

std::string environment_to_text(const Environment& env);
Environment environment_from_text(const std::string& text);

}  // namespace abstain
