#pragma once

#include <string>
#include <vector>

#include "abstain/function_class.hpp"
#include "abstain/types.hpp"

namespace abstain {

/// Exhaustive-search budget; these calculators are oracles, not estimators,
/// so inputs beyond the cap are rejected instead of silently approximated.
struct SearchBudget {
    long max_pairs = 200'000;       // |F| * |domain| precheck
    long max_nodes = 20'000'000;    // DFS node cap
};

/// Longest sequence x^1..x^m such that each x^i admits a witness f with
/// |f(x^i) - f*(x^i)| > gamma whose squared deviations over the prefix stay
/// within gamma^2. Depth-first search over the finite domain.
int eluder_sequence_length(const FunctionClass& cls, int fstar_id, double gamma,
                           const Domain& domain, const SearchBudget& budget = {});

/// Same with the stronger all-other-indices constraint; never exceeds the
/// eluder length on the same inputs.
int star_sequence_length(const FunctionClass& cls, int fstar_id, double gamma,
                         const Domain& domain, const SearchBudget& budget = {});

/// sup over grid gammas >= gamma0 (the continuum sup is not computable).
int eluder_dimension(const FunctionClass& cls, int fstar_id, double gamma0, const Domain& domain,
                     const std::vector<double>& gamma_grid, const SearchBudget& budget = {});
int star_number(const FunctionClass& cls, int fstar_id, double gamma0, const Domain& domain,
                const std::vector<double>& gamma_grid, const SearchBudget& budget = {});

/// Finite-support measure over the domain's regions.
using Measure = std::vector<double>;

/// max over measures and grid points gamma > gamma0, eps > eps0 of
/// (gamma^2/eps^2) P(exists f: |f(x)-f*(x)| > gamma, ||f-f*||_D <= eps),
/// floored at 1.
double disagreement_coefficient(const FunctionClass& cls, int fstar_id, double gamma0, double eps0,
                                const std::vector<Measure>& distributions,
                                const std::vector<double>& gamma_grid,
                                const std::vector<double>& eps_grid);

struct ReferenceBounds {
    double theta_bound = 0.0;
    double eluder_bound = 0.0;
};

/// k_e is a calibration constant frozen against the brute-force fixtures;
/// the stated forms hide the universal constant.
ReferenceBounds reference_bounds_linear(int d, double gamma, double k_e = 2.0);
ReferenceBounds reference_bounds_glm(int d, double gamma, double c_l, double c_u, double k_e = 2.0);

struct ComplexityReport {
    std::vector<double> gamma_grid;
    std::vector<double> eps_grid;
    std::vector<int> eluder;  // per gamma grid point (sup over grid >= that point)
    std::vector<int> star;
    std::vector<std::vector<double>> theta;  // [gamma0 index][eps0 index]
    double theta_max = 1.0;
};

ComplexityReport complexity_report(const FunctionClass& cls, int fstar_id, const Domain& domain,
                                   const std::vector<double>& gamma_grid,
                                   const std::vector<double>& eps_grid,
                                   const std::vector<Measure>& distributions,
                                   const SearchBudget& budget = {});

std::string report_to_text(const ComplexityReport& report);

/// Input format for the `complexity` CLI: flat `key = value` lines with
/// repeats. `point = x mass` describes the finite domain, `row = v1 v2 ...`
/// one class member, `fstar = id` the reference member, `gamma` / `epsilon`
/// the grids.
struct ComplexityInput {
    ClassPtr cls;
    Domain domain;
    int fstar = 0;
    std::vector<double> gamma_grid;
    std::vector<double> eps_grid;
    /// domain masses plus one point mass per support point
    std::vector<Measure> default_distributions() const;
};

ComplexityInput parse_complexity_input(const std::string& text);

}  // namespace abstain
