#include "abstain/complexity.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace abstain {

namespace {

struct DevTable {
    int n_funcs = 0;
    int n_points = 0;
    std::vector<double> dev;     // |f(x) - f*(x)| per (f, x)
    std::vector<double> dev_sq;  // squared

    double d(int f, int x) const { return dev[static_cast<std::size_t>(f * n_points + x)]; }
    double d2(int f, int x) const { return dev_sq[static_cast<std::size_t>(f * n_points + x)]; }
};

DevTable build_dev_table(const FunctionClass& cls, int fstar_id, const Domain& domain,
                         const SearchBudget& budget) {
    if (cls.kind() != ClassKind::Finite)
        throw ConfigError("complexity calculators require a finite class");
    if (fstar_id < 0 || fstar_id >= cls.size()) throw ConfigError("fstar id out of range");
    if (static_cast<long>(cls.size()) * domain.size() > budget.max_pairs)
        throw ConfigError("input exceeds the exhaustive-search budget");
    DevTable t;
    t.n_funcs = cls.size();
    t.n_points = domain.size();
    t.dev.resize(static_cast<std::size_t>(t.n_funcs * t.n_points));
    t.dev_sq.resize(t.dev.size());
    for (int f = 0; f < t.n_funcs; ++f) {
        for (int x = 0; x < t.n_points; ++x) {
            const double d = std::abs(cls.value(f, x) - cls.value(fstar_id, x));
            t.dev[static_cast<std::size_t>(f * t.n_points + x)] = d;
            t.dev_sq[static_cast<std::size_t>(f * t.n_points + x)] = d * d;
        }
    }
    return t;
}

struct EluderSearch {
    const DevTable& t;
    double gamma, gamma_sq;
    long nodes = 0;
    long node_cap;
    int best = 0;

    // sums[f] = squared deviation of f accumulated over the current sequence
    void dfs(std::vector<double>& sums, int depth) {
        if (++nodes > node_cap) throw ConfigError("eluder search budget exceeded");
        best = std::max(best, depth);
        for (int x = 0; x < t.n_points; ++x) {
            bool witness = false;
            for (int f = 0; f < t.n_funcs; ++f) {
                if (t.d(f, x) > gamma && sums[static_cast<std::size_t>(f)] <= gamma_sq) {
                    witness = true;
                    break;
                }
            }
            if (!witness) continue;
            for (int f = 0; f < t.n_funcs; ++f) sums[static_cast<std::size_t>(f)] += t.d2(f, x);
            dfs(sums, depth + 1);
            for (int f = 0; f < t.n_funcs; ++f) sums[static_cast<std::size_t>(f)] -= t.d2(f, x);
        }
    }
};

struct StarSearch {
    const DevTable& t;
    double gamma, gamma_sq;
    long nodes = 0;
    long node_cap;
    int best = 0;

    // the constraint is symmetric in the sequence, so multisets suffice;
    // seq holds region indices in nondecreasing order
    bool valid(const std::vector<int>& seq, const std::vector<double>& totals) const {
        for (int i : seq) {
            bool witness = false;
            for (int f = 0; f < t.n_funcs; ++f) {
                if (t.d(f, i) > gamma &&
                    totals[static_cast<std::size_t>(f)] - t.d2(f, i) <= gamma_sq) {
                    witness = true;
                    break;
                }
            }
            if (!witness) return false;
        }
        return true;
    }

    void dfs(std::vector<int>& seq, std::vector<double>& totals, int min_x) {
        if (++nodes > node_cap) throw ConfigError("star search budget exceeded");
        best = std::max(best, static_cast<int>(seq.size()));
        for (int x = min_x; x < t.n_points; ++x) {
            seq.push_back(x);
            for (int f = 0; f < t.n_funcs; ++f) totals[static_cast<std::size_t>(f)] += t.d2(f, x);
            if (valid(seq, totals)) dfs(seq, totals, x);
            for (int f = 0; f < t.n_funcs; ++f) totals[static_cast<std::size_t>(f)] -= t.d2(f, x);
            seq.pop_back();
        }
    }
};

}  // namespace

int eluder_sequence_length(const FunctionClass& cls, int fstar_id, double gamma,
                           const Domain& domain, const SearchBudget& budget) {
    if (!(gamma > 0.0)) throw ConfigError("gamma must be positive");
    const DevTable t = build_dev_table(cls, fstar_id, domain, budget);
    EluderSearch search{t, gamma, gamma * gamma, 0, budget.max_nodes, 0};
    std::vector<double> sums(static_cast<std::size_t>(t.n_funcs), 0.0);
    search.dfs(sums, 0);
    return search.best;
}

int star_sequence_length(const FunctionClass& cls, int fstar_id, double gamma,
                         const Domain& domain, const SearchBudget& budget) {
    if (!(gamma > 0.0)) throw ConfigError("gamma must be positive");
    const DevTable t = build_dev_table(cls, fstar_id, domain, budget);
    StarSearch search{t, gamma, gamma * gamma, 0, budget.max_nodes, 0};
    std::vector<int> seq;
    std::vector<double> totals(static_cast<std::size_t>(t.n_funcs), 0.0);
    search.dfs(seq, totals, 0);
    return search.best;
}

namespace {

int sup_over_grid(int (*raw)(const FunctionClass&, int, double, const Domain&, const SearchBudget&),
                  const FunctionClass& cls, int fstar_id, double gamma0, const Domain& domain,
                  const std::vector<double>& gamma_grid, const SearchBudget& budget) {
    int best = raw(cls, fstar_id, gamma0, domain, budget);
    for (double g : gamma_grid)
        if (g >= gamma0) best = std::max(best, raw(cls, fstar_id, g, domain, budget));
    return best;
}

}  // namespace

int eluder_dimension(const FunctionClass& cls, int fstar_id, double gamma0, const Domain& domain,
                     const std::vector<double>& gamma_grid, const SearchBudget& budget) {
    return sup_over_grid(&eluder_sequence_length, cls, fstar_id, gamma0, domain, gamma_grid, budget);
}

int star_number(const FunctionClass& cls, int fstar_id, double gamma0, const Domain& domain,
                const std::vector<double>& gamma_grid, const SearchBudget& budget) {
    return sup_over_grid(&star_sequence_length, cls, fstar_id, gamma0, domain, gamma_grid, budget);
}

double disagreement_coefficient(const FunctionClass& cls, int fstar_id, double gamma0, double eps0,
                                const std::vector<Measure>& distributions,
                                const std::vector<double>& gamma_grid,
                                const std::vector<double>& eps_grid) {
    if (cls.kind() != ClassKind::Finite)
        throw ConfigError("disagreement coefficient needs a finite class");
    if (distributions.empty()) throw ConfigError("at least one distribution required");
    const int n_points = cls.num_points();
    double best = 1.0;  // the "or 1" floor
    for (const Measure& mu : distributions) {
        if (static_cast<int>(mu.size()) != n_points)
            throw ConfigError("distribution support size mismatch");
        // ||f - f*||_D per member, exact over the support
        std::vector<double> norms(static_cast<std::size_t>(cls.size()), 0.0);
        for (int f = 0; f < cls.size(); ++f) {
            double sq = 0.0;
            for (int x = 0; x < n_points; ++x) {
                const double d = cls.value(f, x) - cls.value(fstar_id, x);
                sq += mu[static_cast<std::size_t>(x)] * d * d;
            }
            norms[static_cast<std::size_t>(f)] = std::sqrt(sq);
        }
        for (double gamma : gamma_grid) {
            if (!(gamma > gamma0)) continue;
            for (double eps : eps_grid) {
                if (!(eps > eps0)) continue;
                double prob = 0.0;
                for (int x = 0; x < n_points; ++x) {
                    bool event = false;
                    for (int f = 0; f < cls.size(); ++f) {
                        if (std::abs(cls.value(f, x) - cls.value(fstar_id, x)) > gamma &&
                            norms[static_cast<std::size_t>(f)] <= eps) {
                            event = true;
                            break;
                        }
                    }
                    if (event) prob += mu[static_cast<std::size_t>(x)];
                }
                best = std::max(best, (gamma * gamma) / (eps * eps) * prob);
            }
        }
    }
    return best;
}

ReferenceBounds reference_bounds_linear(int d, double gamma, double k_e) {
    if (d < 1) throw ConfigError("d must be >= 1");
    if (!(gamma > 0.0)) throw ConfigError("gamma must be positive");
    return ReferenceBounds{static_cast<double>(d), k_e * d * std::log(1.0 / gamma)};
}

ReferenceBounds reference_bounds_glm(int d, double gamma, double c_l, double c_u, double k_e) {
    if (d < 1) throw ConfigError("d must be >= 1");
    if (!(gamma > 0.0)) throw ConfigError("gamma must be positive");
    if (!(0.0 < c_l && c_l < c_u)) throw ConfigError("glm needs 0 < c_l < c_u");
    const double ratio_sq = (c_u / c_l) * (c_u / c_l);
    return ReferenceBounds{ratio_sq * d, k_e * ratio_sq * d * std::log(c_u / gamma)};
}

ComplexityReport complexity_report(const FunctionClass& cls, int fstar_id, const Domain& domain,
                                   const std::vector<double>& gamma_grid,
                                   const std::vector<double>& eps_grid,
                                   const std::vector<Measure>& distributions,
                                   const SearchBudget& budget) {
    ComplexityReport report;
    report.gamma_grid = gamma_grid;
    report.eps_grid = eps_grid;
    std::vector<int> raw_e, raw_s;
    for (double g : gamma_grid) {
        raw_e.push_back(eluder_sequence_length(cls, fstar_id, g, domain, budget));
        raw_s.push_back(star_sequence_length(cls, fstar_id, g, domain, budget));
    }
    // sup over grid points >= each grid gamma
    for (std::size_t i = 0; i < gamma_grid.size(); ++i) {
        int e = 0, s = 0;
        for (std::size_t j = 0; j < gamma_grid.size(); ++j) {
            if (gamma_grid[j] >= gamma_grid[i]) {
                e = std::max(e, raw_e[j]);
                s = std::max(s, raw_s[j]);
            }
        }
        report.eluder.push_back(e);
        report.star.push_back(s);
    }
    for (double g0 : gamma_grid) {
        std::vector<double> row;
        for (double e0 : eps_grid) {
            const double theta = distributions.empty()
                                     ? 1.0
                                     : disagreement_coefficient(cls, fstar_id, g0 * (1.0 - 1e-12),
                                                                e0 * (1.0 - 1e-12), distributions,
                                                                gamma_grid, eps_grid);
            row.push_back(theta);
            report.theta_max = std::max(report.theta_max, theta);
        }
        report.theta.push_back(std::move(row));
    }
    return report;
}

std::vector<Measure> ComplexityInput::default_distributions() const {
    std::vector<Measure> out;
    Measure base;
    for (const Cell& c : domain.cells) base.push_back(c.mass);
    out.push_back(base);
    for (int x = 0; x < domain.size(); ++x) {
        Measure m(static_cast<std::size_t>(domain.size()), 0.0);
        m[static_cast<std::size_t>(x)] = 1.0;
        out.push_back(m);
    }
    return out;
}

ComplexityInput parse_complexity_input(const std::string& text) {
    ComplexityInput input;
    std::vector<std::vector<double>> rows;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos || line[first] == '#') continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("complexity input line " + std::to_string(lineno) +
                              ": expected key = value");
        std::string key = line.substr(0, eq);
        key.erase(key.find_last_not_of(" \t") + 1);
        key.erase(0, key.find_first_not_of(" \t"));
        std::istringstream value(line.substr(eq + 1));
        if (key == "point") {
            Cell c;
            if (!(value >> c.lo >> c.mass))
                throw ConfigError("complexity input line " + std::to_string(lineno) +
                                  ": point needs `x mass`");
            c.hi = c.lo;
            input.domain.cells.push_back(c);
        } else if (key == "row") {
            std::vector<double> row;
            double v;
            while (value >> v) row.push_back(v);
            rows.push_back(std::move(row));
        } else if (key == "fstar") {
            value >> input.fstar;
        } else if (key == "gamma") {
            double v;
            while (value >> v) input.gamma_grid.push_back(v);
        } else if (key == "epsilon") {
            double v;
            while (value >> v) input.eps_grid.push_back(v);
        } else {
            throw ConfigError("complexity input line " + std::to_string(lineno) +
                              ": unknown key " + key);
        }
    }
    input.domain.kind = DomainKind::FiniteSupport;
    input.domain.validate();
    input.cls = FunctionClass::make_finite(std::move(rows));
    if (input.cls->num_points() != input.domain.size())
        throw ConfigError("complexity input: row length must match the number of points");
    if (input.fstar < 0 || input.fstar >= input.cls->size())
        throw ConfigError("complexity input: fstar out of range");
    if (input.gamma_grid.empty()) input.gamma_grid = {0.05, 0.1, 0.2, 0.3};
    if (input.eps_grid.empty()) input.eps_grid = {0.05, 0.1, 0.2, 0.3};
    return input;
}

std::string report_to_text(const ComplexityReport& report) {
    std::ostringstream out;
    out.precision(12);
    out << "# complexity report\n";
    out << "gamma";
    for (double g : report.gamma_grid) out << " " << g;
    out << "\neluder";
    for (int e : report.eluder) out << " " << e;
    out << "\nstar";
    for (int s : report.star) out << " " << s;
    out << "\ntheta_max " << report.theta_max << "\n";
    for (std::size_t i = 0; i < report.theta.size(); ++i) {
        out << "theta[gamma0=" << report.gamma_grid[i] << "]";
        for (double v : report.theta[i]) out << " " << v;
        out << "\n";
    }
    return out.str();
}

}  // namespace abstain
