#include "abstain/environment.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "abstain/oracle.hpp"

namespace abstain {

namespace {

constexpr double kMassTol = 1e-12;

double margin(double eta) { return std::abs(eta - 0.5); }

std::vector<double> random_masses(int n, Rng& rng) {
    std::vector<double> m(static_cast<std::size_t>(n));
    double total = 0.0;
    for (double& v : m) {
        v = 0.5 + rng.next_double();
        total += v;
    }
    for (double& v : m) v /= total;
    double head = 0.0;
    for (std::size_t i = 0; i + 1 < m.size(); ++i) head += m[i];
    m.back() = 1.0 - head;  // exact unit mass
    return m;
}

Domain interval_domain(const std::vector<double>& masses) {
    Domain d;
    d.kind = DomainKind::IntervalRegions;
    const int n = static_cast<int>(masses.size());
    for (int i = 0; i < n; ++i) {
        Cell c;
        c.mass = masses[static_cast<std::size_t>(i)];
        c.lo = static_cast<double>(i) / n;
        c.hi = static_cast<double>(i + 1) / n;
        d.cells.push_back(c);
    }
    return d;
}

void check_actions(const std::vector<Action>& actions, const Environment& env) {
    if (static_cast<int>(actions.size()) != env.regions())
        throw ConfigError("classifier is not measurable on this region domain");
}

}  // namespace

void Environment::validate() const {
    domain.validate();
    if (static_cast<int>(eta.size()) != domain.size()) throw ConfigError("eta size mismatch");
    for (double e : eta)
        if (!(e >= 0.0 && e <= 1.0)) throw ConfigError("eta must lie in [0,1]");
}

void Environment::audit() const {
    validate();
    auto mass_where = [&](auto pred) {
        double total = 0.0;
        for (int r = 0; r < regions(); ++r)
            if (pred(eta_at(r))) total += domain.cells[static_cast<std::size_t>(r)].mass;
        return total;
    };
    auto cum_mass_leq = [&](double tau, double zeta) {
        return mass_where([&](double e) { return margin(e) > zeta && margin(e) <= tau; });
    };
    switch (meta.kind) {
        case NoiseKind::None:
        case NoiseKind::Misspecified:
            break;
        case NoiseKind::Massart:
            if (mass_where([&](double e) { return margin(e) <= meta.tau0; }) > 0.0)
                throw ConfigError("massart audit failed: mass at margin <= tau0");
            break;
        case NoiseKind::NoiseSeekingMassart:
            if (cum_mass_leq(meta.tau0, meta.zeta0) > 0.0)
                throw ConfigError("noise-seeking massart audit failed: mass in (zeta0, tau0]");
            break;
        case NoiseKind::Tsybakov:
        case NoiseKind::NoiseSeekingTsybakov: {
            const double zeta = meta.kind == NoiseKind::Tsybakov ? 0.0 : meta.zeta0;
            std::vector<double> taus;
            for (double t = 0.01; t <= 0.5 + 1e-15; t += 0.01) taus.push_back(t);
            for (double e : eta)
                if (margin(e) > zeta) taus.push_back(margin(e));
            for (double tau : taus) {
                if (tau <= zeta) continue;
                if (cum_mass_leq(tau, zeta) > meta.c * std::pow(tau, meta.beta_exp) + kMassTol)
                    throw ConfigError("tsybakov audit failed at tau = " + std::to_string(tau));
            }
            break;
        }
        case NoiseKind::Trap:
            for (double e : eta)
                if (e != 0.5 && e != 0.0 && e != 1.0)
                    throw ConfigError("trap audit failed: eta must be 1/2 or {0,1}");
            break;
    }
}

double Instance::truth_loss(const QueryHistory& history) const {
    if (!truth_weights.empty()) return history.loss(cls->linear_member(truth_weights));
    if (env.truth_member) return history.loss_of_member(*env.truth_member);
    throw ConfigError("instance has no ground-truth member");
}

std::pair<Point, int> sample(const Environment& env, Rng& rng) {
    const double u = rng.next_double();
    double acc = 0.0;
    int region = env.regions() - 1;
    for (int r = 0; r < env.regions(); ++r) {
        acc += env.domain.cells[static_cast<std::size_t>(r)].mass;
        if (u < acc) {
            region = r;
            break;
        }
    }
    const Cell& cell = env.domain.cells[static_cast<std::size_t>(region)];
    const double x = cell.lo + rng.next_double() * (cell.hi - cell.lo);
    const int y = rng.next_double() < env.eta_at(region) ? +1 : -1;
    return {Point{x, region}, y};
}

double bayes_error(const Environment& env) {
    double total = 0.0;
    for (int r = 0; r < env.regions(); ++r) {
        const double e = env.eta_at(r);
        total += env.domain.cells[static_cast<std::size_t>(r)].mass * std::min(e, 1.0 - e);
    }
    return total;
}

double chow_error_exact(const std::vector<Action>& actions, const Environment& env, double gamma) {
    check_actions(actions, env);
    double total = 0.0;
    for (int r = 0; r < env.regions(); ++r) {
        const double mass = env.domain.cells[static_cast<std::size_t>(r)].mass;
        const double e = env.eta_at(r);
        switch (actions[static_cast<std::size_t>(r)]) {
            case Action::Pos: total += mass * (1.0 - e); break;
            case Action::Neg: total += mass * e; break;
            case Action::Abstain: total += mass * (0.5 - gamma); break;
        }
    }
    return total;
}

double standard_error_after_randomization(const std::vector<Action>& actions,
                                          const Environment& env) {
    check_actions(actions, env);
    double total = 0.0;
    for (int r = 0; r < env.regions(); ++r) {
        const double mass = env.domain.cells[static_cast<std::size_t>(r)].mass;
        const double e = env.eta_at(r);
        switch (actions[static_cast<std::size_t>(r)]) {
            case Action::Pos: total += mass * (1.0 - e); break;
            case Action::Neg: total += mass * e; break;
            case Action::Abstain: total += mass * 0.5; break;
        }
    }
    return total;
}

double abstain_mass(const std::vector<Action>& actions, const Environment& env) {
    check_actions(actions, env);
    double total = 0.0;
    for (int r = 0; r < env.regions(); ++r)
        if (actions[static_cast<std::size_t>(r)] == Action::Abstain)
            total += env.domain.cells[static_cast<std::size_t>(r)].mass;
    return total;
}

double improper_abstention_mass(const std::vector<Action>& actions, const Environment& env,
                                double gamma) {
    check_actions(actions, env);
    double total = 0.0;
    for (int r = 0; r < env.regions(); ++r)
        if (actions[static_cast<std::size_t>(r)] == Action::Abstain &&
            margin(env.eta_at(r)) > gamma)
            total += env.domain.cells[static_cast<std::size_t>(r)].mass;
    return total;
}

double pointwise_optimal_chow(double eta, double gamma) {
    return std::min(std::min(eta, 1.0 - eta), 0.5 - gamma);
}

double pointwise_excess(Action action, double eta, double gamma) {
    const double bayes = std::min(eta, 1.0 - eta);
    switch (action) {
        case Action::Pos: return (1.0 - eta) - bayes;
        case Action::Neg: return eta - bayes;
        case Action::Abstain: return (0.5 - gamma) - bayes;
    }
    return 0.0;
}

Environment make_massart(double tau0, int region_count, std::uint64_t seed) {
    if (!(tau0 > 0.0 && tau0 <= 0.5)) throw ConfigError("massart needs 0 < tau0 <= 1/2");
    if (region_count < 1) throw ConfigError("region_count must be >= 1");
    const double head = std::min(0.45, tau0 + 0.02);
    if (head >= 0.5 && tau0 >= 0.5) throw ConfigError("tau0 leaves no room for margins");
    Rng rng(seed);
    Environment env;
    env.domain = interval_domain(random_masses(region_count, rng));
    env.eta.resize(static_cast<std::size_t>(region_count));
    for (int r = 0; r < region_count; ++r) {
        const double m = std::min(0.5, head + (0.5 - head) * rng.next_double());
        const double sign = (r % 2 == 0) ? +1.0 : -1.0;
        env.eta[static_cast<std::size_t>(r)] = 0.5 + sign * m;
    }
    env.meta.kind = NoiseKind::Massart;
    env.meta.tau0 = tau0;
    env.audit();
    return env;
}

Environment make_tsybakov(double beta_exp, double c, int region_count, std::uint64_t seed) {
    if (beta_exp < 0.0 || !(c > 0.0)) throw ConfigError("tsybakov needs beta >= 0, c > 0");
    if (c < std::pow(2.0, beta_exp))
        throw ConfigError("tsybakov needs c >= 2^beta so the full mass fits at tau = 1/2");
    if (region_count < 2) throw ConfigError("tsybakov needs at least 2 regions");
    Rng rng(seed);
    // geometric ladder of margins saturating c * tau^beta at each rung,
    // remainder at margin 1/2
    const int rungs = region_count - 1;
    std::vector<double> margins(static_cast<std::size_t>(rungs));
    const double lo = 0.02, hi = 0.45;
    for (int k = 0; k < rungs; ++k)
        margins[static_cast<std::size_t>(k)] =
            lo * std::pow(hi / lo, rungs == 1 ? 1.0 : static_cast<double>(k) / (rungs - 1));
    double scale = 1.0;
    const double top = c * std::pow(margins.back(), beta_exp);
    if (top >= 1.0) scale = 0.9 / top;  // keep some mass for the margin-1/2 region
    std::vector<double> masses;
    double prev = 0.0, assigned = 0.0;
    for (double m : margins) {
        const double cum = scale * c * std::pow(m, beta_exp);
        masses.push_back(cum - prev);
        assigned += cum - prev;
        prev = cum;
    }
    masses.push_back(1.0 - assigned);
    Environment env;
    env.domain = interval_domain(masses);
    env.eta.resize(masses.size());
    for (std::size_t r = 0; r < margins.size(); ++r)
        env.eta[r] = 0.5 + ((r % 2 == 0) ? +1.0 : -1.0) * margins[r];
    env.eta.back() = rng.next_double() < 0.5 ? 0.0 : 1.0;
    env.meta.kind = NoiseKind::Tsybakov;
    env.meta.beta_exp = beta_exp;
    env.meta.c = c;
    env.audit();
    return env;
}

Environment make_noise_seeking_massart(double zeta0, double tau0, double boundary_mass,
                                       int region_count, std::uint64_t seed) {
    if (!(zeta0 >= 0.0 && zeta0 < tau0 && tau0 <= 0.5))
        throw ConfigError("noise-seeking massart needs 0 <= zeta0 < tau0 <= 1/2");
    if (!(boundary_mass > 0.0 && boundary_mass < 1.0))
        throw ConfigError("boundary_mass must lie in (0,1)");
    if (region_count < 2) throw ConfigError("need at least one margin region");
    Environment env = make_massart(tau0, region_count - 1, seed);
    std::vector<double> masses{boundary_mass};
    std::vector<double> etas{0.5};  // |eta - 1/2| = 0 <= zeta0
    double head = boundary_mass;
    for (int r = 0; r < env.regions(); ++r) {
        double m = env.domain.cells[static_cast<std::size_t>(r)].mass * (1.0 - boundary_mass);
        if (r + 1 == env.regions()) m = 1.0 - head;
        head += m;
        masses.push_back(m);
        etas.push_back(env.eta_at(r));
    }
    Environment out;
    out.domain = interval_domain(masses);
    out.eta = std::move(etas);
    out.meta.kind = NoiseKind::NoiseSeekingMassart;
    out.meta.tau0 = tau0;
    out.meta.zeta0 = zeta0;
    out.meta.boundary_mass = boundary_mass;
    out.audit();
    return out;
}

Environment make_noise_seeking_tsybakov(double zeta0, double beta_exp, double c,
                                        double boundary_mass, int region_count,
                                        std::uint64_t seed) {
    if (!(zeta0 >= 0.0 && zeta0 < 0.5)) throw ConfigError("zeta0 must lie in [0, 1/2)");
    if (!(boundary_mass > 0.0 && boundary_mass < 1.0))
        throw ConfigError("boundary_mass must lie in (0,1)");
    Environment base = make_tsybakov(beta_exp, c, region_count - 1, seed);
    std::vector<double> masses{boundary_mass};
    std::vector<double> etas{0.5};
    double head = boundary_mass;
    for (int r = 0; r < base.regions(); ++r) {
        double m = base.domain.cells[static_cast<std::size_t>(r)].mass * (1.0 - boundary_mass);
        if (r + 1 == base.regions()) m = 1.0 - head;
        head += m;
        masses.push_back(m);
        etas.push_back(base.eta_at(r));
    }
    Environment out;
    out.domain = interval_domain(masses);
    out.eta = std::move(etas);
    out.meta.kind = NoiseKind::NoiseSeekingTsybakov;
    out.meta.beta_exp = beta_exp;
    out.meta.c = c;
    out.meta.zeta0 = zeta0;
    out.meta.boundary_mass = boundary_mass;
    out.audit();
    return out;
}

TrapInstance make_trap(long budget, std::uint64_t seed) {
    if (budget < 4) throw ConfigError("trap needs budget >= 4");
    Rng rng(seed);
    const double p = 1.0 / (2.0 * static_cast<double>(budget));
    const double sigma = rng.next_double() < 0.5 ? +0.5 : -0.5;
    Environment env;
    env.domain.kind = DomainKind::IntervalRegions;
    env.domain.cells = {Cell{1.0 - p, 0.0, 1.0 - p}, Cell{p, 1.0 - p, 1.0}};
    env.eta = {0.5, 0.5 + sigma};
    env.meta.kind = NoiseKind::Trap;
    env.audit();
    ClassPtr cls = FunctionClass::make_linear({{1.0, 0.0}, {1.0, 1.0}}, 1.0, 3.0);
    TrapInstance trap;
    trap.easy_mass = p;
    trap.sign_draw = sigma;
    trap.instance = Instance{std::move(env), std::move(cls), {0.5, sigma}};
    return trap;
}

Instance make_misspecified(const Instance& base, double kappa) {
    if (!(kappa > 0.0)) throw ConfigError("kappa must be positive (use a realizable constructor)");
    if (!base.env.truth_member) throw ConfigError("base instance needs a truth member");
    Instance out = base;
    for (int r = 0; r < out.env.regions(); ++r) {
        double sign = (r % 2 == 0) ? +1.0 : -1.0;
        double v = out.env.eta[static_cast<std::size_t>(r)] + sign * kappa;
        if (v < 0.0 || v > 1.0) v = out.env.eta[static_cast<std::size_t>(r)] - sign * kappa;
        if (v < 0.0 || v > 1.0) throw ConfigError("kappa perturbation exits [0,1]");
        out.env.eta[static_cast<std::size_t>(r)] = v;
    }
    out.env.meta.kind = NoiseKind::Misspecified;
    out.env.meta.kappa = kappa;
    out.env.validate();
    return out;
}

namespace {

Instance attach_flip_class(Environment env, int class_size, int boundary_region, double lo_decoy,
                           double hi_decoy) {
    const int regions = env.regions();
    const int margin_lo = boundary_region >= 0 ? 1 : 0;
    std::vector<std::vector<double>> rows;
    const std::vector<double>& truth = env.eta;
    // decoys: boundary shifts, single-region flips, then combined flips
    std::vector<std::vector<double>> decoys;
    if (boundary_region >= 0) {
        auto d = truth;
        d[static_cast<std::size_t>(boundary_region)] = hi_decoy;
        decoys.push_back(d);
        d = truth;
        d[static_cast<std::size_t>(boundary_region)] = lo_decoy;
        decoys.push_back(d);
    }
    for (int r = margin_lo; r < regions; ++r) {
        auto d = truth;
        d[static_cast<std::size_t>(r)] = 1.0 - d[static_cast<std::size_t>(r)];
        decoys.push_back(d);
    }
    for (int a = margin_lo; a < regions; ++a) {
        for (int b = a + 1; b < regions; ++b) {
            auto d = truth;
            d[static_cast<std::size_t>(a)] = 1.0 - d[static_cast<std::size_t>(a)];
            d[static_cast<std::size_t>(b)] = 1.0 - d[static_cast<std::size_t>(b)];
            if (boundary_region >= 0)
                d[static_cast<std::size_t>(boundary_region)] = (a + b) % 2 == 0 ? hi_decoy : lo_decoy;
            decoys.push_back(d);
        }
    }
    if (class_size - 1 > static_cast<int>(decoys.size()))
        throw ConfigError("class_size too large for the decoy family");
    rows.assign(decoys.begin(), decoys.begin() + (class_size - 1));
    rows.push_back(truth);  // truth last: the empty-history tie-break must not gift it
    env.truth_member = class_size - 1;
    ClassPtr cls = FunctionClass::make_finite(std::move(rows));
    return Instance{std::move(env), std::move(cls), {}};
}

}  // namespace

Instance make_finite_massart_instance(double tau0, int margin_regions, int class_size,
                                      std::uint64_t seed) {
    if (class_size < 2) throw ConfigError("class_size must be >= 2");
    Environment env = make_massart(tau0, margin_regions, seed);
    return attach_flip_class(std::move(env), class_size, -1, 0.0, 0.0);
}

Instance make_finite_noise_seeking_instance(double zeta0, double tau0, double boundary_mass,
                                            int margin_regions, int class_size,
                                            std::uint64_t seed) {
    if (class_size < 2) throw ConfigError("class_size must be >= 2");
    Environment env =
        make_noise_seeking_massart(zeta0, tau0, boundary_mass, margin_regions + 1, seed);
    return attach_flip_class(std::move(env), class_size, 0, 0.2, 0.8);
}

std::string environment_to_text(const Environment& env) {
    std::ostringstream out;
    out.precision(17);
    out << "kind = " << static_cast<int>(env.meta.kind) << "\n";
    out << "tau0 = " << env.meta.tau0 << "\n";
    out << "beta_exp = " << env.meta.beta_exp << "\n";
    out << "c = " << env.meta.c << "\n";
    out << "zeta0 = " << env.meta.zeta0 << "\n";
    out << "boundary_mass = " << env.meta.boundary_mass << "\n";
    out << "kappa = " << env.meta.kappa << "\n";
    if (env.truth_member) out << "truth = " << *env.truth_member << "\n";
    for (int r = 0; r < env.regions(); ++r) {
        const Cell& c = env.domain.cells[static_cast<std::size_t>(r)];
        out << "region = " << c.mass << " " << env.eta_at(r) << " " << c.lo << " " << c.hi << "\n";
    }
    return out.str();
}

Environment environment_from_text(const std::string& text) {
    Environment env;
    env.domain.kind = DomainKind::IntervalRegions;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos || line[first] == '#') continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("environment text line " + std::to_string(lineno) + ": expected key = value");
        std::string key = line.substr(0, eq);
        key.erase(key.find_last_not_of(" \t") + 1);
        key.erase(0, key.find_first_not_of(" \t"));
        std::istringstream value(line.substr(eq + 1));
        if (key == "kind") {
            int k;
            value >> k;
            env.meta.kind = static_cast<NoiseKind>(k);
        } else if (key == "tau0") value >> env.meta.tau0;
        else if (key == "beta_exp") value >> env.meta.beta_exp;
        else if (key == "c") value >> env.meta.c;
        else if (key == "zeta0") value >> env.meta.zeta0;
        else if (key == "boundary_mass") value >> env.meta.boundary_mass;
        else if (key == "kappa") value >> env.meta.kappa;
        else if (key == "truth") {
            int id;
            value >> id;
            env.truth_member = id;
        } else if (key == "region") {
            Cell c;
            double eta;
            if (!(value >> c.mass >> eta >> c.lo >> c.hi))
                throw ConfigError("environment text line " + std::to_string(lineno) + ": malformed region");
            env.domain.cells.push_back(c);
            env.eta.push_back(eta);
        } else {
            throw ConfigError("environment text line " + std::to_string(lineno) + ": unknown key " + key);
        }
    }
    env.validate();
    return env;
}

}  // namespace abstain
