#include "abstain/config.hpp"

#include <fstream>
#include <sstream>

namespace abstain {

namespace {

std::string trim(const std::string& s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string::npos) return "";
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

}  // namespace

void ConfigFile::fail(const std::string& message) const {
    throw ConfigError(origin_ + ": " + message);
}

ConfigFile ConfigFile::parse(const std::string& text, const std::string& origin) {
    ConfigFile cf;
    cf.origin_ = origin;
    std::istringstream in(text);
    std::string line, section;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string t = trim(line);
        if (t.empty() || t[0] == '#' || t[0] == ';') continue;
        if (t.front() == '[') {
            if (t.back() != ']')
                throw ConfigError(origin + ":" + std::to_string(lineno) + ": unterminated section header");
            section = trim(t.substr(1, t.size() - 2));
            continue;
        }
        const auto eq = t.find('=');
        if (eq == std::string::npos)
            throw ConfigError(origin + ":" + std::to_string(lineno) + ": expected key = value");
        const std::string key = trim(t.substr(0, eq));
        const std::string value = trim(t.substr(eq + 1));
        if (key.empty())
            throw ConfigError(origin + ":" + std::to_string(lineno) + ": empty key");
        cf.sections_[section][key] = Entry{value, lineno};
    }
    return cf;
}

ConfigFile ConfigFile::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return parse(buffer.str(), path);
}

bool ConfigFile::has(const std::string& section, const std::string& key) const {
    const auto s = sections_.find(section);
    return s != sections_.end() && s->second.count(key) > 0;
}

std::string ConfigFile::get(const std::string& section, const std::string& key) const {
    const auto s = sections_.find(section);
    if (s == sections_.end()) fail("missing section [" + section + "]");
    const auto k = s->second.find(key);
    if (k == s->second.end()) fail("missing key '" + key + "' in section [" + section + "]");
    return k->second.value;
}

std::string ConfigFile::get_or(const std::string& section, const std::string& key,
                               const std::string& fallback) const {
    return has(section, key) ? get(section, key) : fallback;
}

double ConfigFile::get_double(const std::string& section, const std::string& key,
                              double fallback) const {
    if (!has(section, key)) return fallback;
    const std::string v = get(section, key);
    try {
        std::size_t pos = 0;
        const double out = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return out;
    } catch (const std::exception&) {
        fail("key '" + key + "' in [" + section + "] is not a number: " + v);
    }
}

long ConfigFile::get_long(const std::string& section, const std::string& key, long fallback) const {
    if (!has(section, key)) return fallback;
    const std::string v = get(section, key);
    try {
        std::size_t pos = 0;
        const long out = std::stol(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return out;
    } catch (const std::exception&) {
        fail("key '" + key + "' in [" + section + "] is not an integer: " + v);
    }
}

bool ConfigFile::get_bool(const std::string& section, const std::string& key, bool fallback) const {
    if (!has(section, key)) return fallback;
    const std::string v = get(section, key);
    if (v == "on" || v == "true" || v == "1") return true;
    if (v == "off" || v == "false" || v == "0") return false;
    fail("key '" + key + "' in [" + section + "] must be on/off: " + v);
}

std::vector<double> ConfigFile::get_list(const std::string& section, const std::string& key) const {
    std::vector<double> out;
    if (!has(section, key)) return out;
    std::istringstream in(get(section, key));
    double v;
    while (in >> v) out.push_back(v);
    if (!in.eof()) fail("key '" + key + "' in [" + section + "] has malformed list entries");
    return out;
}

std::string algorithm_name(Algorithm a) {
    switch (a) {
        case Algorithm::Alg1: return "alg1";
        case Algorithm::Alg2: return "alg2";
        case Algorithm::Alg3: return "alg3";
        case Algorithm::Uncertainty: return "uncertainty";
        case Algorithm::Passive: return "passive";
    }
    return "?";
}

Algorithm algorithm_from_name(const std::string& name) {
    if (name == "alg1") return Algorithm::Alg1;
    if (name == "alg2") return Algorithm::Alg2;
    if (name == "alg3") return Algorithm::Alg3;
    if (name == "uncertainty") return Algorithm::Uncertainty;
    if (name == "passive") return Algorithm::Passive;
    throw ConfigError("unknown algorithm: " + name +
                      " (expected alg1|alg2|alg3|uncertainty|passive)");
}

ExperimentConfig ExperimentConfig::from_file(const std::string& path) {
    return from_config(ConfigFile::load(path));
}

ExperimentConfig ExperimentConfig::from_config(const ConfigFile& file) {
    ExperimentConfig cfg;
    cfg.algorithm = algorithm_from_name(file.get_or("experiment", "algorithm", "alg1"));
    cfg.replicates = static_cast<int>(file.get_long("experiment", "replicates", 1));
    if (cfg.replicates < 1) throw ConfigError("replicates must be >= 1");
    cfg.base_seed = static_cast<std::uint64_t>(file.get_long("experiment", "base_seed", 1));
    cfg.timings = file.get_bool("experiment", "timings", false);
    cfg.algo.record_steps = file.get_bool("experiment", "record_steps", false);

    cfg.env_kind = file.get_or("environment", "kind", "massart");
    cfg.tau0 = file.get_double("environment", "tau0", 0.3);
    cfg.beta_exp = file.get_double("environment", "beta_exp", 1.0);
    cfg.c = file.get_double("environment", "c", 2.0);
    cfg.zeta0 = file.get_double("environment", "zeta0", 0.0);
    cfg.boundary_mass = file.get_double("environment", "boundary_mass", 0.5);
    cfg.kappa = file.get_double("environment", "kappa", 0.0);
    cfg.margin_regions = static_cast<int>(file.get_long("environment", "regions", 4));
    cfg.env_file = file.get_or("environment", "file", "");

    cfg.class_kind = file.get_or("class", "kind", "auto");
    cfg.class_size = static_cast<int>(file.get_long("class", "size", 8));
    cfg.class_file = file.get_or("class", "file", "");

    cfg.algo.epsilon = file.get_double("algorithm-params", "epsilon", 0.01);
    cfg.algo.gamma = file.get_double("algorithm-params", "gamma", 0.1);
    cfg.algo.delta = file.get_double("algorithm-params", "delta", 0.1);
    cfg.algo.c0 = file.get_double("algorithm-params", "c0", 8.0);
    cfg.algo.k_T = file.get_double("algorithm-params", "k_T", 1.0);
    const std::string mode = file.get_or("algorithm-params", "mode", "exact");
    if (mode == "exact") cfg.algo.mode = BoundsMode::Exact;
    else if (mode == "approx") cfg.algo.mode = BoundsMode::Approx;
    else throw ConfigError("mode must be exact or approx, got: " + mode);
    if (file.has("algorithm-params", "T"))
        cfg.algo.T_override = file.get_long("algorithm-params", "T", 0);
    cfg.algo.budget = file.get_long("algorithm-params", "budget", 0);

    cfg.eps_axis = file.get_list("sweep", "epsilon");
    cfg.gamma_axis = file.get_list("sweep", "gamma");
    for (double b : file.get_list("sweep", "budget")) cfg.budget_axis.push_back(static_cast<long>(b));
    for (double t : file.get_list("sweep", "T")) cfg.T_axis.push_back(static_cast<long>(t));
    return cfg;
}

std::vector<SweepPoint> ExperimentConfig::sweep_points() const {
    std::vector<double> eps = eps_axis.empty() ? std::vector<double>{algo.epsilon} : eps_axis;
    std::vector<double> gam = gamma_axis.empty() ? std::vector<double>{algo.gamma} : gamma_axis;
    std::vector<long> bud = budget_axis.empty() ? std::vector<long>{algo.budget} : budget_axis;
    std::vector<std::optional<long>> horizons;
    if (T_axis.empty())
        horizons.push_back(algo.T_override);
    else
        for (long t : T_axis) horizons.push_back(t);

    std::vector<SweepPoint> points;
    int index = 0;
    for (double e : eps)
        for (double g : gam)
            for (long b : bud)
                for (const auto& t : horizons) {
                    SweepPoint p{index++, e, g, b, t};
                    AlgoConfig probe = algo;
                    probe.epsilon = e;
                    probe.gamma = g;
                    probe.budget = b;
                    probe.T_override = t;
                    probe.validate();
                    if (algorithm == Algorithm::Alg3 && !(g > e))
                        throw ConfigError("alg3 sweep point violates gamma > epsilon");
                    if (algorithm == Algorithm::Uncertainty && b < 0)
                        throw ConfigError("uncertainty sweep point needs budget >= 0");
                    points.push_back(p);
                }
    return points;
}

std::string ExperimentConfig::resolved_text() const {
    std::ostringstream out;
    out.precision(17);
    out << "[experiment]\n";
    out << "algorithm = " << algorithm_name(algorithm) << "\n";
    out << "replicates = " << replicates << "\n";
    out << "base_seed = " << base_seed << "\n";
    out << "timings = " << (timings ? "on" : "off") << "\n";
    out << "record_steps = " << (algo.record_steps ? "on" : "off") << "\n";
    out << "\n[environment]\n";
    out << "kind = " << env_kind << "\n";
    out << "tau0 = " << tau0 << "\n";
    out << "beta_exp = " << beta_exp << "\n";
    out << "c = " << c << "\n";
    out << "zeta0 = " << zeta0 << "\n";
    out << "boundary_mass = " << boundary_mass << "\n";
    out << "kappa = " << kappa << "\n";
    out << "regions = " << margin_regions << "\n";
    if (!env_file.empty()) out << "file = " << env_file << "\n";
    out << "\n[class]\n";
    out << "kind = " << class_kind << "\n";
    out << "size = " << class_size << "\n";
    if (!class_file.empty()) out << "file = " << class_file << "\n";
    out << "\n[algorithm-params]\n";
    out << "epsilon = " << algo.epsilon << "\n";
    out << "gamma = " << algo.gamma << "\n";
    out << "delta = " << algo.delta << "\n";
    out << "c0 = " << algo.c0 << "\n";
    out << "k_T = " << algo.k_T << "\n";
    out << "mode = " << (algo.mode == BoundsMode::Exact ? "exact" : "approx") << "\n";
    if (algo.T_override) out << "T = " << *algo.T_override << "\n";
    out << "budget = " << algo.budget << "\n";
    auto axis = [&out](const char* name, const auto& values) {
        if (values.empty()) return;
        out << name << " =";
        for (const auto& v : values) out << " " << v;
        out << "\n";
    };
    out << "\n[sweep]\n";
    axis("epsilon", eps_axis);
    axis("gamma", gamma_axis);
    axis("budget", budget_axis);
    axis("T", T_axis);
    return out.str();
}

Instance build_instance(const ExperimentConfig& cfg, const SweepPoint& point, std::uint64_t seed) {
    Instance instance;
    if (cfg.env_kind == "massart") {
        instance = make_finite_massart_instance(cfg.tau0, cfg.margin_regions, cfg.class_size, seed);
    } else if (cfg.env_kind == "noise_seeking_massart") {
        instance = make_finite_noise_seeking_instance(cfg.zeta0, cfg.tau0, cfg.boundary_mass,
                                                      cfg.margin_regions, cfg.class_size, seed);
    } else if (cfg.env_kind == "tsybakov") {
        Environment env = make_tsybakov(cfg.beta_exp, cfg.c, cfg.margin_regions + 1, seed);
        std::vector<std::vector<double>> rows{env.eta};
        env.truth_member = 0;
        instance = Instance{std::move(env), FunctionClass::make_finite(std::move(rows)), {}};
    } else if (cfg.env_kind == "trap") {
        const long budget = point.budget > 0 ? point.budget : std::max(cfg.algo.budget, 4L);
        instance = make_trap(budget, seed).instance;
    } else if (cfg.env_kind == "file") {
        Environment env = environment_from_text([&] {
            std::ifstream in(cfg.env_file);
            if (!in) throw ConfigError("cannot open environment file: " + cfg.env_file);
            std::ostringstream buffer;
            buffer << in.rdbuf();
            return buffer.str();
        }());
        if (cfg.class_file.empty()) throw ConfigError("environment files need a class file");
        instance = Instance{std::move(env), load_finite_class(cfg.class_file), {}};
    } else {
        throw ConfigError("unknown environment kind: " + cfg.env_kind);
    }
    if (cfg.kappa > 0.0) instance = make_misspecified(instance, cfg.kappa);
    return instance;
}

}  // namespace abstain
