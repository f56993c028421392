#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "abstain/learners.hpp"
#include "abstain/types.hpp"

namespace abstain {

/// Sectioned `key = value` plain-text config. Lines starting with '#' or ';'
/// are comments; `[section]` opens a section; repeated keys accumulate.
class ConfigFile {
  public:
    static ConfigFile parse(const std::string& text, const std::string& origin = "<string>");
    static ConfigFile load(const std::string& path);

    bool has(const std::string& section, const std::string& key) const;
    std::string get(const std::string& section, const std::string& key) const;
    std::string get_or(const std::string& section, const std::string& key,
                       const std::string& fallback) const;
    double get_double(const std::string& section, const std::string& key, double fallback) const;
    long get_long(const std::string& section, const std::string& key, long fallback) const;
    bool get_bool(const std::string& section, const std::string& key, bool fallback) const;
    std::vector<double> get_list(const std::string& section, const std::string& key) const;

  private:
    struct Entry {
        std::string value;
        int line = 0;
    };
    std::string origin_;
    std::map<std::string, std::map<std::string, Entry>> sections_;
    [[noreturn]] void fail(const std::string& message) const;
};

enum class Algorithm { Alg1, Alg2, Alg3, Uncertainty, Passive };

std::string algorithm_name(Algorithm a);
Algorithm algorithm_from_name(const std::string& name);

struct SweepPoint {
    int index = 0;
    double epsilon = 0.0;
    double gamma = 0.0;
    long budget = 0;
    std::optional<long> T;
};

struct ExperimentConfig {
    Algorithm algorithm = Algorithm::Alg1;
    int replicates = 1;
    std::uint64_t base_seed = 1;
    bool timings = false;

    // environment
    std::string env_kind = "massart";
    double tau0 = 0.3;
    double beta_exp = 1.0;
    double c = 2.0;
    double zeta0 = 0.0;
    double boundary_mass = 0.5;
    double kappa = 0.0;  // > 0: perturb the realizable base (misspecified run)
    int margin_regions = 4;
    std::string env_file;

    // class
    std::string class_kind = "auto";
    int class_size = 8;
    std::string class_file;

    AlgoConfig algo;

    // sweep axes (empty means the single point from algo params / budget)
    std::vector<double> eps_axis;
    std::vector<double> gamma_axis;
    std::vector<long> budget_axis;
    std::vector<long> T_axis;

    static ExperimentConfig from_file(const std::string& path);
    static ExperimentConfig from_config(const ConfigFile& file);

    /// Cross product of the sweep axes; every point is validated against the
    /// chosen algorithm's preconditions.
    std::vector<SweepPoint> sweep_points() const;
    std::string resolved_text() const;
};

/// Builds the instance a run sees: environment, class, truth link.
Instance build_instance(const ExperimentConfig& cfg, const SweepPoint& point, std::uint64_t seed);

}  // namespace abstain
