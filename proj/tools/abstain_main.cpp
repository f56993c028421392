#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "abstain/complexity.hpp"
#include "abstain/experiment.hpp"

namespace fs = std::filesystem;
using namespace abstain;

namespace {

std::string slurp(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open file: " + path);
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

std::string default_out_dir() {
    if (const char* env = std::getenv("ABSTAIN_OUT")) return env;
    return "out";
}

void emit_results(const ExperimentConfig& cfg, const ExperimentResult& result,
                  const std::string& out_dir, const std::string& format) {
    fs::create_directories(out_dir);
    write_file((fs::path(out_dir) / "resolved.cfg").string(), cfg.resolved_text());
    if (format == "csv" || format == "both")
        write_file((fs::path(out_dir) / "rows.csv").string(), rows_to_csv(result.rows));
    if (format == "json" || format == "both")
        write_file((fs::path(out_dir) / "summary.json").string(),
                   rows_to_json_summary(result.rows));
    long failed = 0;
    for (const auto& row : result.rows) failed += row.error.empty() ? 0 : 1;
    std::cout << result.rows.size() << " rows (" << failed << " failed) -> " << out_dir << "\n";
}

ExperimentConfig load_config(const std::string& path, std::optional<std::uint64_t> seed) {
    ExperimentConfig cfg = ExperimentConfig::from_file(path);
    if (seed) cfg.base_seed = *seed;
    return cfg;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"active learning with abstention: seeded experiment harness"};
    app.require_subcommand(1);

    std::string config_path, out_dir = default_out_dir(), format = "csv";
    std::optional<std::uint64_t> seed;
    int jobs = 1;
    long mc_samples = 200000;

    auto add_common = [&](CLI::App* cmd, bool with_format) {
        cmd->add_option("config", config_path, "experiment config file")->required();
        cmd->add_option("--seed", seed, "override base seed");
        cmd->add_option("--out", out_dir, "output directory (default $ABSTAIN_OUT or ./out)");
        cmd->add_option("--jobs", jobs, "worker threads")->check(CLI::PositiveNumber);
        if (with_format)
            cmd->add_option("--format", format, "csv | json | both")
                ->check(CLI::IsMember({"csv", "json", "both"}));
    };

    CLI::App* run = app.add_subcommand("run", "run the first sweep point");
    add_common(run, true);
    CLI::App* sweep = app.add_subcommand("sweep", "run the full sweep grid");
    add_common(sweep, true);
    CLI::App* audit = app.add_subcommand("audit", "run the experiment and its audit suite");
    add_common(audit, false);
    audit->add_option("--mc-samples", mc_samples, "monte carlo crosscheck sample count");

    std::string class_path;
    CLI::App* complexity = app.add_subcommand("complexity", "brute-force complexity report");
    complexity->add_option("input", class_path, "class/domain description file")->required();
    complexity->add_option("--out", out_dir, "output directory");

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed() || sweep->parsed()) {
            ExperimentConfig cfg = load_config(config_path, seed);
            if (run->parsed()) {
                // restrict to the first sweep point
                if (!cfg.eps_axis.empty()) cfg.eps_axis.resize(1);
                if (!cfg.gamma_axis.empty()) cfg.gamma_axis.resize(1);
                if (!cfg.budget_axis.empty()) cfg.budget_axis.resize(1);
                if (!cfg.T_axis.empty()) cfg.T_axis.resize(1);
            }
            const ExperimentResult result = run_experiment(cfg, jobs, false);
            emit_results(cfg, result, out_dir, format);
        } else if (audit->parsed()) {
            ExperimentConfig cfg = load_config(config_path, seed);
            const ExperimentResult result = run_experiment(cfg, jobs, true);
            const AuditReport report = run_audits(result, mc_samples, cfg.base_seed + 1);
            std::cout << report.to_text();
            emit_results(cfg, result, out_dir, "csv");
            if (!report.all_pass()) return 1;
        } else if (complexity->parsed()) {
            const ComplexityInput input = parse_complexity_input(slurp(class_path));
            const ComplexityReport report =
                complexity_report(*input.cls, input.fstar, input.domain, input.gamma_grid,
                                  input.eps_grid, input.default_distributions());
            const std::string text = report_to_text(report);
            std::cout << text;
            fs::create_directories(out_dir);
            write_file((fs::path(out_dir) / "complexity.txt").string(), text);
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
