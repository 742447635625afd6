#include "acqsens/errors.hpp"
#include "acqsens/pipeline.hpp"
#include "acqsens/version.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

namespace {

using namespace acqsens;

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorCode::IoError, "cannot open " + path);
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

struct GlobalFlags {
    std::optional<double> alpha;
    std::optional<std::uint64_t> seed;
    std::optional<int> threads;
    bool verbose = false;

    void apply(RunConfig& config) const {
        if (alpha) config.alpha = *alpha;
        if (seed) config.seed = *seed;
        if (threads) config.threads = *threads;
    }
};

ThresholdConfig load_region(const std::string& path, const ParameterSpace& space) {
    return region_from_json(nlohmann::json::parse(read_file(path)), space);
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Acquisition-parameter sensitivity analysis for predictive models"};
    app.set_version_flag("--version", std::string(kVersion));
    app.require_subcommand(1);

    GlobalFlags flags;
    double alpha_flag = 0.0;
    std::uint64_t seed_flag = 0;
    int threads_flag = 0;
    app.add_option("--alpha", alpha_flag, "Significance level override")
        ->each([&](const std::string&) { flags.alpha = alpha_flag; });
    app.add_option("--seed", seed_flag, "Seed override")
        ->each([&](const std::string&) { flags.seed = seed_flag; });
    app.add_option("--threads", threads_flag, "Worker threads for the grid scan")
        ->each([&](const std::string&) { flags.threads = threads_flag; });
    app.add_flag("--verbose", flags.verbose, "Chatty progress on stderr");

    std::string input_path, config_path, region_path, spec_path, out_dir;
    std::vector<std::string> methods;

    auto* optimize = app.add_subcommand("optimize", "Grid scan + Pareto selection");
    optimize->add_option("--input", input_path, "Prediction table CSV")->required();
    optimize->add_option("--config", config_path, "Run config JSON")->required();
    optimize->add_option("--out", out_dir, "Output directory")->required();

    auto* sensitivity = app.add_subcommand("sensitivity", "Method-wise and population models");
    sensitivity->add_option("--input", input_path, "Prediction table CSV")->required();
    sensitivity->add_option("--config", config_path, "Run config JSON")->required();
    sensitivity->add_option("--region", region_path, "Threshold region JSON")->required();
    sensitivity->add_option("--out", out_dir, "Output directory")->required();

    auto* impact = app.add_subcommand("impact", "Clinical metric validation");
    impact->add_option("--input", input_path, "Prediction table CSV")->required();
    impact->add_option("--config", config_path, "Run config JSON")->required();
    impact->add_option("--region", region_path, "Threshold region JSON")->required();
    impact->add_option("--methods", methods, "Methods to evaluate (default: all)")->delimiter(',');
    impact->add_option("--out", out_dir, "Output directory")->required();

    auto* simulate = app.add_subcommand("simulate", "Generate a synthetic prediction table");
    simulate->add_option("--spec", spec_path, "Simulation spec JSON")->required();
    simulate->add_option("--out", out_dir, "Output directory")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (app.got_subcommand(simulate)) {
            SimSpec spec = simspec_from_json(read_file(spec_path));
            if (flags.seed) spec.seed = *flags.seed;
            auto result = run_simulate(spec, out_dir);
            if (flags.verbose)
                std::cerr << "wrote " << result.table.n_records() << " records to " << out_dir
                          << "\n";
            return 0;
        }

        RunConfig config = load_config(config_path);
        flags.apply(config);
        PredictionTable table = load_predictions(input_path, config.space,
                                                 config.decision_threshold, config.out_of_range);
        if (flags.verbose && table.clamped_count() > 0)
            std::cerr << "warning: clamped " << table.clamped_count()
                      << " out-of-range parameter values\n";

        if (app.got_subcommand(optimize)) {
            auto result = run_optimize(table, config, out_dir);
            if (flags.verbose)
                std::cerr << result.layers.layers.size() << " layers, "
                          << result.selection.entries.size() << " configs selected\n";
        } else if (app.got_subcommand(sensitivity)) {
            ThresholdConfig region = load_region(region_path, config.space);
            run_sensitivity(table, config, region, out_dir);
        } else if (app.got_subcommand(impact)) {
            ThresholdConfig region = load_region(region_path, config.space);
            auto result = run_impact(table, config, region, methods, out_dir);
            if (result.wilcoxon.empty() && flags.verbose)
                std::cerr << "warning: too few methods for paired tests\n";
        }
        return 0;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_code_for(e.code());
    } catch (const nlohmann::json::exception& e) {
        std::cerr << "error: invalid JSON input: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
}
