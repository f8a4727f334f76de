#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "cwo/bench.hpp"
#include "cwo/dataset.hpp"
#include "cwo/estimators.hpp"
#include "cwo/rng.hpp"
#include "cwo/scenario.hpp"

namespace {

// Exit codes: 0 success, 1 usage error, 2 runtime failure.
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

cwo::Scenario parse_scenario(const std::string& name) {
    try {
        return cwo::scenario_from_string(name);
    } catch (const std::exception& e) {
        throw UsageError(e.what());
    }
}

cwo::Hyperparams load_hp(const std::string& path) {
    if (path.empty()) return {};
    try {
        return cwo::Hyperparams::from_json_file(path);
    } catch (const std::invalid_argument& e) {
        throw UsageError(std::string("--hp: ") + e.what());
    }
}

struct SimulateArgs {
    std::string scenario;
    int dim = 1;
    int n = 0;
    std::uint64_t seed = 0;
    std::uint64_t coeff_seed = 0;
    double noise_sd = 0.1;
    std::string out;
    bool keep_latent = false;
};

int run_simulate(const SimulateArgs& args) {
    const cwo::ScenarioSpec spec{parse_scenario(args.scenario), args.dim, args.coeff_seed,
                                 args.noise_sd};
    std::cerr << "simulate: coeff-seed=" << args.coeff_seed << " seed=" << args.seed << "\n";
    const cwo::Scm scm = cwo::build_scenario(spec);
    const cwo::Dataset data = cwo::sample(scm, args.n, args.seed, args.keep_latent);
    data.write_csv_file(args.out);
    return 0;
}

struct TruthArgs {
    std::string scenario;
    int dim = 1;
    std::uint64_t seed = 0;
    std::string mode = "exact";
    std::int64_t mc_samples = 1'000'000;
    double noise_sd = 0.1;
};

int run_truth(const TruthArgs& args) {
    const cwo::ScenarioSpec spec{parse_scenario(args.scenario), args.dim, args.seed, args.noise_sd};
    const cwo::TruthMode mode = [&] {
        try {
            return cwo::truth_mode_from_string(args.mode);
        } catch (const std::exception& e) {
            throw UsageError(e.what());
        }
    }();
    const std::uint64_t mc_seed = cwo::rng::combine(args.seed, 0x6d63);
    std::cerr << "truth: coeff-seed=" << args.seed;
    if (mode == cwo::TruthMode::Mc) std::cerr << " mc-seed=" << mc_seed;
    std::cerr << "\n";

    const cwo::Scm scm = cwo::build_scenario(spec);
    nlohmann::json doc = nlohmann::json::object();
    for (const auto& a : cwo::assignment_grid(spec.kind)) {
        const double mu = mode == cwo::TruthMode::Exact
                              ? cwo::exact_truth(scm, a)
                              : cwo::mc_truth(scm, a, args.mc_samples, mc_seed);
        doc[a.key()] = mu;
    }
    std::cout << doc.dump(2) << "\n";
    return 0;
}

struct EstimateArgs {
    std::string scenario;
    std::string data_path;
    std::string method = "nncwo";
    std::string hp_path;
    double clip_eps = cwo::kDefaultClipEps;
    std::uint64_t seed = 0;
    std::string surrogate_weight = "conditional-on-z";
};

void check_schema(const cwo::Dataset& data, cwo::Scenario kind) {
    std::vector<std::string> required;
    switch (kind) {
        case cwo::Scenario::FrontDoor: required = {"X", "Z1", "Y"}; break;
        case cwo::Scenario::Surrogate: required = {"X", "W", "Z1", "Y"}; break;
        case cwo::Scenario::Msbd: required = {"X1", "X2", "Y1", "Y2", "Z1_1", "Z2_1"}; break;
    }
    for (const auto& name : required)
        if (!data.has_column(name))
            throw UsageError("data file is missing column '" + name + "' required by scenario '" +
                             cwo::to_string(kind) + "'");
}

int run_estimate(const EstimateArgs& args) {
    const cwo::Scenario kind = parse_scenario(args.scenario);
    cwo::EstimateOptions opt;
    opt.hp = load_hp(args.hp_path);
    try {
        opt.backend = cwo::backend_from_string(args.method);
    } catch (const std::exception& e) {
        throw UsageError(e.what());
    }
    opt.clip_eps = args.clip_eps;
    opt.seed = args.seed;
    if (args.surrogate_weight == "conditional-on-xz")
        opt.surrogate_mode = cwo::SurrogateConditioning::OnXZ;
    else if (args.surrogate_weight != "conditional-on-z")
        throw UsageError("--surrogate-weight: expected conditional-on-z|conditional-on-xz");
    std::cerr << "estimate: seed=" << args.seed << "\n";

    cwo::Dataset data;
    try {
        data = cwo::Dataset::read_csv_file(args.data_path);
    } catch (const std::exception& e) {
        throw UsageError(std::string("--data: ") + e.what());
    }
    check_schema(data, kind);
    const cwo::EffectEstimate est = cwo::estimate(kind, data, opt);
    std::cout << est.to_json() << "\n";
    return 0;
}

struct BenchArgs {
    std::string config_path;
    std::string scenario;  // empty: all three
    std::vector<int> dims;
    std::vector<int> sizes;
    int reps = -1;
    std::vector<std::string> methods;
    std::string truth_mode;
    std::int64_t truth_samples = -1;
    double clip_eps = -1.0;
    double noise_sd = -1.0;
    std::string hp_path;
    std::uint64_t base_seed = 42;
    bool base_seed_set = false;
    bool paper_scale = false;
    int workers = 0;
    std::string out;
    bool plot = false;
};

std::vector<cwo::BenchConfig> bench_configs(const BenchArgs& args) {
    std::vector<cwo::BenchConfig> configs;
    if (!args.config_path.empty()) {
        try {
            configs.push_back(cwo::BenchConfig::from_json_file(args.config_path));
        } catch (const std::invalid_argument& e) {
            throw UsageError(std::string("--config: ") + e.what());
        }
        return configs;
    }
    std::vector<cwo::Scenario> scenarios;
    if (args.scenario.empty())
        scenarios = {cwo::Scenario::FrontDoor, cwo::Scenario::Surrogate, cwo::Scenario::Msbd};
    else
        scenarios = {parse_scenario(args.scenario)};
    for (const auto kind : scenarios) {
        cwo::BenchConfig cfg = args.paper_scale ? cwo::BenchConfig::paper_scale(kind)
                                                : cwo::BenchConfig::desk_default(kind);
        if (!args.dims.empty()) cfg.dims = args.dims;
        if (!args.sizes.empty()) cfg.sizes = args.sizes;
        if (args.reps > 0) cfg.reps = args.reps;
        if (!args.methods.empty()) {
            cfg.methods.clear();
            for (const auto& m : args.methods) {
                try {
                    cfg.methods.push_back(cwo::backend_from_string(m));
                } catch (const std::exception& e) {
                    throw UsageError(e.what());
                }
            }
        }
        if (!args.truth_mode.empty()) {
            try {
                cfg.truth_mode = cwo::truth_mode_from_string(args.truth_mode);
            } catch (const std::exception& e) {
                throw UsageError(e.what());
            }
        }
        if (args.truth_samples > 0) cfg.truth_samples = args.truth_samples;
        if (args.clip_eps >= 0.0) cfg.clip_eps = args.clip_eps;
        if (args.noise_sd >= 0.0) cfg.noise_sd = args.noise_sd;
        if (!args.hp_path.empty()) cfg.hp = load_hp(args.hp_path);
        if (args.base_seed_set) cfg.base_seed = args.base_seed;
        try {
            cfg.validate();
        } catch (const std::invalid_argument& e) {
            throw UsageError(e.what());
        }
        configs.push_back(std::move(cfg));
    }
    return configs;
}

int run_bench(const BenchArgs& args) {
    const std::vector<cwo::BenchConfig> configs = bench_configs(args);

    std::vector<cwo::BenchRecord> all_records;
    std::vector<cwo::MaaeRow> all_rows;
    std::vector<std::string> written;
    auto cleanup = [&written]() {
        for (const auto& path : written) {
            std::error_code ec;
            std::filesystem::remove(path, ec);
        }
    };

    try {
        for (const auto& cfg : configs) {
            std::cerr << "bench: scenario=" << cwo::to_string(cfg.scenario)
                      << " base-seed=" << cfg.base_seed << "\n";
            const cwo::BenchResult result = cwo::run_benchmark(
                cfg, args.workers,
                [](const std::string& line) { std::cerr << "[bench] " << line << "\n"; },
                [](const std::string& line) { std::cerr << "[bench] warning: " << line << "\n"; });
            all_records.insert(all_records.end(), result.records.begin(), result.records.end());
            all_rows.insert(all_rows.end(), result.maae.begin(), result.maae.end());
        }

        written.push_back(args.out + "_records.csv");
        written.push_back(args.out + "_maae.csv");
        cwo::emit_csv(all_records, all_rows, args.out);

        if (args.plot) {
            for (const auto& cfg : configs) {
                std::vector<cwo::MaaeRow> scenario_rows;
                for (const auto& row : all_rows)
                    if (row.scenario == cfg.scenario) scenario_rows.push_back(row);
                for (const int dim : cfg.dims) {
                    const std::string path = args.out + "_" + cwo::to_string(cfg.scenario) +
                                             "_dim" + std::to_string(dim) + ".svg";
                    written.push_back(path);
                    cwo::emit_svg(scenario_rows, dim, path);
                }
            }
        }
    } catch (...) {
        cleanup();
        throw;
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Causal effect estimation by composed sample-weighting operators"};
    app.require_subcommand(1);

    SimulateArgs sim;
    CLI::App* simulate = app.add_subcommand("simulate", "Draw observational data from a scenario");
    simulate->add_option("--scenario", sim.scenario, "frontdoor|surrogate|msbd")->required();
    simulate->add_option("--dim", sim.dim, "Covariates per Z block")
        ->default_val(1)
        ->check(CLI::PositiveNumber);
    simulate->add_option("--n", sim.n, "Sample count")->required()->check(CLI::PositiveNumber);
    simulate->add_option("--seed", sim.seed, "Sampling seed")->default_val(0);
    simulate->add_option("--coeff-seed", sim.coeff_seed, "Structural coefficient seed")
        ->default_val(0);
    simulate->add_option("--noise-sd", sim.noise_sd, "Outcome noise std. dev.")
        ->default_val(0.1)
        ->check(CLI::NonNegativeNumber);
    simulate->add_option("--out", sim.out, "Output CSV path")->required();
    simulate->add_flag("--keep-latent", sim.keep_latent, "Retain latent columns (debug)");

    TruthArgs truth;
    CLI::App* truth_cmd = app.add_subcommand("truth", "Ground-truth interventional means");
    truth_cmd->add_option("--scenario", truth.scenario, "frontdoor|surrogate|msbd")->required();
    truth_cmd->add_option("--dim", truth.dim, "Covariates per Z block")
        ->default_val(1)
        ->check(CLI::PositiveNumber);
    truth_cmd->add_option("--seed", truth.seed, "Structural coefficient seed")->default_val(0);
    truth_cmd->add_option("--mode", truth.mode, "exact|mc")->default_val("exact");
    truth_cmd->add_option("--mc-samples", truth.mc_samples, "Monte-Carlo sample count")
        ->default_val(1'000'000)
        ->check(CLI::PositiveNumber);
    truth_cmd->add_option("--noise-sd", truth.noise_sd, "Outcome noise std. dev.")
        ->default_val(0.1)
        ->check(CLI::NonNegativeNumber);

    EstimateArgs est;
    CLI::App* estimate = app.add_subcommand("estimate", "Estimate effects from a dataset CSV");
    estimate->add_option("--scenario", est.scenario, "frontdoor|surrogate|msbd")->required();
    estimate->add_option("--data", est.data_path, "Dataset CSV path")->required();
    estimate->add_option("--method", est.method, "nncwo|cwo")->default_val("nncwo");
    estimate->add_option("--hp", est.hp_path, "Hyperparameter JSON path");
    estimate->add_option("--clip-eps", est.clip_eps, "Propensity clipping bound")
        ->default_val(cwo::kDefaultClipEps);
    estimate->add_option("--seed", est.seed, "Training seed")->default_val(0);
    estimate->add_option("--surrogate-weight", est.surrogate_weight,
                         "conditional-on-z|conditional-on-xz")
        ->default_val("conditional-on-z");

    BenchArgs bench;
    CLI::App* bench_cmd = app.add_subcommand("bench", "Replicate the MAAE-vs-sample-size study");
    auto* config_opt = bench_cmd->add_option("--config", bench.config_path, "Bench config JSON");
    bench_cmd->add_option("--scenario", bench.scenario, "Restrict to one scenario (default: all)")
        ->excludes(config_opt);
    bench_cmd->add_option("--dims", bench.dims, "Z-block dimensions")->excludes(config_opt);
    bench_cmd->add_option("--sizes", bench.sizes, "Sample sizes")->excludes(config_opt);
    bench_cmd->add_option("--reps", bench.reps, "Replications per cell")->excludes(config_opt);
    bench_cmd->add_option("--methods", bench.methods, "nncwo|cwo")->excludes(config_opt);
    bench_cmd->add_option("--truth-mode", bench.truth_mode, "exact|mc")->excludes(config_opt);
    bench_cmd->add_option("--truth-samples", bench.truth_samples, "Monte-Carlo truth samples")
        ->excludes(config_opt);
    bench_cmd->add_option("--clip-eps", bench.clip_eps, "Propensity clipping bound")
        ->excludes(config_opt);
    bench_cmd->add_option("--noise-sd", bench.noise_sd, "Outcome noise std. dev.")
        ->excludes(config_opt);
    bench_cmd->add_option("--hp", bench.hp_path, "Hyperparameter JSON path")->excludes(config_opt);
    auto* seed_opt =
        bench_cmd->add_option("--seed", bench.base_seed, "Base seed")->excludes(config_opt);
    bench_cmd->add_flag("--paper-scale", bench.paper_scale,
                        "reps=100, sizes 500..10000 step 500, Monte-Carlo truth at 1e7")
        ->excludes(config_opt);
    bench_cmd->add_option("--workers", bench.workers, "Worker threads (0 = hardware)")
        ->default_val(0);
    bench_cmd->add_option("--out", bench.out, "Output path prefix")->required();
    bench_cmd->add_flag("--plot", bench.plot, "Emit one MAAE SVG per (scenario, dim)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    bench.base_seed_set = seed_opt->count() > 0;

    try {
        if (simulate->parsed()) return run_simulate(sim);
        if (truth_cmd->parsed()) return run_truth(truth);
        if (estimate->parsed()) return run_estimate(est);
        if (bench_cmd->parsed()) return run_bench(bench);
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
