#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "cwo/estimators.hpp"
#include "cwo/scenario.hpp"

namespace cwo {

enum class TruthMode { Exact, Mc };

[[nodiscard]] std::string to_string(TruthMode m);
[[nodiscard]] TruthMode truth_mode_from_string(const std::string& name);

/// One benchmark campaign over a single scenario.
struct BenchConfig {
    Scenario scenario = Scenario::FrontDoor;
    std::vector<int> dims = {1, 16};
    std::vector<int> sizes = {500, 1000, 2000, 4000, 6000, 8000, 10000};
    int reps = 20;
    std::vector<Backend> methods = {Backend::NnCwo, Backend::Cwo};
    TruthMode truth_mode = TruthMode::Exact;
    std::int64_t truth_samples = 1'000'000;
    std::uint64_t base_seed = 42;
    Hyperparams hp;
    double clip_eps = kDefaultClipEps;
    double noise_sd = 0.1;

    void validate() const;  // throws std::invalid_argument
    static BenchConfig from_json(const std::string& text);
    static BenchConfig from_json_file(const std::string& path);

    /// Desk-scale defaults: reps=20, 7 sizes, dims {1,16} ({1,8} for Msbd).
    static BenchConfig desk_default(Scenario kind);
    /// reps=100, sizes 500..10000 step 500, Monte-Carlo truth at 1e7.
    static BenchConfig paper_scale(Scenario kind);
};

struct BenchRecord {
    Scenario scenario = Scenario::FrontDoor;
    Backend method = Backend::NnCwo;
    int dim = 0;
    int size = 0;
    int rep = 0;
    double aae = 0.0;
    double wall_time = 0.0;  // seconds
    bool failed = false;
    std::string error;
    std::uint64_t dataset_checksum = 0;  // not serialized; fairness assertion
};

struct MaaeRow {
    Scenario scenario = Scenario::FrontDoor;
    Backend method = Backend::NnCwo;
    int dim = 0;
    int size = 0;
    double maae = 0.0;
    int reps = 0;  // successful replications aggregated
};

/// Average absolute error over the treatment grid (grids must match).
[[nodiscard]] double aae(const EffectEstimate& estimate, const EffectEstimate& truth);

/// Median; mean of the two central order statistics for even counts.
[[nodiscard]] double median(std::vector<double> values);

/// Ground truth over the full assignment grid of `scm`.
[[nodiscard]] EffectEstimate truth_estimate(const Scm& scm, TruthMode mode,
                                            std::int64_t mc_samples = 1'000'000,
                                            std::uint64_t mc_seed = 0);

struct BenchResult {
    std::vector<BenchRecord> records;
    std::vector<MaaeRow> maae;
};

/// Runs every (dim, size, replication, method) cell. All methods of a
/// replication see the same dataset; replications execute on `workers`
/// threads (0 = hardware concurrency) with results independent of the
/// schedule. A failed replication is recorded, warned about on `warn`,
/// and excluded from its cell's median. `progress`, when set, receives one
/// line per completed (dim, size) cell.
[[nodiscard]] BenchResult run_benchmark(const BenchConfig& config, int workers = 0,
                                        const std::function<void(const std::string&)>& progress = {},
                                        const std::function<void(const std::string&)>& warn = {});

/// Writes <prefix>_records.csv and <prefix>_maae.csv, rows sorted by
/// (scenario, method, dim, size, rep), values with 17 significant digits.
void emit_csv(const std::vector<BenchRecord>& records, const std::vector<MaaeRow>& maae_rows,
              const std::string& path_prefix);

/// Standalone SVG line chart of MAAE vs sample size for one dim: solid
/// strokes for NN-CWO, dashed for CWO, with axes and a legend.
void emit_svg(const std::vector<MaaeRow>& maae_rows, int dim, const std::string& path);

}  // namespace cwo
