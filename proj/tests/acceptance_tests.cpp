// Acceptance suite: the project's release checks. Every criterion runs at a
// fixed tolerance and prints one PASS/FAIL line; budgeted criteria measure
// their own wall time.
#include <gtest/gtest.h>

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <future>
#include <iostream>
#include <random>
#include <sstream>

#include "cwo/bench.hpp"
#include "cwo/estimators.hpp"
#include "cwo/glm.hpp"
#include "cwo/neural.hpp"
#include "cwo/rng.hpp"
#include "cwo/scenario.hpp"
#include "cwo/weights.hpp"

using namespace cwo;

namespace {

constexpr std::uint64_t kSeed = 42;

class Stopwatch {
public:
    Stopwatch() : start_(std::chrono::steady_clock::now()) {}
    [[nodiscard]] double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }

private:
    std::chrono::steady_clock::time_point start_;
};

void report(int criterion, const std::string& name, const std::string& detail) {
    std::cout << "[ACCEPTANCE] criterion " << criterion << " (" << name << "): "
              << (testing::Test::HasFailure() ? "FAIL" : "PASS");
    if (!detail.empty()) std::cout << " | " << detail;
    std::cout << std::endl;
}

double maae_of(const BenchResult& result, Backend method, int dim, int size) {
    for (const auto& row : result.maae)
        if (row.method == method && row.dim == dim && row.size == size) return row.maae;
    throw std::runtime_error("missing maae cell");
}

std::string fmt(double v) {
    std::ostringstream ss;
    ss.precision(4);
    ss << v;
    return ss.str();
}

BenchConfig criterion_config(Scenario kind, std::vector<int> dims, std::vector<int> sizes,
                             int reps = 20) {
    BenchConfig cfg = BenchConfig::desk_default(kind);
    cfg.dims = std::move(dims);
    cfg.sizes = std::move(sizes);
    cfg.reps = reps;
    cfg.base_seed = kSeed;
    return cfg;
}

double estimate_spread(const EffectEstimate& e) {
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (const auto& [k, v] : e.mu) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    return hi - lo;
}

std::string slurp(const std::string& path) {
    std::ifstream in(path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string drop_last_field(const std::string& csv) {
    std::stringstream in(csv), out;
    std::string line;
    while (std::getline(in, line)) out << line.substr(0, line.rfind(',')) << "\n";
    return out.str();
}

}  // namespace

TEST(Acceptance, Criterion1OracleConsistencyLowDim) {
    Stopwatch watch;
    std::ostringstream detail;
    for (const Scenario kind : {Scenario::FrontDoor, Scenario::Surrogate, Scenario::Msbd}) {
        const double tolerance = kind == Scenario::Msbd ? 0.03 : 0.02;
        const BenchResult result = run_benchmark(criterion_config(kind, {1}, {50000}));
        for (const Backend method : {Backend::NnCwo, Backend::Cwo}) {
            const double maae = maae_of(result, method, 1, 50000);
            EXPECT_LE(maae, tolerance) << to_string(kind) << " " << to_string(method);
            detail << to_string(kind) << "/" << to_string(method) << "=" << fmt(maae) << " ";
        }
    }
    const double elapsed = watch.seconds();
    EXPECT_LE(elapsed, 300.0);
    report(1, "oracle consistency, dim=1, n=5e4", detail.str() + "in " + fmt(elapsed) + "s");
}

TEST(Acceptance, Criterion2ConvergenceShape) {
    Stopwatch watch;
    std::ostringstream detail;
    for (const Scenario kind : {Scenario::FrontDoor, Scenario::Surrogate, Scenario::Msbd}) {
        const std::vector<int> dims = BenchConfig::desk_default(kind).dims;
        const BenchResult result = run_benchmark(criterion_config(kind, dims, {500, 10000}));
        for (const int dim : dims)
            for (const Backend method : {Backend::NnCwo, Backend::Cwo}) {
                const double at_500 = maae_of(result, method, dim, 500);
                const double at_10k = maae_of(result, method, dim, 10000);
                EXPECT_LT(at_10k, at_500)
                    << to_string(kind) << " " << to_string(method) << " dim=" << dim;
                detail << to_string(kind) << "/" << to_string(method) << "/d" << dim << ": "
                       << fmt(at_500) << ">" << fmt(at_10k) << " ";
            }
    }
    const double elapsed = watch.seconds();
    EXPECT_LE(elapsed, 1200.0);
    report(2, "MAAE decreases from n=500 to n=1e4", detail.str() + "in " + fmt(elapsed) + "s");
}

TEST(Acceptance, Criterion3HeadlineHighDimFrontdoor) {
    Stopwatch watch;
    const BenchResult result =
        run_benchmark(criterion_config(Scenario::FrontDoor, {16}, {2000, 6000, 10000}));
    std::ostringstream detail;
    for (const int n : {2000, 6000, 10000}) {
        const double nn = maae_of(result, Backend::NnCwo, 16, n);
        const double lin = maae_of(result, Backend::Cwo, 16, n);
        EXPECT_LE(nn, lin) << "NN-CWO must not lose at n=" << n
                           << " (base_seed=" << kSeed << ", default hp, default DGP)";
        detail << "n=" << n << ": margin=" << fmt(lin - nn) << " (nn=" << fmt(nn)
               << ", cwo=" << fmt(lin) << ") ";
    }
    report(3, "NN-CWO <= CWO on frontdoor dim=16",
           detail.str() + "in " + fmt(watch.seconds()) + "s");
}

TEST(Acceptance, Criterion4OracleCoherence) {
    Stopwatch watch;
    auto worst_gap = [](Scenario kind) {
        double worst = 0.0;
        for (std::uint64_t seed = 1; seed <= 20; ++seed) {
            const Scm scm = build_scenario({kind, 2, seed, 0.1});
            for (const auto& a : assignment_grid(kind)) {
                const double gap = std::abs(exact_truth(scm, a) -
                                            mc_truth(scm, a, 1000000, rng::combine(seed, 0x3141)));
                worst = std::max(worst, gap);
            }
        }
        return worst;
    };
    auto fd = std::async(std::launch::async, worst_gap, Scenario::FrontDoor);
    auto surr = std::async(std::launch::async, worst_gap, Scenario::Surrogate);
    auto msbd = std::async(std::launch::async, worst_gap, Scenario::Msbd);
    const double gap_fd = fd.get(), gap_surr = surr.get(), gap_msbd = msbd.get();
    EXPECT_LE(gap_fd, 0.005);
    EXPECT_LE(gap_surr, 0.005);
    EXPECT_LE(gap_msbd, 0.005);
    report(4, "|exact - mc(1e6)| <= 0.005 over 20 seeds each",
           "worst gaps: frontdoor=" + fmt(gap_fd) + " surrogate=" + fmt(gap_surr) +
               " msbd=" + fmt(gap_msbd) + " in " + fmt(watch.seconds()) + "s");
}

TEST(Acceptance, Criterion5GradientFidelity) {
    // 10 architectures, widths <= 16, depth <= 3, dropout off. Inputs are
    // redrawn until every pre-activation clears the relu kink by 1e-3.
    struct Arch {
        int input;
        int input_units;
        std::vector<int> units;
    };
    const std::vector<Arch> archs = {
        {2, 4, {}},          {3, 8, {4}},        {4, 16, {8}},      {5, 6, {6, 4}},
        {2, 12, {10, 6}},    {6, 16, {12, 8}},   {3, 5, {4, 3, 2}}, {4, 10, {8, 6, 4}},
        {7, 16, {16, 8, 4}}, {2, 3, {3, 3, 3}},
    };
    double worst = 0.0;
    for (std::size_t k = 0; k < archs.size(); ++k) {
        const Arch& arch = archs[k];
        Hyperparams hp;
        hp.input_units = arch.input_units;
        hp.n_layers = static_cast<int>(arch.units.size());
        hp.units = arch.units;
        hp.dropout_rate = 0.0;
        hp.dropout_rates.assign(arch.units.size(), 0.0);
        const Mlp mlp = build_mlp(arch.input, hp, 100 + k);

        const Eigen::Index n = 12;
        Eigen::MatrixXd x;
        Eigen::VectorXd y, w;
        for (std::uint64_t attempt = 0;; ++attempt) {
            std::mt19937_64 gen(1000 * k + attempt);
            std::uniform_real_distribution<double> unif(-1, 1);
            x.resize(n, arch.input);
            y.resize(n);
            w.resize(n);
            for (Eigen::Index i = 0; i < n; ++i) {
                for (int j = 0; j < arch.input; ++j) x(i, j) = unif(gen);
                y[i] = unif(gen);
                w[i] = 1.0 + 0.5 * std::abs(unif(gen));
            }
            // kink margin: every relu pre-activation at least 1e-3 from zero
            Eigen::MatrixXd h = x;
            double margin = std::numeric_limits<double>::infinity();
            for (const auto& layer : mlp.layers) {
                Eigen::MatrixXd pre = h * layer.weights.transpose();
                pre.rowwise() += layer.bias.transpose();
                if (layer.activation == Activation::Relu)
                    margin = std::min(margin, pre.cwiseAbs().minCoeff());
                h = layer.activation == Activation::Relu ? pre.cwiseMax(0.0) : pre;
            }
            if (margin > 1e-3) break;
        }
        const double err = gradient_check(mlp, x, y, w);
        worst = std::max(worst, err);
        EXPECT_LT(err, 1e-4) << "architecture " << k;
    }
    report(5, "gradient check < 1e-4 on 10 architectures", "worst=" + fmt(worst));
}

TEST(Acceptance, Criterion6ClosedFormEquivalence) {
    // nn_cwo at d = 1 must be bit-identical to standalone WLS.
    const Scm scm = build_scenario({Scenario::FrontDoor, 1, kSeed, 0.1});
    const Dataset data = sample(scm, 3000, 5);
    const Eigen::MatrixXd x = data.select(std::vector<std::string>{"X"});
    const Eigen::VectorXd y = data.column("Y");
    const Eigen::VectorXd w = Eigen::VectorXd::Ones(3000);
    Eigen::MatrixXd grid(2, 1);
    grid << 0, 1;
    const Hyperparams hp;
    const Eigen::VectorXd via_nn = nn_cwo(x, y, grid, w, hp, Backend::NnCwo, 7);
    const Eigen::VectorXd via_wls = predict_linear(fit_wls(x, y, w), grid);
    EXPECT_TRUE((via_nn.array() == via_wls.array()).all());

    // WLS against hand-solved normal equations on (0,0),(1,1),(2,0).
    Eigen::MatrixXd hx(3, 1);
    hx << 0, 1, 2;
    Eigen::VectorXd hy(3);
    hy << 0, 1, 0;
    const LinearModel hand = fit_wls(hx, hy, Eigen::VectorXd::Ones(3));
    EXPECT_NEAR(hand.slopes[0], 0.0, 1e-10);
    EXPECT_NEAR(hand.intercept, 1.0 / 3.0, 1e-10);
    report(6, "closed-form equivalence", "bit-match and 1e-10 normal equations");
}

TEST(Acceptance, Criterion7WeightStabilization) {
    const Eigen::Index n = 10000;
    std::ostringstream detail;
    auto z_score = [&detail](const std::string& label, const WeightVector& w) {
        const double count = static_cast<double>(w.values.size());
        const double mean = w.values.mean();
        const double sd = std::sqrt((w.values.array() - mean).square().sum() / (count - 1));
        const double z = std::abs(mean - 1.0) / (sd / std::sqrt(count));
        detail << label << "=" << fmt(z) << " ";
        return z;
    };

    const Dataset msbd = sample(build_scenario({Scenario::Msbd, 1, kSeed, 0.1}), n, 61);
    EXPECT_LT(z_score("bd", bd_weights(msbd, "X1", msbd.block("Z1_"), 0.01)), 3.0);
    const std::vector<MsbdStage> stages = {{"X1", {"Z1_1"}, {}}, {"X2", {"Z2_1"}, {"Y1"}}};
    EXPECT_LT(z_score("msbd", msbd_weights(msbd, stages, 0.01)), 3.0);

    const Dataset surr = sample(build_scenario({Scenario::Surrogate, 2, kSeed, 0.1}), n, 67);
    EXPECT_LT(z_score("surrogate", surrogate_weights(surr, 0.01)), 3.0);

    const Dataset fd = sample(build_scenario({Scenario::FrontDoor, 1, kSeed, 0.1}), n, 71);
    EXPECT_LT(z_score("fd-stage2", frontdoor_stage_weights(fd, 0.01).stage2), 3.0);
    report(7, "weight means within 3 SE of 1 at n=1e4", detail.str());
}

TEST(Acceptance, Criterion8NullEffectSuite) {
    Stopwatch watch;
    std::ostringstream detail;
    const auto severed = [](Scenario kind) {
        Scm scm = build_scenario({kind, 1, kSeed, 0.1});
        switch (kind) {
            case Scenario::FrontDoor:
                scm.set_coefficient("Z1", "X", 0.0);
                break;
            case Scenario::Surrogate:
                scm.set_coefficient("Y", "W", 0.0);
                break;
            case Scenario::Msbd:
                for (const std::string child : {"Y1", "Z2_1", "X2", "Y2"})
                    scm.set_coefficient(child, "X1", 0.0);
                scm.set_coefficient("Y2", "X2", 0.0);
                break;
        }
        return scm;
    };

    for (const Scenario kind : {Scenario::FrontDoor, Scenario::Surrogate, Scenario::Msbd}) {
        const Scm scm = severed(kind);
        // sanity: the severed model really has a null effect
        const auto grid = assignment_grid(kind);
        const double t0 = exact_truth(scm, grid.front());
        for (const auto& a : grid) EXPECT_NEAR(exact_truth(scm, a), t0, 1e-12);

        for (const Backend method : {Backend::NnCwo, Backend::Cwo}) {
            std::vector<std::future<double>> reps;
            for (int rep = 0; rep < 20; ++rep)
                reps.push_back(std::async(std::launch::async, [&, rep] {
                    const Dataset data =
                        sample(scm, 10000, rng::combine(kSeed, 500 + rep));
                    EstimateOptions opt;
                    opt.backend = method;
                    opt.seed = rng::combine(kSeed, 900 + rep);
                    return estimate_spread(estimate(kind, data, opt));
                }));
            std::vector<double> spreads;
            for (auto& f : reps) spreads.push_back(f.get());
            const double med = median(spreads);
            EXPECT_LT(med, 0.02) << to_string(kind) << " " << to_string(method);
            detail << to_string(kind) << "/" << to_string(method) << "=" << fmt(med) << " ";
        }
    }
    report(8, "severed paths show null effects", detail.str() + "in " + fmt(watch.seconds()) + "s");
}

TEST(Acceptance, Criterion9BenchDeterminism) {
    BenchConfig cfg = criterion_config(Scenario::FrontDoor, {1, 2}, {300, 600}, 3);
    const auto dir = std::filesystem::temp_directory_path() /
                     ("cwo_acceptance_" + std::to_string(std::random_device{}()));
    std::filesystem::create_directories(dir);
    auto prefix = [&dir](const std::string& name) { return (dir / name).string(); };

    const BenchResult run1 = run_benchmark(cfg, 1);
    const BenchResult run2 = run_benchmark(cfg, 1);
    const BenchResult run4 = run_benchmark(cfg, 4);
    emit_csv(run1.records, run1.maae, prefix("w1a"));
    emit_csv(run2.records, run2.maae, prefix("w1b"));
    emit_csv(run4.records, run4.maae, prefix("w4"));

    // MAAE tables are byte-identical; record tables carry measured wall
    // times, so they are compared with the timing field stripped.
    const std::string maae1 = slurp(prefix("w1a") + "_maae.csv");
    EXPECT_EQ(maae1, slurp(prefix("w1b") + "_maae.csv"));
    EXPECT_EQ(maae1, slurp(prefix("w4") + "_maae.csv"));
    const std::string rec1 = drop_last_field(slurp(prefix("w1a") + "_records.csv"));
    EXPECT_EQ(rec1, drop_last_field(slurp(prefix("w1b") + "_records.csv")));
    EXPECT_EQ(rec1, drop_last_field(slurp(prefix("w4") + "_records.csv")));
    EXPECT_FALSE(maae1.empty());
    std::filesystem::remove_all(dir);
    report(9, "bench output identical across runs and worker counts {1,4}",
           "maae bytes equal; records equal up to wall_time");
}

TEST(Acceptance, Criterion10DeskScaleBudget) {
    Stopwatch watch;
    std::size_t cells = 0;
    for (const Scenario kind : {Scenario::FrontDoor, Scenario::Surrogate, Scenario::Msbd}) {
        BenchConfig cfg = BenchConfig::desk_default(kind);
        cfg.base_seed = kSeed;
        const BenchResult result = run_benchmark(cfg);
        cells += result.maae.size();
        EXPECT_EQ(result.maae.size(), cfg.dims.size() * cfg.sizes.size() * cfg.methods.size());
        for (const auto& record : result.records) EXPECT_FALSE(record.failed);
    }
    const double elapsed = watch.seconds();
    EXPECT_EQ(cells, 3u * 2u * 7u * 2u);
    EXPECT_LE(elapsed, 1800.0);
    report(10, "desk-scale bench within 30 minutes",
           std::to_string(cells) + " cells in " + fmt(elapsed) + "s");
}
