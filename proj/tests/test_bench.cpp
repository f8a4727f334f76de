#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "cwo/bench.hpp"

using namespace cwo;

namespace {

EffectEstimate make_estimate(Scenario kind, std::map<std::string, double> mu) {
    EffectEstimate e;
    e.scenario = kind;
    e.mu = std::move(mu);
    return e;
}

BenchConfig tiny_config() {
    BenchConfig cfg;
    cfg.scenario = Scenario::FrontDoor;
    cfg.dims = {1};
    cfg.sizes = {200, 400};
    cfg.reps = 3;
    cfg.methods = {Backend::Cwo};
    cfg.truth_mode = TruthMode::Exact;
    cfg.base_seed = 7;
    cfg.hp.epochs = 30;
    return cfg;
}

std::string slurp(const std::string& path) {
    std::ifstream in(path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// records CSV lines with the wall_time field blanked
std::string mask_wall_time(const std::string& csv) {
    std::stringstream in(csv), out;
    std::string line;
    while (std::getline(in, line)) {
        const auto cut = line.rfind(',');
        out << line.substr(0, cut) << "\n";
    }
    return out.str();
}

struct TempDir {
    std::filesystem::path path;
    TempDir() {
        path = std::filesystem::temp_directory_path() /
               ("cwo_bench_test_" + std::to_string(std::random_device{}()));
        std::filesystem::create_directories(path);
    }
    ~TempDir() { std::filesystem::remove_all(path); }
    std::string prefix(const std::string& name) const { return (path / name).string(); }
};

}  // namespace

TEST(Aae, DirectEvaluation) {
    const EffectEstimate truth = make_estimate(Scenario::FrontDoor, {{"0", 0.3}, {"1", 0.5}});
    EXPECT_DOUBLE_EQ(aae(truth, truth), 0.0);
    const EffectEstimate est = make_estimate(Scenario::FrontDoor, {{"0", 0.2}, {"1", 0.6}});
    EXPECT_DOUBLE_EQ(aae(est, truth), 0.1);

    const EffectEstimate t4 = make_estimate(
        Scenario::Msbd, {{"00", 0.1}, {"01", 0.2}, {"10", 0.3}, {"11", 0.4}});
    EffectEstimate e4 = t4;
    e4.mu["10"] += 0.08;
    EXPECT_DOUBLE_EQ(aae(e4, t4), 0.02);

    EXPECT_THROW((void)aae(est, t4), std::invalid_argument);
}

TEST(Median, CentralOrderStatistics) {
    EXPECT_DOUBLE_EQ(median({0.04}), 0.04);
    EXPECT_DOUBLE_EQ(median({0.03, 0.01, 0.02}), 0.02);
    EXPECT_DOUBLE_EQ(median({4, 1, 3, 2}), 2.5);
    EXPECT_THROW((void)median({}), std::invalid_argument);

    std::mt19937_64 gen(3);
    std::uniform_real_distribution<double> unif(0, 1);
    for (int n : {5, 6, 99, 100}) {
        std::vector<double> v(static_cast<std::size_t>(n));
        for (auto& x : v) x = unif(gen);
        std::vector<double> sorted = v;
        std::sort(sorted.begin(), sorted.end());
        const double naive = n % 2 ? sorted[static_cast<std::size_t>(n / 2)]
                                   : 0.5 * (sorted[static_cast<std::size_t>(n / 2 - 1)] +
                                            sorted[static_cast<std::size_t>(n / 2)]);
        EXPECT_DOUBLE_EQ(median(v), naive);
    }
}

TEST(BenchConfig, Validation) {
    BenchConfig cfg = tiny_config();
    cfg.sizes = {400, 200};
    EXPECT_THROW(cfg.validate(), std::invalid_argument);
    cfg = tiny_config();
    cfg.reps = 0;
    EXPECT_THROW(cfg.validate(), std::invalid_argument);
    cfg = tiny_config();
    cfg.dims = {40};  // beyond the exact enumeration bound
    EXPECT_THROW(cfg.validate(), std::invalid_argument);
    cfg.truth_mode = TruthMode::Mc;
    cfg.validate();
}

TEST(BenchConfig, JsonParsing) {
    const BenchConfig cfg = BenchConfig::from_json(R"({
        "scenario": "msbd", "dims": [1, 2], "sizes": [100, 300], "reps": 2,
        "methods": ["cwo"], "truth_mode": "mc", "truth_samples": 5000,
        "base_seed": 3, "clip_eps": 0.02, "hp": {"epochs": 10}
    })");
    EXPECT_EQ(cfg.scenario, Scenario::Msbd);
    EXPECT_EQ(cfg.dims, (std::vector<int>{1, 2}));
    EXPECT_EQ(cfg.methods, std::vector<Backend>{Backend::Cwo});
    EXPECT_EQ(cfg.truth_samples, 5000);
    EXPECT_EQ(cfg.hp.epochs, 10);
    EXPECT_THROW((void)BenchConfig::from_json(R"({"surprise": 1})"), std::invalid_argument);
    EXPECT_THROW((void)BenchConfig::from_json(R"({"reps": "many"})"), std::invalid_argument);
}

TEST(BenchConfig, DeskAndPaperScales) {
    const BenchConfig desk = BenchConfig::desk_default(Scenario::Msbd);
    EXPECT_EQ(desk.dims, (std::vector<int>{1, 8}));
    EXPECT_EQ(desk.reps, 20);
    EXPECT_EQ(desk.sizes.size(), 7u);
    EXPECT_EQ(desk.truth_samples, 1'000'000);

    const BenchConfig paper = BenchConfig::paper_scale(Scenario::FrontDoor);
    EXPECT_EQ(paper.reps, 100);
    ASSERT_EQ(paper.sizes.size(), 20u);  // 500, 1000, ..., 10000
    EXPECT_EQ(paper.sizes.front(), 500);
    EXPECT_EQ(paper.sizes[1] - paper.sizes[0], 500);
    EXPECT_EQ(paper.sizes.back(), 10000);
    EXPECT_EQ(paper.truth_mode, TruthMode::Mc);
    EXPECT_EQ(paper.truth_samples, 10'000'000);
}

TEST(RunBenchmark, SingleRepMedianIsTheAae) {
    BenchConfig cfg = tiny_config();
    cfg.reps = 1;
    cfg.sizes = {200};
    const BenchResult result = run_benchmark(cfg, 1);
    ASSERT_EQ(result.records.size(), 1u);
    ASSERT_EQ(result.maae.size(), 1u);
    EXPECT_DOUBLE_EQ(result.maae[0].maae, result.records[0].aae);
    EXPECT_EQ(result.maae[0].reps, 1);
}

TEST(RunBenchmark, WorkerCountDoesNotChangeResults) {
    const BenchConfig cfg = tiny_config();
    const BenchResult serial = run_benchmark(cfg, 1);
    const BenchResult parallel = run_benchmark(cfg, 4);
    ASSERT_EQ(serial.records.size(), parallel.records.size());
    for (std::size_t i = 0; i < serial.records.size(); ++i) {
        EXPECT_DOUBLE_EQ(serial.records[i].aae, parallel.records[i].aae);
        EXPECT_EQ(serial.records[i].rep, parallel.records[i].rep);
        EXPECT_EQ(serial.records[i].dataset_checksum, parallel.records[i].dataset_checksum);
    }
    ASSERT_EQ(serial.maae.size(), parallel.maae.size());
    for (std::size_t i = 0; i < serial.maae.size(); ++i)
        EXPECT_DOUBLE_EQ(serial.maae[i].maae, parallel.maae[i].maae);
}

TEST(RunBenchmark, MethodsShareTheDataset) {
    BenchConfig cfg = tiny_config();
    cfg.methods = {Backend::NnCwo, Backend::Cwo};
    cfg.sizes = {200};
    cfg.reps = 2;
    const BenchResult result = run_benchmark(cfg, 2);
    ASSERT_EQ(result.records.size(), 4u);
    for (int rep = 0; rep < 2; ++rep) {
        std::uint64_t checksum = 0;
        for (const auto& r : result.records)
            if (r.rep == rep) {
                if (checksum == 0) checksum = r.dataset_checksum;
                EXPECT_EQ(r.dataset_checksum, checksum);
            }
    }
}

TEST(RunBenchmark, FailedReplicationsAreExcludedAndReported) {
    BenchConfig cfg = tiny_config();
    cfg.scenario = Scenario::Msbd;  // nn training is impossible at n = 2
    cfg.methods = {Backend::NnCwo};
    cfg.sizes = {2, 300};
    cfg.reps = 2;
    std::vector<std::string> warnings;
    const BenchResult result =
        run_benchmark(cfg, 1, {}, [&](const std::string& msg) { warnings.push_back(msg); });
    int failed = 0;
    for (const auto& r : result.records)
        if (r.failed) {
            ++failed;
            EXPECT_EQ(r.size, 2);
            EXPECT_FALSE(r.error.empty());
        }
    EXPECT_EQ(failed, 2);
    EXPECT_EQ(warnings.size(), 2u);
    for (const auto& row : result.maae) EXPECT_EQ(row.size, 300);
}

TEST(EmitCsv, FormatAndRoundTrip) {
    TempDir tmp;
    BenchRecord record;
    record.scenario = Scenario::Surrogate;
    record.method = Backend::NnCwo;
    record.dim = 2;
    record.size = 500;
    record.rep = 0;
    record.aae = 1.0 / 3.0;
    record.wall_time = 0.125;
    MaaeRow row{Scenario::Surrogate, Backend::NnCwo, 2, 500, 1.0 / 3.0, 1};
    emit_csv({record}, {row}, tmp.prefix("one"));

    const std::string records_csv = slurp(tmp.prefix("one") + "_records.csv");
    std::stringstream ss(records_csv);
    std::string header, line, extra;
    ASSERT_TRUE(std::getline(ss, header));
    ASSERT_TRUE(std::getline(ss, line));
    EXPECT_FALSE(std::getline(ss, extra));
    EXPECT_EQ(header, "scenario,method,dim,size,rep,aae,wall_time");
    EXPECT_EQ(line.substr(0, line.find(',')), "surrogate");
    // 17 significant digits round-trip the double exactly
    const auto aae_begin = line.find(",0.");
    const std::string aae_field = line.substr(aae_begin + 1, line.rfind(',') - aae_begin - 1);
    EXPECT_EQ(std::stod(aae_field), 1.0 / 3.0);

    const std::string maae_csv = slurp(tmp.prefix("one") + "_maae.csv");
    EXPECT_EQ(maae_csv.substr(0, maae_csv.find('\n')), "scenario,method,dim,size,maae,reps");
}

TEST(EmitCsv, RowsSortedRegardlessOfInsertionOrder) {
    TempDir tmp;
    std::vector<BenchRecord> records;
    for (const int rep : {2, 0, 1}) {
        BenchRecord r;
        r.scenario = Scenario::FrontDoor;
        r.method = Backend::Cwo;
        r.dim = 1;
        r.size = 100;
        r.rep = rep;
        r.aae = rep * 0.1;
        records.push_back(r);
    }
    emit_csv(records, {}, tmp.prefix("sorted"));
    const std::string csv = slurp(tmp.prefix("sorted") + "_records.csv");
    std::stringstream ss(csv);
    std::string line;
    std::getline(ss, line);
    int expected_rep = 0;
    while (std::getline(ss, line)) {
        std::stringstream fields(line);
        std::string f;
        for (int i = 0; i < 5; ++i) std::getline(fields, f, ',');
        EXPECT_EQ(std::stoi(f), expected_rep++);
    }
    EXPECT_EQ(expected_rep, 3);
}

TEST(EmitCsv, ReproducibleAcrossRunsAndWorkers) {
    TempDir tmp;
    const BenchConfig cfg = tiny_config();
    const BenchResult a = run_benchmark(cfg, 1);
    const BenchResult b = run_benchmark(cfg, 4);
    emit_csv(a.records, a.maae, tmp.prefix("a"));
    emit_csv(b.records, b.maae, tmp.prefix("b"));
    EXPECT_EQ(slurp(tmp.prefix("a") + "_maae.csv"), slurp(tmp.prefix("b") + "_maae.csv"));
    EXPECT_EQ(mask_wall_time(slurp(tmp.prefix("a") + "_records.csv")),
              mask_wall_time(slurp(tmp.prefix("b") + "_records.csv")));
}

TEST(EmitCsv, RejectsEmptyAndUnwritable) {
    EXPECT_THROW(emit_csv({}, {}, "/tmp/whatever"), std::invalid_argument);
    BenchRecord r;
    EXPECT_THROW(emit_csv({r}, {}, "/nonexistent-dir/prefix"), std::runtime_error);
}

TEST(EmitSvg, StructureMatchesSeries) {
    TempDir tmp;
    std::vector<MaaeRow> rows;
    const std::vector<int> sizes = {500, 1000, 2000, 4000, 8000};
    for (std::size_t i = 0; i < sizes.size(); ++i) {
        // both series decrease monotonically in n
        rows.push_back({Scenario::FrontDoor, Backend::NnCwo, 1, sizes[i],
                        0.05 / static_cast<double>(i + 1), 20});
        rows.push_back({Scenario::FrontDoor, Backend::Cwo, 1, sizes[i],
                        0.08 / static_cast<double>(i + 1), 20});
    }
    const std::string path = tmp.prefix("plot.svg");
    emit_svg(rows, 1, path);
    const std::string svg = slurp(path);

    std::size_t polylines = 0;
    for (std::size_t pos = svg.find("<polyline"); pos != std::string::npos;
         pos = svg.find("<polyline", pos + 1))
        ++polylines;
    EXPECT_EQ(polylines, 2u);

    // the dashed stroke belongs to the CWO polyline (and its legend sample)
    for (std::size_t pos = svg.find("<polyline"); pos != std::string::npos;
         pos = svg.find("<polyline", pos + 1)) {
        const std::string tag = svg.substr(pos, svg.find("/>", pos) - pos);
        const bool dashed = tag.find("stroke-dasharray") != std::string::npos;
        const bool cwo_color = tag.find("#d62728") != std::string::npos;
        EXPECT_EQ(dashed, cwo_color);
    }
    EXPECT_NE(svg.find("stroke-dasharray"), std::string::npos);
    EXPECT_NE(svg.find(">NN-CWO</text>"), std::string::npos);
    EXPECT_NE(svg.find(">CWO</text>"), std::string::npos);
    EXPECT_NE(svg.find("sample size"), std::string::npos);
    EXPECT_NE(svg.find("MAAE"), std::string::npos);

    // decreasing MAAE maps to increasing pixel y (SVG y grows downward)
    const std::size_t points_at = svg.find("points=\"", svg.find("<polyline"));
    ASSERT_NE(points_at, std::string::npos);
    const std::size_t end = svg.find('"', points_at + 8);
    std::stringstream pts(svg.substr(points_at + 8, end - points_at - 8));
    double x, y, prev_y = -1;
    char comma;
    int count = 0;
    while (pts >> x >> comma >> y) {
        EXPECT_GT(y, prev_y);
        prev_y = y;
        ++count;
    }
    EXPECT_EQ(count, 5);

    EXPECT_THROW(emit_svg(rows, 3, tmp.prefix("missing.svg")), std::invalid_argument);
}
