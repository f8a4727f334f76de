#include "cwo/bench.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <thread>

#include <nlohmann/json.hpp>

#include "cwo/dataset.hpp"
#include "cwo/rng.hpp"

namespace cwo {

namespace {

constexpr std::uint64_t kCoeffTag = 0x636f;
constexpr std::uint64_t kDataTag = 0x6461;
constexpr std::uint64_t kTruthTag = 0x7472;
constexpr std::uint64_t kEstimateTag = 0x6573;

int binary_variable_count(Scenario kind, int dim) {
    switch (kind) {
        case Scenario::FrontDoor: return dim + 2;  // U, X, Z block
        case Scenario::Surrogate: return dim + 2;  // Z block, X, W
        case Scenario::Msbd: return 2 * dim + 3;   // Z blocks, X1, Y1, X2
    }
    throw std::logic_error("unknown scenario");
}

std::uint64_t dataset_seed(const BenchConfig& cfg, int dim, int size, int rep) {
    using rng::combine;
    return combine(combine(combine(combine(cfg.base_seed, kDataTag), static_cast<std::uint64_t>(dim)),
                           static_cast<std::uint64_t>(size)),
                   static_cast<std::uint64_t>(rep));
}

std::string method_list(const std::vector<Backend>& methods) {
    std::string out;
    for (const auto& m : methods) {
        if (!out.empty()) out += ',';
        out += to_string(m);
    }
    return out;
}

}  // namespace

std::string to_string(TruthMode m) {
    return m == TruthMode::Exact ? "exact" : "mc";
}

TruthMode truth_mode_from_string(const std::string& name) {
    if (name == "exact") return TruthMode::Exact;
    if (name == "mc") return TruthMode::Mc;
    throw std::invalid_argument("unknown truth mode '" + name + "' (expected exact|mc)");
}

void BenchConfig::validate() const {
    if (dims.empty()) throw std::invalid_argument("bench config: dims is empty");
    for (int d : dims)
        if (d < 1) throw std::invalid_argument("bench config: dims must be >= 1");
    if (sizes.empty()) throw std::invalid_argument("bench config: sizes is empty");
    for (std::size_t i = 0; i < sizes.size(); ++i) {
        if (sizes[i] < 1) throw std::invalid_argument("bench config: sizes must be >= 1");
        if (i > 0 && sizes[i] <= sizes[i - 1])
            throw std::invalid_argument("bench config: sizes must be strictly increasing");
    }
    if (reps < 1) throw std::invalid_argument("bench config: reps must be >= 1");
    if (methods.empty()) throw std::invalid_argument("bench config: methods is empty");
    if (truth_samples < 1) throw std::invalid_argument("bench config: truth_samples must be >= 1");
    if (!(clip_eps > 0.0) || clip_eps >= 0.5)
        throw std::invalid_argument("bench config: clip_eps must lie in (0, 0.5)");
    if (!(noise_sd >= 0.0)) throw std::invalid_argument("bench config: noise_sd must be >= 0");
    hp.validate();
    if (truth_mode == TruthMode::Exact)
        for (int d : dims)
            if (binary_variable_count(scenario, d) > kEnumerationBound)
                throw std::invalid_argument(
                    "bench config: dim " + std::to_string(d) +
                    " exceeds the exact-truth enumeration bound; use truth_mode=mc");
}

BenchConfig BenchConfig::from_json(const std::string& text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw std::invalid_argument(std::string("bench config: invalid JSON: ") + e.what());
    }
    if (!doc.is_object()) throw std::invalid_argument("bench config: expected a JSON object");
    static const std::vector<std::string> known = {
        "scenario", "dims",       "sizes",    "reps",      "methods", "truth_mode",
        "truth_samples", "base_seed", "hp",    "clip_eps",  "noise_sd"};
    for (const auto& [key, value] : doc.items())
        if (std::find(known.begin(), known.end(), key) == known.end())
            throw std::invalid_argument("bench config: unknown key '" + key + "'");

    BenchConfig cfg;
    try {
        if (doc.contains("scenario"))
            cfg.scenario = scenario_from_string(doc["scenario"].get<std::string>());
        if (doc.contains("dims")) cfg.dims = doc["dims"].get<std::vector<int>>();
        else cfg.dims = desk_default(cfg.scenario).dims;
        if (doc.contains("sizes")) cfg.sizes = doc["sizes"].get<std::vector<int>>();
        if (doc.contains("reps")) cfg.reps = doc["reps"].get<int>();
        if (doc.contains("methods")) {
            cfg.methods.clear();
            for (const auto& m : doc["methods"])
                cfg.methods.push_back(backend_from_string(m.get<std::string>()));
        }
        if (doc.contains("truth_mode"))
            cfg.truth_mode = truth_mode_from_string(doc["truth_mode"].get<std::string>());
        if (doc.contains("truth_samples")) cfg.truth_samples = doc["truth_samples"].get<std::int64_t>();
        if (doc.contains("base_seed")) cfg.base_seed = doc["base_seed"].get<std::uint64_t>();
        if (doc.contains("hp")) cfg.hp = Hyperparams::from_json(doc["hp"].dump());
        if (doc.contains("clip_eps")) cfg.clip_eps = doc["clip_eps"].get<double>();
        if (doc.contains("noise_sd")) cfg.noise_sd = doc["noise_sd"].get<double>();
    } catch (const nlohmann::json::exception& e) {
        throw std::invalid_argument(std::string("bench config: bad field type: ") + e.what());
    }
    cfg.validate();
    return cfg;
}

BenchConfig BenchConfig::from_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return from_json(ss.str());
}

BenchConfig BenchConfig::desk_default(Scenario kind) {
    BenchConfig cfg;
    cfg.scenario = kind;
    cfg.dims = kind == Scenario::Msbd ? std::vector<int>{1, 8} : std::vector<int>{1, 16};
    return cfg;
}

BenchConfig BenchConfig::paper_scale(Scenario kind) {
    BenchConfig cfg = desk_default(kind);
    cfg.reps = 100;
    cfg.sizes.clear();
    for (int n = 500; n <= 10000; n += 500) cfg.sizes.push_back(n);
    cfg.truth_mode = TruthMode::Mc;
    cfg.truth_samples = 10'000'000;
    return cfg;
}

double aae(const EffectEstimate& estimate, const EffectEstimate& truth) {
    if (estimate.mu.size() != truth.mu.size())
        throw std::invalid_argument("aae: assignment grids differ");
    double acc = 0.0;
    for (const auto& [key, value] : estimate.mu) {
        auto it = truth.mu.find(key);
        if (it == truth.mu.end())
            throw std::invalid_argument("aae: truth grid is missing assignment '" + key + "'");
        acc += std::abs(value - it->second);
    }
    return acc / static_cast<double>(estimate.mu.size());
}

double median(std::vector<double> values) {
    if (values.empty()) throw std::invalid_argument("median: no values");
    std::sort(values.begin(), values.end());
    const std::size_t n = values.size();
    if (n % 2 == 1) return values[n / 2];
    return 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

EffectEstimate truth_estimate(const Scm& scm, TruthMode mode, std::int64_t mc_samples,
                              std::uint64_t mc_seed) {
    EffectEstimate out;
    out.scenario = scm.kind;
    for (const auto& a : assignment_grid(scm.kind)) {
        const double mu = mode == TruthMode::Exact
                              ? exact_truth(scm, a)
                              : mc_truth(scm, a, static_cast<Eigen::Index>(mc_samples), mc_seed);
        out.mu[a.key()] = mu;
    }
    return out;
}

BenchResult run_benchmark(const BenchConfig& config, int workers,
                          const std::function<void(const std::string&)>& progress,
                          const std::function<void(const std::string&)>& warn) {
    config.validate();
    if (workers <= 0) workers = static_cast<int>(std::thread::hardware_concurrency());
    if (workers < 1) workers = 1;

    // One model and one truth per dim: neither depends on the sample.
    struct DimContext {
        Scm scm;
        EffectEstimate truth;
    };
    std::vector<DimContext> contexts;
    contexts.reserve(config.dims.size());
    for (int dim : config.dims) {
        ScenarioSpec spec{config.scenario, dim,
                          rng::combine(rng::combine(config.base_seed, kCoeffTag),
                                       static_cast<std::uint64_t>(dim)),
                          config.noise_sd};
        Scm scm = build_scenario(spec);
        EffectEstimate truth = truth_estimate(
            scm, config.truth_mode, config.truth_samples,
            rng::combine(rng::combine(config.base_seed, kTruthTag), static_cast<std::uint64_t>(dim)));
        contexts.push_back({std::move(scm), std::move(truth)});
    }

    struct Task {
        std::size_t dim_index;
        std::size_t size_index;
        int rep;
    };
    std::vector<Task> tasks;
    for (std::size_t di = 0; di < config.dims.size(); ++di)
        for (std::size_t si = 0; si < config.sizes.size(); ++si)
            for (int rep = 0; rep < config.reps; ++rep) tasks.push_back({di, si, rep});

    const std::size_t methods_per_task = config.methods.size();
    std::vector<BenchRecord> records(tasks.size() * methods_per_task);

    // Per-(dim, size) completion counters for progress reporting.
    std::vector<std::atomic<int>> remaining(config.dims.size() * config.sizes.size());
    for (auto& r : remaining) r.store(config.reps);
    std::mutex progress_mutex;

    std::atomic<std::size_t> next_task{0};
    auto worker = [&]() {
        for (;;) {
            const std::size_t t = next_task.fetch_add(1);
            if (t >= tasks.size()) break;
            const Task& task = tasks[t];
            const int dim = config.dims[task.dim_index];
            const int size = config.sizes[task.size_index];
            const DimContext& ctx = contexts[task.dim_index];
            const std::uint64_t data_seed = dataset_seed(config, dim, size, task.rep);

            BenchRecord base;
            base.scenario = config.scenario;
            base.dim = dim;
            base.size = size;
            base.rep = task.rep;

            Dataset data;
            std::string sample_error;
            try {
                data = sample(ctx.scm, size, data_seed);
                base.dataset_checksum = data.checksum();
            } catch (const std::exception& e) {
                sample_error = e.what();
            }

            for (std::size_t mi = 0; mi < methods_per_task; ++mi) {
                BenchRecord record = base;
                record.method = config.methods[mi];
                if (!sample_error.empty()) {
                    record.failed = true;
                    record.error = "sampling failed: " + sample_error;
                } else {
                    EstimateOptions opt;
                    opt.hp = config.hp;
                    opt.backend = config.methods[mi];
                    opt.clip_eps = config.clip_eps;
                    opt.seed = rng::combine(rng::combine(data_seed, kEstimateTag),
                                            static_cast<std::uint64_t>(mi));
                    const auto start = std::chrono::steady_clock::now();
                    try {
                        const EffectEstimate est = estimate(config.scenario, data, opt);
                        record.aae = aae(est, ctx.truth);
                    } catch (const std::exception& e) {
                        record.failed = true;
                        record.error = e.what();
                    }
                    record.wall_time =
                        std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
                            .count();
                }
                records[t * methods_per_task + mi] = std::move(record);
            }

            const std::size_t cell = task.dim_index * config.sizes.size() + task.size_index;
            if (remaining[cell].fetch_sub(1) == 1 && progress) {
                std::ostringstream line;
                line << to_string(config.scenario) << " dim=" << dim << " n=" << size << ": "
                     << config.reps << " reps done [" << method_list(config.methods) << "]";
                std::lock_guard<std::mutex> lock(progress_mutex);
                progress(line.str());
            }
        }
    };

    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int i = 0; i < workers; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();

    BenchResult result;
    result.records = std::move(records);

    for (const auto& record : result.records)
        if (record.failed && warn)
            warn("replication failed (" + to_string(record.scenario) + " " +
                 to_string(record.method) + " dim=" + std::to_string(record.dim) +
                 " n=" + std::to_string(record.size) + " rep=" + std::to_string(record.rep) +
                 "): " + record.error);

    for (const Backend method : config.methods)
        for (std::size_t di = 0; di < config.dims.size(); ++di)
            for (std::size_t si = 0; si < config.sizes.size(); ++si) {
                std::vector<double> aaes;
                for (const auto& record : result.records)
                    if (!record.failed && record.method == method &&
                        record.dim == config.dims[di] && record.size == config.sizes[si])
                        aaes.push_back(record.aae);
                if (aaes.empty()) continue;
                MaaeRow row;
                row.scenario = config.scenario;
                row.method = method;
                row.dim = config.dims[di];
                row.size = config.sizes[si];
                row.maae = median(aaes);
                row.reps = static_cast<int>(aaes.size());
                result.maae.push_back(row);
            }
    return result;
}

void emit_csv(const std::vector<BenchRecord>& records, const std::vector<MaaeRow>& maae_rows,
              const std::string& path_prefix) {
    if (records.empty() && maae_rows.empty())
        throw std::invalid_argument("emit_csv: nothing to write");

    auto record_key = [](const BenchRecord& r) {
        return std::make_tuple(to_string(r.scenario), to_string(r.method), r.dim, r.size, r.rep);
    };
    std::vector<BenchRecord> sorted_records;
    for (const auto& r : records)
        if (!r.failed) sorted_records.push_back(r);
    std::sort(sorted_records.begin(), sorted_records.end(),
              [&](const BenchRecord& a, const BenchRecord& b) { return record_key(a) < record_key(b); });

    const std::string records_path = path_prefix + "_records.csv";
    std::ofstream rec_out(records_path);
    if (!rec_out) throw std::runtime_error("cannot open '" + records_path + "' for writing");
    rec_out << "scenario,method,dim,size,rep,aae,wall_time\n";
    for (const auto& r : sorted_records)
        rec_out << to_string(r.scenario) << ',' << to_string(r.method) << ',' << r.dim << ','
                << r.size << ',' << r.rep << ',' << format_value(r.aae) << ','
                << format_value(r.wall_time) << '\n';
    if (!rec_out.good()) throw std::runtime_error("write failed for '" + records_path + "'");
    rec_out.close();

    auto maae_key = [](const MaaeRow& r) {
        return std::make_tuple(to_string(r.scenario), to_string(r.method), r.dim, r.size);
    };
    std::vector<MaaeRow> sorted_rows = maae_rows;
    std::sort(sorted_rows.begin(), sorted_rows.end(),
              [&](const MaaeRow& a, const MaaeRow& b) { return maae_key(a) < maae_key(b); });

    const std::string maae_path = path_prefix + "_maae.csv";
    std::ofstream maae_out(maae_path);
    if (!maae_out) throw std::runtime_error("cannot open '" + maae_path + "' for writing");
    maae_out << "scenario,method,dim,size,maae,reps\n";
    for (const auto& r : sorted_rows)
        maae_out << to_string(r.scenario) << ',' << to_string(r.method) << ',' << r.dim << ','
                 << r.size << ',' << format_value(r.maae) << ',' << r.reps << '\n';
    if (!maae_out.good()) throw std::runtime_error("write failed for '" + maae_path + "'");
}

void emit_svg(const std::vector<MaaeRow>& maae_rows, int dim, const std::string& path) {
    std::vector<MaaeRow> rows;
    for (const auto& r : maae_rows)
        if (r.dim == dim) rows.push_back(r);
    if (rows.empty())
        throw std::invalid_argument("emit_svg: no rows for dim " + std::to_string(dim));
    for (const auto& r : rows)
        if (r.scenario != rows.front().scenario)
            throw std::invalid_argument("emit_svg: pass rows of a single scenario");

    std::vector<Backend> methods;
    std::vector<int> sizes;
    double max_maae = 0.0;
    for (const auto& r : rows) {
        if (std::find(methods.begin(), methods.end(), r.method) == methods.end())
            methods.push_back(r.method);
        if (std::find(sizes.begin(), sizes.end(), r.size) == sizes.end()) sizes.push_back(r.size);
        max_maae = std::max(max_maae, r.maae);
    }
    std::sort(sizes.begin(), sizes.end());
    if (max_maae <= 0.0) max_maae = 1.0;

    constexpr double kWidth = 640, kHeight = 420;
    constexpr double kLeft = 74, kRight = 24, kTop = 46, kBottom = 56;
    const double plot_w = kWidth - kLeft - kRight;
    const double plot_h = kHeight - kTop - kBottom;
    const double x_min = sizes.front(), x_max = sizes.back();
    const double y_max = max_maae * 1.05;

    auto x_px = [&](double n) {
        return x_max == x_min ? kLeft + plot_w / 2 : kLeft + (n - x_min) / (x_max - x_min) * plot_w;
    };
    auto y_px = [&](double v) { return kTop + (1.0 - v / y_max) * plot_h; };
    auto fmt = [](double v) {
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%.6g", v);
        return std::string(buf);
    };

    std::ostringstream svg;
    svg << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
        << "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" << kWidth
        << "\" height=\"" << kHeight << "\" viewBox=\"0 0 " << kWidth << ' ' << kHeight << "\">\n"
        << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
        << "<text x=\"" << kWidth / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"15\" "
        << "font-family=\"sans-serif\">" << to_string(rows.front().scenario) << " dim=" << dim
        << ": MAAE vs sample size</text>\n";

    // Axes
    svg << "<line x1=\"" << kLeft << "\" y1=\"" << kTop + plot_h << "\" x2=\"" << kLeft + plot_w
        << "\" y2=\"" << kTop + plot_h << "\" stroke=\"black\"/>\n"
        << "<line x1=\"" << kLeft << "\" y1=\"" << kTop << "\" x2=\"" << kLeft << "\" y2=\""
        << kTop + plot_h << "\" stroke=\"black\"/>\n";
    for (int t = 0; t <= 5; ++t) {
        const double v = y_max * t / 5.0;
        svg << "<line x1=\"" << kLeft - 4 << "\" y1=\"" << y_px(v) << "\" x2=\"" << kLeft
            << "\" y2=\"" << y_px(v) << "\" stroke=\"black\"/>\n"
            << "<text x=\"" << kLeft - 8 << "\" y=\"" << y_px(v) + 4
            << "\" text-anchor=\"end\" font-size=\"11\" font-family=\"sans-serif\">" << fmt(v)
            << "</text>\n";
    }
    for (int n : sizes) {
        svg << "<line x1=\"" << x_px(n) << "\" y1=\"" << kTop + plot_h << "\" x2=\"" << x_px(n)
            << "\" y2=\"" << kTop + plot_h + 4 << "\" stroke=\"black\"/>\n"
            << "<text x=\"" << x_px(n) << "\" y=\"" << kTop + plot_h + 18
            << "\" text-anchor=\"middle\" font-size=\"11\" font-family=\"sans-serif\">" << n
            << "</text>\n";
    }
    svg << "<text x=\"" << kLeft + plot_w / 2 << "\" y=\"" << kHeight - 14
        << "\" text-anchor=\"middle\" font-size=\"13\" font-family=\"sans-serif\">sample size</text>\n"
        << "<text x=\"20\" y=\"" << kTop + plot_h / 2
        << "\" text-anchor=\"middle\" font-size=\"13\" font-family=\"sans-serif\" transform=\"rotate(-90 20 "
        << kTop + plot_h / 2 << ")\">MAAE</text>\n";

    // Solid stroke for NN-CWO, dashed for CWO.
    auto style = [](Backend m) {
        return m == Backend::NnCwo
                   ? std::string("stroke=\"#1f77b4\"")
                   : std::string("stroke=\"#d62728\" stroke-dasharray=\"7,4\"");
    };
    for (const Backend method : methods) {
        std::ostringstream points;
        for (int n : sizes)
            for (const auto& r : rows)
                if (r.method == method && r.size == n)
                    points << x_px(n) << ',' << y_px(r.maae) << ' ';
        svg << "<polyline fill=\"none\" stroke-width=\"2\" " << style(method) << " points=\""
            << points.str() << "\"/>\n";
    }

    const double lx = kLeft + plot_w - 120, ly = kTop + 10;
    for (std::size_t mi = 0; mi < methods.size(); ++mi) {
        const double y = ly + 18 * static_cast<double>(mi);
        svg << "<line x1=\"" << lx << "\" y1=\"" << y << "\" x2=\"" << lx + 28 << "\" y2=\"" << y
            << "\" stroke-width=\"2\" " << style(methods[mi]) << "/>\n"
            << "<text x=\"" << lx + 34 << "\" y=\"" << y + 4
            << "\" font-size=\"12\" font-family=\"sans-serif\">"
            << (methods[mi] == Backend::NnCwo ? "NN-CWO" : "CWO") << "</text>\n";
    }
    svg << "</svg>\n";

    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
    out << svg.str();
    if (!out.good()) throw std::runtime_error("write failed for '" + path + "'");
}

}  // namespace cwo
