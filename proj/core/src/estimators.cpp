#include "cwo/estimators.hpp"

#include <stdexcept>

#include <nlohmann/json.hpp>

#include "cwo/glm.hpp"
#include "cwo/rng.hpp"

namespace cwo {

namespace {

constexpr std::uint64_t kStageA = 0xa;
constexpr std::uint64_t kStageB = 0xb;

void require_columns(const Dataset& data, std::initializer_list<const char*> names) {
    for (const char* name : names)
        if (!data.has_column(name))
            throw std::invalid_argument(std::string("missing column '") + name + "'");
}

}  // namespace

std::string to_string(Backend b) {
    switch (b) {
        case Backend::NnCwo: return "nncwo";
        case Backend::Cwo: return "cwo";
    }
    throw std::logic_error("unknown backend");
}

Backend backend_from_string(const std::string& name) {
    if (name == "nncwo") return Backend::NnCwo;
    if (name == "cwo") return Backend::Cwo;
    throw std::invalid_argument("unknown method '" + name + "' (expected nncwo|cwo)");
}

std::string EffectEstimate::to_json() const {
    nlohmann::json doc;
    doc["scenario"] = cwo::to_string(scenario);
    doc["backend"] = cwo::to_string(backend);
    doc["mu"] = nlohmann::json::object();
    for (const auto& [key, value] : mu) doc["mu"][key] = value;
    return doc.dump(2);
}

Eigen::VectorXd nn_cwo(const Eigen::MatrixXd& features, const Eigen::VectorXd& target,
                       const Eigen::MatrixXd& pred_points, const Eigen::VectorXd& weights,
                       const Hyperparams& hp, Backend backend, std::uint64_t seed) {
    const Eigen::Index d = features.cols();
    if (d < 1) throw std::invalid_argument("nn_cwo: need at least one feature");
    if (pred_points.cols() != d)
        throw std::invalid_argument("nn_cwo: prediction point width mismatch");
    if (backend == Backend::Cwo || d == 1) {
        const LinearModel model = fit_wls(features, target, weights);
        return predict_linear(model, pred_points);
    }
    Mlp mlp = build_mlp(static_cast<int>(d), hp, seed);
    auto [trained, report] = train(std::move(mlp), features, target, weights, hp, seed);
    (void)report;
    return forward(trained, pred_points);
}

EffectEstimate estimate_frontdoor(const Dataset& data, const EstimateOptions& opt) {
    require_columns(data, {"X", "Y", "Z1"});
    const std::vector<std::string> z_block = data.block("Z");

    const WeightVector stage2 =
        normalized(frontdoor_stage_weights(data, opt.clip_eps).stage2);

    // Stage A: weighted regression of Y on Z, predicted at the observed Z rows.
    const Eigen::MatrixXd z = data.select(z_block);
    const Eigen::VectorXd smoothed = nn_cwo(z, data.column("Y"), z, stage2.values, opt.hp,
                                            opt.backend, rng::combine(opt.seed, kStageA));

    // Stage B: unit-weight regression of the stage-A predictions on X,
    // evaluated at the treatment grid; d = 1, so WLS under both backends.
    Eigen::MatrixXd x_test(2, 1);
    x_test << 0.0, 1.0;
    const Eigen::VectorXd mu =
        nn_cwo(data.column("X"), smoothed, x_test, Eigen::VectorXd::Ones(data.rows()), opt.hp,
               opt.backend, rng::combine(opt.seed, kStageB));

    EffectEstimate out;
    out.scenario = Scenario::FrontDoor;
    out.backend = opt.backend;
    out.mu["0"] = mu[0];
    out.mu["1"] = mu[1];
    return out;
}

EffectEstimate estimate_surrogate(const Dataset& data, const EstimateOptions& opt) {
    require_columns(data, {"X", "W", "Y", "Z1"});
    const WeightVector w = normalized(surrogate_weights(data, opt.clip_eps, opt.surrogate_mode));

    Eigen::MatrixXd features(data.rows(), 2);
    features.col(0) = data.column("X");
    features.col(1) = data.column("W");
    Eigen::MatrixXd x_test(2, 2);
    x_test << 0.0, 1.0,  // do(X=0): the surrogate takes W = 1
        1.0, 0.0;        // do(X=1): W = 0
    const Eigen::VectorXd mu = nn_cwo(features, data.column("Y"), x_test, w.values, opt.hp,
                                      opt.backend, rng::combine(opt.seed, kStageA));

    EffectEstimate out;
    out.scenario = Scenario::Surrogate;
    out.backend = opt.backend;
    out.mu["0"] = mu[0];
    out.mu["1"] = mu[1];
    return out;
}

EffectEstimate estimate_msbd(const Dataset& data, const EstimateOptions& opt) {
    require_columns(data, {"X1", "X2", "Y1", "Y2", "Z1_1", "Z2_1"});
    std::vector<MsbdStage> stages(2);
    stages[0] = {"X1", data.block("Z1_"), {}};
    stages[1] = {"X2", data.block("Z2_"), {"Y1"}};
    const WeightVector w = normalized(msbd_weights(data, stages, opt.clip_eps));

    Eigen::MatrixXd features(data.rows(), 2);
    features.col(0) = data.column("X1");
    features.col(1) = data.column("X2");
    Eigen::MatrixXd x_test(4, 2);
    x_test << 0.0, 0.0, 0.0, 1.0, 1.0, 0.0, 1.0, 1.0;
    const Eigen::VectorXd mu = nn_cwo(features, data.column("Y2"), x_test, w.values, opt.hp,
                                      opt.backend, rng::combine(opt.seed, kStageA));

    EffectEstimate out;
    out.scenario = Scenario::Msbd;
    out.backend = opt.backend;
    out.mu["00"] = mu[0];
    out.mu["01"] = mu[1];
    out.mu["10"] = mu[2];
    out.mu["11"] = mu[3];
    return out;
}

EffectEstimate estimate(Scenario kind, const Dataset& data, const EstimateOptions& opt) {
    switch (kind) {
        case Scenario::FrontDoor: return estimate_frontdoor(data, opt);
        case Scenario::Surrogate: return estimate_surrogate(data, opt);
        case Scenario::Msbd: return estimate_msbd(data, opt);
    }
    throw std::logic_error("unknown scenario");
}

}  // namespace cwo
