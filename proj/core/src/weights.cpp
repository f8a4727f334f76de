#include "cwo/weights.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

namespace cwo {

namespace {

void check_clip(double clip_eps) {
    if (!(clip_eps > 0.0) || clip_eps >= 0.5)
        throw std::invalid_argument("clip_eps must lie in (0, 0.5)");
}

Eigen::VectorXd clipped(Eigen::VectorXd p, double eps) {
    return p.cwiseMax(eps).cwiseMin(1.0 - eps);
}

void check_binary_column(const Dataset& data, const std::string& name) {
    const auto& info = data.columns()[static_cast<std::size_t>(data.column_index(name))];
    if (info.kind != ValueKind::Binary)
        throw std::invalid_argument("column '" + name + "' is not binary");
}

double clip_value(double p, double eps) { return std::clamp(p, eps, 1.0 - eps); }

}  // namespace

WeightVector normalized(WeightVector w) {
    const double mean = w.values.mean();
    if (!(mean > 0.0)) throw std::invalid_argument("weights: non-positive mean");
    w.values /= mean;
    return w;
}

Eigen::VectorXd PropensityModel::prob_one(const Dataset& data) const {
    if (conditioning.empty())
        return Eigen::VectorXd::Constant(data.rows(), clip_value(frequency_one, clip_eps));
    return clipped(predict_proba(*model, data.select(conditioning)), clip_eps);
}

Eigen::VectorXd PropensityModel::prob_observed(const Dataset& data) const {
    const Eigen::VectorXd p1 = prob_one(data);
    const Eigen::VectorXd observed = data.column(target);
    Eigen::VectorXd out(p1.size());
    for (Eigen::Index i = 0; i < p1.size(); ++i)
        out[i] = observed[i] == 1.0 ? p1[i] : 1.0 - p1[i];
    return out;
}

PropensityModel fit_propensity(const Dataset& data, const std::string& target,
                               std::vector<std::string> conditioning, double clip_eps) {
    check_clip(clip_eps);
    if (data.rows() == 0) throw std::invalid_argument("fit_propensity: empty dataset");
    check_binary_column(data, target);
    const Eigen::VectorXd y = data.column(target);
    const double freq = y.mean();
    if (freq == 0.0 || freq == 1.0)
        throw std::invalid_argument("propensity for '" + target + "' is degenerate: column is constant");

    PropensityModel pm;
    pm.target = target;
    pm.conditioning = std::move(conditioning);
    pm.clip_eps = clip_eps;
    pm.frequency_one = freq;
    if (!pm.conditioning.empty())
        pm.model = fit_logistic(data.select(pm.conditioning), y);
    return pm;
}

WeightVector bd_weights(const Dataset& data, const std::string& treatment,
                        std::span<const std::string> covariates, double clip_eps) {
    check_clip(clip_eps);
    if (data.rows() == 0) throw std::invalid_argument("bd_weights: empty dataset");
    if (covariates.empty()) throw std::invalid_argument("bd_weights: covariate set is empty");

    const PropensityModel marginal = fit_propensity(data, treatment, {}, clip_eps);
    const PropensityModel conditional = fit_propensity(
        data, treatment, {covariates.begin(), covariates.end()}, clip_eps);
    WeightVector w;
    w.clip_eps = clip_eps;
    w.values = marginal.prob_observed(data).cwiseQuotient(conditional.prob_observed(data));
    return w;
}

WeightVector msbd_weights(const Dataset& data, std::span<const MsbdStage> stages, double clip_eps) {
    check_clip(clip_eps);
    if (data.rows() == 0) throw std::invalid_argument("msbd_weights: empty dataset");
    if (stages.empty()) throw std::invalid_argument("msbd_weights: no stages");

    const Eigen::Index n = data.rows();

    // Numerator: empirical joint frequency of the observed treatment combo.
    std::vector<Eigen::VectorXd> treatment_cols;
    for (const auto& stage : stages) {
        check_binary_column(data, stage.treatment);
        treatment_cols.push_back(data.column(stage.treatment));
    }
    std::map<std::vector<int>, Eigen::Index> combo_count;
    std::vector<std::vector<int>> combos(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) {
        std::vector<int> combo;
        combo.reserve(stages.size());
        for (const auto& col : treatment_cols) combo.push_back(static_cast<int>(col[i]));
        ++combo_count[combo];
        combos[static_cast<std::size_t>(i)] = std::move(combo);
    }
    Eigen::VectorXd numerator(n);
    for (Eigen::Index i = 0; i < n; ++i)
        numerator[i] = clip_value(
            static_cast<double>(combo_count[combos[static_cast<std::size_t>(i)]]) /
                static_cast<double>(n),
            clip_eps);

    // Denominator: prod_k P(x_k | x_(<k), y_(<k), z_(<=k)).
    Eigen::VectorXd denominator = Eigen::VectorXd::Ones(n);
    std::vector<std::string> conditioning;
    for (std::size_t k = 0; k < stages.size(); ++k) {
        const MsbdStage& stage = stages[k];
        conditioning.insert(conditioning.end(), stage.covariates.begin(), stage.covariates.end());
        conditioning.insert(conditioning.end(), stage.prior_outcomes.begin(),
                            stage.prior_outcomes.end());
        const PropensityModel pm = fit_propensity(data, stage.treatment, conditioning, clip_eps);
        denominator = denominator.cwiseProduct(pm.prob_observed(data));
        conditioning.push_back(stage.treatment);
    }

    WeightVector w;
    w.clip_eps = clip_eps;
    w.values = numerator.cwiseQuotient(denominator);
    return w;
}

WeightVector surrogate_weights(const Dataset& data, double clip_eps, SurrogateConditioning mode) {
    check_clip(clip_eps);
    if (data.rows() == 0) throw std::invalid_argument("surrogate_weights: empty dataset");
    std::vector<std::string> conditioning = data.block("Z");
    if (mode == SurrogateConditioning::OnXZ)
        conditioning.insert(conditioning.begin(), "X");

    const PropensityModel marginal = fit_propensity(data, "W", {}, clip_eps);
    const PropensityModel conditional = fit_propensity(data, "W", conditioning, clip_eps);
    WeightVector w;
    w.clip_eps = clip_eps;
    w.values = marginal.prob_observed(data).cwiseQuotient(conditional.prob_observed(data));
    return w;
}

FrontdoorStageWeights frontdoor_stage_weights(const Dataset& data, double clip_eps) {
    check_clip(clip_eps);
    if (data.rows() == 0) throw std::invalid_argument("frontdoor_stage_weights: empty dataset");
    check_binary_column(data, "X");
    const std::vector<std::string> z_block = data.block("Z");

    FrontdoorStageWeights out;
    out.stage1.clip_eps = clip_eps;
    out.stage1.values = Eigen::VectorXd::Ones(data.rows());

    // P(z)/P(z|x), both sides chain-ruled over the Z components: factor j is
    // conditioned on components 1..j-1, plus X in the denominator.
    Eigen::VectorXd ratio = Eigen::VectorXd::Ones(data.rows());
    std::vector<std::string> prior;
    for (const auto& zj : z_block) {
        const PropensityModel numerator = fit_propensity(data, zj, prior, clip_eps);
        std::vector<std::string> with_x = prior;
        with_x.push_back("X");
        const PropensityModel denominator = fit_propensity(data, zj, with_x, clip_eps);
        ratio = ratio.cwiseProduct(
            numerator.prob_observed(data).cwiseQuotient(denominator.prob_observed(data)));
        prior.push_back(zj);
    }
    out.stage2.clip_eps = clip_eps;
    out.stage2.values = std::move(ratio);
    return out;
}

}  // namespace cwo
