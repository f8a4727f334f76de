#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "cwo/dataset.hpp"
#include "cwo/glm.hpp"

namespace cwo {

inline constexpr double kDefaultClipEps = 0.01;

/// Per-sample positive weights realizing one weighting operator.
struct WeightVector {
    Eigen::VectorXd values;
    double clip_eps = kDefaultClipEps;
};

/// Rescales to mean 1; applied before model fitting for conditioning.
[[nodiscard]] WeightVector normalized(WeightVector w);

/// One conditional probability factor P(target | conditioning), backed by a
/// logistic fit, or by the empirical frequency when the conditioning set is
/// empty. Evaluated probabilities are clipped into [clip_eps, 1-clip_eps].
struct PropensityModel {
    std::string target;
    std::vector<std::string> conditioning;
    std::optional<LogisticModel> model;  // nullopt: empirical frequency
    double frequency_one = 0.0;
    double clip_eps = kDefaultClipEps;

    [[nodiscard]] Eigen::VectorXd prob_one(const Dataset& data) const;
    /// P(target = observed value | conditioning) per row, clipped.
    [[nodiscard]] Eigen::VectorXd prob_observed(const Dataset& data) const;
};

/// Fits P(target | conditioning) on `data`. The target column must be
/// binary and non-constant (a constant column is an error naming it).
[[nodiscard]] PropensityModel fit_propensity(const Dataset& data, const std::string& target,
                                             std::vector<std::string> conditioning,
                                             double clip_eps = kDefaultClipEps);

/// Stabilized back-door weights w_i = P(x_i) / P(x_i | z_i).
[[nodiscard]] WeightVector bd_weights(const Dataset& data, const std::string& treatment,
                                      std::span<const std::string> covariates,
                                      double clip_eps = kDefaultClipEps);

/// One step of a sequential treatment plan: its treatment, its covariate
/// block, and any outcomes realized since the previous treatment.
struct MsbdStage {
    std::string treatment;
    std::vector<std::string> covariates;
    std::vector<std::string> prior_outcomes;
};

/// Sequential stabilized weights
///   w_i = P(x_1..x_K) / prod_k P(x_k | x_(<k), y_(<k), z_(<=k)).
/// Numerator: empirical joint frequency of the observed treatment combo.
[[nodiscard]] WeightVector msbd_weights(const Dataset& data, std::span<const MsbdStage> stages,
                                        double clip_eps = kDefaultClipEps);

enum class SurrogateConditioning {
    OnZ,   // P(w) / P(w | z)
    OnXZ,  // P(w) / P(w | x, z)
};

/// Surrogate weights w_i = P(w_i) / P(w_i | z_i); columns W and Z block
/// required.
[[nodiscard]] WeightVector surrogate_weights(const Dataset& data,
                                             double clip_eps = kDefaultClipEps,
                                             SurrogateConditioning mode = SurrogateConditioning::OnZ);

struct FrontdoorStageWeights {
    WeightVector stage1;  // identically 1
    WeightVector stage2;  // P(z) / P(z | x), chain-ruled over the Z block
};

/// Front-door weights; columns X and Z block required. Both the numerator
/// and the denominator of stage 2 factor over the Z components by the
/// chain rule, every factor clipped.
[[nodiscard]] FrontdoorStageWeights frontdoor_stage_weights(const Dataset& data,
                                                            double clip_eps = kDefaultClipEps);

}  // namespace cwo
