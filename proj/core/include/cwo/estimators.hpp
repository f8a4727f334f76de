#pragma once

#include <cstdint>
#include <map>
#include <string>

#include <Eigen/Core>

#include "cwo/dataset.hpp"
#include "cwo/neural.hpp"
#include "cwo/scenario.hpp"
#include "cwo/weights.hpp"

namespace cwo {

enum class Backend {
    NnCwo,  // neural network when feature dimension != 1, WLS when == 1
    Cwo,    // WLS at every stage
};

[[nodiscard]] std::string to_string(Backend b);
[[nodiscard]] Backend backend_from_string(const std::string& name);

/// Estimated interventional means over a scenario's full treatment grid,
/// keyed by TreatmentAssignment::key().
struct EffectEstimate {
    Scenario scenario = Scenario::FrontDoor;
    Backend backend = Backend::NnCwo;
    std::map<std::string, double> mu;

    [[nodiscard]] std::string to_json() const;
};

/// The dispatching operator: fits a regression of `target` on `features`
/// with sample weights and returns predictions at `pred_points`. Chooses
/// the network for d != 1 under NnCwo, weighted least squares otherwise.
[[nodiscard]] Eigen::VectorXd nn_cwo(const Eigen::MatrixXd& features,
                                     const Eigen::VectorXd& target,
                                     const Eigen::MatrixXd& pred_points,
                                     const Eigen::VectorXd& weights, const Hyperparams& hp,
                                     Backend backend, std::uint64_t seed);

struct EstimateOptions {
    Hyperparams hp;
    Backend backend = Backend::NnCwo;
    double clip_eps = kDefaultClipEps;
    std::uint64_t seed = 0;
    SurrogateConditioning surrogate_mode = SurrogateConditioning::OnZ;
};

/// Two-stage composition: a weighted regression of Y on the Z block
/// (weights P(z)/P(z|x)) predicted at the observed Z rows, then an
/// unweighted regression of those predictions on X evaluated at {0,1}.
[[nodiscard]] EffectEstimate estimate_frontdoor(const Dataset& data, const EstimateOptions& opt);

/// Single weighted regression of Y on (X, W), weights P(w)/P(w|z),
/// evaluated at (x,w) in {(0,1),(1,0)}.
[[nodiscard]] EffectEstimate estimate_surrogate(const Dataset& data, const EstimateOptions& opt);

/// Single weighted regression of Y2 on (X1, X2) with sequential stabilized
/// weights, evaluated on the full {0,1}^2 grid.
[[nodiscard]] EffectEstimate estimate_msbd(const Dataset& data, const EstimateOptions& opt);

[[nodiscard]] EffectEstimate estimate(Scenario kind, const Dataset& data,
                                      const EstimateOptions& opt);

}  // namespace cwo
