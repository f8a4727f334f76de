#pragma once

#include <Eigen/Core>

namespace cwo {

struct LinearModel {
    double intercept = 0.0;
    Eigen::VectorXd slopes;
    bool used_ridge_fallback = false;  // set when the design was rank-deficient
};

struct LogisticModel {
    double intercept = 0.0;
    Eigen::VectorXd slopes;
    double ridge_lambda = 0.0;
    bool converged = true;
};

/// Weighted least squares: minimizes sum_i w_i (y_i - b0 - b.x_i)^2.
/// A rank-deficient design falls back to a ridge solve (lambda = 1e-8 on
/// the slopes) and flags the result. Throws on non-finite input, on
/// non-positive weights, and when n <= d.
[[nodiscard]] LinearModel fit_wls(const Eigen::MatrixXd& features, const Eigen::VectorXd& target,
                                  const Eigen::VectorXd& weights);

[[nodiscard]] Eigen::VectorXd predict_linear(const LinearModel& model,
                                             const Eigen::MatrixXd& features);

/// Weighted logistic regression by iteratively reweighted least squares,
/// ridge-penalized on the slopes (never the intercept). Converged when the
/// largest parameter change drops below 1e-8, capped at 100 iterations;
/// otherwise the best iterate is returned with converged = false. A
/// single-class target requires ridge_lambda > 0.
[[nodiscard]] LogisticModel fit_logistic(const Eigen::MatrixXd& features,
                                         const Eigen::VectorXd& target,
                                         const Eigen::VectorXd* weights = nullptr,
                                         double ridge_lambda = 1e-4);

/// sigmoid(b0 + b.x) per row; no clipping here.
[[nodiscard]] Eigen::VectorXd predict_proba(const LogisticModel& model,
                                            const Eigen::MatrixXd& features);

}  // namespace cwo
