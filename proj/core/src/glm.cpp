#include "cwo/glm.hpp"

#include <Eigen/Cholesky>
#include <Eigen/QR>
#include <cmath>
#include <stdexcept>

#include "cwo/scenario.hpp"

namespace cwo {

namespace {

void check_design(const Eigen::MatrixXd& features, const Eigen::VectorXd& target,
                  const Eigen::VectorXd* weights, const char* who) {
    if (features.rows() != target.size())
        throw std::invalid_argument(std::string(who) + ": feature/target row mismatch");
    if (!features.allFinite() || !target.allFinite())
        throw std::invalid_argument(std::string(who) + ": non-finite input");
    if (weights) {
        if (weights->size() != target.size())
            throw std::invalid_argument(std::string(who) + ": weight length mismatch");
        if (!weights->allFinite() || (weights->array() <= 0.0).any())
            throw std::invalid_argument(std::string(who) + ": weights must be positive and finite");
    }
}

Eigen::MatrixXd with_intercept(const Eigen::MatrixXd& features) {
    Eigen::MatrixXd design(features.rows(), features.cols() + 1);
    design.col(0).setOnes();
    design.rightCols(features.cols()) = features;
    return design;
}

// Penalty matrix: ridge on slopes only, never the intercept.
Eigen::MatrixXd slope_penalty(Eigen::Index p, double lambda) {
    Eigen::MatrixXd penalty = lambda * Eigen::MatrixXd::Identity(p, p);
    penalty(0, 0) = 0.0;
    return penalty;
}

double penalized_loglik(const Eigen::VectorXd& eta, const Eigen::VectorXd& target,
                        const Eigen::VectorXd& weights, const Eigen::VectorXd& beta,
                        double lambda) {
    double ll = 0.0;
    for (Eigen::Index i = 0; i < eta.size(); ++i) {
        // log sigma(eta) = -log1p(exp(-eta)), numerically stable both ways
        const double log_p = eta[i] > 0 ? -std::log1p(std::exp(-eta[i]))
                                        : eta[i] - std::log1p(std::exp(eta[i]));
        const double log_q = log_p - eta[i];
        ll += weights[i] * (target[i] * log_p + (1.0 - target[i]) * log_q);
    }
    return ll - 0.5 * lambda * beta.tail(beta.size() - 1).squaredNorm();
}

}  // namespace

LinearModel fit_wls(const Eigen::MatrixXd& features, const Eigen::VectorXd& target,
                    const Eigen::VectorXd& weights) {
    check_design(features, target, &weights, "fit_wls");
    const Eigen::Index n = features.rows();
    const Eigen::Index d = features.cols();
    if (n <= d) throw std::invalid_argument("fit_wls: need more samples than features");

    const Eigen::MatrixXd design = with_intercept(features);
    const Eigen::ArrayXd sqw = weights.array().sqrt();
    const Eigen::MatrixXd scaled = sqw.matrix().asDiagonal() * design;
    const Eigen::VectorXd scaled_target = (sqw * target.array()).matrix();

    LinearModel model;
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(scaled);
    Eigen::VectorXd beta;
    if (qr.rank() < d + 1) {
        // Rank-deficient design: ridge-regularized normal equations.
        constexpr double kFallbackLambda = 1e-8;
        const Eigen::MatrixXd gram =
            scaled.transpose() * scaled + slope_penalty(d + 1, kFallbackLambda);
        beta = gram.ldlt().solve(scaled.transpose() * scaled_target);
        model.used_ridge_fallback = true;
    } else {
        beta = qr.solve(scaled_target);
    }
    if (!beta.allFinite()) throw std::runtime_error("fit_wls: solve produced non-finite parameters");
    model.intercept = beta[0];
    model.slopes = beta.tail(d);
    return model;
}

Eigen::VectorXd predict_linear(const LinearModel& model, const Eigen::MatrixXd& features) {
    if (features.cols() != model.slopes.size())
        throw std::invalid_argument("predict_linear: feature width mismatch");
    return (features * model.slopes).array() + model.intercept;
}

LogisticModel fit_logistic(const Eigen::MatrixXd& features, const Eigen::VectorXd& target,
                           const Eigen::VectorXd* weights, double ridge_lambda) {
    check_design(features, target, weights, "fit_logistic");
    const Eigen::Index n = features.rows();
    const Eigen::Index d = features.cols();
    if (n < 2) throw std::invalid_argument("fit_logistic: need at least 2 samples");
    if (ridge_lambda < 0) throw std::invalid_argument("fit_logistic: ridge_lambda must be >= 0");
    for (Eigen::Index i = 0; i < n; ++i)
        if (target[i] != 0.0 && target[i] != 1.0)
            throw std::invalid_argument("fit_logistic: target must be 0/1");

    const Eigen::VectorXd w = weights ? *weights : Eigen::VectorXd::Ones(n);
    const bool has_one = (target.array() == 1.0).any();
    const bool has_zero = (target.array() == 0.0).any();
    if ((!has_one || !has_zero) && ridge_lambda == 0.0)
        throw std::invalid_argument("fit_logistic: single-class target requires ridge_lambda > 0");

    const Eigen::MatrixXd design = with_intercept(features);
    const Eigen::MatrixXd penalty = slope_penalty(d + 1, ridge_lambda);

    Eigen::VectorXd beta = Eigen::VectorXd::Zero(d + 1);
    Eigen::VectorXd eta = Eigen::VectorXd::Zero(n);
    double best_ll = penalized_loglik(eta, target, w, beta, ridge_lambda);
    Eigen::VectorXd best_beta = beta;

    constexpr int kMaxIter = 100;
    constexpr double kTol = 1e-8;
    bool converged = false;
    for (int iter = 0; iter < kMaxIter; ++iter) {
        const Eigen::ArrayXd p = eta.array().unaryExpr([](double e) { return sigmoid(e); });
        const Eigen::ArrayXd s = (w.array() * p * (1.0 - p)).max(1e-12);
        const Eigen::VectorXd grad =
            design.transpose() * (w.array() * (target.array() - p)).matrix() - penalty * beta;
        const Eigen::MatrixXd hess =
            design.transpose() * s.matrix().asDiagonal() * design + penalty;
        Eigen::VectorXd delta = hess.ldlt().solve(grad);
        if (!delta.allFinite()) break;

        // Halve the Newton step until the penalized likelihood improves.
        double step = 1.0;
        Eigen::VectorXd candidate;
        double candidate_ll = -std::numeric_limits<double>::infinity();
        const double current_ll = penalized_loglik(eta, target, w, beta, ridge_lambda);
        for (int h = 0; h < 6; ++h) {
            candidate = beta + step * delta;
            candidate_ll = penalized_loglik((design * candidate).cwiseMin(35.0).cwiseMax(-35.0),
                                            target, w, candidate, ridge_lambda);
            if (candidate_ll >= current_ll) break;
            step *= 0.5;
        }
        const double max_change = (step * delta).cwiseAbs().maxCoeff();
        beta = candidate;
        eta = (design * beta).cwiseMin(35.0).cwiseMax(-35.0);
        if (candidate_ll > best_ll) {
            best_ll = candidate_ll;
            best_beta = beta;
        }
        if (max_change < kTol) {
            converged = true;
            break;
        }
    }

    LogisticModel model;
    model.ridge_lambda = ridge_lambda;
    model.converged = converged;
    const Eigen::VectorXd& final_beta = converged ? beta : best_beta;
    model.intercept = final_beta[0];
    model.slopes = final_beta.tail(d);
    return model;
}

Eigen::VectorXd predict_proba(const LogisticModel& model, const Eigen::MatrixXd& features) {
    if (features.cols() != model.slopes.size())
        throw std::invalid_argument("predict_proba: feature width mismatch");
    return ((features * model.slopes).array() + model.intercept)
        .unaryExpr([](double e) { return sigmoid(e); })
        .matrix();
}

}  // namespace cwo
