#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

namespace cwo {

enum class Activation { Linear, Relu };

/// Training bundle for the feed-forward backend. The JSON loader accepts
/// exactly the documented field names and rejects unknown keys.
struct Hyperparams {
    int input_units = 64;
    int n_layers = 2;
    std::vector<int> units = {32, 16};
    double dropout_rate = 0.1;
    std::vector<double> dropout_rates = {0.1, 0.1};
    double learning_rate = 1e-3;
    int epochs = 200;
    int batch_size = 64;
    int patience = 20;
    double val_fraction = 0.2;

    /// Activation of the first dense layer. Not part of the JSON schema;
    /// flip programmatically to compare the two published readings.
    Activation first_activation = Activation::Linear;

    void validate() const;  // throws std::invalid_argument
    static Hyperparams from_json(const std::string& text);
    static Hyperparams from_json_file(const std::string& path);
};

struct DenseLayer {
    Eigen::MatrixXd weights;  // out x in
    Eigen::VectorXd bias;
    Activation activation = Activation::Linear;
};

struct Mlp {
    std::vector<DenseLayer> layers;
    std::vector<double> keep_prob;  // one per non-final layer, applied after activation
    std::uint64_t init_seed = 0;

    [[nodiscard]] int input_dim() const;
    [[nodiscard]] std::size_t parameter_count() const;
};

struct TrainReport {
    int epochs_run = 0;
    double final_train_loss = 0.0;
    double final_val_loss = 0.0;
    bool stopped_early = false;
};

/// Adam with bias correction (beta1=0.9, beta2=0.999, eps=1e-8).
class AdamOptimizer {
public:
    explicit AdamOptimizer(double learning_rate, double beta1 = 0.9, double beta2 = 0.999,
                           double epsilon = 1e-8);
    void step(Eigen::Ref<Eigen::VectorXd> params, const Eigen::Ref<const Eigen::VectorXd>& grad);

private:
    double lr_, beta1_, beta2_, eps_;
    long t_ = 0;
    Eigen::ArrayXd m_, v_;
};

/// [Dense(d -> input_units, first_activation), Dropout(dropout_rate)]
/// then per hidden layer i [Dense(-> units[i], relu), Dropout(rates[i])]
/// then Dense(-> 1, linear). He-uniform init for relu layers,
/// Glorot-uniform for linear, zero biases; deterministic in seed.
[[nodiscard]] Mlp build_mlp(int input_dim, const Hyperparams& hp, std::uint64_t seed);

/// training=false: dropout is the identity. training=true: inverted
/// dropout with masks drawn from `seed`, kept units scaled by 1/keep.
[[nodiscard]] Eigen::VectorXd forward(const Mlp& mlp, const Eigen::MatrixXd& features,
                                      bool training = false, std::uint64_t seed = 0);

/// Minimizes the weighted MSE sum_i w_i (y_i - yhat_i)^2 / sum_i w_i over
/// seeded mini-batches with Adam. Splits off val_fraction rows for early
/// stopping with `patience` and restores the best-validation parameters.
/// Throws on divergence (non-finite loss).
[[nodiscard]] std::pair<Mlp, TrainReport> train(Mlp mlp, const Eigen::MatrixXd& features,
                                                const Eigen::VectorXd& target,
                                                const Eigen::VectorXd& weights,
                                                const Hyperparams& hp, std::uint64_t seed);

/// Max over parameters of the relative error between the analytic gradient
/// of the weighted MSE and a central finite difference (step 1e-5).
/// Dropout is disabled for the check.
[[nodiscard]] double gradient_check(const Mlp& mlp, const Eigen::MatrixXd& features,
                                    const Eigen::VectorXd& target,
                                    const Eigen::VectorXd& weights);

}  // namespace cwo
