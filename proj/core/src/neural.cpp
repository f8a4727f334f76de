#include "cwo/neural.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <random>
#include <span>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "cwo/rng.hpp"

namespace cwo {

namespace {

constexpr std::uint64_t kInitStream = 0x696e6974;
constexpr std::uint64_t kSplitStream = 0x73706c69;
constexpr std::uint64_t kEpochStream = 0x65706f63;
constexpr std::uint64_t kMaskStream = 0x6d61736b;

struct ForwardCache {
    std::vector<Eigen::MatrixXd> pre;        // pre-activation per layer
    std::vector<Eigen::MatrixXd> act;        // post-activation, post-dropout
    std::vector<Eigen::MatrixXd> drop_mask;  // 0 or 1/keep; empty when inactive
};

Eigen::MatrixXd activate(const Eigen::MatrixXd& pre, Activation act) {
    if (act == Activation::Linear) return pre;
    return pre.cwiseMax(0.0);
}

// Full forward pass; cache, when given, records what backprop needs.
Eigen::MatrixXd run_forward(const Mlp& mlp, const Eigen::MatrixXd& features, bool training,
                            std::uint64_t seed, ForwardCache* cache) {
    if (features.cols() != mlp.input_dim())
        throw std::invalid_argument("forward: feature width mismatch");
    const rng::CounterRng mask_root = rng::CounterRng(seed).fork(kMaskStream);
    Eigen::MatrixXd h = features;
    if (cache) {
        cache->pre.resize(mlp.layers.size());
        cache->act.resize(mlp.layers.size());
        cache->drop_mask.assign(mlp.layers.size(), Eigen::MatrixXd());
    }
    for (std::size_t l = 0; l < mlp.layers.size(); ++l) {
        const DenseLayer& layer = mlp.layers[l];
        Eigen::MatrixXd pre = h * layer.weights.transpose();
        pre.rowwise() += layer.bias.transpose();
        Eigen::MatrixXd act = activate(pre, layer.activation);
        const bool last = l + 1 == mlp.layers.size();
        if (!last && training && mlp.keep_prob[l] < 1.0) {
            const double keep = mlp.keep_prob[l];
            const rng::CounterRng layer_rng = mask_root.fork(l);
            Eigen::MatrixXd mask(act.rows(), act.cols());
            for (Eigen::Index i = 0; i < act.rows(); ++i) {
                const rng::CounterRng row_rng = layer_rng.fork(static_cast<std::uint64_t>(i));
                for (Eigen::Index j = 0; j < act.cols(); ++j)
                    mask(i, j) = row_rng.uniform(static_cast<std::uint64_t>(j)) < keep ? 1.0 / keep : 0.0;
            }
            act = act.cwiseProduct(mask);
            if (cache) cache->drop_mask[l] = std::move(mask);
        }
        if (cache) {
            cache->pre[l] = std::move(pre);
            cache->act[l] = act;
        }
        h = std::move(act);
    }
    return h;
}

struct Gradients {
    std::vector<Eigen::MatrixXd> weights;
    std::vector<Eigen::VectorXd> bias;
};

// Weighted MSE normalized by the batch weight mass:
//   L = sum_i w_i (yhat_i - y_i)^2 / sum_i w_i.
double weighted_mse(const Eigen::VectorXd& prediction, const Eigen::VectorXd& target,
                    const Eigen::VectorXd& weights) {
    const double mass = weights.sum();
    return (weights.array() * (prediction - target).array().square()).sum() / mass;
}

// Backprop through the cached forward pass; returns the loss.
double backward(const Mlp& mlp, const Eigen::MatrixXd& features, const Eigen::VectorXd& target,
                const Eigen::VectorXd& weights, const ForwardCache& cache, Gradients& grads) {
    const std::size_t layer_count = mlp.layers.size();
    const Eigen::VectorXd prediction = cache.act.back().col(0);
    const double mass = weights.sum();
    const double loss = weighted_mse(prediction, target, weights);

    Eigen::MatrixXd delta =
        (2.0 / mass) * (weights.array() * (prediction - target).array()).matrix();
    grads.weights.resize(layer_count);
    grads.bias.resize(layer_count);
    for (std::size_t l = layer_count; l-- > 0;) {
        const Eigen::MatrixXd& input = l == 0 ? features : cache.act[l - 1];
        grads.weights[l] = delta.transpose() * input;
        grads.bias[l] = delta.colwise().sum().transpose();
        if (l == 0) break;
        delta = delta * mlp.layers[l].weights;
        if (cache.drop_mask[l - 1].size() > 0) delta = delta.cwiseProduct(cache.drop_mask[l - 1]);
        if (mlp.layers[l - 1].activation == Activation::Relu)
            delta = delta.cwiseProduct((cache.pre[l - 1].array() > 0.0).cast<double>().matrix());
    }
    return loss;
}

Eigen::MatrixXd gather_rows(const Eigen::MatrixXd& m, std::span<const Eigen::Index> idx) {
    Eigen::MatrixXd out(static_cast<Eigen::Index>(idx.size()), m.cols());
    for (std::size_t i = 0; i < idx.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = m.row(idx[i]);
    return out;
}

Eigen::VectorXd gather(const Eigen::VectorXd& v, std::span<const Eigen::Index> idx) {
    Eigen::VectorXd out(static_cast<Eigen::Index>(idx.size()));
    for (std::size_t i = 0; i < idx.size(); ++i) out[static_cast<Eigen::Index>(i)] = v[idx[i]];
    return out;
}

}  // namespace

void Hyperparams::validate() const {
    if (input_units < 1) throw std::invalid_argument("hp: input_units must be >= 1");
    if (n_layers < 0) throw std::invalid_argument("hp: n_layers must be >= 0");
    if (static_cast<int>(units.size()) != n_layers)
        throw std::invalid_argument("hp: units must have n_layers entries");
    if (static_cast<int>(dropout_rates.size()) != n_layers)
        throw std::invalid_argument("hp: dropout_rates must have n_layers entries");
    for (int u : units)
        if (u < 1) throw std::invalid_argument("hp: layer units must be >= 1");
    if (dropout_rate < 0.0 || dropout_rate >= 1.0)
        throw std::invalid_argument("hp: dropout_rate must lie in [0,1)");
    for (double r : dropout_rates)
        if (r < 0.0 || r >= 1.0) throw std::invalid_argument("hp: dropout rates must lie in [0,1)");
    if (!(learning_rate > 0.0)) throw std::invalid_argument("hp: learning_rate must be positive");
    if (epochs < 1) throw std::invalid_argument("hp: epochs must be >= 1");
    if (batch_size < 1) throw std::invalid_argument("hp: batch_size must be >= 1");
    if (patience < 1) throw std::invalid_argument("hp: patience must be >= 1");
    if (!(val_fraction > 0.0) || val_fraction > 0.5)
        throw std::invalid_argument("hp: val_fraction must lie in (0, 0.5]");
}

Hyperparams Hyperparams::from_json(const std::string& text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw std::invalid_argument(std::string("hp: invalid JSON: ") + e.what());
    }
    if (!doc.is_object()) throw std::invalid_argument("hp: expected a JSON object");
    static const std::vector<std::string> known = {
        "input_units", "n_layers",   "units",  "dropout_rate", "dropout_rates",
        "learning_rate", "epochs",   "batch_size", "patience", "val_fraction"};
    for (const auto& [key, value] : doc.items())
        if (std::find(known.begin(), known.end(), key) == known.end())
            throw std::invalid_argument("hp: unknown key '" + key + "'");

    Hyperparams hp;
    try {
        if (doc.contains("input_units")) hp.input_units = doc["input_units"].get<int>();
        if (doc.contains("n_layers")) hp.n_layers = doc["n_layers"].get<int>();
        if (doc.contains("units")) hp.units = doc["units"].get<std::vector<int>>();
        if (doc.contains("dropout_rate")) hp.dropout_rate = doc["dropout_rate"].get<double>();
        if (doc.contains("dropout_rates"))
            hp.dropout_rates = doc["dropout_rates"].get<std::vector<double>>();
        if (doc.contains("learning_rate")) hp.learning_rate = doc["learning_rate"].get<double>();
        if (doc.contains("epochs")) hp.epochs = doc["epochs"].get<int>();
        if (doc.contains("batch_size")) hp.batch_size = doc["batch_size"].get<int>();
        if (doc.contains("patience")) hp.patience = doc["patience"].get<int>();
        if (doc.contains("val_fraction")) hp.val_fraction = doc["val_fraction"].get<double>();
    } catch (const nlohmann::json::exception& e) {
        throw std::invalid_argument(std::string("hp: bad field type: ") + e.what());
    }
    // A shorter stack without explicit rates keeps the per-layer default.
    if (doc.contains("n_layers") && !doc.contains("units")) {
        if (hp.n_layers != 0) throw std::invalid_argument("hp: n_layers requires units");
        hp.units.clear();
    }
    if (doc.contains("units") && !doc.contains("n_layers"))
        hp.n_layers = static_cast<int>(hp.units.size());
    if (static_cast<int>(hp.dropout_rates.size()) != hp.n_layers && !doc.contains("dropout_rates"))
        hp.dropout_rates.assign(static_cast<std::size_t>(hp.n_layers), hp.dropout_rate);
    hp.validate();
    return hp;
}

Hyperparams Hyperparams::from_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return from_json(ss.str());
}

int Mlp::input_dim() const {
    if (layers.empty()) throw std::logic_error("mlp: no layers");
    return static_cast<int>(layers.front().weights.cols());
}

std::size_t Mlp::parameter_count() const {
    std::size_t count = 0;
    for (const auto& l : layers)
        count += static_cast<std::size_t>(l.weights.size()) + static_cast<std::size_t>(l.bias.size());
    return count;
}

AdamOptimizer::AdamOptimizer(double learning_rate, double beta1, double beta2, double epsilon)
    : lr_(learning_rate), beta1_(beta1), beta2_(beta2), eps_(epsilon) {}

void AdamOptimizer::step(Eigen::Ref<Eigen::VectorXd> params,
                         const Eigen::Ref<const Eigen::VectorXd>& grad) {
    if (m_.size() == 0) {
        m_ = Eigen::ArrayXd::Zero(params.size());
        v_ = Eigen::ArrayXd::Zero(params.size());
    }
    if (grad.size() != params.size())
        throw std::invalid_argument("adam: gradient size mismatch");
    ++t_;
    m_ = beta1_ * m_ + (1.0 - beta1_) * grad.array();
    v_ = beta2_ * v_ + (1.0 - beta2_) * grad.array().square();
    const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
    params.array() -= lr_ * (m_ / bc1) / ((v_ / bc2).sqrt() + eps_);
}

Mlp build_mlp(int input_dim, const Hyperparams& hp, std::uint64_t seed) {
    if (input_dim < 1) throw std::invalid_argument("build_mlp: input_dim must be >= 1");
    hp.validate();

    std::vector<std::pair<int, Activation>> plan;
    plan.emplace_back(hp.input_units, hp.first_activation);
    for (int i = 0; i < hp.n_layers; ++i)
        plan.emplace_back(hp.units[static_cast<std::size_t>(i)], Activation::Relu);
    plan.emplace_back(1, Activation::Linear);

    Mlp mlp;
    mlp.init_seed = seed;
    mlp.keep_prob.push_back(1.0 - hp.dropout_rate);
    for (int i = 0; i < hp.n_layers; ++i)
        mlp.keep_prob.push_back(1.0 - hp.dropout_rates[static_cast<std::size_t>(i)]);

    const rng::CounterRng init_root = rng::CounterRng(seed).fork(kInitStream);
    int fan_in = input_dim;
    for (std::size_t l = 0; l < plan.size(); ++l) {
        const auto [fan_out, act] = plan[l];
        // He-uniform for relu, Glorot-uniform for linear.
        const double limit = act == Activation::Relu
                                 ? std::sqrt(6.0 / fan_in)
                                 : std::sqrt(6.0 / (fan_in + fan_out));
        DenseLayer layer;
        layer.activation = act;
        layer.weights.resize(fan_out, fan_in);
        layer.bias = Eigen::VectorXd::Zero(fan_out);
        const rng::CounterRng layer_rng = init_root.fork(l);
        std::uint64_t counter = 0;
        for (Eigen::Index i = 0; i < layer.weights.rows(); ++i)
            for (Eigen::Index j = 0; j < layer.weights.cols(); ++j)
                layer.weights(i, j) = limit * (2.0 * layer_rng.uniform(counter++) - 1.0);
        mlp.layers.push_back(std::move(layer));
        fan_in = fan_out;
    }
    return mlp;
}

Eigen::VectorXd forward(const Mlp& mlp, const Eigen::MatrixXd& features, bool training,
                        std::uint64_t seed) {
    return run_forward(mlp, features, training, seed, nullptr).col(0);
}

std::pair<Mlp, TrainReport> train(Mlp mlp, const Eigen::MatrixXd& features,
                                  const Eigen::VectorXd& target, const Eigen::VectorXd& weights,
                                  const Hyperparams& hp, std::uint64_t seed) {
    hp.validate();
    const Eigen::Index n = features.rows();
    if (n <= 2) throw std::invalid_argument("train: need more than 2 samples");
    if (target.size() != n || weights.size() != n)
        throw std::invalid_argument("train: target/weight length mismatch");
    if (!features.allFinite() || !target.allFinite())
        throw std::invalid_argument("train: non-finite input");
    if (!weights.allFinite() || (weights.array() <= 0.0).any())
        throw std::invalid_argument("train: weights must be positive and finite");

    // Seeded validation split for early stopping.
    std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::mt19937_64 split_rng(rng::combine(seed, kSplitStream));
    std::shuffle(order.begin(), order.end(), split_rng);
    const Eigen::Index n_val = static_cast<Eigen::Index>(
        std::floor(static_cast<double>(n) * hp.val_fraction));
    const bool early_stopping = n_val >= 1;
    const std::span<const Eigen::Index> val_idx(order.data(), static_cast<std::size_t>(n_val));
    const std::span<const Eigen::Index> train_idx(order.data() + n_val,
                                                  static_cast<std::size_t>(n - n_val));

    const Eigen::MatrixXd train_x = gather_rows(features, train_idx);
    const Eigen::VectorXd train_y = gather(target, train_idx);
    const Eigen::VectorXd train_w = gather(weights, train_idx);
    const Eigen::MatrixXd val_x = early_stopping ? gather_rows(features, val_idx) : Eigen::MatrixXd();
    const Eigen::VectorXd val_y = early_stopping ? gather(target, val_idx) : Eigen::VectorXd();
    const Eigen::VectorXd val_w = early_stopping ? gather(weights, val_idx) : Eigen::VectorXd();
    const Eigen::Index n_train = train_x.rows();

    std::vector<AdamOptimizer> opt(2 * mlp.layers.size(), AdamOptimizer(hp.learning_rate));

    Mlp best = mlp;
    double best_val = std::numeric_limits<double>::infinity();
    bool stopped_early = false;
    int bad_epochs = 0;
    int epochs_run = 0;

    std::vector<Eigen::Index> batch_order(static_cast<std::size_t>(n_train));
    std::iota(batch_order.begin(), batch_order.end(), Eigen::Index{0});
    ForwardCache cache;
    Gradients grads;

    for (int epoch = 0; epoch < hp.epochs; ++epoch) {
        epochs_run = epoch + 1;
        std::mt19937_64 epoch_rng(rng::combine(rng::combine(seed, kEpochStream),
                                               static_cast<std::uint64_t>(epoch)));
        std::shuffle(batch_order.begin(), batch_order.end(), epoch_rng);

        for (Eigen::Index start = 0, batch_no = 0; start < n_train;
             start += hp.batch_size, ++batch_no) {
            const Eigen::Index len = std::min<Eigen::Index>(hp.batch_size, n_train - start);
            const std::span<const Eigen::Index> idx(batch_order.data() + start,
                                                    static_cast<std::size_t>(len));
            const Eigen::MatrixXd xb = gather_rows(train_x, idx);
            const Eigen::VectorXd yb = gather(train_y, idx);
            const Eigen::VectorXd wb = gather(train_w, idx);

            const std::uint64_t mask_seed = rng::combine(
                rng::combine(rng::combine(seed, kMaskStream), static_cast<std::uint64_t>(epoch)),
                static_cast<std::uint64_t>(batch_no));
            run_forward(mlp, xb, true, mask_seed, &cache);
            const double loss = backward(mlp, xb, yb, wb, cache, grads);
            if (!std::isfinite(loss))
                throw std::runtime_error("train: loss diverged at epoch " + std::to_string(epoch) +
                                         ", batch " + std::to_string(batch_no));
            for (std::size_t l = 0; l < mlp.layers.size(); ++l) {
                DenseLayer& layer = mlp.layers[l];
                opt[2 * l].step(
                    Eigen::Map<Eigen::VectorXd>(layer.weights.data(), layer.weights.size()),
                    Eigen::Map<const Eigen::VectorXd>(grads.weights[l].data(),
                                                      grads.weights[l].size()));
                opt[2 * l + 1].step(Eigen::Map<Eigen::VectorXd>(layer.bias.data(), layer.bias.size()),
                                    grads.bias[l]);
            }
        }

        if (early_stopping) {
            const double val_loss = weighted_mse(forward(mlp, val_x), val_y, val_w);
            if (!std::isfinite(val_loss))
                throw std::runtime_error("train: validation loss diverged at epoch " +
                                         std::to_string(epoch));
            if (val_loss < best_val) {
                best_val = val_loss;
                best = mlp;
                bad_epochs = 0;
            } else if (++bad_epochs >= hp.patience) {
                stopped_early = true;
                break;
            }
        }
    }

    if (early_stopping) mlp = std::move(best);

    TrainReport report;
    report.epochs_run = epochs_run;
    report.stopped_early = stopped_early;
    report.final_train_loss = weighted_mse(forward(mlp, train_x), train_y, train_w);
    report.final_val_loss =
        early_stopping ? weighted_mse(forward(mlp, val_x), val_y, val_w) : report.final_train_loss;
    return {std::move(mlp), report};
}

double gradient_check(const Mlp& mlp, const Eigen::MatrixXd& features,
                      const Eigen::VectorXd& target, const Eigen::VectorXd& weights) {
    ForwardCache cache;
    Gradients grads;
    run_forward(mlp, features, false, 0, &cache);
    backward(mlp, features, target, weights, cache, grads);

    constexpr double kStep = 1e-5;
    Mlp probe = mlp;
    auto loss_at = [&]() {
        return weighted_mse(forward(probe, features), target, weights);
    };

    double worst = 0.0;
    auto check_tensor = [&](double* data, Eigen::Index size, const double* analytic) {
        for (Eigen::Index k = 0; k < size; ++k) {
            const double saved = data[k];
            data[k] = saved + kStep;
            const double up = loss_at();
            data[k] = saved - kStep;
            const double down = loss_at();
            data[k] = saved;
            const double fd = (up - down) / (2.0 * kStep);
            const double a = analytic[k];
            const double denom = std::max({std::abs(a), std::abs(fd), 1e-4});
            worst = std::max(worst, std::abs(a - fd) / denom);
        }
    };
    for (std::size_t l = 0; l < probe.layers.size(); ++l) {
        check_tensor(probe.layers[l].weights.data(), probe.layers[l].weights.size(),
                     grads.weights[l].data());
        check_tensor(probe.layers[l].bias.data(), probe.layers[l].bias.size(),
                     grads.bias[l].data());
    }
    return worst;
}

}  // namespace cwo
