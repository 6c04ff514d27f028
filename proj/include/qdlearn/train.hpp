#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <random>
#include <stdexcept>
#include <vector>

#include "qdlearn/adam.hpp"
#include "qdlearn/model.hpp"

namespace qdlearn {

struct TrainConfig {
    double learning_rate = 1e-3;
    int batch_size = 16;
    int max_epochs = 10000;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    std::uint64_t rng_seed = 1;
    double stop_at_train_mse = 0.0;  // > 0: stop early once the epoch loss drops below
};

struct EpochStats {
    int epoch;  // 1-based
    double train_mse;
    double val_mse;
};

struct TrainResult {
    std::vector<EpochStats> history;
    double best_val_mse = std::numeric_limits<double>::infinity();
    int best_epoch = 0;
};

inline double evaluate_mse(Model& model, const Eigen::MatrixXd& x, const Eigen::MatrixXd& y) {
    return mse_loss(model.forward(x, false), y).first;
}

namespace detail {
// Fisher-Yates with explicit draws from mt19937_64 so the shuffle does not
// depend on std::shuffle's unspecified algorithm.
inline void shuffle_indices(std::vector<Eigen::Index>& idx, std::mt19937_64& rng) {
    for (std::size_t i = idx.size(); i > 1; --i)
        std::swap(idx[i - 1], idx[rng() % i]);
}
}  // namespace detail

// Seeded mini-batch training: shuffle each epoch, one Adam step per batch,
// validation MSE after every epoch, and the parameter snapshot with the
// lowest validation MSE wins. The model holds the best weights on return.
inline TrainResult train(Model& model, const Eigen::MatrixXd& x_train,
                         const Eigen::MatrixXd& y_train, const Eigen::MatrixXd& x_val,
                         const Eigen::MatrixXd& y_val, const TrainConfig& cfg,
                         const std::function<void(const EpochStats&)>& on_epoch = nullptr) {
    if (x_train.rows() == 0 || x_val.rows() == 0)
        throw std::invalid_argument("train: empty train or validation split");
    if (x_train.rows() != y_train.rows() || x_val.rows() != y_val.rows())
        throw std::invalid_argument("train: input/target row mismatch");
    if (cfg.batch_size < 1) throw std::invalid_argument("train: batch size must be >= 1");

    Adam opt({cfg.learning_rate, cfg.beta1, cfg.beta2, cfg.epsilon});
    auto params = model.parameters();
    std::mt19937_64 rng(cfg.rng_seed);
    const Eigen::Index n = x_train.rows();
    const double out_len = static_cast<double>(y_train.cols());
    std::vector<Eigen::Index> order(n);
    for (Eigen::Index i = 0; i < n; ++i) order[i] = i;

    TrainResult result;
    std::vector<std::vector<double>> best_snapshot;
    for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
        detail::shuffle_indices(order, rng);
        double sq_sum = 0.0;
        for (Eigen::Index start = 0; start < n; start += cfg.batch_size) {
            const Eigen::Index b = std::min<Eigen::Index>(cfg.batch_size, n - start);
            Eigen::MatrixXd xb(b, x_train.cols()), yb(b, y_train.cols());
            for (Eigen::Index r = 0; r < b; ++r) {
                xb.row(r) = x_train.row(order[start + r]);
                yb.row(r) = y_train.row(order[start + r]);
            }
            const Eigen::MatrixXd pred = model.forward(xb, true);
            const auto [loss, grad] = mse_loss(pred, yb);
            sq_sum += loss * static_cast<double>(b) * out_len;
            model.zero_gradients();
            model.backward(grad);
            opt.step(params);
        }
        EpochStats stats;
        stats.epoch = epoch;
        stats.train_mse = sq_sum / (static_cast<double>(n) * out_len);
        stats.val_mse = evaluate_mse(model, x_val, y_val);
        result.history.push_back(stats);
        if (on_epoch) on_epoch(stats);
        if (stats.val_mse < result.best_val_mse) {
            result.best_val_mse = stats.val_mse;
            result.best_epoch = epoch;
            best_snapshot = model.snapshot_parameters();
        }
        if (cfg.stop_at_train_mse > 0.0 && stats.train_mse < cfg.stop_at_train_mse) break;
    }
    if (!best_snapshot.empty()) model.restore_parameters(best_snapshot);
    return result;
}

}  // namespace qdlearn
