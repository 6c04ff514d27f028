#pragma once

#include <cmath>
#include <cstdint>
#include <memory>
#include <random>
#include <stdexcept>
#include <utility>
#include <vector>

#include "qdlearn/layers.hpp"

namespace qdlearn {

struct LayerSpec {
    enum class Kind : std::uint8_t { conv1d = 0, maxpool1d = 1, flatten = 2, dense = 3 };
    Kind kind = Kind::dense;
    Activation activation = Activation::linear;
    int filters = 0;
    int kernel_size = 0;
    Padding padding = Padding::valid;
    int pool_size = 0;
    std::size_t units = 0;

    static LayerSpec conv(int filters, int kernel, Padding pad, Activation act) {
        LayerSpec s;
        s.kind = Kind::conv1d;
        s.filters = filters;
        s.kernel_size = kernel;
        s.padding = pad;
        s.activation = act;
        return s;
    }
    static LayerSpec maxpool(int pool) {
        LayerSpec s;
        s.kind = Kind::maxpool1d;
        s.pool_size = pool;
        return s;
    }
    static LayerSpec flat() {
        LayerSpec s;
        s.kind = Kind::flatten;
        return s;
    }
    static LayerSpec dense(std::size_t units, Activation act) {
        LayerSpec s;
        s.kind = Kind::dense;
        s.units = units;
        s.activation = act;
        return s;
    }
};

// Feed-forward stack over a (length, channels) input. Shapes chain at
// construction time; a shape that does not fit throws immediately.
class Model {
public:
    Model() = default;
    Model(std::vector<LayerSpec> specs, int input_length, int input_channels)
        : specs_(std::move(specs)), input_length_(input_length), input_channels_(input_channels) {
        int len = input_length_, ch = input_channels_;
        bool spatial = true;  // still (len, ch) rather than a flat vector
        for (const auto& s : specs_) {
            switch (s.kind) {
                case LayerSpec::Kind::conv1d: {
                    if (!spatial) throw std::invalid_argument("conv1d after flatten");
                    auto l = std::make_unique<Conv1D>(len, ch, s.filters, s.kernel_size,
                                                      s.padding, s.activation);
                    len = l->out_length();
                    ch = s.filters;
                    layers_.push_back(std::move(l));
                    break;
                }
                case LayerSpec::Kind::maxpool1d: {
                    if (!spatial) throw std::invalid_argument("maxpool1d after flatten");
                    auto l = std::make_unique<MaxPool1D>(len, ch, s.pool_size);
                    len = l->out_length();
                    layers_.push_back(std::move(l));
                    break;
                }
                case LayerSpec::Kind::flatten: {
                    if (!spatial) throw std::invalid_argument("flatten applied twice");
                    layers_.push_back(std::make_unique<FlattenLayer>(len, ch));
                    len = len * ch;
                    ch = 1;
                    spatial = false;
                    break;
                }
                case LayerSpec::Kind::dense: {
                    if (spatial)
                        throw std::invalid_argument("dense requires a flatten layer first");
                    layers_.push_back(
                        std::make_unique<Dense>(len, static_cast<int>(s.units), s.activation));
                    len = static_cast<int>(s.units);
                    break;
                }
            }
        }
    }

    Eigen::MatrixXd forward(const Eigen::MatrixXd& x, bool training = false) {
        if (layers_.empty()) throw std::logic_error("model: empty layer stack");
        ++forward_calls_;
        Eigen::MatrixXd a = x;
        for (auto& l : layers_) a = l->forward(a, training);
        return a;
    }

    // Reverse pass from the loss gradient; parameter gradients accumulate in
    // each layer's buffers. Returns the gradient w.r.t. the model input.
    Eigen::MatrixXd backward(const Eigen::MatrixXd& grad_out) {
        Eigen::MatrixXd g = grad_out;
        for (auto it = layers_.rbegin(); it != layers_.rend(); ++it) g = (*it)->backward(g);
        return g;
    }

    std::vector<ParamView> parameters() {
        std::vector<ParamView> out;
        for (auto& l : layers_)
            for (auto p : l->parameters()) out.push_back(p);
        return out;
    }
    void zero_gradients() {
        for (auto& l : layers_) l->zero_gradients();
    }

    std::size_t parameter_count() const {
        std::size_t n = 0;
        for (const auto& l : layers_) n += l->parameter_count();
        return n;
    }
    std::vector<std::size_t> per_layer_parameter_counts() const {
        std::vector<std::size_t> out;
        for (const auto& l : layers_) out.push_back(l->parameter_count());
        return out;
    }
    std::vector<std::vector<int>> output_shapes() const {
        std::vector<std::vector<int>> out;
        for (const auto& l : layers_) out.push_back(l->output_shape());
        return out;
    }
    std::size_t output_length() const {
        const auto shape = layers_.back()->output_shape();
        std::size_t n = 1;
        for (int d : shape) n *= static_cast<std::size_t>(d);
        return n;
    }

    const std::vector<LayerSpec>& specs() const { return specs_; }
    int input_length() const { return input_length_; }
    int input_channels() const { return input_channels_; }
    std::size_t layer_count() const { return layers_.size(); }
    const Layer& layer(std::size_t i) const { return *layers_[i]; }
    std::uint64_t forward_calls() const { return forward_calls_; }

    // Parameter snapshot/restore, used for best-validation checkpointing.
    std::vector<std::vector<double>> snapshot_parameters() {
        std::vector<std::vector<double>> snap;
        for (auto p : parameters()) snap.emplace_back(p.value, p.value + p.size);
        return snap;
    }
    void restore_parameters(const std::vector<std::vector<double>>& snap) {
        auto params = parameters();
        if (snap.size() != params.size())
            throw std::invalid_argument("restore_parameters: block count mismatch");
        for (std::size_t i = 0; i < params.size(); ++i) {
            if (snap[i].size() != params[i].size)
                throw std::invalid_argument("restore_parameters: block size mismatch");
            std::copy(snap[i].begin(), snap[i].end(), params[i].value);
        }
    }

private:
    std::vector<LayerSpec> specs_;
    int input_length_ = 0;
    int input_channels_ = 0;
    std::vector<std::unique_ptr<Layer>> layers_;
    std::uint64_t forward_calls_ = 0;
};

// The tuned surrogate stack: three conv blocks, one pooling, then a narrow
// dense funnel into the wide linear output that emits the whole trajectory.
inline Model default_architecture(std::size_t output_length) {
    if (output_length < 1) throw std::invalid_argument("output length must be >= 1");
    std::vector<LayerSpec> specs = {
        LayerSpec::conv(80, 3, Padding::valid, Activation::relu),
        LayerSpec::conv(110, 3, Padding::same, Activation::relu),
        LayerSpec::conv(80, 3, Padding::same, Activation::relu),
        LayerSpec::maxpool(2),
        LayerSpec::flat(),
        LayerSpec::dense(32, Activation::relu),
        LayerSpec::dense(128, Activation::relu),
        LayerSpec::dense(output_length, Activation::linear),
    };
    return Model(std::move(specs), 4, 1);
}

namespace detail {
// Uniform doubles in [0, 1) drawn directly from the top 53 bits, so results
// do not depend on the standard library's distribution implementation.
inline double uniform01(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}
}  // namespace detail

// Glorot-uniform weights (limit sqrt(6/(fan_in+fan_out))), zero biases.
// For conv layers fan_in = k*ch_in and fan_out = k*filters.
inline void init_weights(Model& model, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    for (std::size_t i = 0; i < model.layer_count(); ++i) {
        const Layer& l = model.layer(i);
        double fan_in = 0, fan_out = 0;
        if (const auto* conv = dynamic_cast<const Conv1D*>(&l)) {
            fan_in = static_cast<double>(conv->kernel_size()) * conv->in_channels();
            fan_out = static_cast<double>(conv->kernel_size()) * conv->filters();
        } else if (const auto* dense = dynamic_cast<const Dense*>(&l)) {
            fan_in = dense->in_features();
            fan_out = dense->units();
        } else {
            continue;
        }
        const double limit = std::sqrt(6.0 / (fan_in + fan_out));
        auto params = const_cast<Layer&>(l).parameters();
        // params[0] = weights, params[1] = bias (already zero)
        for (std::size_t k = 0; k < params[0].size; ++k)
            params[0].value[k] = limit * (2.0 * detail::uniform01(rng) - 1.0);
    }
}

// Mean squared error over every output component, with its gradient.
inline std::pair<double, Eigen::MatrixXd> mse_loss(const Eigen::MatrixXd& pred,
                                                   const Eigen::MatrixXd& target) {
    if (pred.rows() != target.rows() || pred.cols() != target.cols())
        throw std::invalid_argument("mse_loss: shape mismatch");
    const Eigen::MatrixXd diff = pred - target;
    const double n = static_cast<double>(diff.size());
    return {diff.squaredNorm() / n, (2.0 / n) * diff};
}

}  // namespace qdlearn
