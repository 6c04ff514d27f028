#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

namespace qdlearn {

enum class Activation : std::uint8_t { linear = 0, relu = 1 };
enum class Padding : std::uint8_t { valid = 0, same = 1 };

// View over one parameter block and its gradient buffer; both contiguous.
struct ParamView {
    double* value;
    double* grad;
    std::size_t size;
};

// Batched layer interface: activations are (batch x features) matrices where
// a feature-map sample (len, ch) is laid out row-major, channels fastest.
// forward(x, true) caches what backward needs; backward accumulates parameter
// gradients and returns the input gradient.
class Layer {
public:
    virtual ~Layer() = default;
    virtual const char* kind() const = 0;
    virtual std::vector<int> output_shape() const = 0;
    virtual std::size_t parameter_count() const = 0;
    virtual Eigen::MatrixXd forward(const Eigen::MatrixXd& x, bool training) = 0;
    virtual Eigen::MatrixXd backward(const Eigen::MatrixXd& grad_out) = 0;
    virtual std::vector<ParamView> parameters() = 0;
    virtual void zero_gradients() = 0;
};

namespace detail {
// ReLU subgradient at exactly 0 is defined as 0, i.e. the mask is (pre > 0).
inline void activate(Activation act, Eigen::MatrixXd& m) {
    if (act == Activation::relu) m = m.cwiseMax(0.0);
}
inline void mask_by_preactivation(Activation act, const Eigen::MatrixXd& pre,
                                  Eigen::MatrixXd& grad) {
    if (act == Activation::relu)
        grad = (pre.array() > 0.0).cast<double>() * grad.array();
}
}  // namespace detail

// 1D cross-correlation plus bias and activation. Weights are stored as a
// (kernel*in_channels) x filters matrix so forward is one im2col + GEMM.
class Conv1D : public Layer {
public:
    Conv1D(int in_length, int in_channels, int filters, int kernel_size, Padding padding,
           Activation act)
        : in_length_(in_length), in_channels_(in_channels), filters_(filters),
          kernel_(kernel_size), padding_(padding), act_(act) {
        if (kernel_size < 1 || filters < 1)
            throw std::invalid_argument("conv1d: kernel size and filter count must be >= 1");
        if (padding == Padding::valid && in_length < kernel_size)
            throw std::invalid_argument("conv1d: input shorter than kernel with valid padding");
        // With 'same' padding the left pad is floor((k-1)/2); an odd total
        // deficit puts the extra zero on the right.
        pad_left_ = padding == Padding::same ? (kernel_size - 1) / 2 : 0;
        weight_ = Eigen::MatrixXd::Zero(kernel_ * in_channels_, filters_);
        bias_ = Eigen::VectorXd::Zero(filters_);
        weight_grad_ = weight_;
        bias_grad_ = bias_;
    }

    const char* kind() const override { return "conv1d"; }
    int out_length() const {
        return padding_ == Padding::valid ? in_length_ - kernel_ + 1 : in_length_;
    }
    std::vector<int> output_shape() const override { return {out_length(), filters_}; }
    std::size_t parameter_count() const override {
        return static_cast<std::size_t>(kernel_ * in_channels_ + 1) * filters_;
    }

    Eigen::MatrixXd forward(const Eigen::MatrixXd& x, bool training) override {
        const auto batch = x.rows();
        if (x.cols() != static_cast<Eigen::Index>(in_length_) * in_channels_)
            throw std::invalid_argument("conv1d: input feature size mismatch");
        const int t_out = out_length();
        Eigen::MatrixXd cols = Eigen::MatrixXd::Zero(batch * t_out, kernel_ * in_channels_);
        for (Eigen::Index b = 0; b < batch; ++b)
            for (int t = 0; t < t_out; ++t)
                for (int dt = 0; dt < kernel_; ++dt) {
                    const int src = t + dt - pad_left_;
                    if (src < 0 || src >= in_length_) continue;
                    for (int c = 0; c < in_channels_; ++c)
                        cols(b * t_out + t, dt * in_channels_ + c) = x(b, src * in_channels_ + c);
                }
        Eigen::MatrixXd pre2 = cols * weight_;
        pre2.rowwise() += bias_.transpose();
        // reshape (batch*t_out, filters) -> (batch, t_out*filters)
        Eigen::MatrixXd pre(batch, t_out * filters_);
        for (Eigen::Index b = 0; b < batch; ++b)
            for (int t = 0; t < t_out; ++t)
                pre.block(b, t * filters_, 1, filters_) = pre2.row(b * t_out + t);
        if (training) {
            cols_cache_ = std::move(cols);
            pre_cache_ = pre;
        }
        detail::activate(act_, pre);
        return pre;
    }

    Eigen::MatrixXd backward(const Eigen::MatrixXd& grad_out) override {
        if (pre_cache_.size() == 0) throw std::logic_error("conv1d: backward without forward");
        const auto batch = grad_out.rows();
        const int t_out = out_length();
        Eigen::MatrixXd grad_pre = grad_out;
        detail::mask_by_preactivation(act_, pre_cache_, grad_pre);
        Eigen::MatrixXd grad_pre2(batch * t_out, filters_);
        for (Eigen::Index b = 0; b < batch; ++b)
            for (int t = 0; t < t_out; ++t)
                grad_pre2.row(b * t_out + t) = grad_pre.block(b, t * filters_, 1, filters_);

        weight_grad_ += cols_cache_.transpose() * grad_pre2;
        bias_grad_ += grad_pre2.colwise().sum().transpose();

        const Eigen::MatrixXd grad_cols = grad_pre2 * weight_.transpose();
        Eigen::MatrixXd grad_in = Eigen::MatrixXd::Zero(batch, in_length_ * in_channels_);
        for (Eigen::Index b = 0; b < batch; ++b)
            for (int t = 0; t < t_out; ++t)
                for (int dt = 0; dt < kernel_; ++dt) {
                    const int src = t + dt - pad_left_;
                    if (src < 0 || src >= in_length_) continue;
                    for (int c = 0; c < in_channels_; ++c)
                        grad_in(b, src * in_channels_ + c) +=
                            grad_cols(b * t_out + t, dt * in_channels_ + c);
                }
        return grad_in;
    }

    std::vector<ParamView> parameters() override {
        return {{weight_.data(), weight_grad_.data(), static_cast<std::size_t>(weight_.size())},
                {bias_.data(), bias_grad_.data(), static_cast<std::size_t>(bias_.size())}};
    }
    void zero_gradients() override {
        weight_grad_.setZero();
        bias_grad_.setZero();
    }

    int in_length() const { return in_length_; }
    int in_channels() const { return in_channels_; }
    int filters() const { return filters_; }
    int kernel_size() const { return kernel_; }
    Padding padding() const { return padding_; }
    Activation activation() const { return act_; }

private:
    int in_length_, in_channels_, filters_, kernel_, pad_left_;
    Padding padding_;
    Activation act_;
    Eigen::MatrixXd weight_, weight_grad_;
    Eigen::VectorXd bias_, bias_grad_;
    Eigen::MatrixXd cols_cache_, pre_cache_;
};

// Channel-wise max over non-overlapping windows; the first maximal element in
// a window wins and receives the full gradient.
class MaxPool1D : public Layer {
public:
    MaxPool1D(int in_length, int channels, int pool_size)
        : in_length_(in_length), channels_(channels), pool_(pool_size) {
        if (pool_size < 1 || in_length < pool_size)
            throw std::invalid_argument("maxpool1d: need 1 <= pool <= input length");
    }

    const char* kind() const override { return "maxpool1d"; }
    int out_length() const { return in_length_ / pool_; }
    std::vector<int> output_shape() const override { return {out_length(), channels_}; }
    std::size_t parameter_count() const override { return 0; }

    Eigen::MatrixXd forward(const Eigen::MatrixXd& x, bool training) override {
        const auto batch = x.rows();
        const int t_out = out_length();
        Eigen::MatrixXd y(batch, t_out * channels_);
        if (training) argmax_.assign(static_cast<std::size_t>(batch) * t_out * channels_, 0);
        for (Eigen::Index b = 0; b < batch; ++b)
            for (int t = 0; t < t_out; ++t)
                for (int c = 0; c < channels_; ++c) {
                    int best = t * pool_;
                    double best_v = x(b, best * channels_ + c);
                    for (int w = 1; w < pool_; ++w) {
                        const int idx = t * pool_ + w;
                        if (x(b, idx * channels_ + c) > best_v) {
                            best_v = x(b, idx * channels_ + c);
                            best = idx;
                        }
                    }
                    y(b, t * channels_ + c) = best_v;
                    if (training)
                        argmax_[(static_cast<std::size_t>(b) * t_out + t) * channels_ + c] = best;
                }
        return y;
    }

    Eigen::MatrixXd backward(const Eigen::MatrixXd& grad_out) override {
        if (argmax_.empty()) throw std::logic_error("maxpool1d: backward without forward");
        const auto batch = grad_out.rows();
        const int t_out = out_length();
        Eigen::MatrixXd grad_in = Eigen::MatrixXd::Zero(batch, in_length_ * channels_);
        for (Eigen::Index b = 0; b < batch; ++b)
            for (int t = 0; t < t_out; ++t)
                for (int c = 0; c < channels_; ++c) {
                    const int src = argmax_[(static_cast<std::size_t>(b) * t_out + t) * channels_ + c];
                    grad_in(b, src * channels_ + c) += grad_out(b, t * channels_ + c);
                }
        return grad_in;
    }

    std::vector<ParamView> parameters() override { return {}; }
    void zero_gradients() override {}

    int pool_size() const { return pool_; }
    int channels() const { return channels_; }

private:
    int in_length_, channels_, pool_;
    std::vector<int> argmax_;
};

// (len, ch) -> len*ch. The row-major batch layout makes this the identity;
// the layer only reshapes the declared output shape.
class FlattenLayer : public Layer {
public:
    FlattenLayer(int in_length, int channels) : in_length_(in_length), channels_(channels) {}
    const char* kind() const override { return "flatten"; }
    std::vector<int> output_shape() const override { return {in_length_ * channels_}; }
    std::size_t parameter_count() const override { return 0; }
    Eigen::MatrixXd forward(const Eigen::MatrixXd& x, bool) override { return x; }
    Eigen::MatrixXd backward(const Eigen::MatrixXd& grad_out) override { return grad_out; }
    std::vector<ParamView> parameters() override { return {}; }
    void zero_gradients() override {}

private:
    int in_length_, channels_;
};

class Dense : public Layer {
public:
    Dense(int in_features, int units, Activation act)
        : in_(in_features), units_(units), act_(act) {
        if (units < 1) throw std::invalid_argument("dense: units must be >= 1");
        weight_ = Eigen::MatrixXd::Zero(in_, units_);
        bias_ = Eigen::VectorXd::Zero(units_);
        weight_grad_ = weight_;
        bias_grad_ = bias_;
    }

    const char* kind() const override { return "dense"; }
    std::vector<int> output_shape() const override { return {units_}; }
    std::size_t parameter_count() const override {
        return static_cast<std::size_t>(in_) * units_ + units_;
    }

    Eigen::MatrixXd forward(const Eigen::MatrixXd& x, bool training) override {
        if (x.cols() != in_) throw std::invalid_argument("dense: input feature size mismatch");
        Eigen::MatrixXd pre = x * weight_;
        pre.rowwise() += bias_.transpose();
        if (training) {
            in_cache_ = x;
            pre_cache_ = pre;
        }
        detail::activate(act_, pre);
        return pre;
    }

    Eigen::MatrixXd backward(const Eigen::MatrixXd& grad_out) override {
        if (in_cache_.size() == 0) throw std::logic_error("dense: backward without forward");
        Eigen::MatrixXd grad_pre = grad_out;
        detail::mask_by_preactivation(act_, pre_cache_, grad_pre);
        weight_grad_ += in_cache_.transpose() * grad_pre;
        bias_grad_ += grad_pre.colwise().sum().transpose();
        return grad_pre * weight_.transpose();
    }

    std::vector<ParamView> parameters() override {
        return {{weight_.data(), weight_grad_.data(), static_cast<std::size_t>(weight_.size())},
                {bias_.data(), bias_grad_.data(), static_cast<std::size_t>(bias_.size())}};
    }
    void zero_gradients() override {
        weight_grad_.setZero();
        bias_grad_.setZero();
    }

    int in_features() const { return in_; }
    int units() const { return units_; }
    Activation activation() const { return act_; }

private:
    int in_, units_;
    Activation act_;
    Eigen::MatrixXd weight_, weight_grad_;
    Eigen::VectorXd bias_, bias_grad_;
    Eigen::MatrixXd in_cache_, pre_cache_;
};

}  // namespace qdlearn
