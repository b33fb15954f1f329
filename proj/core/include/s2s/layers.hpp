#pragma once

#include "s2s/tensor.hpp"

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>

namespace s2s {

enum class Mode { train, eval };

/// 1D cross-correlation with kernel size 3, stride 1 and padding 0 or 1.
/// Output length is input length + 2*padding - 2.
template <typename T>
class Conv1d {
public:
    Conv1d() = default;
    Conv1d(int in_channels, int out_channels, int padding)
        : in_channels_(in_channels), out_channels_(out_channels), padding_(padding),
          weights(static_cast<std::size_t>(out_channels) * in_channels * 3, T(0)),
          bias(static_cast<std::size_t>(out_channels), T(0)),
          grad_weights(weights.size(), T(0)), grad_bias(bias.size(), T(0)) {
        if (padding != 0 && padding != 1) throw InvalidInput("conv padding must be 0 or 1");
    }

    int in_channels() const { return in_channels_; }
    int out_channels() const { return out_channels_; }
    int padding() const { return padding_; }
    int output_length(int input_length) const { return input_length + 2 * padding_ - 2; }

    TensorBatch<T> forward(const TensorBatch<T>& input) {
        cached_input_ = input;
        TensorBatch<T> output;
        output.reserve(input.size());
        for (const auto& x : input) {
            if (x.channels != in_channels_) throw InvalidInput("conv input channel mismatch");
            const int out_len = output_length(x.length);
            if (out_len < 1) throw InvalidInput("conv input too short for kernel size 3");
            Tensor1D<T> y(out_channels_, out_len);
            for (int oc = 0; oc < out_channels_; ++oc) {
                T* out_row = y.row(oc);
                for (int i = 0; i < out_len; ++i) out_row[i] = bias[static_cast<std::size_t>(oc)];
                for (int ic = 0; ic < in_channels_; ++ic) {
                    const T* in_row = x.row(ic);
                    const T* w = kernel(oc, ic);
                    if (padding_ == 0) {
                        for (int i = 0; i < out_len; ++i) {
                            out_row[i] += w[0] * in_row[i] + w[1] * in_row[i + 1] + w[2] * in_row[i + 2];
                        }
                    } else {
                        out_row[0] += w[1] * in_row[0] + w[2] * in_row[1];
                        for (int i = 1; i < out_len - 1; ++i) {
                            out_row[i] += w[0] * in_row[i - 1] + w[1] * in_row[i] + w[2] * in_row[i + 1];
                        }
                        out_row[out_len - 1] += w[0] * in_row[x.length - 2] + w[1] * in_row[x.length - 1];
                    }
                }
            }
            output.push_back(std::move(y));
        }
        return output;
    }

    /// Accumulates weight/bias gradients and returns the input gradient.
    TensorBatch<T> backward(const TensorBatch<T>& grad_output) {
        if (cached_input_.size() != grad_output.size()) {
            throw std::logic_error("conv backward without matching forward");
        }
        TensorBatch<T> grad_input;
        grad_input.reserve(grad_output.size());
        for (std::size_t s = 0; s < grad_output.size(); ++s) {
            const auto& x = cached_input_[s];
            const auto& gy = grad_output[s];
            Tensor1D<T> gx(x.channels, x.length);
            const int out_len = gy.length;
            for (int oc = 0; oc < out_channels_; ++oc) {
                const T* gy_row = gy.row(oc);
                T gb = T(0);
                for (int i = 0; i < out_len; ++i) gb += gy_row[i];
                grad_bias[static_cast<std::size_t>(oc)] += gb;
                for (int ic = 0; ic < in_channels_; ++ic) {
                    const T* in_row = x.row(ic);
                    T* gx_row = gx.row(ic);
                    const T* w = kernel(oc, ic);
                    T* gw = grad_kernel(oc, ic);
                    if (padding_ == 0) {
                        T gw0 = T(0), gw1 = T(0), gw2 = T(0);
                        for (int i = 0; i < out_len; ++i) {
                            const T g = gy_row[i];
                            gw0 += g * in_row[i];
                            gw1 += g * in_row[i + 1];
                            gw2 += g * in_row[i + 2];
                            gx_row[i] += w[0] * g;
                            gx_row[i + 1] += w[1] * g;
                            gx_row[i + 2] += w[2] * g;
                        }
                        gw[0] += gw0;
                        gw[1] += gw1;
                        gw[2] += gw2;
                    } else {
                        T gw0 = T(0), gw1 = T(0), gw2 = T(0);
                        {
                            const T g = gy_row[0];
                            gw1 += g * in_row[0];
                            gw2 += g * in_row[1];
                            gx_row[0] += w[1] * g;
                            gx_row[1] += w[2] * g;
                        }
                        for (int i = 1; i < out_len - 1; ++i) {
                            const T g = gy_row[i];
                            gw0 += g * in_row[i - 1];
                            gw1 += g * in_row[i];
                            gw2 += g * in_row[i + 1];
                            gx_row[i - 1] += w[0] * g;
                            gx_row[i] += w[1] * g;
                            gx_row[i + 1] += w[2] * g;
                        }
                        {
                            const T g = gy_row[out_len - 1];
                            gw0 += g * in_row[x.length - 2];
                            gw1 += g * in_row[x.length - 1];
                            gx_row[x.length - 2] += w[0] * g;
                            gx_row[x.length - 1] += w[1] * g;
                        }
                        gw[0] += gw0;
                        gw[1] += gw1;
                        gw[2] += gw2;
                    }
                }
            }
            grad_input.push_back(std::move(gx));
        }
        return grad_input;
    }

    std::vector<T> weights, bias;
    std::vector<T> grad_weights, grad_bias;

private:
    T* kernel(int oc, int ic) {
        return weights.data() + (static_cast<std::size_t>(oc) * in_channels_ + ic) * 3;
    }
    const T* kernel(int oc, int ic) const {
        return weights.data() + (static_cast<std::size_t>(oc) * in_channels_ + ic) * 3;
    }
    T* grad_kernel(int oc, int ic) {
        return grad_weights.data() + (static_cast<std::size_t>(oc) * in_channels_ + ic) * 3;
    }

    int in_channels_ = 0, out_channels_ = 0, padding_ = 0;
    TensorBatch<T> cached_input_;
};

/// Per-channel batch normalization over (batch, length) with eps 1e-5 and
/// running-statistics momentum 0.1. Train mode requires batch >= 2.
template <typename T>
class BatchNorm1d {
public:
    static constexpr double kEps = 1e-5;
    static constexpr double kMomentum = 0.1;

    BatchNorm1d() = default;
    explicit BatchNorm1d(int channels)
        : channels_(channels), gamma(static_cast<std::size_t>(channels), T(1)),
          beta(static_cast<std::size_t>(channels), T(0)),
          grad_gamma(static_cast<std::size_t>(channels), T(0)),
          grad_beta(static_cast<std::size_t>(channels), T(0)),
          running_mean(static_cast<std::size_t>(channels), T(0)),
          running_var(static_cast<std::size_t>(channels), T(1)) {}

    int channels() const { return channels_; }

    TensorBatch<T> forward(const TensorBatch<T>& input, Mode mode) {
        if (input.empty()) throw InvalidInput("batchnorm on empty batch");
        if (mode == Mode::train && input.size() < 2) {
            throw InvalidInput("batchnorm in train mode needs batch >= 2");
        }
        for (const auto& x : input) {
            if (x.channels != channels_) throw InvalidInput("batchnorm channel mismatch");
        }
        mode_ = mode;
        const int length = input.front().length;
        const double ns = static_cast<double>(input.size()) * length;

        mean_.assign(static_cast<std::size_t>(channels_), 0.0);
        inv_std_.assign(static_cast<std::size_t>(channels_), T(0));
        if (mode == Mode::train) {
            for (int c = 0; c < channels_; ++c) {
                double sum = 0.0, sq = 0.0;
                for (const auto& x : input) {
                    const T* row = x.row(c);
                    for (int i = 0; i < length; ++i) {
                        sum += static_cast<double>(row[i]);
                        sq += static_cast<double>(row[i]) * static_cast<double>(row[i]);
                    }
                }
                const double mean = sum / ns;
                const double var = std::max(sq / ns - mean * mean, 0.0);
                mean_[c] = mean;
                inv_std_[static_cast<std::size_t>(c)] = static_cast<T>(1.0 / std::sqrt(var + kEps));
                running_mean[static_cast<std::size_t>(c)] = static_cast<T>(
                    (1.0 - kMomentum) * static_cast<double>(running_mean[static_cast<std::size_t>(c)]) +
                    kMomentum * mean);
                running_var[static_cast<std::size_t>(c)] = static_cast<T>(
                    (1.0 - kMomentum) * static_cast<double>(running_var[static_cast<std::size_t>(c)]) +
                    kMomentum * var * ns / (ns - 1.0));
            }
        } else {
            for (int c = 0; c < channels_; ++c) {
                mean_[c] = static_cast<double>(running_mean[static_cast<std::size_t>(c)]);
                inv_std_[static_cast<std::size_t>(c)] = static_cast<T>(
                    1.0 / std::sqrt(static_cast<double>(running_var[static_cast<std::size_t>(c)]) + kEps));
            }
        }

        xhat_.clear();
        xhat_.reserve(input.size());
        TensorBatch<T> output;
        output.reserve(input.size());
        for (const auto& x : input) {
            Tensor1D<T> xh(channels_, length);
            Tensor1D<T> y(channels_, length);
            for (int c = 0; c < channels_; ++c) {
                const T* row = x.row(c);
                T* xh_row = xh.row(c);
                T* y_row = y.row(c);
                const T m = static_cast<T>(mean_[c]);
                const T is = inv_std_[static_cast<std::size_t>(c)];
                const T g = gamma[static_cast<std::size_t>(c)];
                const T b = beta[static_cast<std::size_t>(c)];
                for (int i = 0; i < length; ++i) {
                    xh_row[i] = (row[i] - m) * is;
                    y_row[i] = g * xh_row[i] + b;
                }
            }
            xhat_.push_back(std::move(xh));
            output.push_back(std::move(y));
        }
        return output;
    }

    TensorBatch<T> backward(const TensorBatch<T>& grad_output) {
        if (xhat_.size() != grad_output.size()) {
            throw std::logic_error("batchnorm backward without matching forward");
        }
        const int length = grad_output.front().length;
        const double ns = static_cast<double>(grad_output.size()) * length;
        TensorBatch<T> grad_input(grad_output.size());
        for (std::size_t s = 0; s < grad_output.size(); ++s) {
            grad_input[s] = Tensor1D<T>(channels_, length);
        }
        for (int c = 0; c < channels_; ++c) {
            double sum_g = 0.0, sum_gx = 0.0;
            for (std::size_t s = 0; s < grad_output.size(); ++s) {
                const T* gy = grad_output[s].row(c);
                const T* xh = xhat_[s].row(c);
                for (int i = 0; i < length; ++i) {
                    sum_g += static_cast<double>(gy[i]);
                    sum_gx += static_cast<double>(gy[i]) * static_cast<double>(xh[i]);
                }
            }
            grad_gamma[static_cast<std::size_t>(c)] += static_cast<T>(sum_gx);
            grad_beta[static_cast<std::size_t>(c)] += static_cast<T>(sum_g);
            const T g = gamma[static_cast<std::size_t>(c)];
            const T is = inv_std_[static_cast<std::size_t>(c)];
            if (mode_ == Mode::train) {
                const T mean_g = static_cast<T>(sum_g / ns);
                const T mean_gx = static_cast<T>(sum_gx / ns);
                for (std::size_t s = 0; s < grad_output.size(); ++s) {
                    const T* gy = grad_output[s].row(c);
                    const T* xh = xhat_[s].row(c);
                    T* gx = grad_input[s].row(c);
                    for (int i = 0; i < length; ++i) {
                        gx[i] = g * is * (gy[i] - mean_g - xh[i] * mean_gx);
                    }
                }
            } else {
                for (std::size_t s = 0; s < grad_output.size(); ++s) {
                    const T* gy = grad_output[s].row(c);
                    T* gx = grad_input[s].row(c);
                    for (int i = 0; i < length; ++i) gx[i] = g * is * gy[i];
                }
            }
        }
        return grad_input;
    }

    std::vector<T> gamma, beta;
    std::vector<T> grad_gamma, grad_beta;
    std::vector<T> running_mean, running_var;

private:
    int channels_ = 0;
    Mode mode_ = Mode::train;
    std::vector<double> mean_;
    std::vector<T> inv_std_;
    TensorBatch<T> xhat_;
};

/// Elementwise max(0, x) on feature maps.
template <typename T>
class ReluTensor {
public:
    TensorBatch<T> forward(const TensorBatch<T>& input) {
        cached_output_ = input;
        for (auto& x : cached_output_) {
            for (auto& v : x.values) v = v > T(0) ? v : T(0);
        }
        return cached_output_;
    }

    TensorBatch<T> backward(const TensorBatch<T>& grad_output) {
        if (cached_output_.size() != grad_output.size()) {
            throw std::logic_error("relu backward without matching forward");
        }
        TensorBatch<T> grad_input = grad_output;
        for (std::size_t s = 0; s < grad_output.size(); ++s) {
            for (std::size_t i = 0; i < grad_input[s].values.size(); ++i) {
                if (!(cached_output_[s].values[i] > T(0))) grad_input[s].values[i] = T(0);
            }
        }
        return grad_input;
    }

private:
    TensorBatch<T> cached_output_;
};

/// Max pooling with window 3 and stride 3; the input length must be
/// divisible by 3. Gradients route to the first argmax of each window.
template <typename T>
class MaxPool3 {
public:
    TensorBatch<T> forward(const TensorBatch<T>& input) {
        argmax_.clear();
        argmax_.reserve(input.size());
        input_length_ = input.empty() ? 0 : input.front().length;
        TensorBatch<T> output;
        output.reserve(input.size());
        for (const auto& x : input) {
            if (x.length % 3 != 0) throw InvalidInput("maxpool input length not divisible by 3");
            const int out_len = x.length / 3;
            Tensor1D<T> y(x.channels, out_len);
            std::vector<std::int8_t> amax(static_cast<std::size_t>(x.channels) * out_len);
            for (int c = 0; c < x.channels; ++c) {
                const T* row = x.row(c);
                T* y_row = y.row(c);
                for (int i = 0; i < out_len; ++i) {
                    const T a = row[3 * i], b = row[3 * i + 1], d = row[3 * i + 2];
                    int best = 0;
                    T m = a;
                    if (b > m) { m = b; best = 1; }
                    if (d > m) { m = d; best = 2; }
                    y_row[i] = m;
                    amax[static_cast<std::size_t>(c) * out_len + i] = static_cast<std::int8_t>(best);
                }
            }
            argmax_.push_back(std::move(amax));
            output.push_back(std::move(y));
        }
        return output;
    }

    TensorBatch<T> backward(const TensorBatch<T>& grad_output) {
        if (argmax_.size() != grad_output.size()) {
            throw std::logic_error("maxpool backward without matching forward");
        }
        TensorBatch<T> grad_input;
        grad_input.reserve(grad_output.size());
        for (std::size_t s = 0; s < grad_output.size(); ++s) {
            const auto& gy = grad_output[s];
            Tensor1D<T> gx(gy.channels, input_length_);
            const int out_len = gy.length;
            for (int c = 0; c < gy.channels; ++c) {
                const T* gy_row = gy.row(c);
                T* gx_row = gx.row(c);
                for (int i = 0; i < out_len; ++i) {
                    gx_row[3 * i + argmax_[s][static_cast<std::size_t>(c) * out_len + i]] += gy_row[i];
                }
            }
            grad_input.push_back(std::move(gx));
        }
        return grad_input;
    }

private:
    int input_length_ = 0;
    std::vector<std::vector<std::int8_t>> argmax_;
};

/// Per-channel max over the whole feature map (the whole-map pooling
/// comparison); output length 1.
template <typename T>
class GlobalMaxPool {
public:
    TensorBatch<T> forward(const TensorBatch<T>& input) {
        argmax_.clear();
        argmax_.reserve(input.size());
        input_length_ = input.empty() ? 0 : input.front().length;
        TensorBatch<T> output;
        output.reserve(input.size());
        for (const auto& x : input) {
            Tensor1D<T> y(x.channels, 1);
            std::vector<int> amax(static_cast<std::size_t>(x.channels));
            for (int c = 0; c < x.channels; ++c) {
                const T* row = x.row(c);
                int best = 0;
                for (int i = 1; i < x.length; ++i) {
                    if (row[i] > row[best]) best = i;
                }
                y.at(c, 0) = row[best];
                amax[static_cast<std::size_t>(c)] = best;
            }
            argmax_.push_back(std::move(amax));
            output.push_back(std::move(y));
        }
        return output;
    }

    TensorBatch<T> backward(const TensorBatch<T>& grad_output) {
        if (argmax_.size() != grad_output.size()) {
            throw std::logic_error("global pool backward without matching forward");
        }
        TensorBatch<T> grad_input;
        grad_input.reserve(grad_output.size());
        for (std::size_t s = 0; s < grad_output.size(); ++s) {
            const auto& gy = grad_output[s];
            Tensor1D<T> gx(gy.channels, input_length_);
            for (int c = 0; c < gy.channels; ++c) {
                gx.at(c, argmax_[s][static_cast<std::size_t>(c)]) += gy.at(c, 0);
            }
            grad_input.push_back(std::move(gx));
        }
        return grad_input;
    }

private:
    int input_length_ = 0;
    std::vector<std::vector<int>> argmax_;
};

/// Affine layer on flat vectors.
template <typename T>
class Dense {
public:
    Dense() = default;
    Dense(int in_width, int out_width)
        : in_width_(in_width), out_width_(out_width),
          weights(static_cast<std::size_t>(out_width) * in_width, T(0)),
          bias(static_cast<std::size_t>(out_width), T(0)),
          grad_weights(weights.size(), T(0)), grad_bias(bias.size(), T(0)) {}

    int in_width() const { return in_width_; }
    int out_width() const { return out_width_; }

    VectorBatch<T> forward(const VectorBatch<T>& input) {
        cached_input_ = input;
        VectorBatch<T> output;
        output.reserve(input.size());
        for (const auto& x : input) {
            if (static_cast<int>(x.size()) != in_width_) throw InvalidInput("dense input width mismatch");
            std::vector<T> y(static_cast<std::size_t>(out_width_));
            for (int o = 0; o < out_width_; ++o) {
                const T* w = weights.data() + static_cast<std::size_t>(o) * in_width_;
                T acc = bias[static_cast<std::size_t>(o)];
                for (int i = 0; i < in_width_; ++i) acc += w[i] * x[static_cast<std::size_t>(i)];
                y[static_cast<std::size_t>(o)] = acc;
            }
            output.push_back(std::move(y));
        }
        return output;
    }

    VectorBatch<T> backward(const VectorBatch<T>& grad_output) {
        if (cached_input_.size() != grad_output.size()) {
            throw std::logic_error("dense backward without matching forward");
        }
        VectorBatch<T> grad_input;
        grad_input.reserve(grad_output.size());
        for (std::size_t s = 0; s < grad_output.size(); ++s) {
            const auto& x = cached_input_[s];
            const auto& gy = grad_output[s];
            std::vector<T> gx(static_cast<std::size_t>(in_width_), T(0));
            for (int o = 0; o < out_width_; ++o) {
                const T g = gy[static_cast<std::size_t>(o)];
                grad_bias[static_cast<std::size_t>(o)] += g;
                const T* w = weights.data() + static_cast<std::size_t>(o) * in_width_;
                T* gw = grad_weights.data() + static_cast<std::size_t>(o) * in_width_;
                for (int i = 0; i < in_width_; ++i) {
                    gw[i] += g * x[static_cast<std::size_t>(i)];
                    gx[static_cast<std::size_t>(i)] += w[i] * g;
                }
            }
            grad_input.push_back(std::move(gx));
        }
        return grad_input;
    }

    std::vector<T> weights, bias;
    std::vector<T> grad_weights, grad_bias;

private:
    int in_width_ = 0, out_width_ = 0;
    VectorBatch<T> cached_input_;
};

/// ReLU on flat vectors (the FC head).
template <typename T>
class ReluVector {
public:
    VectorBatch<T> forward(const VectorBatch<T>& input) {
        cached_output_ = input;
        for (auto& x : cached_output_) {
            for (auto& v : x) v = v > T(0) ? v : T(0);
        }
        return cached_output_;
    }

    VectorBatch<T> backward(const VectorBatch<T>& grad_output) {
        if (cached_output_.size() != grad_output.size()) {
            throw std::logic_error("relu backward without matching forward");
        }
        VectorBatch<T> grad_input = grad_output;
        for (std::size_t s = 0; s < grad_output.size(); ++s) {
            for (std::size_t i = 0; i < grad_input[s].size(); ++i) {
                if (!(cached_output_[s][i] > T(0))) grad_input[s][i] = T(0);
            }
        }
        return grad_input;
    }

private:
    VectorBatch<T> cached_output_;
};

} // namespace s2s
