#pragma once

#include "s2s/layers.hpp"
#include "s2s/shape_space.hpp"
#include "s2s/silhouette.hpp"
#include "s2s/io_util.hpp"

#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace s2s {

/// Architecture description. channels[0] is the input channel count (2 for
/// x/y), channels[1] the BlockA width, the rest one BlockB stage each; the
/// same plan drives all three pipelines. The fusion pipeline accumulates
/// front and side features by elementwise addition after every stage.
struct ModelConfig {
    int M = 648;
    int k = 22;
    std::vector<int> channels = {2, 32, 64, 128, 256, 256};
    std::vector<int> fc_hidden = {512, 256};
    bool fusion = true;
    bool whole_map_pool = false;

    int stages() const { return static_cast<int>(channels.size()) - 2; }
    int input_length() const { return M + 2; }

    /// Per-stage map lengths: input, after BlockA, after each BlockB.
    std::vector<int> feature_lengths() const;
    int final_length() const { return feature_lengths().back(); }
    int flatten_width() const;
    void validate() const;
};

/// Reference plan: lands the parameter count near 2.2M for M=648.
ModelConfig reference_config(int k, int M = 648);

std::string config_to_json(const ModelConfig& config);
ModelConfig config_from_json(const std::string& text);

/// Conv(3,1) -> BatchNorm -> ReLU.
template <typename T>
struct BlockA {
    Conv1d<T> conv;
    BatchNorm1d<T> bn;
    ReluTensor<T> act;

    BlockA() = default;
    BlockA(int in_ch, int out_ch, int padding) : conv(in_ch, out_ch, padding), bn(out_ch) {}

    TensorBatch<T> forward(const TensorBatch<T>& x, Mode mode) {
        return act.forward(bn.forward(conv.forward(x), mode));
    }
    TensorBatch<T> backward(const TensorBatch<T>& g) {
        return conv.backward(bn.backward(act.backward(g)));
    }
};

/// Conv(3,1,pad 1) -> BatchNorm -> ReLU -> MaxPool(3,3). The pool is
/// disabled under the whole-map-pooling comparison.
template <typename T>
struct BlockB {
    Conv1d<T> conv;
    BatchNorm1d<T> bn;
    ReluTensor<T> act;
    MaxPool3<T> pool;
    bool use_pool = true;

    BlockB() = default;
    BlockB(int in_ch, int out_ch, bool use_pool_) : conv(in_ch, out_ch, 1), bn(out_ch), use_pool(use_pool_) {}

    TensorBatch<T> forward(const TensorBatch<T>& x, Mode mode) {
        auto y = act.forward(bn.forward(conv.forward(x), mode));
        return use_pool ? pool.forward(y) : y;
    }
    TensorBatch<T> backward(const TensorBatch<T>& g) {
        auto gy = use_pool ? pool.backward(g) : g;
        return conv.backward(bn.backward(act.backward(gy)));
    }
};

enum class ParamGroup { block, fc };

namespace detail {

template <typename T>
TensorBatch<T> add_batches(const TensorBatch<T>& a, const TensorBatch<T>& b) {
    if (a.size() != b.size()) throw InvalidInput("batch size mismatch in fusion add");
    TensorBatch<T> out = a;
    for (std::size_t s = 0; s < a.size(); ++s) {
        if (a[s].channels != b[s].channels || a[s].length != b[s].length) {
            throw InvalidInput("feature map shape mismatch in fusion add");
        }
        for (std::size_t i = 0; i < out[s].values.size(); ++i) out[s].values[i] += b[s].values[i];
    }
    return out;
}

} // namespace detail

/// The three-pipeline fusion network. Front and side pipelines extract
/// view-specific features; the fusion pipeline carries their sum through
/// its own blocks, re-adding the per-view features after every stage. The
/// final map is flattened into the ReLU FC head, whose last layer has no
/// activation and k outputs.
template <typename T>
class Model {
public:
    ModelConfig config;
    Mode mode = Mode::train;
    // Transfer mode: blocks run their BatchNorms on frozen running
    // statistics so no block state drifts while the FC head trains.
    bool freeze_block_stats = false;

    BlockA<T> front_a, side_a;
    std::vector<BlockB<T>> front_b, side_b, fusion_b;
    std::vector<Dense<T>> fc;
    std::vector<ReluVector<T>> fc_act;
    GlobalMaxPool<T> global_pool;

    Model() = default;

    explicit Model(const ModelConfig& cfg) : config(cfg) {
        config.validate();
        const bool pool = !config.whole_map_pool;
        front_a = BlockA<T>(config.channels[0], config.channels[1], 0);
        side_a = BlockA<T>(config.channels[0], config.channels[1], 0);
        for (int i = 0; i < config.stages(); ++i) {
            const int c_in = config.channels[static_cast<std::size_t>(i) + 1];
            const int c_out = config.channels[static_cast<std::size_t>(i) + 2];
            front_b.emplace_back(c_in, c_out, pool);
            side_b.emplace_back(c_in, c_out, pool);
            if (config.fusion) fusion_b.emplace_back(c_in, c_out, pool);
        }
        int width = config.flatten_width();
        for (int hidden : config.fc_hidden) {
            fc.emplace_back(width, hidden);
            fc_act.emplace_back();
            width = hidden;
        }
        fc.emplace_back(width, config.k);
    }

    /// Kaiming-style fan-in initialization for convolutions and FC layers;
    /// BatchNorm starts at scale 1 / shift 0.
    void init_params(std::uint64_t seed) {
        std::mt19937_64 rng(seed);
        std::normal_distribution<double> gauss(0.0, 1.0);
        auto fill = [&](std::vector<T>& w, int fan_in) {
            const double std_dev = std::sqrt(2.0 / fan_in);
            for (auto& v : w) v = static_cast<T>(gauss(rng) * std_dev);
        };
        auto init_block_a = [&](BlockA<T>& b) { fill(b.conv.weights, b.conv.in_channels() * 3); };
        auto init_block_b = [&](BlockB<T>& b) { fill(b.conv.weights, b.conv.in_channels() * 3); };
        init_block_a(front_a);
        for (auto& b : front_b) init_block_b(b);
        init_block_a(side_a);
        for (auto& b : side_b) init_block_b(b);
        for (auto& b : fusion_b) init_block_b(b);
        for (auto& d : fc) fill(d.weights, d.in_width());
    }

    void zero_grads() {
        visit_params([](ParamGroup, std::vector<T>&, std::vector<T>& g) {
            std::fill(g.begin(), g.end(), T(0));
        });
    }

    std::size_t param_count() const {
        std::size_t n = 0;
        visit_params([&n](ParamGroup, const std::vector<T>& w, const std::vector<T>&) { n += w.size(); });
        return n;
    }

    /// Visits every learnable array (weights, biases, BatchNorm scale and
    /// shift) in the declared order used by the optimizer state and the
    /// checkpoint layout: front pipeline, side pipeline, fusion pipeline,
    /// FC head.
    template <typename F>
    void visit_params(F&& f) {
        auto block_a = [&](BlockA<T>& b) {
            f(ParamGroup::block, b.conv.weights, b.conv.grad_weights);
            f(ParamGroup::block, b.conv.bias, b.conv.grad_bias);
            f(ParamGroup::block, b.bn.gamma, b.bn.grad_gamma);
            f(ParamGroup::block, b.bn.beta, b.bn.grad_beta);
        };
        auto block_b = [&](BlockB<T>& b) {
            f(ParamGroup::block, b.conv.weights, b.conv.grad_weights);
            f(ParamGroup::block, b.conv.bias, b.conv.grad_bias);
            f(ParamGroup::block, b.bn.gamma, b.bn.grad_gamma);
            f(ParamGroup::block, b.bn.beta, b.bn.grad_beta);
        };
        block_a(front_a);
        for (auto& b : front_b) block_b(b);
        block_a(side_a);
        for (auto& b : side_b) block_b(b);
        for (auto& b : fusion_b) block_b(b);
        for (auto& d : fc) {
            f(ParamGroup::fc, d.weights, d.grad_weights);
            f(ParamGroup::fc, d.bias, d.grad_bias);
        }
    }

    template <typename F>
    void visit_params(F&& f) const {
        auto* self = const_cast<Model<T>*>(this);
        self->visit_params([&](ParamGroup g, std::vector<T>& w, std::vector<T>& gr) {
            f(g, static_cast<const std::vector<T>&>(w), static_cast<const std::vector<T>&>(gr));
        });
    }

    /// Visits BatchNorm running statistics (state, not parameters) in the
    /// same block order.
    template <typename F>
    void visit_state(F&& f) {
        f(front_a.bn.running_mean);
        f(front_a.bn.running_var);
        for (auto& b : front_b) {
            f(b.bn.running_mean);
            f(b.bn.running_var);
        }
        f(side_a.bn.running_mean);
        f(side_a.bn.running_var);
        for (auto& b : side_b) {
            f(b.bn.running_mean);
            f(b.bn.running_var);
        }
        for (auto& b : fusion_b) {
            f(b.bn.running_mean);
            f(b.bn.running_var);
        }
    }

    VectorBatch<T> forward(const TensorBatch<T>& front, const TensorBatch<T>& side) {
        if (front.empty() || side.empty() || front.size() != side.size()) {
            throw InvalidInput("forward needs equal-size front and side batches");
        }
        for (const auto& x : front) {
            if (x.length != config.input_length()) throw InvalidInput("front input length must be M+2");
        }
        for (const auto& x : side) {
            if (x.length != config.input_length()) throw InvalidInput("side input length must be M+2");
        }

        const Mode block_mode = freeze_block_stats ? Mode::eval : mode;
        auto f = front_a.forward(front, block_mode);
        auto s = side_a.forward(side, block_mode);
        TensorBatch<T> u;
        if (config.fusion) u = detail::add_batches(f, s);
        for (int i = 0; i < config.stages(); ++i) {
            f = front_b[static_cast<std::size_t>(i)].forward(f, block_mode);
            s = side_b[static_cast<std::size_t>(i)].forward(s, block_mode);
            if (config.fusion) {
                u = detail::add_batches(fusion_b[static_cast<std::size_t>(i)].forward(u, block_mode), f);
                u = detail::add_batches(u, s);
            }
        }

        TensorBatch<T> map;
        if (config.fusion) {
            map = std::move(u);
        } else {
            // Fig-5-style ablation: channel-wise concatenation of the two
            // pipelines feeds the FC head.
            map.reserve(f.size());
            for (std::size_t i = 0; i < f.size(); ++i) {
                Tensor1D<T> m(f[i].channels + s[i].channels, f[i].length);
                std::copy(f[i].values.begin(), f[i].values.end(), m.values.begin());
                std::copy(s[i].values.begin(), s[i].values.end(),
                          m.values.begin() + static_cast<std::ptrdiff_t>(f[i].values.size()));
                map.push_back(std::move(m));
            }
        }
        if (config.whole_map_pool) map = global_pool.forward(map);

        VectorBatch<T> flat;
        flat.reserve(map.size());
        for (auto& m : map) flat.push_back(std::move(m.values));

        for (std::size_t l = 0; l < fc.size(); ++l) {
            flat = fc[l].forward(flat);
            if (l + 1 < fc.size()) flat = fc_act[l].forward(flat);
        }
        return flat;
    }

    /// Reverse-mode gradients for every parameter given d(loss)/d(output);
    /// requires a preceding forward pass. Returns nothing: gradients
    /// accumulate in the layers' grad buffers.
    void backward(const VectorBatch<T>& grad_output) {
        VectorBatch<T> g = grad_output;
        for (std::size_t l = fc.size(); l-- > 0;) {
            if (l + 1 < fc.size()) g = fc_act[l].backward(g);
            g = fc[l].backward(g);
        }

        const int map_channels = config.fusion ? config.channels.back() : 2 * config.channels.back();
        const int map_length = config.whole_map_pool ? 1 : config.final_length();
        TensorBatch<T> g_map;
        g_map.reserve(g.size());
        for (auto& v : g) {
            Tensor1D<T> m(map_channels, map_length);
            if (static_cast<int>(v.size()) != map_channels * map_length) {
                throw std::logic_error("backward called without matching forward");
            }
            m.values = std::move(v);
            g_map.push_back(std::move(m));
        }
        if (config.whole_map_pool) g_map = global_pool.backward(g_map);

        TensorBatch<T> g_f, g_s;
        if (config.fusion) {
            TensorBatch<T> g_u = std::move(g_map);
            g_f = g_u;
            g_s = g_u;
            for (int i = config.stages(); i-- > 0;) {
                auto g_u_prev = fusion_b[static_cast<std::size_t>(i)].backward(g_u);
                auto g_f_prev = front_b[static_cast<std::size_t>(i)].backward(g_f);
                auto g_s_prev = side_b[static_cast<std::size_t>(i)].backward(g_s);
                g_f = detail::add_batches(g_f_prev, g_u_prev);
                g_s = detail::add_batches(g_s_prev, g_u_prev);
                g_u = std::move(g_u_prev);
            }
        } else {
            const int half = config.channels.back();
            g_f.reserve(g_map.size());
            g_s.reserve(g_map.size());
            for (const auto& m : g_map) {
                Tensor1D<T> a(half, m.length), b(half, m.length);
                std::copy(m.values.begin(), m.values.begin() + a.values.size(), a.values.begin());
                std::copy(m.values.begin() + static_cast<std::ptrdiff_t>(a.values.size()),
                          m.values.end(), b.values.begin());
                g_f.push_back(std::move(a));
                g_s.push_back(std::move(b));
            }
            for (int i = config.stages(); i-- > 0;) {
                g_f = front_b[static_cast<std::size_t>(i)].backward(g_f);
                g_s = side_b[static_cast<std::size_t>(i)].backward(g_s);
            }
        }
        front_a.backward(g_f);
        side_a.backward(g_s);
    }

    /// Eval-mode single-sample convenience wrapper.
    ShapeCoeffs predict(const ContourSamples& front, const ContourSamples& side) {
        const Mode saved = mode;
        mode = Mode::eval;
        auto out = forward({contour_tensor(front)}, {contour_tensor(side)});
        mode = saved;
        Eigen::VectorXd values(config.k);
        for (int i = 0; i < config.k; ++i) values(i) = static_cast<double>(out.front()[static_cast<std::size_t>(i)]);
        return ShapeCoeffs{values};
    }

    /// Channel 0 = x, channel 1 = y, length M+2.
    static Tensor1D<T> contour_tensor(const ContourSamples& samples) {
        Tensor1D<T> t(2, static_cast<int>(samples.points.size()));
        for (std::size_t i = 0; i < samples.points.size(); ++i) {
            t.at(0, static_cast<int>(i)) = static_cast<T>(samples.points[i].x());
            t.at(1, static_cast<int>(i)) = static_cast<T>(samples.points[i].y());
        }
        return t;
    }
};

// Checkpoint ("S2SMODL"): 8-byte magic, u32 version, u64 config JSON
// length, the JSON bytes, u64 total scalar parameter count, then every
// parameter array in visit order as f32 little-endian, then the BatchNorm
// running mean/variance arrays in block order, also f32.
template <typename T>
void save_model(const Model<T>& model, const std::string& path) {
    auto os = open_output(path);
    write_magic(os, "S2SMODL");
    write_le<std::uint32_t>(os, 1);
    const std::string config_json = config_to_json(model.config);
    write_le<std::uint64_t>(os, config_json.size());
    write_bytes(os, config_json.data(), config_json.size());
    write_le<std::uint64_t>(os, model.param_count());
    model.visit_params([&os](ParamGroup, const std::vector<T>& w, const std::vector<T>&) {
        for (T v : w) write_le<float>(os, static_cast<float>(v));
    });
    auto* mutable_model = const_cast<Model<T>*>(&model);
    mutable_model->visit_state([&os](std::vector<T>& s) {
        for (T v : s) write_le<float>(os, static_cast<float>(v));
    });
}

template <typename T>
Model<T> load_model(const std::string& path) {
    auto is = open_input(path);
    expect_magic(is, "S2SMODL");
    if (read_le<std::uint32_t>(is) != 1) throw IoError("unsupported model container version");
    const auto json_len = read_le<std::uint64_t>(is);
    std::string config_json(json_len, '\0');
    read_bytes(is, config_json.data(), json_len);
    Model<T> model(config_from_json(config_json));
    const auto expected = read_le<std::uint64_t>(is);
    if (expected != model.param_count()) throw IoError("checkpoint parameter count mismatch");
    model.visit_params([&is](ParamGroup, std::vector<T>& w, std::vector<T>&) {
        for (auto& v : w) v = static_cast<T>(read_le<float>(is));
    });
    model.visit_state([&is](std::vector<T>& s) {
        for (auto& v : s) v = static_cast<T>(read_le<float>(is));
    });
    model.mode = Mode::eval;
    return model;
}

} // namespace s2s
