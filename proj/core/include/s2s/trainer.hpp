#pragma once

#include "s2s/metrics.hpp"
#include "s2s/network.hpp"

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace s2s {

struct TrainConfig {
    int epochs = 500;
    int batch_size = 128;
    double learning_rate = 1.0e-5;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double adam_epsilon = 1e-8;
    std::uint64_t seed = 0;
    double split_ratio = 0.8;  // train fraction of the 4:1 split
    bool freeze_blocks = false;
    int validate_every = 10;
    int checkpoint_every = 0;  // epochs; 0 disables
    std::string checkpoint_dir;

    void validate() const {
        if (epochs < 0 || batch_size < 1) throw InvalidInput("epochs must be >= 0 and batch size >= 1");
        if (!(learning_rate > 0.0)) throw InvalidInput("learning rate must be positive");
        if (!(beta1 > 0.0 && beta1 < 1.0) || !(beta2 > 0.0 && beta2 < 1.0)) {
            throw InvalidInput("adam betas must be in (0,1)");
        }
        if (!(adam_epsilon > 0.0)) throw InvalidInput("adam epsilon must be positive");
        if (!(split_ratio > 0.0 && split_ratio < 1.0)) throw InvalidInput("split ratio must be in (0,1)");
    }
};

std::string train_config_to_json(const TrainConfig& config);
TrainConfig train_config_from_json(const std::string& text);

/// Sum over the batch of squared coefficient differences (Eq.-style sum
/// reduction, not mean).
template <typename T>
double coeff_loss(const VectorBatch<T>& pred, const VectorBatch<T>& truth) {
    if (pred.size() != truth.size() || pred.empty()) throw InvalidInput("loss needs equal non-empty batches");
    double loss = 0.0;
    for (std::size_t s = 0; s < pred.size(); ++s) {
        if (pred[s].size() != truth[s].size()) throw InvalidInput("coefficient length mismatch in loss");
        for (std::size_t i = 0; i < pred[s].size(); ++i) {
            const double d = static_cast<double>(pred[s][i]) - static_cast<double>(truth[s][i]);
            loss += d * d;
        }
    }
    return loss;
}

inline double coeff_loss(const std::vector<ShapeCoeffs>& pred, const std::vector<ShapeCoeffs>& truth) {
    if (pred.size() != truth.size() || pred.empty()) throw InvalidInput("loss needs equal non-empty batches");
    double loss = 0.0;
    for (std::size_t s = 0; s < pred.size(); ++s) {
        if (pred[s].size() != truth[s].size()) throw InvalidInput("coefficient length mismatch in loss");
        loss += (pred[s].values - truth[s].values).squaredNorm();
    }
    return loss;
}

/// d(coeff_loss)/d(pred) = 2 (pred - truth).
template <typename T>
VectorBatch<T> coeff_loss_grad(const VectorBatch<T>& pred, const VectorBatch<T>& truth) {
    if (pred.size() != truth.size() || pred.empty()) throw InvalidInput("loss needs equal non-empty batches");
    VectorBatch<T> grad = pred;
    for (std::size_t s = 0; s < pred.size(); ++s) {
        if (pred[s].size() != truth[s].size()) throw InvalidInput("coefficient length mismatch in loss");
        for (std::size_t i = 0; i < pred[s].size(); ++i) {
            grad[s][i] = T(2) * (pred[s][i] - truth[s][i]);
        }
    }
    return grad;
}

/// Sum of squared vertex-to-vertex distances via full decode. Equals
/// coeff_loss exactly when the component columns are orthonormal; kept as
/// the independent route for that identity.
double vertex_loss(const ShapeSpace& space, const std::vector<ShapeCoeffs>& pred,
                   const std::vector<ShapeCoeffs>& truth);

template <typename T>
struct AdamState {
    std::vector<std::vector<T>> first_moment;
    std::vector<std::vector<T>> second_moment;
    long step = 0;

    static AdamState initialized_for(Model<T>& model) {
        AdamState state;
        model.visit_params([&state](ParamGroup, std::vector<T>& w, std::vector<T>&) {
            state.first_moment.emplace_back(w.size(), T(0));
            state.second_moment.emplace_back(w.size(), T(0));
        });
        return state;
    }
};

/// Bias-corrected Adam update of one parameter array.
template <typename T>
void adam_update_array(std::vector<T>& params, const std::vector<T>& grads, std::vector<T>& m,
                       std::vector<T>& v, long step, const TrainConfig& config) {
    if (params.size() != grads.size() || params.size() != m.size() || params.size() != v.size()) {
        throw InvalidInput("adam buffers must mirror parameter shapes");
    }
    const double b1 = config.beta1;
    const double b2 = config.beta2;
    const double corr1 = 1.0 - std::pow(b1, static_cast<double>(step));
    const double corr2 = 1.0 - std::pow(b2, static_cast<double>(step));
    for (std::size_t i = 0; i < params.size(); ++i) {
        const double g = static_cast<double>(grads[i]);
        const double mi = b1 * static_cast<double>(m[i]) + (1.0 - b1) * g;
        const double vi = b2 * static_cast<double>(v[i]) + (1.0 - b2) * g * g;
        m[i] = static_cast<T>(mi);
        v[i] = static_cast<T>(vi);
        const double m_hat = mi / corr1;
        const double v_hat = vi / corr2;
        params[i] = static_cast<T>(static_cast<double>(params[i]) -
                                   config.learning_rate * m_hat / (std::sqrt(v_hat) + config.adam_epsilon));
    }
}

/// One optimizer step over the whole model from the accumulated gradients.
/// Under freeze_blocks only the FC head moves; block gradients stay
/// computed but unapplied.
template <typename T>
void adam_step(Model<T>& model, AdamState<T>& state, const TrainConfig& config) {
    ++state.step;
    std::size_t index = 0;
    model.visit_params([&](ParamGroup group, std::vector<T>& w, std::vector<T>& g) {
        if (index >= state.first_moment.size()) throw InvalidInput("adam state does not mirror the model");
        if (!(config.freeze_blocks && group == ParamGroup::block)) {
            adam_update_array(w, g, state.first_moment[index], state.second_moment[index],
                              state.step, config);
        }
        ++index;
    });
}

struct TrainingSample {
    ContourSamples front;
    ContourSamples side;
    Eigen::VectorXd coeffs;
};

using TrainingSet = std::vector<TrainingSample>;

struct EpochRecord {
    int epoch = 0;
    double train_loss = 0.0;  // summed over the dataset
    std::optional<double> val_e_aver;
};

struct TrainHistory {
    std::vector<EpochRecord> epochs;
};

/// Mean E_aver between decoded truth and decoded prediction, unit-height.
template <typename T>
double validation_e_aver(Model<T>& model, const TrainingSet& set, const ShapeSpace& space) {
    if (set.empty()) throw InvalidInput("validation on empty set");
    double sum = 0.0;
    for (const auto& sample : set) {
        const ShapeCoeffs pred = model.predict(sample.front, sample.side);
        const Mesh truth = decode(space, ShapeCoeffs{sample.coeffs});
        sum += e_aver(truth, decode(space, pred));
    }
    return sum / static_cast<double>(set.size());
}

namespace detail {

inline std::vector<std::size_t> shuffled_indices(std::size_t n, std::mt19937_64& rng) {
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    // Fisher-Yates, explicit to pin the draw sequence to the engine
    for (std::size_t i = n; i > 1; --i) {
        const std::size_t j = rng() % i;
        std::swap(idx[i - 1], idx[j]);
    }
    return idx;
}

} // namespace detail

/// Epochs of shuffled mini-batch coefficient-loss minimization with Adam.
/// Silhouettes are expected to be pre-sampled; the loop never re-renders.
/// Optional validation (every validate_every epochs) needs a decode space.
template <typename T>
TrainHistory train(Model<T>& model, const TrainingSet& data, const TrainConfig& config,
                   const ShapeSpace* val_space = nullptr, const TrainingSet* val_set = nullptr) {
    config.validate();
    if (data.empty()) throw InvalidInput("training set is empty");
    for (const auto& sample : data) {
        if (static_cast<int>(sample.coeffs.size()) != model.config.k) {
            throw InvalidInput("coefficient length does not match the model output width");
        }
    }

    // Precompute input tensors once.
    std::vector<Tensor1D<T>> front_in, side_in;
    VectorBatch<T> truth_all;
    front_in.reserve(data.size());
    side_in.reserve(data.size());
    truth_all.reserve(data.size());
    for (const auto& sample : data) {
        front_in.push_back(Model<T>::contour_tensor(sample.front));
        side_in.push_back(Model<T>::contour_tensor(sample.side));
        std::vector<T> c(static_cast<std::size_t>(sample.coeffs.size()));
        for (Eigen::Index i = 0; i < sample.coeffs.size(); ++i) c[static_cast<std::size_t>(i)] = static_cast<T>(sample.coeffs(i));
        truth_all.push_back(std::move(c));
    }

    AdamState<T> state = AdamState<T>::initialized_for(model);
    std::mt19937_64 rng(config.seed);
    TrainHistory history;

    model.freeze_block_stats = config.freeze_blocks;

    for (int epoch = 1; epoch <= config.epochs; ++epoch) {
        const auto order = detail::shuffled_indices(data.size(), rng);
        double epoch_loss = 0.0;

        std::size_t cursor = 0;
        while (cursor < order.size()) {
            std::size_t batch_end = std::min(cursor + static_cast<std::size_t>(config.batch_size), order.size());
            // avoid a trailing 1-sample batch, which train-mode BatchNorm rejects
            if (order.size() - batch_end == 1) batch_end = order.size();
            TensorBatch<T> front_batch, side_batch;
            VectorBatch<T> truth_batch;
            for (std::size_t i = cursor; i < batch_end; ++i) {
                front_batch.push_back(front_in[order[i]]);
                side_batch.push_back(side_in[order[i]]);
                truth_batch.push_back(truth_all[order[i]]);
            }
            cursor = batch_end;

            model.mode = front_batch.size() >= 2 ? Mode::train : Mode::eval;
            model.zero_grads();
            const auto out = model.forward(front_batch, side_batch);
            epoch_loss += coeff_loss(out, truth_batch);
            model.backward(coeff_loss_grad(out, truth_batch));
            adam_step(model, state, config);
        }

        EpochRecord record;
        record.epoch = epoch;
        record.train_loss = epoch_loss;
        if (val_space != nullptr && val_set != nullptr && config.validate_every > 0 &&
            epoch % config.validate_every == 0) {
            record.val_e_aver = validation_e_aver(model, *val_set, *val_space);
        }
        history.epochs.push_back(record);

        if (config.checkpoint_every > 0 && epoch % config.checkpoint_every == 0 &&
            !config.checkpoint_dir.empty()) {
            char name[64];
            std::snprintf(name, sizeof(name), "/checkpoint_%06d.s2sm", epoch);
            save_model(model, config.checkpoint_dir + name);
        }
    }
    model.mode = Mode::eval;
    return history;
}

/// Transfer learning: freezes every block (parameters and BatchNorm
/// running statistics) and retrains the FC head on the small dataset.
template <typename T>
TrainHistory transfer(Model<T>& model, const TrainingSet& small_dataset, TrainConfig config,
                      const ShapeSpace* val_space = nullptr, const TrainingSet* val_set = nullptr) {
    config.freeze_blocks = true;
    return train(model, small_dataset, config, val_space, val_set);
}

/// Per-epoch metrics plus enough config to re-execute the run.
void save_train_manifest(const TrainConfig& config, const TrainHistory& history,
                         const std::string& dataset_hash_hex, const std::string& path);

} // namespace s2s
