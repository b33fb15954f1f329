#include "s2s/trainer.hpp"

#include "s2s/io_util.hpp"

#include <nlohmann/json.hpp>

namespace s2s {

double vertex_loss(const ShapeSpace& space, const std::vector<ShapeCoeffs>& pred,
                   const std::vector<ShapeCoeffs>& truth) {
    if (pred.size() != truth.size() || pred.empty()) throw InvalidInput("loss needs equal non-empty batches");
    double loss = 0.0;
    for (std::size_t s = 0; s < pred.size(); ++s) {
        const Mesh a = decode(space, pred[s]);
        const Mesh b = decode(space, truth[s]);
        loss += (a.flatten() - b.flatten()).squaredNorm();
    }
    return loss;
}

std::string train_config_to_json(const TrainConfig& config) {
    nlohmann::json j;
    j["epochs"] = config.epochs;
    j["batch_size"] = config.batch_size;
    j["learning_rate"] = config.learning_rate;
    j["beta1"] = config.beta1;
    j["beta2"] = config.beta2;
    j["adam_epsilon"] = config.adam_epsilon;
    j["seed"] = config.seed;
    j["split_ratio"] = config.split_ratio;
    j["freeze_blocks"] = config.freeze_blocks;
    j["validate_every"] = config.validate_every;
    j["checkpoint_every"] = config.checkpoint_every;
    return j.dump();
}

TrainConfig train_config_from_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw IoError(std::string("bad train config JSON: ") + e.what());
    }
    TrainConfig config;
    config.epochs = j.value("epochs", config.epochs);
    config.batch_size = j.value("batch_size", config.batch_size);
    config.learning_rate = j.value("learning_rate", config.learning_rate);
    config.beta1 = j.value("beta1", config.beta1);
    config.beta2 = j.value("beta2", config.beta2);
    config.adam_epsilon = j.value("adam_epsilon", config.adam_epsilon);
    config.seed = j.value("seed", config.seed);
    config.split_ratio = j.value("split_ratio", config.split_ratio);
    config.freeze_blocks = j.value("freeze_blocks", config.freeze_blocks);
    config.validate_every = j.value("validate_every", config.validate_every);
    config.checkpoint_every = j.value("checkpoint_every", config.checkpoint_every);
    config.validate();
    return config;
}

void save_train_manifest(const TrainConfig& config, const TrainHistory& history,
                         const std::string& dataset_hash_hex, const std::string& path) {
    nlohmann::json j;
    j["format"] = "s2s-train-run";
    j["config"] = nlohmann::json::parse(train_config_to_json(config));
    j["dataset_hash"] = dataset_hash_hex;
    nlohmann::json epochs = nlohmann::json::array();
    for (const auto& record : history.epochs) {
        nlohmann::json e;
        e["epoch"] = record.epoch;
        e["train_loss"] = record.train_loss;
        if (record.val_e_aver.has_value()) e["val_e_aver"] = *record.val_e_aver;
        epochs.push_back(std::move(e));
    }
    j["epochs"] = std::move(epochs);
    auto os = open_output(path, std::ios::out);
    os << j.dump(2) << '\n';
}

} // namespace s2s
