#include "s2s/network.hpp"

#include "s2s/error.hpp"

#include <nlohmann/json.hpp>

namespace s2s {

std::vector<int> ModelConfig::feature_lengths() const {
    std::vector<int> lengths{input_length(), M};
    int len = M;
    for (int i = 0; i < stages(); ++i) {
        if (!whole_map_pool) len /= 3;
        lengths.push_back(len);
    }
    return lengths;
}

int ModelConfig::flatten_width() const {
    const int c = fusion ? channels.back() : 2 * channels.back();
    return c * (whole_map_pool ? 1 : final_length());
}

void ModelConfig::validate() const {
    if (M < 3) throw InvalidInput("M must be at least 3");
    if (k < 1) throw InvalidInput("k must be at least 1");
    if (channels.size() < 3) throw InvalidInput("channel plan needs input, BlockA and one stage");
    if (channels.front() != 2) throw InvalidInput("input channel count must be 2 (x and y)");
    for (int c : channels) {
        if (c < 1) throw InvalidInput("channel counts must be positive");
    }
    for (int h : fc_hidden) {
        if (h < 1) throw InvalidInput("FC widths must be positive");
    }
    if (!whole_map_pool) {
        int len = M;
        for (int i = 0; i < stages(); ++i) {
            if (len % 3 != 0) throw InvalidInput("M must be divisible by 3 once per pooling stage");
            len /= 3;
        }
    }
}

ModelConfig reference_config(int k, int M) {
    ModelConfig config;
    config.M = M;
    config.k = k;
    return config;
}

std::string config_to_json(const ModelConfig& config) {
    nlohmann::json j;
    j["M"] = config.M;
    j["k"] = config.k;
    j["channels"] = config.channels;
    j["fc_hidden"] = config.fc_hidden;
    j["fusion"] = config.fusion;
    j["whole_map_pool"] = config.whole_map_pool;
    return j.dump();
}

ModelConfig config_from_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw IoError(std::string("bad model config JSON: ") + e.what());
    }
    ModelConfig config;
    config.M = j.value("M", config.M);
    config.k = j.value("k", config.k);
    if (j.contains("channels")) config.channels = j["channels"].get<std::vector<int>>();
    if (j.contains("fc_hidden")) config.fc_hidden = j["fc_hidden"].get<std::vector<int>>();
    config.fusion = j.value("fusion", config.fusion);
    config.whole_map_pool = j.value("whole_map_pool", config.whole_map_pool);
    config.validate();
    return config;
}

} // namespace s2s
