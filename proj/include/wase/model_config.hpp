#pragma once

#include <cstddef>
#include <string>

#include <json.hpp>

#include "wase/errors.hpp"

namespace wase {

enum class VisualMode { Object, Attention };

inline std::string to_string(VisualMode m) {
    return m == VisualMode::Object ? "object" : "attention";
}

inline VisualMode visual_mode_from_string(const std::string& s) {
    if (s == "object") return VisualMode::Object;
    if (s == "attention") return VisualMode::Attention;
    throw ValidationError("unknown visual mode '" + s + "' (expected object|attention)");
}

// Architecture dimensions. Word-feature and common-space sizes follow
// the standard setup: 50-dim POS/entity/position embeddings, 300-dim
// common space, 3 GCN layers, 512-dim visual features on a 7x7 map.
struct ModelConfig {
    std::size_t token_dim = 50;
    std::size_t pos_dim = 50;
    std::size_t entity_tag_dim = 50;
    std::size_t position_dim = 50;
    std::size_t lstm_hidden = 150;  // per direction
    std::size_t common_dim = 300;
    std::size_t gcn_layers = 3;
    std::size_t verb_dim = 300;
    std::size_t noun_dim = 300;
    std::size_t role_dim = 300;
    std::size_t mlp_hidden = 192;
    std::size_t role_head_hidden = 96;
    std::size_t image_feature_dim = 512;
    std::size_t map_grid = 7;
    // accepted for config compatibility; no equation consumes it
    std::size_t image_position_dim = 512;
    double init_scale = 0.08;

    VisualMode visual_mode = VisualMode::Object;
    bool normalize_cost = true;

    std::size_t word_feature_dim() const {
        return token_dim + pos_dim + entity_tag_dim + position_dim;
    }
    std::size_t lstm_output_dim() const { return 2 * lstm_hidden; }
};

inline void to_json(nlohmann::ordered_json& j, const ModelConfig& c) {
    j = nlohmann::ordered_json{{"token_dim", c.token_dim},
                               {"pos_dim", c.pos_dim},
                               {"entity_tag_dim", c.entity_tag_dim},
                               {"position_dim", c.position_dim},
                               {"lstm_hidden", c.lstm_hidden},
                               {"common_dim", c.common_dim},
                               {"gcn_layers", c.gcn_layers},
                               {"verb_dim", c.verb_dim},
                               {"noun_dim", c.noun_dim},
                               {"role_dim", c.role_dim},
                               {"mlp_hidden", c.mlp_hidden},
                               {"role_head_hidden", c.role_head_hidden},
                               {"image_feature_dim", c.image_feature_dim},
                               {"map_grid", c.map_grid},
                               {"image_position_dim", c.image_position_dim},
                               {"init_scale", c.init_scale},
                               {"visual_mode", to_string(c.visual_mode)},
                               {"normalize_cost", c.normalize_cost}};
}

inline void from_json(const nlohmann::ordered_json& j, ModelConfig& c) {
    c.token_dim = j.at("token_dim").get<std::size_t>();
    c.pos_dim = j.at("pos_dim").get<std::size_t>();
    c.entity_tag_dim = j.at("entity_tag_dim").get<std::size_t>();
    c.position_dim = j.at("position_dim").get<std::size_t>();
    c.lstm_hidden = j.at("lstm_hidden").get<std::size_t>();
    c.common_dim = j.at("common_dim").get<std::size_t>();
    c.gcn_layers = j.at("gcn_layers").get<std::size_t>();
    c.verb_dim = j.at("verb_dim").get<std::size_t>();
    c.noun_dim = j.at("noun_dim").get<std::size_t>();
    c.role_dim = j.at("role_dim").get<std::size_t>();
    c.mlp_hidden = j.at("mlp_hidden").get<std::size_t>();
    c.role_head_hidden = j.at("role_head_hidden").get<std::size_t>();
    c.image_feature_dim = j.at("image_feature_dim").get<std::size_t>();
    c.map_grid = j.at("map_grid").get<std::size_t>();
    c.image_position_dim = j.at("image_position_dim").get<std::size_t>();
    c.init_scale = j.at("init_scale").get<double>();
    c.visual_mode = visual_mode_from_string(j.at("visual_mode").get<std::string>());
    c.normalize_cost = j.at("normalize_cost").get<bool>();
}

}  // namespace wase
