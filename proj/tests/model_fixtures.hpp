#pragma once

#include <memory>

#include "wase/model.hpp"
#include "wase/synth.hpp"

namespace fixtures {

// Shrunken dimensions keep unit-level gradient checks fast; the image
// feature geometry (512 dims, 7x7 map) stays fixed by the data model.
inline wase::ModelConfig small_config(wase::VisualMode mode = wase::VisualMode::Object) {
    wase::ModelConfig cfg;
    cfg.token_dim = 8;
    cfg.pos_dim = 4;
    cfg.entity_tag_dim = 4;
    cfg.position_dim = 4;
    cfg.lstm_hidden = 6;
    cfg.common_dim = 10;
    cfg.gcn_layers = 2;
    cfg.verb_dim = 10;
    cfg.noun_dim = 10;
    cfg.role_dim = 10;
    cfg.mlp_hidden = 8;
    cfg.role_head_hidden = 6;
    cfg.visual_mode = mode;
    return cfg;
}

inline std::unique_ptr<wase::Model> small_model(std::uint64_t seed = 1,
                                                wase::VisualMode mode = wase::VisualMode::Object) {
    auto model = std::make_unique<wase::Model>(small_config(mode), wase::synth_ontology());
    model->init_params(seed);
    return model;
}

// Two verbs, two nouns, two roles; for vocabulary-size-specific cases.
inline wase::Ontology micro_ontology() {
    wase::Ontology o;
    o.event_types = {"Alpha"};
    o.roles_by_type = {{"Alpha", {"R1", "R2"}}};
    o.verbs = {"v-one", "v-two"};
    o.verb_to_event = {{"v-one", "Alpha"}, {"v-two", "Alpha"}};
    o.nouns = {"n-one", "n-two"};
    o.situation_roles = {"R1", "R2"};
    o.token_vocabulary = {"tok-a", "tok-b", "tok-c"};
    o.pos_tag_vocabulary = {"X"};
    o.entity_tag_vocabulary = {"O"};
    o.edge_label_vocabulary = {"E"};
    return o;
}

inline wase::SentenceUnit tiny_sentence(std::size_t n_tokens) {
    wase::SentenceUnit s;
    s.id = "s-test";
    const char* toks[] = {"tok-a", "tok-b", "tok-c"};
    for (std::size_t i = 0; i < n_tokens; ++i) {
        s.tokens.push_back(toks[i % 3]);
        s.pos_tags.push_back("X");
        s.entity_tags.push_back("O");
        s.positions.push_back(i);
    }
    return s;
}

inline wase::ImageUnit blank_image(std::size_t n_objects = 0) {
    wase::ImageUnit m;
    m.id = "m-test";
    m.global_feature = wase::Tensor({512});
    m.feature_map = wase::Tensor({7, 7, 512});
    for (std::size_t i = 0; i < n_objects; ++i) {
        m.objects.push_back(wase::DetectedObject{
            wase::BoundingBox{0.1 * (i + 1), 0.1, 0.1 * (i + 1) + 0.2, 0.4}});
    }
    if (n_objects) m.object_features = wase::Tensor({n_objects, 512});
    return m;
}

}  // namespace fixtures
