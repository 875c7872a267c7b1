#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "wase/errors.hpp"
#include "wase/ontology.hpp"
#include "wase/tensor.hpp"

namespace wase {

// Normalized image coordinates, x1 < x2 and y1 < y2.
struct BoundingBox {
    double x1 = 0, y1 = 0, x2 = 0, y2 = 0;

    bool valid() const {
        return 0.0 <= x1 && x1 < x2 && x2 <= 1.0 && 0.0 <= y1 && y1 < y2 && y2 <= 1.0;
    }
    double area() const { return (x2 - x1) * (y2 - y1); }
    bool operator==(const BoundingBox& o) const {
        return x1 == o.x1 && y1 == o.y1 && x2 == o.x2 && y2 == o.y2;
    }
};

// Intersection over union; 0 for disjoint boxes.
inline double iou(const BoundingBox& a, const BoundingBox& b) {
    const double ix = std::max(0.0, std::min(a.x2, b.x2) - std::max(a.x1, b.x1));
    const double iy = std::max(0.0, std::min(a.y2, b.y2) - std::max(a.y1, b.y1));
    const double inter = ix * iy;
    const double uni = a.area() + b.area() - inter;
    return uni <= 0.0 ? 0.0 : inter / uni;
}

struct TypedEdge {
    std::size_t src = 0;
    std::size_t dst = 0;
    std::string label;
};

// Token span, inclusive on both ends.
struct EntityMention {
    std::string id;
    std::size_t start = 0;
    std::size_t end = 0;
};

struct GoldArgumentLabel {
    std::size_t trigger_start = 0;
    std::size_t trigger_end = 0;
    std::string entity_id;
    std::string role;
};

struct SentenceUnit {
    std::string id;
    std::vector<std::string> tokens;
    std::vector<std::string> pos_tags;
    std::vector<std::string> entity_tags;
    std::vector<std::size_t> positions;
    std::vector<TypedEdge> edges;
    std::vector<EntityMention> entities;
    std::vector<std::string> gold_bio;  // empty when unlabeled
    std::vector<GoldArgumentLabel> gold_arguments;

    const EntityMention* find_entity(const std::string& eid) const {
        for (const auto& e : entities) {
            if (e.id == eid) return &e;
        }
        return nullptr;
    }
};

struct GoldRoleAnnotation {
    std::string role;
    std::string noun;
    BoundingBox union_box;
    std::vector<BoundingBox> instance_boxes;
};

struct DetectedObject {
    BoundingBox box;
};

struct ImageUnit {
    std::string id;
    Tensor global_feature;   // [512]
    Tensor feature_map;      // [7 x 7 x 512]
    Tensor object_features;  // [n_objects x 512]; default-empty when no objects
    std::vector<DetectedObject> objects;
    std::string gold_verb;  // empty when unlabeled
    std::vector<GoldRoleAnnotation> gold_roles;
};

struct CaptionPair {
    std::string id;
    std::string sentence_id;
    std::string image_id;
};

enum class Provenance { TextOnly, ImageOnly, Multimedia };

inline std::string to_string(Provenance p) {
    switch (p) {
        case Provenance::TextOnly: return "text_only";
        case Provenance::ImageOnly: return "image_only";
        case Provenance::Multimedia: return "multimedia";
    }
    return "?";
}

inline Provenance provenance_from_string(const std::string& s) {
    if (s == "text_only") return Provenance::TextOnly;
    if (s == "image_only") return Provenance::ImageOnly;
    if (s == "multimedia") return Provenance::Multimedia;
    throw ValidationError("unknown provenance '" + s + "'");
}

struct TriggerGrounding {
    std::string sentence_id;
    std::size_t start = 0;
    std::size_t end = 0;  // inclusive
    bool operator==(const TriggerGrounding& o) const {
        return sentence_id == o.sentence_id && start == o.start && end == o.end;
    }
};

// A typed event mention grounded on a trigger span, an image, or both.
struct EventRecord {
    std::string id;
    std::string type;
    std::optional<TriggerGrounding> trigger;
    std::optional<std::string> image_id;
    Provenance provenance = Provenance::TextOnly;
    std::optional<double> similarity;  // cross-modal link strength, predictions only

    void check() const {
        if (!trigger && !image_id) throw ValidationError("event '" + id + "' has no grounding");
        const bool mm = trigger && image_id;
        if (mm != (provenance == Provenance::Multimedia) ||
            (provenance == Provenance::TextOnly && !trigger) ||
            (provenance == Provenance::ImageOnly && !image_id)) {
            throw ValidationError("event '" + id + "' provenance inconsistent with groundings");
        }
    }
};

struct TextGrounding {
    std::string sentence_id;
    std::size_t start = 0;
    std::size_t end = 0;  // inclusive
};

struct BoxGrounding {
    std::string image_id;
    BoundingBox box;
};

// A role filler grounded on an entity span, a bounding box, or both.
struct ArgumentRecord {
    std::string event_id;
    std::string role;
    std::optional<TextGrounding> span;
    std::optional<BoxGrounding> box;

    void check() const {
        if (!span && !box) {
            throw ValidationError("argument of event '" + event_id + "' has no grounding");
        }
    }
};

struct Corpus {
    Ontology ontology;
    std::vector<SentenceUnit> sentences;
    std::vector<ImageUnit> images;
    std::vector<CaptionPair> pairs;
    std::vector<EventRecord> gold_events;
    std::vector<ArgumentRecord> gold_arguments;

    std::map<std::string, std::size_t> sentence_index;
    std::map<std::string, std::size_t> image_index;

    void reindex() {
        sentence_index.clear();
        image_index.clear();
        for (std::size_t i = 0; i < sentences.size(); ++i) {
            if (!sentence_index.emplace(sentences[i].id, i).second) {
                throw ValidationError("duplicate sentence id '" + sentences[i].id + "'");
            }
        }
        for (std::size_t i = 0; i < images.size(); ++i) {
            if (!image_index.emplace(images[i].id, i).second) {
                throw ValidationError("duplicate image id '" + images[i].id + "'");
            }
        }
    }

    const SentenceUnit& sentence(const std::string& id) const {
        auto it = sentence_index.find(id);
        if (it == sentence_index.end()) throw ValidationError("unknown sentence id '" + id + "'");
        return sentences[it->second];
    }
    const ImageUnit& image(const std::string& id) const {
        auto it = image_index.find(id);
        if (it == image_index.end()) throw ValidationError("unknown image id '" + id + "'");
        return images[it->second];
    }
};

// Full referential/shape validation; throws ValidationError naming the
// offending record.
inline void validate_corpus(const Corpus& corpus) {
    corpus.ontology.validate();
    const auto bio = corpus.ontology.bio_labels();
    const auto in_vocab = [](const std::vector<std::string>& vocab, const std::string& v) {
        return std::find(vocab.begin(), vocab.end(), v) != vocab.end();
    };

    for (const auto& s : corpus.sentences) {
        const std::size_t n = s.tokens.size();
        if (n == 0) throw ValidationError("sentence '" + s.id + "': empty token list");
        if (n > corpus.ontology.max_sentence_length) {
            throw ValidationError("sentence '" + s.id + "': exceeds max length");
        }
        if (s.pos_tags.size() != n || s.entity_tags.size() != n || s.positions.size() != n) {
            throw ValidationError("sentence '" + s.id + "': tag sequences differ from token count");
        }
        for (std::size_t i = 0; i < n; ++i) {
            if (s.positions[i] >= corpus.ontology.max_sentence_length) {
                throw ValidationError("sentence '" + s.id + "': position out of range");
            }
        }
        for (const auto& e : s.edges) {
            if (e.src >= n || e.dst >= n) {
                throw ValidationError("sentence '" + s.id + "': edge endpoint out of range");
            }
            if (!in_vocab(corpus.ontology.edge_label_vocabulary, e.label)) {
                throw ValidationError("sentence '" + s.id + "': unknown edge label '" + e.label +
                                      "'");
            }
        }
        for (const auto& ent : s.entities) {
            if (ent.start > ent.end || ent.end >= n) {
                throw ValidationError("sentence '" + s.id + "': entity '" + ent.id +
                                      "' span out of range");
            }
        }
        if (!s.gold_bio.empty()) {
            if (s.gold_bio.size() != n) {
                throw ValidationError("sentence '" + s.id + "': BIO length mismatch");
            }
            const auto normalized = normalize_bio(s.gold_bio, bio);
            if (normalized != s.gold_bio) {
                throw ValidationError("sentence '" + s.id + "': gold BIO sequence not well-formed");
            }
        }
        for (const auto& a : s.gold_arguments) {
            if (a.trigger_start > a.trigger_end || a.trigger_end >= n) {
                throw ValidationError("sentence '" + s.id + "': gold argument trigger span invalid");
            }
            if (!s.find_entity(a.entity_id)) {
                throw ValidationError("sentence '" + s.id + "': gold argument entity '" +
                                      a.entity_id + "' not found");
            }
        }
    }

    for (const auto& m : corpus.images) {
        if (m.global_feature.shape() != std::vector<std::size_t>{512}) {
            throw ValidationError("image '" + m.id + "': global feature must be [512], got " +
                                  m.global_feature.shape_string());
        }
        if (m.feature_map.shape() != std::vector<std::size_t>{7, 7, 512}) {
            throw ValidationError("image '" + m.id + "': feature map must be [7 x 7 x 512], got " +
                                  m.feature_map.shape_string());
        }
        if (!m.global_feature.all_finite() || !m.feature_map.all_finite() ||
            (!m.object_features.empty() && !m.object_features.all_finite())) {
            throw ValidationError("image '" + m.id + "': non-finite feature value");
        }
        if (!m.objects.empty()) {
            if (m.object_features.rank() != 2 || m.object_features.extent(0) != m.objects.size() ||
                m.object_features.extent(1) != 512) {
                throw ValidationError("image '" + m.id + "': object feature shape mismatch");
            }
        } else if (!m.object_features.empty()) {
            throw ValidationError("image '" + m.id + "': object features without objects");
        }
        for (const auto& obj : m.objects) {
            if (!obj.box.valid()) {
                throw ValidationError("image '" + m.id + "': invalid object box");
            }
        }
        if (!m.gold_verb.empty() && !in_vocab(corpus.ontology.verbs, m.gold_verb)) {
            throw ValidationError("image '" + m.id + "': unknown verb '" + m.gold_verb + "'");
        }
        for (const auto& role : m.gold_roles) {
            if (!in_vocab(corpus.ontology.situation_roles, role.role)) {
                throw ValidationError("image '" + m.id + "': role '" + role.role +
                                      "' not in situation role vocabulary");
            }
            if (!in_vocab(corpus.ontology.nouns, role.noun)) {
                throw ValidationError("image '" + m.id + "': unknown noun '" + role.noun + "'");
            }
            if (!role.union_box.valid()) {
                throw ValidationError("image '" + m.id + "': invalid union box for role '" +
                                      role.role + "'");
            }
            for (const auto& b : role.instance_boxes) {
                if (!b.valid()) {
                    throw ValidationError("image '" + m.id + "': invalid instance box for role '" +
                                          role.role + "'");
                }
            }
        }
    }

    for (const auto& p : corpus.pairs) {
        if (!corpus.sentence_index.count(p.sentence_id)) {
            throw ValidationError("pair '" + p.id + "': unknown sentence '" + p.sentence_id + "'");
        }
        if (!corpus.image_index.count(p.image_id)) {
            throw ValidationError("pair '" + p.id + "': unknown image '" + p.image_id + "'");
        }
    }

    std::map<std::string, const EventRecord*> events_by_id;
    for (const auto& e : corpus.gold_events) {
        e.check();
        if (!corpus.ontology.is_event_type(e.type)) {
            throw ValidationError("event '" + e.id + "': unknown type '" + e.type + "'");
        }
        if (e.trigger && !corpus.sentence_index.count(e.trigger->sentence_id)) {
            throw ValidationError("event '" + e.id + "': unknown sentence '" +
                                  e.trigger->sentence_id + "'");
        }
        if (e.image_id && !corpus.image_index.count(*e.image_id)) {
            throw ValidationError("event '" + e.id + "': unknown image '" + *e.image_id + "'");
        }
        if (!events_by_id.emplace(e.id, &e).second) {
            throw ValidationError("duplicate event id '" + e.id + "'");
        }
    }
    for (const auto& a : corpus.gold_arguments) {
        a.check();
        auto it = events_by_id.find(a.event_id);
        if (it == events_by_id.end()) {
            throw ValidationError("argument references unknown event '" + a.event_id + "'");
        }
        if (!corpus.ontology.type_has_role(it->second->type, a.role)) {
            throw ValidationError("argument of event '" + a.event_id + "': role '" + a.role +
                                  "' invalid for type '" + it->second->type + "'");
        }
        if (a.box && !a.box->box.valid()) {
            throw ValidationError("argument of event '" + a.event_id + "': invalid box");
        }
    }
}

}  // namespace wase
