#pragma once

#include <string>
#include <vector>

#include "wase/autodiff.hpp"
#include "wase/model_config.hpp"
#include "wase/ontology.hpp"
#include "wase/params.hpp"

namespace wase {

inline constexpr const char* kNoneLabel = "<none>";

// The event and argument classifiers shared across modalities. Text
// classifies words over the BIO label set; images reuse the B-(type)
// rows plus the O row as their type/none logits, so one weight matrix
// serves both sides.
struct Classifiers {
    std::vector<std::string> bio_labels;        // O, B-t1, I-t1, ...
    std::vector<std::string> role_labels;       // roles..., <none>
    std::vector<std::string> image_event_labels;  // <none>, types...
    std::vector<std::size_t> image_event_rows;    // rows of W_e backing those labels
    std::size_t common_dim = 0;

    Classifiers() = default;

    Classifiers(const ModelConfig& cfg, const Ontology& onto) : common_dim(cfg.common_dim) {
        bio_labels = onto.bio_labels();
        role_labels = onto.role_vocabulary();
        role_labels.push_back(kNoneLabel);
        image_event_labels.push_back(kNoneLabel);
        image_event_rows.push_back(0);  // the O row
        for (std::size_t i = 0; i < onto.event_types.size(); ++i) {
            image_event_labels.push_back(onto.event_types[i]);
            image_event_rows.push_back(1 + 2 * i);  // the B- row
        }
    }

    void init_params(ParameterStore& store, Rng& rng, double scale) const {
        store.create("cls.event.W",
                     Tensor::random_uniform({bio_labels.size(), common_dim}, rng, scale));
        store.create("cls.event.b", Tensor::random_uniform({bio_labels.size()}, rng, scale));
        store.create("cls.arg.W",
                     Tensor::random_uniform({role_labels.size(), 2 * common_dim}, rng, scale));
        store.create("cls.arg.b", Tensor::random_uniform({role_labels.size()}, rng, scale));
    }

    std::size_t bio_index(const std::string& label) const { return index_of(bio_labels, label); }
    std::size_t role_index(const std::string& label) const { return index_of(role_labels, label); }
    std::size_t none_role_index() const { return role_labels.size() - 1; }
    std::size_t image_event_index(const std::string& label) const {
        return index_of(image_event_labels, label);
    }

    // W_e w + b_e over the BIO label set.
    Var trigger_logits(Tape& tape, const ParameterStore& store, Var w) const {
        return tape.add(tape.matmul(store.use(tape, "cls.event.W"), w),
                        store.use(tape, "cls.event.b"));
    }

    // W_a [t; w] + b_a over roles + none.
    Var argument_logits(Tape& tape, const ParameterStore& store, Var t, Var w) const {
        return tape.add(tape.matmul(store.use(tape, "cls.arg.W"), tape.concat({t, w})),
                        store.use(tape, "cls.arg.b"));
    }

    // Image-side event logits: the O row and the B- rows of the shared
    // event weights, gathered in image_event_labels order.
    Var image_event_logits(Tape& tape, const ParameterStore& store, Var m) const {
        Var full = trigger_logits(tape, store, m);
        std::vector<Var> parts;
        parts.reserve(image_event_rows.size());
        for (std::size_t row : image_event_rows) parts.push_back(tape.slice(full, row, 1));
        return tape.concat(parts);
    }

private:
    static std::size_t index_of(const std::vector<std::string>& v, const std::string& s) {
        for (std::size_t i = 0; i < v.size(); ++i) {
            if (v[i] == s) return i;
        }
        throw VocabularyError("unknown label '" + s + "'");
    }
};

}  // namespace wase
