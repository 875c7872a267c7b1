#pragma once

#include <memory>
#include <optional>
#include <string>

#include "wase/alignment.hpp"
#include "wase/classifiers.hpp"
#include "wase/text_encoder.hpp"
#include "wase/visual_encoder.hpp"

namespace wase {

// Everything trainable plus the schema it was built for.
class Model {
public:
    Model(ModelConfig config, Ontology ontology)
        : cfg(std::move(config)), onto(std::move(ontology)) {
        onto.validate();
        text = TextEncoder(cfg, onto);
        vis = VisualEncoder(cfg, onto);
        cls = Classifiers(cfg, onto);
    }

    Model(const Model&) = delete;
    Model& operator=(const Model&) = delete;

    void init_params(std::uint64_t seed) {
        Rng rng(seed);
        text.init_params(store, rng);
        vis.init_params(store, rng);
        cls.init_params(store, rng, cfg.init_scale);
    }

    // Gold event label an image trains toward: the type its verb maps to,
    // or none for unmapped verbs.
    std::string image_gold_event_label(const ImageUnit& image) const {
        auto it = onto.verb_to_event.find(image.gold_verb);
        return it == onto.verb_to_event.end() ? std::string(kNoneLabel) : it->second;
    }

    // Shared-classifier target for a situation role under a given event
    // type: the same-named argument role when the type declares it,
    // otherwise none.
    std::string ace_role_for(const std::string& event_type, const std::string& situation_role) const {
        if (onto.type_has_role(event_type, situation_role)) return situation_role;
        return kNoneLabel;
    }

    ModelConfig cfg;
    Ontology onto;
    TextEncoder text;
    VisualEncoder vis;
    Classifiers cls;
    ParameterStore store;
};

// Free functions matching the per-module operation surface.

// Softmax distribution over BIO labels for one common-space word vector.
inline Var classify_trigger(Tape& tape, const Model& model, Var w_common) {
    return tape.softmax(model.cls.trigger_logits(tape, model.store, w_common));
}

// Softmax distribution over roles + none for an (entity, trigger) pair.
inline Var classify_argument(Tape& tape, const Model& model, Var t_common, Var w_common) {
    return tape.softmax(model.cls.argument_logits(tape, model.store, t_common, w_common));
}

// Event distribution for the image node; role distributions use
// classify_argument with [o; m], exactly the text-side weights.
inline Var classify_visual_event(Tape& tape, const Model& model, Var m_common) {
    return tape.softmax(model.cls.image_event_logits(tape, model.store, m_common));
}

struct TextLossTerms {
    Var trigger_nll;
    Var argument_nll;
    std::size_t tokens = 0;
    std::size_t pairs = 0;  // (gold trigger, entity) pairs scored
};

// Negative log-likelihood of the gold BIO labels over tokens plus the
// gold argument roles over (gold trigger, entity) pairs. Training-time
// arguments condition on gold triggers.
inline TextLossTerms text_losses(Tape& tape, const Model& model, const SentenceUnit& s,
                                 const GraphEncoding& enc) {
    if (s.gold_bio.empty()) {
        throw ValidationError("sentence '" + s.id + "': missing gold labels");
    }
    TextLossTerms out;
    Var trig_acc;
    for (std::size_t i = 0; i < s.tokens.size(); ++i) {
        Var logits = model.cls.trigger_logits(tape, model.store, enc.nodes[i]);
        Var nll = tape.cross_entropy(logits, model.cls.bio_index(s.gold_bio[i]));
        trig_acc = trig_acc.valid() ? tape.add(trig_acc, nll) : nll;
        out.tokens += 1;
    }
    out.trigger_nll = trig_acc.valid() ? trig_acc : tape.scalar(0.0);

    Var arg_acc;
    for (const auto& span : bio_spans(s.gold_bio)) {
        Var w = TextEncoder::span_mean(tape, enc, span.start, span.end);
        for (const auto& ent : s.entities) {
            std::string target = kNoneLabel;
            for (const auto& g : s.gold_arguments) {
                if (g.trigger_start == span.start && g.trigger_end == span.end &&
                    g.entity_id == ent.id) {
                    target = g.role;
                    break;
                }
            }
            Var t = TextEncoder::entity_repr(tape, enc, ent);
            Var logits = model.cls.argument_logits(tape, model.store, t, w);
            Var nll = tape.cross_entropy(logits, model.cls.role_index(target));
            arg_acc = arg_acc.valid() ? tape.add(arg_acc, nll) : nll;
            out.pairs += 1;
        }
    }
    out.argument_nll = arg_acc.valid() ? arg_acc : tape.scalar(0.0);
    return out;
}

}  // namespace wase
