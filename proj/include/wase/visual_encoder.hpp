#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "wase/classifiers.hpp"
#include "wase/data.hpp"
#include "wase/gcn.hpp"
#include "wase/model_config.hpp"

namespace wase {

// 7x7 attention weights; entries are non-negative and sum to 1.
struct Heatmap {
    Tensor weights;  // [7 x 7]

    double peak() const {
        double p = weights[0];
        for (std::size_t i = 1; i < weights.numel(); ++i) p = std::max(p, weights[i]);
        return p;
    }
};

// Argument node of a situation graph: an object box or a role-driven
// heatmap, its embedded feature and its label distributions.
struct SituationArgument {
    Var feature_hat;             // o-hat, input to the visual GCN
    Var noun_logits;
    Var role_logits;
    std::optional<std::size_t> object_index;   // object mode
    std::optional<std::string> attention_role;  // attention mode
    std::optional<BoundingBox> box;             // object mode: detected box
    Var heatmap_flat;                           // attention mode: [49]
    // training assignment
    std::optional<std::string> gold_role;
    std::optional<std::string> gold_noun;
};

// Star-shaped image graph: central verb node plus argument nodes.
struct SituationGraph {
    std::string image_id;
    Var m_hat;        // predicted verb embedding
    Var verb_logits;  // dots with every verb embedding
    std::vector<SituationArgument> args;
};

// Image side of the common space: situation graph construction (object-
// and attention-based), situation losses, visual GCN and classifiers.
class VisualEncoder {
public:
    VisualEncoder() = default;

    VisualEncoder(const ModelConfig& cfg, const Ontology& onto) : cfg_(&cfg), onto_(&onto) {
        index(onto.verbs, verbs_);
        index(onto.nouns, nouns_);
        index(onto.situation_roles, roles_);
    }

    static const std::vector<std::string>& gcn_labels() {
        static const std::vector<std::string> labels = {"self", "v2r", "r2v"};
        return labels;
    }

    std::size_t verb_index(const std::string& v) const { return lookup(verbs_, v, "verb"); }
    std::size_t noun_index(const std::string& n) const { return lookup(nouns_, n, "noun"); }
    std::size_t role_index(const std::string& r) const { return lookup(roles_, r, "role"); }

    void init_params(ParameterStore& store, Rng& rng) const {
        const auto& cfg = *cfg_;
        const double s = cfg.init_scale;
        const std::size_t f = cfg.image_feature_dim;
        auto mlp = [&](const std::string& name, std::size_t in, std::size_t hidden,
                       std::size_t out) {
            store.create(name + ".W1", Tensor::random_uniform({hidden, in}, rng, s));
            store.create(name + ".b1", Tensor::random_uniform({hidden}, rng, s));
            store.create(name + ".W2", Tensor::random_uniform({out, hidden}, rng, s));
            store.create(name + ".b2", Tensor::random_uniform({out}, rng, s));
        };
        mlp("vis.mlp_m", f, cfg.mlp_hidden, cfg.verb_dim);
        mlp("vis.mlp_o", f, cfg.mlp_hidden, cfg.noun_dim);
        mlp("vis.role_head", cfg.noun_dim, cfg.role_head_hidden, roles_.size());
        store.create("vis.embed.verb", Tensor::random_uniform({verbs_.size(), cfg.verb_dim}, rng, s));
        store.create("vis.embed.noun", Tensor::random_uniform({nouns_.size(), cfg.noun_dim}, rng, s));
        store.create("vis.embed.role", Tensor::random_uniform({roles_.size(), cfg.role_dim}, rng, s));
        store.create("vis.attn.Wq", Tensor::random_uniform({f, cfg.role_dim + f}, rng, s));
        store.create("vis.attn.bq", Tensor::random_uniform({f}, rng, s));
        init_gcn_params(store, rng, "vis.gcn", gcn_labels(), cfg.gcn_layers, cfg.verb_dim,
                        cfg.common_dim, s);
    }

    // m-hat = MLP_m(m); P(v|m) from dot products with all verb embeddings.
    std::pair<Var, Var> predict_verb(Tape& tape, const ParameterStore& store, Var m) const {
        Var m_hat = mlp_forward(tape, store, "vis.mlp_m", m);
        Var logits = tape.matmul(store.use(tape, "vis.embed.verb"), m_hat);
        return {m_hat, logits};
    }

    // o-hat = MLP_o(o); noun logits from embedding dots; role logits from
    // the one-hidden-layer role head.
    struct NounRole {
        Var o_hat;
        Var noun_logits;
        Var role_logits;
    };
    NounRole predict_noun_role(Tape& tape, const ParameterStore& store, Var o) const {
        NounRole out;
        out.o_hat = mlp_forward(tape, store, "vis.mlp_o", o);
        out.noun_logits = tape.matmul(store.use(tape, "vis.embed.noun"), out.o_hat);
        out.role_logits = mlp_forward(tape, store, "vis.role_head", out.o_hat);
        return out;
    }

    // Role-conditioned attention: query W_q [r; m] + b_q against the 49
    // feature-map keys; the heatmap pools the cells into o_r.
    std::pair<Var, Var> attention_argument(Tape& tape, const ParameterStore& store,
                                           const std::string& role, Var keys, Var m) const {
        Var r = tape.row(store.use(tape, "vis.embed.role"), role_index(role));
        Var q = tape.add(tape.matmul(store.use(tape, "vis.attn.Wq"), tape.concat({r, m})),
                         store.use(tape, "vis.attn.bq"));
        Var heat = tape.softmax(tape.matmul(keys, q));
        Var o_r = tape.matmul(heat, keys);
        return {heat, o_r};
    }

    Var keys_leaf(Tape& tape, const ImageUnit& image) const {
        const std::size_t cells = cfg_->map_grid * cfg_->map_grid;
        Tensor keys({cells, cfg_->image_feature_dim});
        std::copy(image.feature_map.data(), image.feature_map.data() + keys.numel(), keys.data());
        return tape.leaf(std::move(keys));
    }

    // Builds the situation graph. for_training attaches gold role/noun
    // targets: object mode matches detections to gold boxes at IoU >= 0.5
    // (unmatched objects get none); attention mode keys nodes by role.
    SituationGraph build_graph(Tape& tape, const ParameterStore& store, const ImageUnit& image,
                               VisualMode mode, bool for_training) const {
        SituationGraph g;
        g.image_id = image.id;
        Var m = tape.leaf(image.global_feature);
        auto [m_hat, verb_logits] = predict_verb(tape, store, m);
        g.m_hat = m_hat;
        g.verb_logits = verb_logits;

        if (mode == VisualMode::Object) {
            for (std::size_t i = 0; i < image.objects.size(); ++i) {
                Tensor feat({cfg_->image_feature_dim});
                std::copy(image.object_features.data() + i * feat.numel(),
                          image.object_features.data() + (i + 1) * feat.numel(), feat.data());
                NounRole nr = predict_noun_role(tape, store, tape.leaf(std::move(feat)));
                SituationArgument arg;
                arg.feature_hat = nr.o_hat;
                arg.noun_logits = nr.noun_logits;
                arg.role_logits = nr.role_logits;
                arg.object_index = i;
                arg.box = image.objects[i].box;
                if (for_training) {
                    double best = 0.5;  // assignment threshold
                    for (const auto& ann : image.gold_roles) {
                        const double overlap = iou(image.objects[i].box, ann.union_box);
                        if (overlap >= best) {
                            best = overlap;
                            arg.gold_role = ann.role;
                            arg.gold_noun = ann.noun;
                        }
                    }
                }
                g.args.push_back(std::move(arg));
            }
        } else {
            Var keys = keys_leaf(tape, image);
            for (const auto& role : onto_->situation_roles) {
                auto [heat, o_r] = attention_argument(tape, store, role, keys, m);
                NounRole nr = predict_noun_role(tape, store, o_r);
                SituationArgument arg;
                arg.feature_hat = nr.o_hat;
                arg.noun_logits = nr.noun_logits;
                arg.role_logits = nr.role_logits;
                arg.attention_role = role;
                arg.heatmap_flat = heat;
                if (for_training) {
                    for (const auto& ann : image.gold_roles) {
                        if (ann.role == role) {
                            arg.gold_role = ann.role;
                            arg.gold_noun = ann.noun;
                        }
                    }
                }
                g.args.push_back(std::move(arg));
            }
        }
        return g;
    }

    Heatmap heatmap_of(const Tape& tape, const SituationArgument& arg) const {
        if (!arg.heatmap_flat.valid()) throw Error("argument node has no heatmap");
        const Tensor& flat = tape.value(arg.heatmap_flat);
        Heatmap h;
        h.weights = Tensor({cfg_->map_grid, cfg_->map_grid}, flat.values());
        return h;
    }

    // L_v = -log P(v*|m);  L_r = sum over gold argument nodes of
    // -log(P(r*|o) + P(n*|o)). The printed probability sum can exceed 1;
    // those nodes are counted in prob_sum_exceeded.
    struct SituationLoss {
        Var l_v;
        Var l_r;
        std::size_t gold_args = 0;
        std::size_t prob_sum_exceeded = 0;
    };
    SituationLoss situation_loss(Tape& tape, const ImageUnit& image,
                                 const SituationGraph& g) const {
        if (image.gold_verb.empty()) {
            throw ValidationError("image '" + image.id + "': missing gold verb");
        }
        SituationLoss out;
        out.l_v = tape.cross_entropy(g.verb_logits, verb_index(image.gold_verb));
        Var acc;
        for (const auto& arg : g.args) {
            if (!arg.gold_role || !arg.gold_noun) continue;
            Var p_r = tape.softmax_prob(arg.role_logits, role_index(*arg.gold_role));
            Var p_n = tape.softmax_prob(arg.noun_logits, noun_index(*arg.gold_noun));
            Var p = tape.add(p_r, p_n);
            if (tape.scalar_value(p) > 1.0) out.prob_sum_exceeded += 1;
            Var term = tape.neg(tape.log_clamped(p));
            acc = acc.valid() ? tape.add(acc, term) : term;
            out.gold_args += 1;
        }
        out.l_r = acc.valid() ? acc : tape.scalar(0.0);
        return out;
    }

    // GCN over the star graph; node 0 is the whole image, the rest the
    // argument nodes, all in the 300-dim common space.
    GraphEncoding vis_common_encode(Tape& tape, const ParameterStore& store,
                                    const SituationGraph& g) const {
        std::vector<Var> inputs{g.m_hat};
        for (const auto& arg : g.args) inputs.push_back(arg.feature_hat);
        std::vector<GcnMessage> messages;
        for (std::size_t i = 0; i < inputs.size(); ++i) messages.push_back({i, i, "self"});
        for (std::size_t i = 1; i < inputs.size(); ++i) {
            messages.push_back({0, i, "v2r"});
            messages.push_back({i, 0, "r2v"});
        }
        GraphEncoding enc;
        enc.nodes = gcn_forward(tape, store, "vis.gcn", cfg_->gcn_layers, inputs, messages);
        enc.kinds.assign(inputs.size(), NodeKind::Object);
        enc.kinds[0] = NodeKind::Image;
        enc.source_ref = g.image_id;
        return enc;
    }

private:
    static void index(const std::vector<std::string>& vocab, std::map<std::string, std::size_t>& m) {
        for (std::size_t i = 0; i < vocab.size(); ++i) m.emplace(vocab[i], i);
    }

    static std::size_t lookup(const std::map<std::string, std::size_t>& m, const std::string& key,
                              const char* what) {
        auto it = m.find(key);
        if (it == m.end()) {
            throw VocabularyError(std::string("unknown ") + what + " '" + key + "'");
        }
        return it->second;
    }

    Var mlp_forward(Tape& tape, const ParameterStore& store, const std::string& name, Var x) const {
        Var h = tape.tanh_op(
            tape.add(tape.matmul(store.use(tape, name + ".W1"), x), store.use(tape, name + ".b1")));
        return tape.add(tape.matmul(store.use(tape, name + ".W2"), h),
                        store.use(tape, name + ".b2"));
    }

    const ModelConfig* cfg_ = nullptr;
    const Ontology* onto_ = nullptr;
    std::map<std::string, std::size_t> verbs_;
    std::map<std::string, std::size_t> nouns_;
    std::map<std::string, std::size_t> roles_;
};

}  // namespace wase
