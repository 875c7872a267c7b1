#pragma once

#include <map>
#include <string>
#include <vector>

#include "wase/classifiers.hpp"
#include "wase/data.hpp"
#include "wase/gcn.hpp"
#include "wase/model_config.hpp"

namespace wase {

struct TriggerSpan {
    std::size_t start = 0;
    std::size_t end = 0;  // inclusive
    std::string type;
};

// Collects maximal B-t (I-t)* runs after normalization.
inline std::vector<TriggerSpan> bio_spans(const std::vector<std::string>& labels) {
    std::vector<TriggerSpan> out;
    for (std::size_t i = 0; i < labels.size();) {
        if (labels[i].rfind("B-", 0) == 0) {
            TriggerSpan span;
            span.start = i;
            span.type = labels[i].substr(2);
            std::size_t j = i + 1;
            while (j < labels.size() && labels[j] == "I-" + span.type) ++j;
            span.end = j - 1;
            out.push_back(span);
            i = j;
        } else {
            ++i;
        }
    }
    return out;
}

// Sentence side of the common space: word features -> Bi-LSTM -> typed
// gated GCN -> shared classifiers.
class TextEncoder {
public:
    TextEncoder() = default;

    TextEncoder(const ModelConfig& cfg, const Ontology& onto) : cfg_(&cfg), onto_(&onto) {
        index(onto.token_vocabulary, tokens_);
        index(onto.pos_tag_vocabulary, pos_);
        index(onto.entity_tag_vocabulary, entity_tags_);
        gcn_labels_.push_back("self");
        for (const auto& l : onto.edge_label_vocabulary) {
            gcn_labels_.push_back(l);
            gcn_labels_.push_back(l + "~inv");
        }
    }

    const std::vector<std::string>& gcn_labels() const { return gcn_labels_; }

    void init_params(ParameterStore& store, Rng& rng) const {
        const auto& cfg = *cfg_;
        const double s = cfg.init_scale;
        store.create("text.embed.token",
                     Tensor::random_uniform({tokens_.size(), cfg.token_dim}, rng, s));
        store.create("text.embed.pos", Tensor::random_uniform({pos_.size(), cfg.pos_dim}, rng, s));
        store.create("text.embed.entity",
                     Tensor::random_uniform({entity_tags_.size(), cfg.entity_tag_dim}, rng, s));
        store.create("text.embed.position",
                     Tensor::random_uniform({onto_->max_sentence_length, cfg.position_dim}, rng, s));
        const std::size_t in = cfg.word_feature_dim();
        const std::size_t h = cfg.lstm_hidden;
        for (const char* dir : {"fwd", "bwd"}) {
            store.create("text.lstm." + std::string(dir) + ".W",
                         Tensor::random_uniform({4 * h, in + h}, rng, s));
            // forget-gate bias starts at 1 so early cell state persists
            Tensor b = Tensor::random_uniform({4 * h}, rng, s);
            for (std::size_t i = h; i < 2 * h; ++i) b[i] += 1.0;
            store.create("text.lstm." + std::string(dir) + ".b", std::move(b));
        }
        init_gcn_params(store, rng, "text.gcn", gcn_labels_, cfg.gcn_layers, cfg.lstm_output_dim(),
                        cfg.common_dim, s);
    }

    // Contextual word vectors: concatenated token/POS/entity/position
    // embeddings through the Bi-LSTM, forward and backward states joined.
    std::vector<Var> token_repr(Tape& tape, const ParameterStore& store,
                                const SentenceUnit& s) const {
        std::vector<Var> feats;
        feats.reserve(s.tokens.size());
        Var tok_table = store.use(tape, "text.embed.token");
        Var pos_table = store.use(tape, "text.embed.pos");
        Var ent_table = store.use(tape, "text.embed.entity");
        Var position_table = store.use(tape, "text.embed.position");
        for (std::size_t i = 0; i < s.tokens.size(); ++i) {
            feats.push_back(tape.concat({tape.row(tok_table, lookup(tokens_, s.tokens[i], "token")),
                                         tape.row(pos_table, lookup(pos_, s.pos_tags[i], "POS tag")),
                                         tape.row(ent_table,
                                                  lookup(entity_tags_, s.entity_tags[i], "entity tag")),
                                         tape.row(position_table, s.positions[i])}));
        }
        const auto fwd = lstm_direction(tape, store, "text.lstm.fwd", feats, false);
        const auto bwd = lstm_direction(tape, store, "text.lstm.bwd", feats, true);
        std::vector<Var> out;
        out.reserve(feats.size());
        for (std::size_t i = 0; i < feats.size(); ++i) {
            out.push_back(tape.concat({fwd[i], bwd[i]}));
        }
        return out;
    }

    // Typed-edge gated GCN over the word vectors. Every node gets a self
    // loop; every edge is applied in both directions with distinct types.
    GraphEncoding gcn_encode(Tape& tape, const ParameterStore& store,
                             const std::vector<Var>& words, const std::vector<TypedEdge>& edges,
                             std::string source_ref) const {
        std::vector<GcnMessage> messages;
        for (std::size_t i = 0; i < words.size(); ++i) messages.push_back({i, i, "self"});
        for (const auto& e : edges) {
            messages.push_back({e.src, e.dst, e.label});
            messages.push_back({e.dst, e.src, e.label + "~inv"});
        }
        GraphEncoding g;
        g.nodes = gcn_forward(tape, store, "text.gcn", cfg_->gcn_layers, words, messages);
        g.kinds.assign(words.size(), NodeKind::Word);
        g.source_ref = std::move(source_ref);
        return g;
    }

    GraphEncoding encode(Tape& tape, const ParameterStore& store, const SentenceUnit& s) const {
        return gcn_encode(tape, store, token_repr(tape, store, s), s.edges, s.id);
    }

    // Mean of the span's node embeddings.
    static Var span_mean(Tape& tape, const GraphEncoding& g, std::size_t start, std::size_t end) {
        if (start > end || end >= g.nodes.size()) {
            throw ShapeError("span [" + std::to_string(start) + ", " + std::to_string(end) +
                             "] invalid for " + std::to_string(g.nodes.size()) + " nodes");
        }
        Var acc = g.nodes[start];
        for (std::size_t i = start + 1; i <= end; ++i) acc = tape.add(acc, g.nodes[i]);
        return tape.scale(acc, 1.0 / static_cast<double>(end - start + 1));
    }

    static Var entity_repr(Tape& tape, const GraphEncoding& g, const EntityMention& e) {
        return span_mean(tape, g, e.start, e.end);
    }

    // Greedy trigger decoding: per-token argmax, BIO normalization, runs.
    std::vector<TriggerSpan> bio_decode(const std::vector<Tensor>& distributions) const {
        const auto bio = onto_->bio_labels();
        std::vector<std::string> argmax;
        argmax.reserve(distributions.size());
        for (const auto& d : distributions) {
            std::size_t best = 0;
            for (std::size_t i = 1; i < d.numel(); ++i) {
                if (d[i] > d[best]) best = i;
            }
            argmax.push_back(bio[best]);
        }
        return bio_spans(normalize_bio(argmax, bio));
    }

private:
    static void index(const std::vector<std::string>& vocab, std::map<std::string, std::size_t>& m) {
        for (std::size_t i = 0; i < vocab.size(); ++i) m.emplace(vocab[i], i);
    }

    static std::size_t lookup(const std::map<std::string, std::size_t>& m, const std::string& key,
                              const char* what) {
        auto it = m.find(key);
        if (it == m.end()) {
            throw VocabularyError(std::string("out-of-vocabulary ") + what + " '" + key + "'");
        }
        return it->second;
    }

    std::vector<Var> lstm_direction(Tape& tape, const ParameterStore& store,
                                    const std::string& prefix, const std::vector<Var>& xs,
                                    bool reverse) const {
        const std::size_t h = cfg_->lstm_hidden;
        Var W = store.use(tape, prefix + ".W");
        Var b = store.use(tape, prefix + ".b");
        Var hidden = tape.leaf(Tensor({h}));
        Var cell = tape.leaf(Tensor({h}));
        std::vector<Var> out(xs.size());
        for (std::size_t step = 0; step < xs.size(); ++step) {
            const std::size_t i = reverse ? xs.size() - 1 - step : step;
            Var z = tape.add(tape.matmul(W, tape.concat({xs[i], hidden})), b);
            Var ig = tape.sigmoid(tape.slice(z, 0, h));
            Var fg = tape.sigmoid(tape.slice(z, h, h));
            Var gg = tape.tanh_op(tape.slice(z, 2 * h, h));
            Var og = tape.sigmoid(tape.slice(z, 3 * h, h));
            cell = tape.add(tape.mul(fg, cell), tape.mul(ig, gg));
            hidden = tape.mul(og, tape.tanh_op(cell));
            out[i] = hidden;
        }
        return out;
    }

    const ModelConfig* cfg_ = nullptr;
    const Ontology* onto_ = nullptr;
    std::map<std::string, std::size_t> tokens_;
    std::map<std::string, std::size_t> pos_;
    std::map<std::string, std::size_t> entity_tags_;
    std::vector<std::string> gcn_labels_;
};

}  // namespace wase
