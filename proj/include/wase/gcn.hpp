#pragma once

#include <array>
#include <map>
#include <string>
#include <vector>

#include "wase/autodiff.hpp"
#include "wase/params.hpp"
#include "wase/rng.hpp"

namespace wase {

enum class NodeKind { Word, Entity, Image, Object };

// Per-node common-space embeddings of one sentence or one image graph.
struct CommonGraph {
    Tensor nodes;  // [n x common_dim]
    std::vector<NodeKind> kinds;
    std::string source_ref;

    std::size_t size() const { return kinds.size(); }
};

// Tape-resident counterpart; snapshot() freezes the values.
struct GraphEncoding {
    std::vector<Var> nodes;
    std::vector<NodeKind> kinds;
    std::string source_ref;

    CommonGraph snapshot(const Tape& tape) const {
        CommonGraph g;
        g.kinds = kinds;
        g.source_ref = source_ref;
        if (!nodes.empty()) {
            const std::size_t d = tape.value(nodes[0]).numel();
            g.nodes = Tensor({nodes.size(), d});
            for (std::size_t i = 0; i < nodes.size(); ++i) {
                const Tensor& v = tape.value(nodes[i]);
                std::copy(v.data(), v.data() + d, g.nodes.data() + i * d);
            }
        }
        return g;
    }
};

// A directed message src -> dst under a typed edge.
struct GcnMessage {
    std::size_t src = 0;
    std::size_t dst = 0;
    std::string label;
};

// Gated graph convolution with per-edge-type weights:
//   h_i^{k+1} = sigmoid( sum_{j in N(i)} g_ij (W_E h_j + b_E) )
//   g_ij      = sigmoid( u_E . h_j + c_E )        (scalar gate)
// Message lists must already contain self-loops and any inverse edges
// the caller wants; every layer has its own parameters per edge type.
inline void init_gcn_params(ParameterStore& store, Rng& rng, const std::string& prefix,
                            const std::vector<std::string>& labels, std::size_t layers,
                            std::size_t in_dim, std::size_t out_dim, double scale) {
    std::size_t d = in_dim;
    for (std::size_t k = 0; k < layers; ++k) {
        const std::string layer = prefix + ".L" + std::to_string(k) + ".";
        for (const auto& label : labels) {
            store.create(layer + label + ".W", Tensor::random_uniform({out_dim, d}, rng, scale));
            store.create(layer + label + ".b", Tensor::random_uniform({out_dim}, rng, scale));
            store.create(layer + label + ".u", Tensor::random_uniform({d}, rng, scale));
            // gates start open so messages propagate at full strength
            Tensor c = Tensor::random_uniform({1}, rng, scale);
            c[0] += 2.0;
            store.create(layer + label + ".c", std::move(c));
        }
        d = out_dim;
    }
}

inline std::vector<Var> gcn_forward(Tape& tape, const ParameterStore& store,
                                    const std::string& prefix, std::size_t layers,
                                    const std::vector<Var>& inputs,
                                    const std::vector<GcnMessage>& messages) {
    const std::size_t n = inputs.size();
    for (const auto& msg : messages) {
        if (msg.src >= n || msg.dst >= n) throw ShapeError("gcn: message endpoint out of range");
        if (!store.has(prefix + ".L0." + msg.label + ".W")) {
            throw VocabularyError("gcn: unknown edge type '" + msg.label + "'");
        }
    }
    std::vector<Var> h = inputs;
    for (std::size_t k = 0; k < layers; ++k) {
        const std::string layer = prefix + ".L" + std::to_string(k) + ".";
        // parameters fetched once per (layer, label)
        std::map<std::string, std::array<Var, 4>> by_label;
        for (const auto& msg : messages) {
            if (!by_label.count(msg.label)) {
                by_label[msg.label] = {store.use(tape, layer + msg.label + ".W"),
                                       store.use(tape, layer + msg.label + ".b"),
                                       store.use(tape, layer + msg.label + ".u"),
                                       store.use(tape, layer + msg.label + ".c")};
            }
        }
        std::vector<Var> agg(n);
        for (const auto& msg : messages) {
            const auto& p = by_label[msg.label];
            Var lin = tape.add(tape.matmul(p[0], h[msg.src]), p[1]);
            Var gate = tape.sigmoid(tape.add(tape.dot(p[2], h[msg.src]), p[3]));
            Var contrib = tape.scale_by(lin, gate);
            agg[msg.dst] = agg[msg.dst].valid() ? tape.add(agg[msg.dst], contrib) : contrib;
        }
        std::vector<Var> next(n);
        const std::size_t out_dim = store.value(layer + messages.front().label + ".W").extent(0);
        for (std::size_t i = 0; i < n; ++i) {
            if (!agg[i].valid()) {
                // no incoming messages at all; the activation of zero
                agg[i] = tape.leaf(Tensor({out_dim}));
            }
            next[i] = tape.sigmoid(agg[i]);
        }
        h = std::move(next);
    }
    return h;
}

}  // namespace wase
