#pragma once

#include <string>
#include <vector>

#include "wase/autodiff.hpp"
#include "wase/data.hpp"
#include "wase/gcn.hpp"
#include "wase/rng.hpp"

namespace wase {

// Weak cross-modal alignment for one (sentence, image) pair:
// alpha rows are word->object attention, beta columns object->word.
struct AlignmentResult {
    Tensor alpha;     // [words x objects], rows sum to 1
    Tensor beta;      // [words x objects], columns sum to 1
    Tensor w_prime;   // [words x common_dim]
    Tensor o_prime;   // [objects x common_dim]
    double cost = 0;  // <s, m>, non-negative
};

// Tape-level pieces (training path).

struct AlignmentVars {
    Var alpha;
    Var beta;
    Var w_prime;
    Var o_prime;
    Var words;    // stacked [w x d]
    Var objects;  // stacked [o x d]
};

// alpha_ij = softmax_j(w_i . o_j); beta_ji = softmax_i of the same dots.
// The image graph is expected to contain the whole-image node as its
// special object.
inline AlignmentVars soft_alignment(Tape& tape, const std::vector<Var>& word_nodes,
                                    const std::vector<Var>& object_nodes) {
    if (word_nodes.empty() || object_nodes.empty()) {
        throw ShapeError("soft_alignment: empty graph");
    }
    AlignmentVars out;
    out.words = tape.stack_rows(word_nodes);
    out.objects = tape.stack_rows(object_nodes);
    Var dots = tape.matmul(out.words, tape.transpose(out.objects));
    out.alpha = tape.softmax_rows(dots);
    out.beta = tape.softmax_cols(dots);
    return out;
}

// Eq.-3 style weighted averages: w'_i = sum_j alpha_ij o_j,
// o'_j = sum_i beta_ji w_i.
inline void aligned_features(Tape& tape, AlignmentVars& av) {
    av.w_prime = tape.matmul(av.alpha, av.objects);
    av.o_prime = tape.matmul(tape.transpose(av.beta), av.words);
}

// <s, m> = sum_i ||w_i - w'_i||^2 + sum_j ||o_j - o'_j||^2, divided by
// the total node count when normalize is set.
inline Var alignment_cost(Tape& tape, const AlignmentVars& av, bool normalize) {
    Var cost = tape.add(tape.sum_sq_diff(av.words, av.w_prime),
                        tape.sum_sq_diff(av.objects, av.o_prime));
    if (normalize) {
        const std::size_t n =
            tape.value(av.words).extent(0) + tape.value(av.objects).extent(0);
        cost = tape.scale(cost, 1.0 / static_cast<double>(n));
    }
    return cost;
}

// L_c = max(0, 1 + <s,m> - <s,m->), margin fixed at 1.
inline Var triplet_loss(Tape& tape, Var pos_cost, Var neg_cost) {
    return tape.relu(tape.add_const(tape.sub(pos_cost, neg_cost), 1.0));
}

inline double triplet_loss_value(double pos_cost, double neg_cost) {
    const double v = 1.0 + pos_cost - neg_cost;
    return v > 0.0 ? v : 0.0;
}

// Uniformly random image whose id differs from the paired one.
inline std::size_t sample_negative(const CaptionPair& pair, const Corpus& corpus, Rng& rng) {
    if (corpus.images.size() < 2) {
        throw ValidationError("sample_negative: corpus has fewer than 2 images");
    }
    for (;;) {
        const std::size_t i = rng.index(corpus.images.size());
        if (corpus.images[i].id != pair.image_id) return i;
    }
}

// Value-level wrapper over the same ops; used at inference where no
// gradients are needed.
inline AlignmentResult compute_alignment(const CommonGraph& words, const CommonGraph& objects,
                                         bool normalize) {
    Tape tape;
    std::vector<Var> ws, os;
    for (std::size_t i = 0; i < words.size(); ++i) {
        const std::size_t d = words.nodes.extent(1);
        Tensor row({d});
        std::copy(words.nodes.data() + i * d, words.nodes.data() + (i + 1) * d, row.data());
        ws.push_back(tape.leaf(std::move(row)));
    }
    for (std::size_t j = 0; j < objects.size(); ++j) {
        const std::size_t d = objects.nodes.extent(1);
        Tensor row({d});
        std::copy(objects.nodes.data() + j * d, objects.nodes.data() + (j + 1) * d, row.data());
        os.push_back(tape.leaf(std::move(row)));
    }
    AlignmentVars av = soft_alignment(tape, ws, os);
    aligned_features(tape, av);
    Var cost = alignment_cost(tape, av, normalize);
    AlignmentResult out;
    out.alpha = tape.value(av.alpha);
    out.beta = tape.value(av.beta);
    out.w_prime = tape.value(av.w_prime);
    out.o_prime = tape.value(av.o_prime);
    out.cost = tape.scalar_value(cost);
    return out;
}

}  // namespace wase
