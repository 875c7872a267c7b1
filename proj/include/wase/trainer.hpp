#pragma once

#include <cmath>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "wase/checkpoint.hpp"
#include "wase/model.hpp"

namespace wase {

struct TrainConfig {
    std::size_t epochs = 12;
    std::size_t batch_size = 16;
    double learning_rate = 1e-3;
    OptMethod optimizer = OptMethod::Adam;
    std::uint64_t seed = 1;
    std::size_t checkpoint_interval = 0;  // 0: final checkpoint only
    std::filesystem::path checkpoint_path;
    // per-component weights; the objective is the plain sum by default
    double weight_v = 1.0;
    double weight_r = 1.0;
    double weight_e = 1.0;
    double weight_a = 1.0;
    double weight_c = 1.0;

    void check() const {
        if (epochs < 1 || batch_size < 1 || !(learning_rate >= 0.0)) {
            throw ValidationError("train config: epochs/batch size/learning rate must be positive");
        }
    }
};

// One mini-batch from each corpus stream.
struct JointBatch {
    std::vector<const SentenceUnit*> sentences;
    std::vector<const ImageUnit*> images;
    struct PairItem {
        const SentenceUnit* sentence;
        const ImageUnit* image;
        const ImageUnit* negative;
    };
    std::vector<PairItem> pairs;
};

struct JointLossVars {
    Var l_v, l_r, l_e, l_a, l_c;
    Var total;
    std::size_t prob_sum_exceeded = 0;
};

struct LossComponents {
    double l_v = 0, l_r = 0, l_e = 0, l_a = 0, l_c = 0, total = 0;
};

// Fixed summation order shared by the loss builder and its tests.
inline double total_from_components(const LossComponents& c) {
    return (((c.l_v + c.l_r) + c.l_e) + c.l_a) + c.l_c;
}

// L = L_v + L_r + L_e + L_a + L_c over one joint batch. Encodes each
// image graph once and reuses it for the situation and classifier terms.
inline JointLossVars joint_loss(Tape& tape, Model& model, const JointBatch& batch,
                                const TrainConfig& cfg) {
    JointLossVars out;
    const VisualMode mode = model.cfg.visual_mode;
    Var lv_acc, lr_acc, le_acc, la_acc, lc_acc;
    auto accumulate = [&tape](Var& acc, Var term) {
        acc = acc.valid() ? tape.add(acc, term) : term;
    };

    // text-annotated stream
    for (const SentenceUnit* s : batch.sentences) {
        auto enc = model.text.encode(tape, model.store, *s);
        auto losses = text_losses(tape, model, *s, enc);
        accumulate(le_acc, losses.trigger_nll);
        accumulate(la_acc, losses.argument_nll);
    }

    // image-annotated stream
    for (const ImageUnit* m : batch.images) {
        auto graph = model.vis.build_graph(tape, model.store, *m, mode, /*for_training=*/true);
        auto sit = model.vis.situation_loss(tape, *m, graph);
        out.prob_sum_exceeded += sit.prob_sum_exceeded;
        accumulate(lv_acc, sit.l_v);
        if (sit.gold_args > 0) accumulate(lr_acc, sit.l_r);

        auto enc = model.vis.vis_common_encode(tape, model.store, graph);
        const std::string event_label = model.image_gold_event_label(*m);
        Var le = tape.cross_entropy(model.cls.image_event_logits(tape, model.store, enc.nodes[0]),
                                    model.cls.image_event_index(event_label));
        accumulate(le_acc, le);
        for (std::size_t i = 0; i < graph.args.size(); ++i) {
            std::string target = kNoneLabel;
            if (event_label != kNoneLabel && graph.args[i].gold_role) {
                target = model.ace_role_for(event_label, *graph.args[i].gold_role);
            }
            Var logits = model.cls.argument_logits(tape, model.store, enc.nodes[i + 1],
                                                   enc.nodes[0]);
            accumulate(la_acc, tape.cross_entropy(logits, model.cls.role_index(target)));
        }
    }

    // caption-pair stream
    for (const auto& item : batch.pairs) {
        auto senc = model.text.encode(tape, model.store, *item.sentence);
        auto pos_graph =
            model.vis.build_graph(tape, model.store, *item.image, mode, /*for_training=*/false);
        auto pos_enc = model.vis.vis_common_encode(tape, model.store, pos_graph);
        auto neg_graph =
            model.vis.build_graph(tape, model.store, *item.negative, mode, /*for_training=*/false);
        auto neg_enc = model.vis.vis_common_encode(tape, model.store, neg_graph);

        auto pos_av = soft_alignment(tape, senc.nodes, pos_enc.nodes);
        aligned_features(tape, pos_av);
        auto neg_av = soft_alignment(tape, senc.nodes, neg_enc.nodes);
        aligned_features(tape, neg_av);
        Var lc = triplet_loss(tape, alignment_cost(tape, pos_av, model.cfg.normalize_cost),
                              alignment_cost(tape, neg_av, model.cfg.normalize_cost));
        accumulate(lc_acc, lc);
    }

    auto finish = [&tape](Var acc) { return acc.valid() ? acc : tape.scalar(0.0); };
    out.l_v = finish(lv_acc);
    out.l_r = finish(lr_acc);
    out.l_e = finish(le_acc);
    out.l_a = finish(la_acc);
    out.l_c = finish(lc_acc);
    Var weighted_v = tape.scale(out.l_v, cfg.weight_v);
    Var weighted_r = tape.scale(out.l_r, cfg.weight_r);
    Var weighted_e = tape.scale(out.l_e, cfg.weight_e);
    Var weighted_a = tape.scale(out.l_a, cfg.weight_a);
    Var weighted_c = tape.scale(out.l_c, cfg.weight_c);
    out.total = tape.add(
        tape.add(tape.add(tape.add(weighted_v, weighted_r), weighted_e), weighted_a), weighted_c);
    return out;
}

struct EpochLog {
    std::size_t epoch = 0;
    LossComponents mean;  // per-step means of the batch sums
    std::size_t steps = 0;
};

struct TrainResult {
    std::vector<EpochLog> log;
    std::size_t prob_sum_warnings = 0;
};

namespace detail {

// Round-robin batch scheduler: one batch from every stream per step,
// shorter streams cycling through reshuffled epochs of their own.
struct StreamCursor {
    std::vector<std::size_t> order;
    std::size_t next = 0;

    void reshuffle(Rng& rng) {
        rng.shuffle(order);
        next = 0;
    }

    std::vector<std::size_t> take(std::size_t count, Rng& rng) {
        std::vector<std::size_t> out;
        if (order.empty()) return out;
        for (std::size_t i = 0; i < count; ++i) {
            if (next == order.size()) reshuffle(rng);
            out.push_back(order[next++]);
        }
        return out;
    }
};

}  // namespace detail

// Joint optimization of all five losses, round-robin over the three
// corpus streams. Deterministic per seed. Aborts with a diagnostic if
// the loss leaves the finite range.
inline TrainResult train(Model& model, const Corpus& corpus, const TrainConfig& cfg) {
    cfg.check();
    OptimizerState opt;
    opt.method = cfg.optimizer;
    opt.learning_rate = cfg.learning_rate;

    Rng rng(cfg.seed ^ 0x7261696eULL);

    detail::StreamCursor text_cursor, image_cursor, pair_cursor;
    for (std::size_t i = 0; i < corpus.sentences.size(); ++i) {
        if (!corpus.sentences[i].gold_bio.empty()) text_cursor.order.push_back(i);
    }
    for (std::size_t i = 0; i < corpus.images.size(); ++i) {
        if (!corpus.images[i].gold_verb.empty()) image_cursor.order.push_back(i);
    }
    for (std::size_t i = 0; i < corpus.pairs.size(); ++i) pair_cursor.order.push_back(i);

    const std::size_t longest = std::max(
        {text_cursor.order.size(), image_cursor.order.size(), pair_cursor.order.size()});
    if (longest == 0) throw ValidationError("train: corpus has no labeled data");
    const std::size_t steps_per_epoch = (longest + cfg.batch_size - 1) / cfg.batch_size;

    TrainResult result;
    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        Rng epoch_rng = rng.fork(epoch);
        text_cursor.reshuffle(epoch_rng);
        image_cursor.reshuffle(epoch_rng);
        pair_cursor.reshuffle(epoch_rng);

        EpochLog log;
        log.epoch = epoch;
        for (std::size_t step = 0; step < steps_per_epoch; ++step) {
            JointBatch batch;
            for (std::size_t i : text_cursor.take(
                     std::min(cfg.batch_size, text_cursor.order.size()), epoch_rng)) {
                batch.sentences.push_back(&corpus.sentences[i]);
            }
            for (std::size_t i : image_cursor.take(
                     std::min(cfg.batch_size, image_cursor.order.size()), epoch_rng)) {
                batch.images.push_back(&corpus.images[i]);
            }
            if (corpus.images.size() >= 2) {
                for (std::size_t i : pair_cursor.take(
                         std::min(cfg.batch_size, pair_cursor.order.size()), epoch_rng)) {
                    const CaptionPair& p = corpus.pairs[i];
                    JointBatch::PairItem item;
                    item.sentence = &corpus.sentence(p.sentence_id);
                    item.image = &corpus.image(p.image_id);
                    item.negative = &corpus.images[sample_negative(p, corpus, epoch_rng)];
                    batch.pairs.push_back(item);
                }
            }

            Tape tape;
            auto loss = joint_loss(tape, model, batch, cfg);
            result.prob_sum_warnings += loss.prob_sum_exceeded;
            LossComponents c;
            c.l_v = tape.scalar_value(loss.l_v);
            c.l_r = tape.scalar_value(loss.l_r);
            c.l_e = tape.scalar_value(loss.l_e);
            c.l_a = tape.scalar_value(loss.l_a);
            c.l_c = tape.scalar_value(loss.l_c);
            c.total = tape.scalar_value(loss.total);
            if (!std::isfinite(c.total)) {
                throw DivergenceError(
                    "training diverged at epoch " + std::to_string(epoch) + " step " +
                    std::to_string(step) + ": L_v=" + std::to_string(c.l_v) + " L_r=" +
                    std::to_string(c.l_r) + " L_e=" + std::to_string(c.l_e) + " L_a=" +
                    std::to_string(c.l_a) + " L_c=" + std::to_string(c.l_c));
            }
            if (cfg.learning_rate > 0.0) {
                model.store.zero_grads();
                backward(tape, loss.total, model.store);
                optimizer_step(model.store, opt);
            }
            log.mean.l_v += c.l_v;
            log.mean.l_r += c.l_r;
            log.mean.l_e += c.l_e;
            log.mean.l_a += c.l_a;
            log.mean.l_c += c.l_c;
            log.mean.total += c.total;
            log.steps += 1;
        }
        const double inv = 1.0 / static_cast<double>(log.steps);
        log.mean.l_v *= inv;
        log.mean.l_r *= inv;
        log.mean.l_e *= inv;
        log.mean.l_a *= inv;
        log.mean.l_c *= inv;
        log.mean.total *= inv;
        result.log.push_back(log);

        if (!cfg.checkpoint_path.empty() && cfg.checkpoint_interval > 0 &&
            (epoch + 1) % cfg.checkpoint_interval == 0) {
            save_checkpoint(cfg.checkpoint_path, model, opt, static_cast<std::int64_t>(epoch + 1));
        }
    }
    if (!cfg.checkpoint_path.empty()) {
        save_checkpoint(cfg.checkpoint_path, model, opt,
                        static_cast<std::int64_t>(cfg.epochs));
    }
    return result;
}

}  // namespace wase
