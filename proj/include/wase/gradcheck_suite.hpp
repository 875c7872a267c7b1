#pragma once

#include <string>
#include <vector>

#include "wase/gradcheck.hpp"
#include "wase/synth.hpp"
#include "wase/trainer.hpp"

namespace wase {

// Finite-difference sweep over every loss of the objective, per visual
// mode, on deterministic desk-scale inputs. Each component is checked on
// a batch containing only the streams that feed it, so the two function
// evaluations per coordinate pay only for the relevant subgraph.

struct GradCheckRun {
    std::string loss_name;
    std::string mode;
    GradCheckReport report;
};

namespace gradcheck_detail {

// Short fixed sentences keep the text encoder part of each evaluation
// cheap; tokens come from the generator's closed vocabulary.
inline SentenceUnit short_sentence_a() {
    SentenceUnit s;
    s.id = "gc-a";
    s.tokens = {"the", "t-attack-0", "of", "e-attacker-1", "today"};
    s.pos_tags = {"DET", "VERB", "ADP", "NOUN", "X"};
    s.entity_tags = {"O", "O", "O", "PER", "O"};
    s.positions = {0, 1, 2, 3, 4};
    s.edges = {TypedEdge{1, 3, "ARG0"}, TypedEdge{0, 4, "mod"}};
    s.entities = {EntityMention{"gc-a-e0", 3, 3}};
    s.gold_bio = {"O", "B-Conflict.Attack", "O", "O", "O"};
    s.gold_arguments = {GoldArgumentLabel{1, 1, "gc-a-e0", "Attacker"}};
    return s;
}

inline SentenceUnit short_sentence_b() {
    SentenceUnit s;
    s.id = "gc-b";
    s.tokens = {"officials", "t-die-1", "near", "e-victim-0"};
    s.pos_tags = {"X", "VERB", "ADP", "NOUN"};
    s.entity_tags = {"O", "O", "O", "PER"};
    s.positions = {0, 1, 2, 3};
    s.edges = {TypedEdge{1, 3, "ARG1"}};
    s.entities = {EntityMention{"gc-b-e0", 3, 3}};
    s.gold_bio = {"O", "B-Life.Die", "O", "O"};
    s.gold_arguments = {GoldArgumentLabel{1, 1, "gc-b-e0", "Victim"}};
    return s;
}

}  // namespace gradcheck_detail

inline std::vector<GradCheckRun> gradcheck_all_losses(std::uint64_t seed, double step, double tol,
                                                      const std::string& mode_selector) {
    SynthSpec spec;
    spec.n_sentences = 4;
    spec.n_images = 4;
    spec.n_pairs = 4;
    spec.noise = 0.1;
    const Corpus corpus = synth_corpus(seed, spec);
    const SentenceUnit sent_a = gradcheck_detail::short_sentence_a();
    const SentenceUnit sent_b = gradcheck_detail::short_sentence_b();

    std::vector<VisualMode> modes;
    if (mode_selector == "object" || mode_selector == "both") modes.push_back(VisualMode::Object);
    if (mode_selector == "attention" || mode_selector == "both") {
        modes.push_back(VisualMode::Attention);
    }
    if (modes.empty()) throw ValidationError("gradcheck: unknown visual mode '" + mode_selector + "'");

    std::vector<GradCheckRun> runs;
    for (VisualMode mode : modes) {
        ModelConfig mcfg;
        mcfg.visual_mode = mode;
        Model model(mcfg, corpus.ontology);
        model.init_params(seed);

        JointBatch image_batch;
        image_batch.images = {&corpus.images[0]};
        JointBatch text_image_batch = image_batch;
        text_image_batch.sentences = {&sent_a};
        JointBatch pair_batch;
        pair_batch.pairs = {{&sent_b, &corpus.images[1], &corpus.images[2]}};
        JointBatch full_batch = text_image_batch;
        full_batch.pairs = pair_batch.pairs;

        struct Row {
            const char* name;
            const JointBatch* batch;
            int component;  // 0..4 the addends, 5 the total
        };
        const Row rows[] = {{"L_v", &image_batch, 0},      {"L_r", &image_batch, 1},
                            {"L_e", &text_image_batch, 2}, {"L_a", &text_image_batch, 3},
                            {"L_c", &pair_batch, 4},       {"L", &full_batch, 5}};
        const TrainConfig loss_cfg;
        for (const Row& row : rows) {
            auto loss_fn = [&model, &row, &loss_cfg](Tape& tape) {
                auto loss = joint_loss(tape, model, *row.batch, loss_cfg);
                const Var vars[] = {loss.l_v, loss.l_r, loss.l_e, loss.l_a, loss.l_c, loss.total};
                return vars[row.component];
            };
            GradCheckOptions opt;
            opt.max_coords_per_param = 1;
            opt.max_zero_coords_per_param = 0;
            opt.seed = seed + static_cast<std::uint64_t>(row.component);
            GradCheckRun run;
            run.loss_name = row.name;
            run.mode = to_string(mode);
            run.report = finite_diff_check(loss_fn, model.store, step, tol, opt);
            runs.push_back(std::move(run));
        }
    }
    return runs;
}

}  // namespace wase
