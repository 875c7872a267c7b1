#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "model_fixtures.hpp"
#include "oracles.hpp"
#include "wase/gradcheck.hpp"
#include "wase/model.hpp"

using namespace wase;

namespace {

SentenceUnit synth_sentence() {
    SentenceUnit s;
    s.id = "s0";
    s.tokens = {"the", "t-attack-0", "of", "e-attacker-1", "today"};
    s.pos_tags = {"DET", "VERB", "ADP", "NOUN", "X"};
    s.entity_tags = {"O", "O", "O", "PER", "O"};
    s.positions = {0, 1, 2, 3, 4};
    s.edges = {TypedEdge{1, 3, "ARG0"}};
    s.entities = {EntityMention{"s0-e0", 3, 3}};
    s.gold_bio = {"O", "B-Conflict.Attack", "O", "O", "O"};
    s.gold_arguments = {GoldArgumentLabel{1, 1, "s0-e0", "Attacker"}};
    return s;
}

}  // namespace

TEST_CASE("token_repr shape for a length-1 sentence") {
    auto model = fixtures::small_model();
    Tape tape;
    SentenceUnit s;
    s.id = "one";
    s.tokens = {"the"};
    s.pos_tags = {"DET"};
    s.entity_tags = {"O"};
    s.positions = {0};
    auto reprs = model->text.token_repr(tape, model->store, s);
    REQUIRE(reprs.size() == 1);
    REQUIRE(tape.value(reprs[0]).shape() ==
            std::vector<std::size_t>{model->cfg.lstm_output_dim()});
}

TEST_CASE("default dimensions give 300-dim contextual vectors") {
    ModelConfig cfg;
    REQUIRE(cfg.lstm_output_dim() == 300);
    REQUIRE(cfg.common_dim == 300);
    REQUIRE(cfg.word_feature_dim() == 200);
    REQUIRE(cfg.gcn_layers == 3);
}

TEST_CASE("all-zero LSTM weights give identical outputs across positions") {
    auto model = fixtures::small_model();
    model->store.value("text.lstm.fwd.W").fill(0.0);
    model->store.value("text.lstm.fwd.b").fill(0.0);
    model->store.value("text.lstm.bwd.W").fill(0.0);
    model->store.value("text.lstm.bwd.b").fill(0.0);
    Tape tape;
    auto reprs = model->text.token_repr(tape, model->store, synth_sentence());
    const Tensor first = tape.value(reprs[0]);
    for (std::size_t i = 1; i < reprs.size(); ++i) {
        const Tensor& v = tape.value(reprs[i]);
        for (std::size_t k = 0; k < v.numel(); ++k) REQUIRE(v[k] == first[k]);
    }
}

TEST_CASE("reversed input maps forward outputs onto backward outputs when weights are tied") {
    auto model = fixtures::small_model();
    model->store.value("text.lstm.bwd.W") = model->store.value("text.lstm.fwd.W");
    model->store.value("text.lstm.bwd.b") = model->store.value("text.lstm.fwd.b");

    SentenceUnit s = synth_sentence();
    SentenceUnit rev = s;
    const std::size_t n = s.tokens.size();
    for (std::size_t i = 0; i < n; ++i) {
        rev.tokens[i] = s.tokens[n - 1 - i];
        rev.pos_tags[i] = s.pos_tags[n - 1 - i];
        rev.entity_tags[i] = s.entity_tags[n - 1 - i];
        rev.positions[i] = s.positions[n - 1 - i];
    }
    Tape tape;
    auto orig = model->text.token_repr(tape, model->store, s);
    auto flipped = model->text.token_repr(tape, model->store, rev);
    const std::size_t h = model->cfg.lstm_hidden;
    for (std::size_t i = 0; i < n; ++i) {
        const Tensor& a = tape.value(orig[i]);
        const Tensor& b = tape.value(flipped[n - 1 - i]);
        for (std::size_t k = 0; k < h; ++k) {
            REQUIRE_THAT(a[k], Catch::Matchers::WithinAbs(b[h + k], 1e-14));
            REQUIRE_THAT(a[h + k], Catch::Matchers::WithinAbs(b[k], 1e-14));
        }
    }
}

TEST_CASE("isolated node with zeroed GCN parameters encodes to one half") {
    auto model = fixtures::small_model();
    for (const auto& [name, tensor] : model->store.all()) {
        if (name.rfind("text.gcn", 0) == 0) model->store.value(name).fill(0.0);
    }
    Tape tape;
    Rng rng(3);
    std::vector<Var> words{
        tape.leaf(Tensor::random_normal({model->cfg.lstm_output_dim()}, rng, 1.0))};
    auto enc = model->text.gcn_encode(tape, model->store, words, {}, "iso");
    const Tensor& out = tape.value(enc.nodes[0]);
    REQUIRE(out.numel() == model->cfg.common_dim);
    for (std::size_t k = 0; k < out.numel(); ++k) {
        REQUIRE_THAT(out[k], Catch::Matchers::WithinAbs(0.5, 1e-12));
    }
}

TEST_CASE("single neighbor with unit gate and identity weights is a plain sigmoid") {
    ParameterStore store;
    Rng rng(5);
    const std::size_t d = 6;
    init_gcn_params(store, rng, "g", {"E"}, 1, d, d, 0.05);
    Tensor eye({d, d});
    for (std::size_t i = 0; i < d; ++i) eye.at(i, i) = 1.0;
    store.value("g.L0.E.W") = eye;
    store.value("g.L0.E.b").fill(0.0);
    store.value("g.L0.E.u").fill(0.0);
    store.value("g.L0.E.c")[0] = 60.0;  // sigmoid(60) rounds to exactly 1.0

    Tape tape;
    Tensor w_j = Tensor::random_normal({d}, rng, 1.0);
    std::vector<Var> nodes{tape.leaf(Tensor({d})), tape.leaf(w_j)};
    auto out = gcn_forward(tape, store, "g", 1, nodes, {{1, 0, "E"}});
    for (std::size_t k = 0; k < d; ++k) {
        const double expect = 1.0 / (1.0 + std::exp(-w_j[k]));
        REQUIRE_THAT(tape.value(out[0])[k], Catch::Matchers::WithinAbs(expect, 1e-12));
    }
}

TEST_CASE("gcn_encode matches the dense-matrix oracle on random graphs") {
    auto model = fixtures::small_model(11);
    Rng rng(29);
    for (int trial = 0; trial < 30; ++trial) {
        const std::size_t n = 1 + rng.index(5);
        std::vector<Tensor> inputs;
        std::vector<Var> words;
        Tape tape;
        for (std::size_t i = 0; i < n; ++i) {
            inputs.push_back(Tensor::random_normal({model->cfg.lstm_output_dim()}, rng, 1.0));
            words.push_back(tape.leaf(inputs.back()));
        }
        std::vector<TypedEdge> edges;
        const auto& labels = model->onto.edge_label_vocabulary;
        const std::size_t n_edges = rng.index(2 * n + 1);
        for (std::size_t e = 0; e < n_edges; ++e) {
            edges.push_back(TypedEdge{rng.index(n), rng.index(n), labels[rng.index(labels.size())]});
        }
        auto enc = model->text.gcn_encode(tape, model->store, words, edges, "g");

        std::vector<GcnMessage> messages;
        for (std::size_t i = 0; i < n; ++i) messages.push_back({i, i, "self"});
        for (const auto& e : edges) {
            messages.push_back({e.src, e.dst, e.label});
            messages.push_back({e.dst, e.src, e.label + "~inv"});
        }
        auto expect =
            oracles::dense_gcn(model->store, "text.gcn", model->cfg.gcn_layers, inputs, messages);
        for (std::size_t i = 0; i < n; ++i) {
            const Tensor& got = tape.value(enc.nodes[i]);
            for (std::size_t k = 0; k < got.numel(); ++k) {
                REQUIRE_THAT(got[k], Catch::Matchers::WithinAbs(expect[i][k], 1e-10));
            }
        }
    }
}

TEST_CASE("unknown edge type raises a vocabulary error") {
    auto model = fixtures::small_model();
    Tape tape;
    std::vector<Var> words{tape.leaf(Tensor({model->cfg.lstm_output_dim()})),
                           tape.leaf(Tensor({model->cfg.lstm_output_dim()}))};
    REQUIRE_THROWS_AS(
        model->text.gcn_encode(tape, model->store, words, {TypedEdge{0, 1, "nope"}}, "g"),
        VocabularyError);
}

TEST_CASE("entity representation averages the span") {
    auto model = fixtures::small_model();
    Tape tape;
    auto enc = model->text.encode(tape, model->store, synth_sentence());

    Var single = TextEncoder::span_mean(tape, enc, 2, 2);
    const Tensor& node2 = tape.value(enc.nodes[2]);
    for (std::size_t k = 0; k < node2.numel(); ++k) REQUIRE(tape.value(single)[k] == node2[k]);

    Var pair_mean = TextEncoder::span_mean(tape, enc, 1, 2);
    const Tensor& node1 = tape.value(enc.nodes[1]);
    for (std::size_t k = 0; k < node1.numel(); ++k) {
        const double expect = (node1[k] + node2[k]) / 2.0;
        REQUIRE_THAT(tape.value(pair_mean)[k], Catch::Matchers::WithinAbs(expect, 1e-15));
        REQUIRE(tape.value(pair_mean)[k] >= std::min(node1[k], node2[k]) - 1e-15);
        REQUIRE(tape.value(pair_mean)[k] <= std::max(node1[k], node2[k]) + 1e-15);
    }

    REQUIRE_THROWS_AS(TextEncoder::span_mean(tape, enc, 3, 2), ShapeError);
}

TEST_CASE("trigger classifier with zero weights is uniform over 17 BIO labels") {
    auto model = fixtures::small_model();
    REQUIRE(model->cls.bio_labels.size() == 17);
    model->store.value("cls.event.W").fill(0.0);
    model->store.value("cls.event.b").fill(0.0);
    Tape tape;
    Rng rng(2);
    Var dist = classify_trigger(
        tape, *model, tape.leaf(Tensor::random_normal({model->cfg.common_dim}, rng, 1.0)));
    for (std::size_t i = 0; i < 17; ++i) {
        REQUIRE_THAT(tape.value(dist)[i], Catch::Matchers::WithinAbs(1.0 / 17, 1e-12));
    }
}

TEST_CASE("large O bias dominates the trigger decision") {
    auto model = fixtures::small_model();
    model->store.value("cls.event.b")[model->cls.bio_index("O")] = 50.0;
    Tape tape;
    Var dist = classify_trigger(tape, *model,
                                tape.leaf(Tensor({model->cfg.common_dim})));
    const Tensor& d = tape.value(dist);
    std::size_t best = 0;
    for (std::size_t i = 1; i < d.numel(); ++i) {
        if (d[i] > d[best]) best = i;
    }
    REQUIRE(model->cls.bio_labels[best] == "O");
}

TEST_CASE("argument classifier is a valid distribution and depends on argument order") {
    auto model = fixtures::small_model();
    Rng rng(9);
    Tape tape;
    Var t = tape.leaf(Tensor::random_normal({model->cfg.common_dim}, rng, 1.0));
    Var w = tape.leaf(Tensor::random_normal({model->cfg.common_dim}, rng, 1.0));
    Var d1 = classify_argument(tape, *model, t, w);
    Var d2 = classify_argument(tape, *model, w, t);
    double sum = 0.0;
    bool differs = false;
    for (std::size_t i = 0; i < tape.value(d1).numel(); ++i) {
        sum += tape.value(d1)[i];
        if (std::fabs(tape.value(d1)[i] - tape.value(d2)[i]) > 1e-9) differs = true;
    }
    REQUIRE_THAT(sum, Catch::Matchers::WithinAbs(1.0, 1e-9));
    REQUIRE(differs);  // W_a is not block-symmetric at random init
    REQUIRE(tape.value(d1).numel() == 18);  // 17 roles + none
}

TEST_CASE("argument classifier with zero weights is uniform over roles plus none") {
    auto model = fixtures::small_model();
    model->store.value("cls.arg.W").fill(0.0);
    model->store.value("cls.arg.b").fill(0.0);
    Tape tape;
    Var dist = classify_argument(tape, *model, tape.leaf(Tensor({model->cfg.common_dim})),
                                 tape.leaf(Tensor({model->cfg.common_dim})));
    for (std::size_t i = 0; i < 18; ++i) {
        REQUIRE_THAT(tape.value(dist)[i], Catch::Matchers::WithinAbs(1.0 / 18, 1e-12));
    }
}

TEST_CASE("bio_decode examples") {
    auto model = fixtures::small_model();
    const auto& bio = model->cls.bio_labels;
    auto onehot = [&](const std::string& label) {
        Tensor t({bio.size()});
        t[model->cls.bio_index(label)] = 1.0;
        return t;
    };

    auto spans = model->text.bio_decode(
        {onehot("B-Conflict.Attack"), onehot("I-Conflict.Attack"), onehot("O")});
    REQUIRE(spans.size() == 1);
    REQUIRE(spans[0].start == 0);
    REQUIRE(spans[0].end == 1);
    REQUIRE(spans[0].type == "Conflict.Attack");

    REQUIRE(model->text.bio_decode({onehot("O"), onehot("O"), onehot("O")}).empty());

    auto die = model->text.bio_decode({onehot("I-Life.Die")});
    REQUIRE(die.size() == 1);
    REQUIRE(die[0].start == 0);
    REQUIRE(die[0].end == 0);
    REQUIRE(die[0].type == "Life.Die");
}

TEST_CASE("bio_decode recovers gold spans from one-hot gold sequences") {
    auto model = fixtures::small_model();
    const auto& bio = model->cls.bio_labels;
    Rng rng(31);
    for (int trial = 0; trial < 50; ++trial) {
        // random well-formed gold: alternating O runs and trigger spans
        std::vector<std::string> gold;
        std::vector<TriggerSpan> expected;
        while (gold.size() < 3 + rng.index(8)) {
            if (rng.chance(0.5)) {
                gold.push_back("O");
            } else {
                const auto& type = model->onto.event_types[rng.index(8)];
                TriggerSpan span;
                span.start = gold.size();
                span.type = type;
                gold.push_back("B-" + type);
                while (rng.chance(0.4)) gold.push_back("I-" + type);
                span.end = gold.size() - 1;
                expected.push_back(span);
            }
        }
        std::vector<Tensor> dists;
        for (const auto& label : gold) {
            Tensor t({bio.size()});
            t[model->cls.bio_index(label)] = 1.0;
            dists.push_back(t);
        }
        const auto decoded = model->text.bio_decode(dists);
        REQUIRE(decoded.size() == expected.size());
        for (std::size_t i = 0; i < decoded.size(); ++i) {
            REQUIRE(decoded[i].start == expected[i].start);
            REQUIRE(decoded[i].end == expected[i].end);
            REQUIRE(decoded[i].type == expected[i].type);
        }
    }
}

TEST_CASE("out-of-vocabulary token is rejected") {
    auto model = fixtures::small_model();
    SentenceUnit s = synth_sentence();
    s.tokens[0] = "zzz-not-a-token";
    Tape tape;
    REQUIRE_THROWS_WITH(model->text.token_repr(tape, model->store, s),
                        Catch::Matchers::ContainsSubstring("zzz-not-a-token"));
}

TEST_CASE("text losses: uniform predictions and perfect predictions") {
    auto model = fixtures::small_model();
    model->store.value("cls.event.W").fill(0.0);
    model->store.value("cls.event.b").fill(0.0);
    const SentenceUnit s = synth_sentence();
    {
        Tape tape;
        auto enc = model->text.encode(tape, model->store, s);
        auto losses = text_losses(tape, *model, s, enc);
        const double expect = 5.0 * std::log(17.0);
        REQUIRE_THAT(tape.scalar_value(losses.trigger_nll),
                     Catch::Matchers::WithinAbs(expect, 1e-9));
        REQUIRE(tape.scalar_value(losses.argument_nll) >= 0.0);
    }
    // near-certain gold predictions drive the loss to zero
    {
        SentenceUnit easy = s;
        easy.gold_bio = {"O", "O", "O", "O", "O"};
        easy.gold_arguments.clear();
        easy.entities.clear();
        auto m2 = fixtures::small_model();
        m2->store.value("cls.event.W").fill(0.0);
        m2->store.value("cls.event.b").fill(0.0);
        m2->store.value("cls.event.b")[m2->cls.bio_index("O")] = 60.0;
        Tape tape;
        auto enc = m2->text.encode(tape, m2->store, easy);
        auto losses = text_losses(tape, *m2, easy, enc);
        REQUIRE_THAT(tape.scalar_value(losses.trigger_nll), Catch::Matchers::WithinAbs(0.0, 1e-9));
    }
}

TEST_CASE("text losses require gold labels") {
    auto model = fixtures::small_model();
    SentenceUnit s = synth_sentence();
    s.gold_bio.clear();
    Tape tape;
    auto enc = model->text.encode(tape, model->store, s);
    REQUIRE_THROWS_AS(text_losses(tape, *model, s, enc), ValidationError);
}

TEST_CASE("text loss is non-negative on random parameters") {
    for (std::uint64_t seed : {1u, 2u, 3u}) {
        auto model = fixtures::small_model(seed);
        Tape tape;
        const SentenceUnit s = synth_sentence();
        auto enc = model->text.encode(tape, model->store, s);
        auto losses = text_losses(tape, *model, s, enc);
        REQUIRE(tape.scalar_value(losses.trigger_nll) >= 0.0);
        REQUIRE(tape.scalar_value(losses.argument_nll) >= 0.0);
    }
}

TEST_CASE("end-to-end text loss gradients pass the finite-difference check") {
    auto model = fixtures::small_model(21);
    const SentenceUnit s = synth_sentence();
    auto loss_fn = [&](Tape& tape) {
        auto enc = model->text.encode(tape, model->store, s);
        auto losses = text_losses(tape, *model, s, enc);
        return tape.add(losses.trigger_nll, losses.argument_nll);
    };
    GradCheckOptions opt;
    opt.max_coords_per_param = 4;
    opt.seed = 7;
    auto report = finite_diff_check(loss_fn, model->store, 1e-4, 1e-4, opt);
    CAPTURE(report.worst_parameter);
    REQUIRE(report.max_rel_error <= 1e-4);
}
