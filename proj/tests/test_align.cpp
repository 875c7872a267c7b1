#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <set>

#include "model_fixtures.hpp"
#include "oracles.hpp"
#include "wase/alignment.hpp"
#include "wase/gradcheck.hpp"
#include "wase/model.hpp"
#include "wase/synth.hpp"

using namespace wase;

namespace {

std::vector<Var> leaf_rows(Tape& tape, const std::vector<Tensor>& rows) {
    std::vector<Var> out;
    for (const auto& r : rows) out.push_back(tape.leaf(r));
    return out;
}

}  // namespace

TEST_CASE("one word against two objects with equal dots splits evenly") {
    Tape tape;
    auto ws = leaf_rows(tape, {Tensor({3}, {1, 0, 0})});
    auto os = leaf_rows(tape, {Tensor({3}, {0, 1, 0}), Tensor({3}, {0, 0, 1})});
    auto av = soft_alignment(tape, ws, os);
    REQUIRE_THAT(tape.value(av.alpha).at(0, 0), Catch::Matchers::WithinAbs(0.5, 1e-12));
    REQUIRE_THAT(tape.value(av.alpha).at(0, 1), Catch::Matchers::WithinAbs(0.5, 1e-12));
}

TEST_CASE("a single word and single object align fully") {
    Tape tape;
    auto ws = leaf_rows(tape, {Tensor({2}, {0.3, 0.4})});
    auto os = leaf_rows(tape, {Tensor({2}, {0.9, -0.2})});
    auto av = soft_alignment(tape, ws, os);
    REQUIRE(tape.value(av.alpha).shape() == std::vector<std::size_t>{1, 1});
    REQUIRE(tape.value(av.alpha)[0] == 1.0);
    REQUIRE(tape.value(av.beta)[0] == 1.0);
}

TEST_CASE("empty graphs are rejected") {
    Tape tape;
    auto ws = leaf_rows(tape, {Tensor({2})});
    REQUIRE_THROWS_AS(soft_alignment(tape, ws, {}), ShapeError);
    REQUIRE_THROWS_AS(soft_alignment(tape, {}, ws), ShapeError);
}

TEST_CASE("alpha rows and beta columns are stochastic on random graphs") {
    Rng rng(3);
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t nw = 1 + rng.index(6), no = 1 + rng.index(6), d = 2 + rng.index(8);
        Tape tape;
        std::vector<Tensor> w_rows, o_rows;
        for (std::size_t i = 0; i < nw; ++i) w_rows.push_back(Tensor::random_normal({d}, rng, 2.0));
        for (std::size_t j = 0; j < no; ++j) o_rows.push_back(Tensor::random_normal({d}, rng, 2.0));
        auto av = soft_alignment(tape, leaf_rows(tape, w_rows), leaf_rows(tape, o_rows));
        const Tensor& alpha = tape.value(av.alpha);
        const Tensor& beta = tape.value(av.beta);
        for (std::size_t i = 0; i < nw; ++i) {
            double row = 0.0;
            for (std::size_t j = 0; j < no; ++j) {
                REQUIRE(alpha.at(i, j) >= 0.0);
                row += alpha.at(i, j);
            }
            REQUIRE_THAT(row, Catch::Matchers::WithinAbs(1.0, 1e-9));
        }
        for (std::size_t j = 0; j < no; ++j) {
            double col = 0.0;
            for (std::size_t i = 0; i < nw; ++i) {
                REQUIRE(beta.at(i, j) >= 0.0);
                col += beta.at(i, j);
            }
            REQUIRE_THAT(col, Catch::Matchers::WithinAbs(1.0, 1e-9));
        }
    }
}

TEST_CASE("aligned features: one-hot rows copy, uniform rows average") {
    Tape tape;
    // orthogonal scaled vectors force a one-hot alpha onto object 0
    auto ws = leaf_rows(tape, {Tensor({2}, {100.0, 0.0})});
    auto os = leaf_rows(tape, {Tensor({2}, {100.0, 0.0}), Tensor({2}, {0.0, 100.0})});
    auto av = soft_alignment(tape, ws, os);
    aligned_features(tape, av);
    REQUIRE_THAT(tape.value(av.w_prime).at(0, 0), Catch::Matchers::WithinAbs(100.0, 1e-9));
    REQUIRE_THAT(tape.value(av.w_prime).at(0, 1), Catch::Matchers::WithinAbs(0.0, 1e-9));

    // equal dots: w' is the midpoint of the two objects
    Tape tape2;
    auto ws2 = leaf_rows(tape2, {Tensor({2}, {0.0, 0.0})});
    auto os2 = leaf_rows(tape2, {Tensor({2}, {1.0, 3.0}), Tensor({2}, {5.0, -1.0})});
    auto av2 = soft_alignment(tape2, ws2, os2);
    aligned_features(tape2, av2);
    REQUIRE_THAT(tape2.value(av2.w_prime).at(0, 0), Catch::Matchers::WithinAbs(3.0, 1e-12));
    REQUIRE_THAT(tape2.value(av2.w_prime).at(0, 1), Catch::Matchers::WithinAbs(1.0, 1e-12));
}

TEST_CASE("aligned word features stay inside the object hull per coordinate") {
    Rng rng(5);
    for (int trial = 0; trial < 30; ++trial) {
        const std::size_t nw = 1 + rng.index(4), no = 1 + rng.index(5), d = 3;
        Tape tape;
        std::vector<Tensor> w_rows, o_rows;
        for (std::size_t i = 0; i < nw; ++i) w_rows.push_back(Tensor::random_normal({d}, rng, 1.0));
        for (std::size_t j = 0; j < no; ++j) o_rows.push_back(Tensor::random_normal({d}, rng, 1.0));
        auto av = soft_alignment(tape, leaf_rows(tape, w_rows), leaf_rows(tape, o_rows));
        aligned_features(tape, av);
        for (std::size_t i = 0; i < nw; ++i) {
            for (std::size_t k = 0; k < d; ++k) {
                double lo = 1e300, hi = -1e300;
                for (std::size_t j = 0; j < no; ++j) {
                    lo = std::min(lo, o_rows[j][k]);
                    hi = std::max(hi, o_rows[j][k]);
                }
                REQUIRE(tape.value(av.w_prime).at(i, k) >= lo - 1e-12);
                REQUIRE(tape.value(av.w_prime).at(i, k) <= hi + 1e-12);
            }
        }
    }
}

TEST_CASE("alignment cost vanishes for saturated identical node sets") {
    // scaled orthogonal vectors: alpha and beta saturate one-hot onto the
    // equal counterpart, so every aligned feature reproduces its node
    Tape tape;
    std::vector<Tensor> rows = {Tensor({3}, {100, 0, 0}), Tensor({3}, {0, 100, 0}),
                                Tensor({3}, {0, 0, 100})};
    auto av = soft_alignment(tape, leaf_rows(tape, rows), leaf_rows(tape, rows));
    aligned_features(tape, av);
    Var cost = alignment_cost(tape, av, true);
    REQUIRE(tape.scalar_value(cost) == 0.0);

    // one word, one object, equal vectors
    Tape tape2;
    auto av2 = soft_alignment(tape2, leaf_rows(tape2, {Tensor({2}, {0.3, 0.7})}),
                              leaf_rows(tape2, {Tensor({2}, {0.3, 0.7})}));
    aligned_features(tape2, av2);
    REQUIRE(tape2.scalar_value(alignment_cost(tape2, av2, true)) == 0.0);
}

TEST_CASE("alignment cost equals the loop-based oracle") {
    Rng rng(7);
    for (int trial = 0; trial < 40; ++trial) {
        const std::size_t nw = 1 + rng.index(5), no = 1 + rng.index(5), d = 2 + rng.index(6);
        std::vector<Tensor> w_rows, o_rows;
        for (std::size_t i = 0; i < nw; ++i) w_rows.push_back(Tensor::random_normal({d}, rng, 1.5));
        for (std::size_t j = 0; j < no; ++j) o_rows.push_back(Tensor::random_normal({d}, rng, 1.5));
        Tensor W({nw, d}), O({no, d});
        for (std::size_t i = 0; i < nw; ++i) {
            for (std::size_t k = 0; k < d; ++k) W.at(i, k) = w_rows[i][k];
        }
        for (std::size_t j = 0; j < no; ++j) {
            for (std::size_t k = 0; k < d; ++k) O.at(j, k) = o_rows[j][k];
        }
        for (bool normalize : {false, true}) {
            Tape tape;
            auto av = soft_alignment(tape, leaf_rows(tape, w_rows), leaf_rows(tape, o_rows));
            aligned_features(tape, av);
            const double got = tape.scalar_value(alignment_cost(tape, av, normalize));
            const double expect = oracles::loop_alignment_cost(W, O, normalize);
            REQUIRE_THAT(got, Catch::Matchers::WithinAbs(expect, 1e-10));
            REQUIRE(got >= 0.0);
        }
    }
}

TEST_CASE("triplet loss hinge values") {
    Tape tape;
    auto L = [&](double p, double n) {
        return tape.scalar_value(triplet_loss(tape, tape.scalar(p), tape.scalar(n)));
    };
    REQUIRE(L(0.2, 1.5) == 0.0);
    REQUIRE_THAT(L(0.5, 0.8), Catch::Matchers::WithinAbs(0.7, 1e-12));
    REQUIRE_THAT(L(0.9, 0.9), Catch::Matchers::WithinAbs(1.0, 1e-12));
    REQUIRE(triplet_loss_value(0.2, 1.5) == 0.0);
    REQUIRE_THAT(triplet_loss_value(0.5, 0.8), Catch::Matchers::WithinAbs(0.7, 1e-12));
}

TEST_CASE("triplet loss is monotone in both arguments") {
    for (double pos = 0.0; pos <= 2.0; pos += 0.25) {
        for (double neg = 0.0; neg <= 2.0; neg += 0.25) {
            const double base = triplet_loss_value(pos, neg);
            REQUIRE(triplet_loss_value(pos + 0.25, neg) >= base);
            REQUIRE(triplet_loss_value(pos, neg + 0.25) <= base);
        }
    }
}

TEST_CASE("negative sampling never returns the paired image and is deterministic") {
    SynthSpec spec;
    spec.n_sentences = 2;
    spec.n_images = 2;
    spec.n_pairs = 2;
    Corpus corpus = synth_corpus(3, spec);
    const CaptionPair& pair = corpus.pairs[0];
    {
        Rng rng(1);
        for (int i = 0; i < 100; ++i) {
            const std::size_t idx = sample_negative(pair, corpus, rng);
            REQUIRE(corpus.images[idx].id != pair.image_id);
            REQUIRE(corpus.images[idx].id == corpus.pairs[1].image_id);  // only other image
        }
    }
    SynthSpec big;
    big.n_sentences = 8;
    big.n_images = 8;
    big.n_pairs = 8;
    Corpus corpus8 = synth_corpus(4, big);
    for (int i = 0; i < 10000; ++i) {
        Rng rng(static_cast<std::uint64_t>(i));
        REQUIRE(corpus8.images[sample_negative(corpus8.pairs[3], corpus8, rng)].id !=
                corpus8.pairs[3].image_id);
    }
    Rng r1(9), r2(9);
    std::vector<std::size_t> seq1, seq2;
    for (int i = 0; i < 50; ++i) {
        seq1.push_back(sample_negative(corpus8.pairs[0], corpus8, r1));
        seq2.push_back(sample_negative(corpus8.pairs[0], corpus8, r2));
    }
    REQUIRE(seq1 == seq2);
}

TEST_CASE("negative sampling requires at least two images") {
    SynthSpec spec;
    spec.n_sentences = 1;
    spec.n_images = 1;
    spec.n_pairs = 1;
    Corpus corpus = synth_corpus(5, spec);
    Rng rng(1);
    REQUIRE_THROWS_AS(sample_negative(corpus.pairs[0], corpus, rng), ValidationError);
}

TEST_CASE("the whole-image special object adds one alignment column") {
    auto model = fixtures::small_model(30);
    ImageUnit image = fixtures::blank_image(2);
    Rng rng(31);
    image.global_feature = Tensor::random_normal({512}, rng, 1.0);
    image.object_features = Tensor::random_normal({2, 512}, rng, 1.0);
    Tape tape;
    auto g = model->vis.build_graph(tape, model->store, image, VisualMode::Object, false);
    auto enc = model->vis.vis_common_encode(tape, model->store, g);
    SentenceUnit s = fixtures::tiny_sentence(3);
    Model m2(fixtures::small_config(), fixtures::micro_ontology());
    m2.init_params(32);
    auto senc = m2.text.encode(tape, m2.store, s);

    // with the image node (special object) and without it
    auto with = soft_alignment(tape, senc.nodes, enc.nodes);
    std::vector<Var> without(enc.nodes.begin() + 1, enc.nodes.end());
    auto minus = soft_alignment(tape, senc.nodes, without);
    REQUIRE(tape.value(with.alpha).extent(1) == tape.value(minus.alpha).extent(1) + 1);
    REQUIRE(tape.value(with.beta).extent(1) == tape.value(minus.beta).extent(1) + 1);
    REQUIRE(tape.value(with.alpha).extent(0) == tape.value(minus.alpha).extent(0));
}

TEST_CASE("value-level alignment matches the tape path") {
    auto model = fixtures::small_model(33);
    SynthSpec spec;
    spec.n_sentences = 2;
    spec.n_images = 2;
    spec.n_pairs = 2;
    Corpus corpus = synth_corpus(6, spec);
    Tape tape;
    auto senc = model->text.encode(tape, model->store, corpus.sentences[0]);
    auto g = model->vis.build_graph(tape, model->store, corpus.images[0],
                                    VisualMode::Object, false);
    auto ienc = model->vis.vis_common_encode(tape, model->store, g);
    auto av = soft_alignment(tape, senc.nodes, ienc.nodes);
    aligned_features(tape, av);
    const double tape_cost = tape.scalar_value(alignment_cost(tape, av, true));

    AlignmentResult res =
        compute_alignment(senc.snapshot(tape), ienc.snapshot(tape), true);
    REQUIRE_THAT(res.cost, Catch::Matchers::WithinAbs(tape_cost, 1e-12));
    REQUIRE(res.alpha.shape() == tape.value(av.alpha).shape());
}

TEST_CASE("triplet gradients flow through the full alignment stack") {
    auto model = fixtures::small_model(34);
    SynthSpec spec;
    spec.n_sentences = 3;
    spec.n_images = 3;
    spec.n_pairs = 3;
    spec.noise = 0.05;
    Corpus corpus = synth_corpus(7, spec);
    auto loss_fn = [&](Tape& tape) {
        auto senc = model->text.encode(tape, model->store, corpus.sentences[0]);
        auto gp = model->vis.build_graph(tape, model->store, corpus.images[0],
                                         VisualMode::Object, false);
        auto ip = model->vis.vis_common_encode(tape, model->store, gp);
        auto gn = model->vis.build_graph(tape, model->store, corpus.images[1],
                                         VisualMode::Object, false);
        auto in = model->vis.vis_common_encode(tape, model->store, gn);
        auto avp = soft_alignment(tape, senc.nodes, ip.nodes);
        aligned_features(tape, avp);
        auto avn = soft_alignment(tape, senc.nodes, in.nodes);
        aligned_features(tape, avn);
        return triplet_loss(tape, alignment_cost(tape, avp, true),
                            alignment_cost(tape, avn, true));
    };
    GradCheckOptions opt;
    opt.max_coords_per_param = 3;
    opt.seed = 11;
    auto report = finite_diff_check(loss_fn, model->store, 1e-4, 1e-4, opt);
    CAPTURE(report.worst_parameter);
    REQUIRE(report.max_rel_error <= 1e-4);
}
