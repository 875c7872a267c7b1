#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <fstream>

#include "model_fixtures.hpp"
#include "test_util.hpp"
#include "wase/trainer.hpp"

using namespace wase;

namespace {

Corpus small_corpus(std::uint64_t seed, double noise, std::size_t n = 16) {
    SynthSpec spec;
    spec.n_sentences = n;
    spec.n_images = n;
    spec.n_pairs = n;
    spec.noise = noise;
    return synth_corpus(seed, spec);
}

JointBatch first_of_each(const Corpus& corpus, std::size_t count) {
    JointBatch batch;
    for (std::size_t i = 0; i < count && i < corpus.sentences.size(); ++i) {
        batch.sentences.push_back(&corpus.sentences[i]);
    }
    for (std::size_t i = 0; i < count && i < corpus.images.size(); ++i) {
        batch.images.push_back(&corpus.images[i]);
    }
    for (std::size_t i = 0; i < count && i < corpus.pairs.size(); ++i) {
        const auto& p = corpus.pairs[i];
        batch.pairs.push_back(JointBatch::PairItem{
            &corpus.sentence(p.sentence_id), &corpus.image(p.image_id),
            &corpus.images[(corpus.image_index.at(p.image_id) + 1) % corpus.images.size()]});
    }
    return batch;
}

double trigger_nll(Model& model, const Corpus& corpus, std::size_t n_sentences) {
    double total = 0.0;
    for (std::size_t i = 0; i < n_sentences; ++i) {
        Tape tape;
        auto enc = model.text.encode(tape, model.store, corpus.sentences[i]);
        auto losses = text_losses(tape, model, corpus.sentences[i], enc);
        total += tape.scalar_value(losses.trigger_nll);
    }
    return total;
}

}  // namespace

TEST_CASE("component sum identity") {
    LossComponents c{1, 2, 3, 4, 5, 0};
    REQUIRE(total_from_components(c) == 15.0);
}

TEST_CASE("joint loss returns the exact sum of its five addends") {
    auto model = fixtures::small_model(1);
    Corpus corpus = small_corpus(2, 0.1, 6);
    Tape tape;
    TrainConfig cfg;
    auto loss = joint_loss(tape, *model, first_of_each(corpus, 2), cfg);
    LossComponents c;
    c.l_v = tape.scalar_value(loss.l_v);
    c.l_r = tape.scalar_value(loss.l_r);
    c.l_e = tape.scalar_value(loss.l_e);
    c.l_a = tape.scalar_value(loss.l_a);
    c.l_c = tape.scalar_value(loss.l_c);
    // bitwise: same fixed summation order
    REQUIRE(tape.scalar_value(loss.total) == total_from_components(c));
    REQUIRE(c.l_v >= 0.0);
    REQUIRE(c.l_e > 0.0);
}

TEST_CASE("empty caption batch zeroes the alignment term only") {
    auto model = fixtures::small_model(3);
    Corpus corpus = small_corpus(4, 0.1, 6);
    JointBatch batch = first_of_each(corpus, 2);
    batch.pairs.clear();
    Tape tape;
    TrainConfig cfg;
    auto loss = joint_loss(tape, *model, batch, cfg);
    REQUIRE(tape.scalar_value(loss.l_c) == 0.0);
    LossComponents c;
    c.l_v = tape.scalar_value(loss.l_v);
    c.l_r = tape.scalar_value(loss.l_r);
    c.l_e = tape.scalar_value(loss.l_e);
    c.l_a = tape.scalar_value(loss.l_a);
    c.l_c = 0.0;
    REQUIRE(tape.scalar_value(loss.total) == total_from_components(c));
}

TEST_CASE("gradient of the total equals the sum of component gradients") {
    auto model = fixtures::small_model(5);
    Corpus corpus = small_corpus(6, 0.1, 6);
    const JointBatch batch = first_of_each(corpus, 2);
    TrainConfig cfg;

    model->store.zero_grads();
    {
        Tape tape;
        auto loss = joint_loss(tape, *model, batch, cfg);
        backward(tape, loss.total, model->store);
    }
    std::map<std::string, Tensor> total_grads;
    for (const auto& [name, g] : model->store.all()) total_grads.emplace(name, model->store.grad(name));

    model->store.zero_grads();
    for (int component = 0; component < 5; ++component) {
        Tape tape;
        auto loss = joint_loss(tape, *model, batch, cfg);
        const Var vars[] = {loss.l_v, loss.l_r, loss.l_e, loss.l_a, loss.l_c};
        backward(tape, vars[component], model->store);  // accumulates across components
    }
    for (const auto& [name, g] : total_grads) {
        const Tensor& summed = model->store.grad(name);
        for (std::size_t i = 0; i < g.numel(); ++i) {
            REQUIRE_THAT(summed[i], Catch::Matchers::WithinAbs(g[i], 1e-10));
        }
    }
}

TEST_CASE("alignment weight zero leaves attention-query parameters untouched") {
    auto model = fixtures::small_model(7, VisualMode::Object);
    Corpus corpus = small_corpus(8, 0.1, 8);
    const Tensor wq_before = model->store.value("vis.attn.Wq");

    TrainConfig cfg;
    cfg.weight_c = 0.0;
    cfg.epochs = 2;
    cfg.batch_size = 4;
    cfg.learning_rate = 1e-3;
    cfg.seed = 7;

    // gradient check first: W_q receives exactly zero gradient
    model->store.zero_grads();
    {
        Tape tape;
        auto loss = joint_loss(tape, *model, first_of_each(corpus, 3), cfg);
        backward(tape, loss.total, model->store);
    }
    const Tensor& wq_grad = model->store.grad("vis.attn.Wq");
    for (std::size_t i = 0; i < wq_grad.numel(); ++i) REQUIRE(wq_grad[i] == 0.0);
    model->store.zero_grads();

    train(*model, corpus, cfg);
    const Tensor& wq_after = model->store.value("vis.attn.Wq");
    for (std::size_t i = 0; i < wq_after.numel(); ++i) REQUIRE(wq_after[i] == wq_before[i]);
}

TEST_CASE("learning rate zero keeps parameters and losses constant") {
    auto model = fixtures::small_model(9);
    Corpus corpus = small_corpus(10, 0.1, 8);
    std::map<std::string, Tensor> before;
    for (const auto& [name, t] : model->store.all()) before.emplace(name, t);

    TrainConfig cfg;
    cfg.epochs = 3;
    cfg.batch_size = 4;
    cfg.learning_rate = 0.0;
    cfg.seed = 11;
    auto result = train(*model, corpus, cfg);
    for (const auto& [name, t] : model->store.all()) {
        const Tensor& b = before.at(name);
        for (std::size_t i = 0; i < t.numel(); ++i) REQUIRE(t[i] == b[i]);
    }
    for (std::size_t e = 1; e < result.log.size(); ++e) {
        // same parameters, reshuffled batches: epoch means stay in a tight band
        REQUIRE_THAT(result.log[e].mean.total,
                     Catch::Matchers::WithinRel(result.log[0].mean.total, 0.2));
    }
}

TEST_CASE("training is deterministic per seed") {
    Corpus corpus = small_corpus(12, 0.1, 10);
    TrainConfig cfg;
    cfg.epochs = 2;
    cfg.batch_size = 4;
    cfg.seed = 13;

    auto run = [&] {
        auto model = fixtures::small_model(13);
        return train(*model, corpus, cfg);
    };
    auto a = run();
    auto b = run();
    REQUIRE(a.log.size() == b.log.size());
    for (std::size_t e = 0; e < a.log.size(); ++e) {
        REQUIRE(a.log[e].mean.total == b.log[e].mean.total);
        REQUIRE(a.log[e].mean.l_c == b.log[e].mean.l_c);
    }
}

TEST_CASE("noise-free corpus trains the trigger NLL down by an order of magnitude") {
    SynthSpec spec;
    spec.n_sentences = 24;
    spec.n_images = 24;
    spec.n_pairs = 24;
    spec.noise = 0.0;
    spec.ambiguous_trigger_prob = 0.0;  // fully noise-free: no shared trigger clusters
    Corpus corpus = synth_corpus(14, spec);
    auto model = fixtures::small_model(15);
    const double initial = trigger_nll(*model, corpus, 8);

    TrainConfig cfg;
    cfg.epochs = 100;
    cfg.batch_size = 4;
    cfg.learning_rate = 1e-2;
    cfg.seed = 15;
    train(*model, corpus, cfg);
    const double final_nll = trigger_nll(*model, corpus, 8);
    CAPTURE(initial, final_nll);
    REQUIRE(final_nll < initial / 10.0);
}

TEST_CASE("checkpoint round-trips bitwise and reproduces forward outputs") {
    testutil::TempDir dir("ckpt");
    auto model = fixtures::small_model(17);
    Corpus corpus = small_corpus(18, 0.1, 6);

    OptimizerState opt;
    opt.learning_rate = 0.5e-3;
    // run one real step so Adam moments exist
    TrainConfig cfg;
    {
        Tape tape;
        auto loss = joint_loss(tape, *model, first_of_each(corpus, 2), cfg);
        model->store.zero_grads();
        backward(tape, loss.total, model->store);
        optimizer_step(model->store, opt);
    }

    const auto path = dir.path() / "model.ckpt";
    save_checkpoint(path, *model, opt, 1);

    OptimizerState opt2;
    auto loaded = restore_model(load_checkpoint(path), &opt2);
    REQUIRE(opt2.step_count == opt.step_count);
    REQUIRE(opt2.learning_rate == opt.learning_rate);
    for (const auto& [name, t] : model->store.all()) {
        const Tensor& r = loaded->store.value(name);
        REQUIRE(r.shape() == t.shape());
        for (std::size_t i = 0; i < t.numel(); ++i) REQUIRE(r[i] == t[i]);
    }
    for (const auto& [name, t] : opt.m1) {
        const Tensor& r = opt2.m1.at(name);
        for (std::size_t i = 0; i < t.numel(); ++i) REQUIRE(r[i] == t[i]);
    }

    // identical forward pass, bitwise
    Tape t1, t2;
    auto e1 = model->text.encode(t1, model->store, corpus.sentences[0]);
    auto e2 = loaded->text.encode(t2, loaded->store, corpus.sentences[0]);
    for (std::size_t i = 0; i < e1.nodes.size(); ++i) {
        const Tensor& a = t1.value(e1.nodes[i]);
        const Tensor& b = t2.value(e2.nodes[i]);
        for (std::size_t k = 0; k < a.numel(); ++k) REQUIRE(a[k] == b[k]);
    }

    // saving the same state twice is byte-stable
    const auto path2 = dir.path() / "model2.ckpt";
    save_checkpoint(path2, *model, opt, 1);
    REQUIRE(testutil::same_bytes(path, path2));
}

TEST_CASE("truncated checkpoints fail the checksum") {
    testutil::TempDir dir("trunc");
    auto model = fixtures::small_model(19);
    OptimizerState opt;
    const auto path = dir.path() / "model.ckpt";
    save_checkpoint(path, *model, opt, 0);

    auto bytes = testutil::slurp(path);
    {
        std::ofstream os(path, std::ios::binary | std::ios::trunc);
        os.write(bytes.data(), static_cast<std::streamsize>(bytes.size() - 10));
    }
    REQUIRE_THROWS_AS(load_checkpoint(path), ChecksumError);
}

TEST_CASE("wrong version byte is a version error") {
    testutil::TempDir dir("ver");
    auto model = fixtures::small_model(20);
    OptimizerState opt;
    const auto path = dir.path() / "model.ckpt";
    save_checkpoint(path, *model, opt, 0);

    auto bytes = testutil::slurp(path);
    bytes[6] = 0x07;  // version u16 little-endian starts after the 6-byte magic
    {
        std::ofstream os(path, std::ios::binary | std::ios::trunc);
        os.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    }
    REQUIRE_THROWS_AS(load_checkpoint(path), VersionError);
}

TEST_CASE("divergence guard raises a diagnostic") {
    auto model = fixtures::small_model(21);
    Corpus corpus = small_corpus(22, 0.1, 6);
    // poison a weight matrix so the classifier dot products overflow
    model->store.value("cls.event.W").fill(1e308);
    TrainConfig cfg;
    cfg.epochs = 1;
    cfg.batch_size = 2;
    REQUIRE_THROWS_AS(train(*model, corpus, cfg), Error);
}

TEST_CASE("train writes a loadable checkpoint when a path is set") {
    testutil::TempDir dir("train-ckpt");
    auto model = fixtures::small_model(23);
    Corpus corpus = small_corpus(24, 0.1, 6);
    TrainConfig cfg;
    cfg.epochs = 2;
    cfg.batch_size = 4;
    cfg.checkpoint_path = dir.path() / "out.ckpt";
    train(*model, corpus, cfg);
    auto ckpt = load_checkpoint(cfg.checkpoint_path);
    REQUIRE(ckpt.epoch == 2);
    REQUIRE(ckpt.tensors.count("cls.event.W") == 1);
}
