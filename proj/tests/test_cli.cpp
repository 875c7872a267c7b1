#include <catch2/catch_amalgamated.hpp>

#include <filesystem>

#include "test_util.hpp"
#include "wase/cli.hpp"

using namespace wase;

namespace {

int run_cli(std::initializer_list<std::string> args) {
    std::vector<std::string> owned{"wase"};
    owned.insert(owned.end(), args);
    std::vector<const char*> argv;
    for (const auto& a : owned) argv.push_back(a.c_str());
    return cli::run(static_cast<int>(argv.size()), argv.data());
}

}  // namespace

TEST_CASE("unknown subcommands and flags are usage errors") {
    REQUIRE(run_cli({"frobnicate"}) == cli::kExitUsage);
    REQUIRE(run_cli({"synth", "--out", "/tmp/x", "--no-such-flag"}) == cli::kExitUsage);
    REQUIRE(run_cli({}) == cli::kExitUsage);
}

TEST_CASE("every subcommand documents itself") {
    // --help is a successful run
    REQUIRE(run_cli({"--help"}) == cli::kExitOk);
    for (const char* sub : {"synth", "train", "extract", "score", "gradcheck"}) {
        REQUIRE(run_cli({sub, "--help"}) == cli::kExitOk);
    }
}

TEST_CASE("full pipeline produces a populated report") {
    testutil::TempDir dir("pipeline");
    const auto corpus = (dir.path() / "corpus").string();
    const auto ckpt = (dir.path() / "model.ckpt").string();
    const auto extractions = (dir.path() / "extractions.jsonl").string();
    const auto report = (dir.path() / "report.json").string();

    REQUIRE(run_cli({"synth", "--seed", "1", "--out", corpus, "--sentences", "12", "--images",
                     "12", "--pairs", "12", "--noise", "0.1"}) == cli::kExitOk);
    REQUIRE(run_cli({"train", "--corpus", corpus, "--out", ckpt, "--seed", "1", "--epochs", "2",
                     "--batch-size", "6"}) == cli::kExitOk);
    REQUIRE(run_cli({"extract", "--corpus", corpus, "--checkpoint", ckpt, "--out",
                     extractions}) == cli::kExitOk);
    REQUIRE(run_cli({"score", "--corpus", corpus, "--extractions", extractions, "--out",
                     report}) == cli::kExitOk);

    std::ifstream is(report);
    json j;
    is >> j;
    REQUIRE(j.contains("settings"));
    REQUIRE(j.at("settings").size() == 4);
    for (const auto& [name, setting] : j.at("settings").items()) {
        REQUIRE(setting.contains("event_mention"));
        REQUIRE(setting.contains("argument_role"));
        REQUIRE(setting.at("event_mention").contains("f1"));
    }
    REQUIRE(j.contains("coreference"));
    REQUIRE(j.contains("rule_baseline_coreference"));
    // structural property of the baseline: recall 1 on type-shared gold pairs
    REQUIRE(j.at("rule_baseline_coreference").at("recall").get<double>() == 1.0);
}

TEST_CASE("config file fills values and flags override it") {
    testutil::TempDir dir("config");
    const auto corpus = (dir.path() / "corpus").string();
    const auto config = (dir.path() / "config.json").string();
    {
        std::ofstream os(config);
        os << R"({"sentences": 7, "images": 5, "pairs": 4, "noise": 0.05})";
    }
    REQUIRE(run_cli({"synth", "--seed", "2", "--out", corpus, "--config", config, "--images",
                     "6"}) == cli::kExitOk);
    Corpus loaded = load_corpus(corpus);
    REQUIRE(loaded.sentences.size() == 7);  // from config file
    REQUIRE(loaded.images.size() == 6);     // flag overrides config
    REQUIRE(loaded.pairs.size() == 4);
}

TEST_CASE("score exits with code 2 on mismatched ids") {
    testutil::TempDir dir("mismatch");
    const auto corpus = (dir.path() / "corpus").string();
    const auto extractions = (dir.path() / "extractions.jsonl").string();
    REQUIRE(run_cli({"synth", "--seed", "3", "--out", corpus, "--sentences", "4", "--images", "4",
                     "--pairs", "4"}) == cli::kExitOk);
    {
        std::ofstream os(extractions);
        os << R"({"id":"x0","type":"Conflict.Attack","sentence_id":"no-such-sentence",)"
           << R"("trigger_start":0,"trigger_end":0,"provenance":"text_only","arguments":[]})"
           << "\n";
    }
    const auto report = (dir.path() / "report.json").string();
    REQUIRE(run_cli({"score", "--corpus", corpus, "--extractions", extractions, "--out",
                     report}) == cli::kExitValidation);
}

TEST_CASE("train rejects bad enum values with a validation exit") {
    testutil::TempDir dir("badenum");
    const auto corpus = (dir.path() / "corpus").string();
    REQUIRE(run_cli({"synth", "--seed", "4", "--out", corpus, "--sentences", "4", "--images", "4",
                     "--pairs", "4"}) == cli::kExitOk);
    REQUIRE(run_cli({"train", "--corpus", corpus, "--out", (dir.path() / "m.ckpt").string(),
                     "--visual-mode", "holograms", "--epochs", "1"}) == cli::kExitValidation);
    REQUIRE(run_cli({"train", "--corpus", corpus, "--out", (dir.path() / "m.ckpt").string(),
                     "--normalize-cost", "sometimes", "--epochs", "1"}) == cli::kExitValidation);
}

TEST_CASE("identical seeds and flags give byte-identical files") {
    testutil::TempDir dir("determinism");
    auto run_pipeline = [&](const std::string& tag) {
        const auto corpus = (dir.path() / (tag + "-corpus")).string();
        const auto ckpt = (dir.path() / (tag + "-model.ckpt")).string();
        const auto extractions = (dir.path() / (tag + "-extractions.jsonl")).string();
        const auto report = (dir.path() / (tag + "-report.json")).string();
        REQUIRE(run_cli({"synth", "--seed", "5", "--out", corpus, "--sentences", "8", "--images",
                         "8", "--pairs", "8"}) == cli::kExitOk);
        REQUIRE(run_cli({"train", "--corpus", corpus, "--out", ckpt, "--seed", "5", "--epochs",
                         "1", "--batch-size", "4"}) == cli::kExitOk);
        REQUIRE(run_cli({"extract", "--corpus", corpus, "--checkpoint", ckpt, "--out",
                         extractions}) == cli::kExitOk);
        REQUIRE(run_cli({"score", "--corpus", corpus, "--extractions", extractions, "--out",
                         report}) == cli::kExitOk);
    };
    run_pipeline("a");
    run_pipeline("b");
    REQUIRE(testutil::same_dir_bytes(dir.path() / "a-corpus", dir.path() / "b-corpus"));
    for (const char* f : {"model.ckpt", "extractions.jsonl", "report.json"}) {
        REQUIRE(testutil::same_bytes(dir.path() / ("a-" + std::string(f)),
                                     dir.path() / ("b-" + std::string(f))));
    }
}
