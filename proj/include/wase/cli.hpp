#pragma once

#include <chrono>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "wase/gradcheck_suite.hpp"
#include "wase/inference.hpp"
#include "wase/scoring.hpp"
#include "wase/synth.hpp"
#include "wase/trainer.hpp"

namespace wase::cli {

// Exit codes: 0 success, 1 usage, 2 validation/parse, 3 check failure or
// divergence.
inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitValidation = 2;
inline constexpr int kExitCheckFailure = 3;

namespace detail {

inline json load_config_file(const std::string& path) {
    if (path.empty()) return json::object();
    std::ifstream is(path);
    if (!is) throw ValidationError("cannot read config file '" + path + "'");
    try {
        json j;
        is >> j;
        return j;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError("config file '" + path + "': " + e.what());
    }
}

// Flags override config-file values; the file fills in only what the
// command line left at its default.
template <typename T>
void merge(const CLI::App& app, const std::string& flag, const json& config,
           const std::string& key, T& value) {
    if (app.count(flag) == 0 && config.contains(key)) value = config.at(key).get<T>();
}

inline ModelConfig model_config_from(const json& config) {
    ModelConfig cfg;
    if (config.contains("model")) from_json(config.at("model"), cfg);
    return cfg;
}

inline std::unique_ptr<Model> load_model_for(const Corpus& corpus, const std::string& ckpt_path) {
    Checkpoint ckpt = load_checkpoint(ckpt_path);
    if (ontology_to_json(ckpt.ontology) != ontology_to_json(corpus.ontology)) {
        throw ValidationError("checkpoint ontology does not match the corpus ontology");
    }
    return restore_model(ckpt);
}

}  // namespace detail

inline int run(int argc, const char* const* argv) {
    CLI::App app{"weakly aligned structured embedding pipeline"};
    app.require_subcommand(1);

    // ---- synth ----
    auto* synth = app.add_subcommand("synth", "generate a synthetic corpus with planted gold");
    std::uint64_t synth_seed = 1;
    std::string synth_out, synth_config;
    SynthSpec spec;
    synth->add_option("--seed", synth_seed, "generator seed");
    synth->add_option("--out", synth_out, "output corpus directory")->required();
    synth->add_option("--sentences", spec.n_sentences, "sentence count");
    synth->add_option("--images", spec.n_images, "image count");
    synth->add_option("--pairs", spec.n_pairs, "caption-pair count (clamped to min(sentences, images))");
    synth->add_option("--noise", spec.noise, "feature/label perturbation level in [0, 1)");
    synth->add_option("--config", synth_config, "JSON config file (flags override)");

    // ---- train ----
    auto* train_cmd = app.add_subcommand("train", "jointly train the five losses on a corpus");
    std::string train_corpus, train_out, train_config;
    std::string train_mode = "object", train_opt = "adam", train_normalize = "on";
    TrainConfig tcfg;
    train_cmd->add_option("--corpus", train_corpus, "corpus directory")->required();
    train_cmd->add_option("--out", train_out, "checkpoint output path")->required();
    train_cmd->add_option("--seed", tcfg.seed, "initialization/shuffling seed");
    train_cmd->add_option("--epochs", tcfg.epochs, "training epochs");
    train_cmd->add_option("--lr", tcfg.learning_rate, "learning rate");
    train_cmd->add_option("--batch-size", tcfg.batch_size, "mini-batch size per stream");
    train_cmd->add_option("--visual-mode", train_mode, "object|attention");
    train_cmd->add_option("--optimizer", train_opt, "adam|sgd");
    train_cmd->add_option("--normalize-cost", train_normalize,
                          "on|off: divide alignment cost by node count");
    train_cmd->add_option("--checkpoint-interval", tcfg.checkpoint_interval,
                          "epochs between intermediate checkpoints (0: final only)");
    train_cmd->add_option("--config", train_config, "JSON config file (flags override)");

    // ---- extract ----
    auto* extract_cmd = app.add_subcommand("extract", "joint extraction over a corpus");
    std::string ex_corpus, ex_ckpt, ex_out, ex_config;
    InferenceConfig icfg;
    bool ex_text_only = false;
    extract_cmd->add_option("--corpus", ex_corpus, "corpus directory")->required();
    extract_cmd->add_option("--checkpoint", ex_ckpt, "trained checkpoint")->required();
    extract_cmd->add_option("--out", ex_out, "extractions.jsonl output path")->required();
    extract_cmd->add_option("--coref-threshold", icfg.coref_threshold,
                            "similarity threshold in (0, 1]");
    extract_cmd->add_flag("--text-only", ex_text_only, "ignore images (gamma = 0 behaviour)");
    extract_cmd->add_option("--config", ex_config, "JSON config file (flags override)");

    // ---- score ----
    auto* score_cmd = app.add_subcommand("score", "score extractions against corpus gold");
    std::string sc_corpus, sc_extractions, sc_out;
    score_cmd->add_option("--corpus", sc_corpus, "corpus directory with gold files")->required();
    score_cmd->add_option("--extractions", sc_extractions, "extractions.jsonl path")->required();
    score_cmd->add_option("--out", sc_out, "report.json output path")->required();

    // ---- gradcheck ----
    auto* grad_cmd = app.add_subcommand("gradcheck",
                                        "finite-difference check of every loss gradient");
    std::uint64_t grad_seed = 7;
    double grad_step = 1e-4, grad_tol = 1e-4;
    std::string grad_mode = "both";
    grad_cmd->add_option("--seed", grad_seed, "seed for inputs and coordinate sampling");
    grad_cmd->add_option("--step", grad_step, "central-difference step");
    grad_cmd->add_option("--tol", grad_tol, "max relative error accepted");
    grad_cmd->add_option("--visual-mode", grad_mode, "object|attention|both");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (*synth) {
            const json config = detail::load_config_file(synth_config);
            detail::merge(*synth, "--seed", config, "seed", synth_seed);
            detail::merge(*synth, "--sentences", config, "sentences", spec.n_sentences);
            detail::merge(*synth, "--images", config, "images", spec.n_images);
            detail::merge(*synth, "--pairs", config, "pairs", spec.n_pairs);
            detail::merge(*synth, "--noise", config, "noise", spec.noise);
            synth_generate(synth_seed, spec, synth_out);
            std::cout << "wrote corpus to " << synth_out << "\n";
            return kExitOk;
        }
        if (*train_cmd) {
            const json config = detail::load_config_file(train_config);
            detail::merge(*train_cmd, "--seed", config, "seed", tcfg.seed);
            detail::merge(*train_cmd, "--epochs", config, "epochs", tcfg.epochs);
            detail::merge(*train_cmd, "--lr", config, "lr", tcfg.learning_rate);
            detail::merge(*train_cmd, "--batch-size", config, "batch_size", tcfg.batch_size);
            detail::merge(*train_cmd, "--visual-mode", config, "visual_mode", train_mode);
            detail::merge(*train_cmd, "--optimizer", config, "optimizer", train_opt);
            detail::merge(*train_cmd, "--normalize-cost", config, "normalize_cost",
                          train_normalize);
            ModelConfig mcfg = detail::model_config_from(config);
            mcfg.visual_mode = visual_mode_from_string(train_mode);
            if (train_normalize != "on" && train_normalize != "off") {
                throw ValidationError("--normalize-cost expects on|off");
            }
            mcfg.normalize_cost = train_normalize == "on";
            if (train_opt != "adam" && train_opt != "sgd") {
                throw ValidationError("--optimizer expects adam|sgd");
            }
            tcfg.optimizer = train_opt == "adam" ? OptMethod::Adam : OptMethod::PlainSgd;
            tcfg.checkpoint_path = train_out;

            Corpus corpus = load_corpus(train_corpus);
            Model model(mcfg, corpus.ontology);
            model.init_params(tcfg.seed);
            const TrainResult result = train(model, corpus, tcfg);
            for (const auto& epoch : result.log) {
                std::cout << "epoch " << epoch.epoch << "  L " << epoch.mean.total << "  L_v "
                          << epoch.mean.l_v << "  L_r " << epoch.mean.l_r << "  L_e "
                          << epoch.mean.l_e << "  L_a " << epoch.mean.l_a << "  L_c "
                          << epoch.mean.l_c << "\n";
            }
            if (result.prob_sum_warnings > 0) {
                std::cout << "warning: P(r*)+P(n*) exceeded 1 on " << result.prob_sum_warnings
                          << " argument terms\n";
            }
            std::cout << "wrote checkpoint to " << train_out << "\n";
            return kExitOk;
        }
        if (*extract_cmd) {
            const json config = detail::load_config_file(ex_config);
            detail::merge(*extract_cmd, "--coref-threshold", config, "coref_threshold",
                          icfg.coref_threshold);
            icfg.use_images = !ex_text_only;
            Corpus corpus = load_corpus(ex_corpus);
            auto model = detail::load_model_for(corpus, ex_ckpt);
            const ExtractionOutput out = extract(*model, corpus, icfg);
            write_extractions(ex_out, out);
            std::cout << "extracted " << out.events.size() << " events, " << out.arguments.size()
                      << " arguments, " << out.links.size() << " links -> " << ex_out << "\n";
            return kExitOk;
        }
        if (*score_cmd) {
            Corpus corpus = load_corpus(sc_corpus);
            const ExtractionOutput extraction = read_extractions(sc_extractions);
            const ScoreReport report = build_report(corpus, extraction);
            {
                std::ofstream os(sc_out, std::ios::binary);
                if (!os) throw Error("cannot write " + sc_out);
                os << report_to_json(report).dump(2) << "\n";
            }
            print_report(std::cout, report);
            return kExitOk;
        }
        if (*grad_cmd) {
            if (grad_mode != "object" && grad_mode != "attention" && grad_mode != "both") {
                throw ValidationError("--visual-mode expects object|attention|both");
            }
            const auto t0 = std::chrono::steady_clock::now();
            const auto runs = gradcheck_all_losses(grad_seed, grad_step, grad_tol, grad_mode);
            bool all_ok = true;
            std::cout << std::left << std::setw(10) << "loss" << std::setw(11) << "mode"
                      << std::right << std::setw(8) << "coords" << std::setw(8) << "floor"
                      << std::setw(14) << "max_rel_err" << "  worst_parameter\n";
            for (const auto& run : runs) {
                const bool ok = run.report.passed(grad_tol);
                all_ok = all_ok && ok;
                std::cout << std::left << std::setw(10) << run.loss_name << std::setw(11)
                          << run.mode << std::right << std::setw(8) << run.report.coords_checked
                          << std::setw(8) << run.report.coords_at_noise_floor << std::setw(14)
                          << std::scientific << std::setprecision(3) << run.report.max_rel_error
                          << "  "
                          << (run.report.worst_parameter.empty() ? "-"
                                                                 : run.report.worst_parameter)
                          << (ok ? "" : "  FAIL") << "\n";
            }
            const double seconds =
                std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
            std::cout << std::fixed << std::setprecision(1) << "gradcheck completed in " << seconds
                      << "s\n";
            return all_ok ? kExitOk : kExitCheckFailure;
        }
    } catch (const DivergenceError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitCheckFailure;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitValidation;
    }
    return kExitUsage;
}

}  // namespace wase::cli
