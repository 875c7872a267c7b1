#pragma once

#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "wase/alignment.hpp"
#include "wase/corpus_io.hpp"
#include "wase/model.hpp"
#include "wase/visual_encoder.hpp"

namespace wase {

struct InferenceConfig {
    double coref_threshold = 0.5;  // similarity exp(-cost), in (0, 1]
    bool use_images = true;        // off: gamma = 0 text-only behaviour

    void check() const {
        if (!(coref_threshold > 0.0 && coref_threshold <= 1.0)) {
            throw ValidationError("coreference threshold must lie in (0, 1]");
        }
    }
};

// One fused node of Eq.-5 style aggregation: w'' = (1-gamma) w + gamma w'.
struct FusedNode {
    Tensor base;
    Tensor aligned;
    double gamma = 0.0;
    Tensor fused;
};

inline FusedNode fuse_node(const Tensor& base, const Tensor& aligned, double gamma) {
    FusedNode out;
    out.base = base;
    out.aligned = aligned;
    out.gamma = gamma;
    out.fused = Tensor(base.shape());
    for (std::size_t i = 0; i < base.numel(); ++i) {
        out.fused[i] = (1.0 - gamma) * base[i] + gamma * aligned[i];
    }
    return out;
}

// Fuses every row of a common graph with its aligned counterpart.
inline std::vector<FusedNode> fuse(const CommonGraph& graph, const Tensor& aligned_rows,
                                   double gamma) {
    std::vector<FusedNode> out;
    const std::size_t d = graph.nodes.extent(1);
    for (std::size_t i = 0; i < graph.size(); ++i) {
        Tensor base({d}), aligned({d});
        std::copy(graph.nodes.data() + i * d, graph.nodes.data() + (i + 1) * d, base.data());
        std::copy(aligned_rows.data() + i * d, aligned_rows.data() + (i + 1) * d, aligned.data());
        out.push_back(fuse_node(base, aligned, gamma));
    }
    return out;
}

// Tightest box over the cells at or above 0.75 of the heatmap peak; cell
// (r, c) spans [c/g, (c+1)/g] x [r/g, (r+1)/g].
inline BoundingBox heatmap_to_bbox(const Heatmap& h) {
    const std::size_t g = h.weights.extent(0);
    const double threshold = 0.75 * h.peak();
    std::size_t rmin = g, rmax = 0, cmin = g, cmax = 0;
    bool any = false;
    for (std::size_t r = 0; r < g; ++r) {
        for (std::size_t c = 0; c < g; ++c) {
            if (h.weights.at(r, c) >= threshold) {
                any = true;
                rmin = std::min(rmin, r);
                rmax = std::max(rmax, r);
                cmin = std::min(cmin, c);
                cmax = std::max(cmax, c);
            }
        }
    }
    if (!any) throw Error("heatmap_to_bbox: empty heatmap");  // peak cell always survives
    const double gd = static_cast<double>(g);
    return BoundingBox{static_cast<double>(cmin) / gd, static_cast<double>(rmin) / gd,
                       static_cast<double>(cmax + 1) / gd, static_cast<double>(rmax + 1) / gd};
}

// A sentence-image pair examined during inference.
struct ConsideredPair {
    std::size_t sentence = 0;
    std::size_t image = 0;
    double cost = 0.0;
};

struct PairingResult {
    static constexpr std::size_t npos = std::numeric_limits<std::size_t>::max();
    std::vector<std::size_t> best_image;     // per sentence; npos when no images
    std::vector<double> sentence_cost;
    std::vector<std::size_t> best_sentence;  // per image; npos when no sentences
    std::vector<double> image_cost;

    std::vector<ConsideredPair> considered() const {
        std::vector<ConsideredPair> out;
        for (std::size_t s = 0; s < best_image.size(); ++s) {
            if (best_image[s] != npos) out.push_back({s, best_image[s], sentence_cost[s]});
        }
        for (std::size_t m = 0; m < best_sentence.size(); ++m) {
            if (best_sentence[m] == npos) continue;
            bool dup = false;
            for (const auto& p : out) {
                if (p.sentence == best_sentence[m] && p.image == m) dup = true;
            }
            if (!dup) out.push_back({best_sentence[m], m, image_cost[m]});
        }
        return out;
    }
};

// Exhaustive pairwise alignment costs; argmin per row and column, ties
// broken toward the lowest index.
inline PairingResult pair_best(const std::vector<CommonGraph>& sentences,
                               const std::vector<CommonGraph>& images, bool normalize_cost) {
    PairingResult out;
    out.best_image.assign(sentences.size(), PairingResult::npos);
    out.sentence_cost.assign(sentences.size(), 0.0);
    out.best_sentence.assign(images.size(), PairingResult::npos);
    out.image_cost.assign(images.size(), 0.0);
    if (sentences.empty() || images.empty()) return out;

    for (std::size_t s = 0; s < sentences.size(); ++s) {
        for (std::size_t m = 0; m < images.size(); ++m) {
            const double cost = compute_alignment(sentences[s], images[m], normalize_cost).cost;
            if (out.best_image[s] == PairingResult::npos || cost < out.sentence_cost[s]) {
                out.best_image[s] = m;
                out.sentence_cost[s] = cost;
            }
            if (out.best_sentence[m] == PairingResult::npos || cost < out.image_cost[m]) {
                out.best_sentence[m] = s;
                out.image_cost[m] = cost;
            }
        }
    }
    return out;
}

struct CorefLink {
    std::size_t text_event = 0;   // index into the text event list
    std::size_t image_event = 0;  // index into the image event list
    double similarity = 0.0;
};

// Links cross-media events of equal type whose pair similarity
// exp(-cost) exceeds the threshold, restricted to the considered pairs.
inline std::vector<CorefLink> corefer(const std::vector<EventRecord>& text_events,
                                      const std::vector<EventRecord>& image_events,
                                      const std::vector<ConsideredPair>& pairs,
                                      const std::vector<std::string>& sentence_ids,
                                      const std::vector<std::string>& image_ids,
                                      double threshold) {
    if (!(threshold > 0.0 && threshold <= 1.0)) {
        throw ValidationError("coreference threshold must lie in (0, 1]");
    }
    std::vector<CorefLink> links;
    for (const auto& pair : pairs) {
        const double similarity = std::exp(-pair.cost);
        if (!(similarity >= threshold)) continue;
        for (std::size_t t = 0; t < text_events.size(); ++t) {
            if (!text_events[t].trigger ||
                text_events[t].trigger->sentence_id != sentence_ids[pair.sentence]) {
                continue;
            }
            for (std::size_t i = 0; i < image_events.size(); ++i) {
                if (!image_events[i].image_id ||
                    *image_events[i].image_id != image_ids[pair.image]) {
                    continue;
                }
                if (text_events[t].type != image_events[i].type) continue;
                links.push_back({t, i, similarity});
            }
        }
    }
    return links;
}

struct ExtractionOutput {
    std::vector<EventRecord> events;
    std::vector<ArgumentRecord> arguments;
    // every qualifying link, pre-merge (coref scoring input)
    struct LinkRecord {
        TriggerGrounding trigger;
        std::string image_id;
        std::string type;
        double similarity = 0.0;
    };
    std::vector<LinkRecord> links;
    // attention heatmaps backing box groundings, keyed by (image, role)
    std::map<std::string, Heatmap> heatmaps_used;
};

namespace detail {

inline Tensor graph_row(const CommonGraph& g, std::size_t i) {
    const std::size_t d = g.nodes.extent(1);
    Tensor row({d});
    std::copy(g.nodes.data() + i * d, g.nodes.data() + (i + 1) * d, row.data());
    return row;
}

// Softmax attention of one query vector over the rows of a graph,
// returning the attended average (the aligned feature of that query).
inline Tensor attend_rows(const Tensor& query, const CommonGraph& g) {
    const std::size_t n = g.size(), d = g.nodes.extent(1);
    std::vector<double> dots(n);
    double mx = -1e300;
    for (std::size_t j = 0; j < n; ++j) {
        double acc = 0.0;
        for (std::size_t k = 0; k < d; ++k) acc += query[k] * g.nodes.at(j, k);
        dots[j] = acc;
        mx = std::max(mx, acc);
    }
    double z = 0.0;
    for (std::size_t j = 0; j < n; ++j) z += (dots[j] = std::exp(dots[j] - mx));
    Tensor out({d});
    for (std::size_t j = 0; j < n; ++j) {
        const double w = dots[j] / z;
        for (std::size_t k = 0; k < d; ++k) out[k] += w * g.nodes.at(j, k);
    }
    return out;
}

inline std::size_t argmax(const Tensor& t) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < t.numel(); ++i) {
        if (t[i] > t[best]) best = i;
    }
    return best;
}

// Value-level softmax of W-logits for one vector through the shared
// classifiers, on a throwaway tape.
inline Tensor trigger_distribution(const Model& model, const Tensor& w) {
    Tape tape;
    return tape.value(tape.softmax(model.cls.trigger_logits(tape, model.store, tape.leaf(w))));
}

inline Tensor image_event_distribution(const Model& model, const Tensor& m) {
    Tape tape;
    return tape.value(tape.softmax(model.cls.image_event_logits(tape, model.store, tape.leaf(m))));
}

inline Tensor argument_distribution(const Model& model, const Tensor& t, const Tensor& w) {
    Tape tape;
    return tape.value(
        tape.softmax(model.cls.argument_logits(tape, model.store, tape.leaf(t), tape.leaf(w))));
}

// Argmax over the roles of one event type plus none.
inline std::string masked_role_argmax(const Model& model, const Tensor& dist,
                                      const std::string& event_type) {
    std::string best = kNoneLabel;
    double best_p = dist[model.cls.none_role_index()];
    for (const auto& role : model.onto.roles_by_type.at(event_type)) {
        const double p = dist[model.cls.role_index(role)];
        if (p > best_p) {
            best_p = p;
            best = role;
        }
    }
    return best;
}

}  // namespace detail

// Per-image graph metadata the extractor needs alongside the encoding.
struct EncodedImage {
    CommonGraph graph;  // node 0: whole image; nodes 1..: argument nodes
    struct ArgMeta {
        std::optional<BoundingBox> box;          // object mode
        std::optional<std::string> attention_role;  // attention mode
        std::optional<Heatmap> heatmap;
    };
    std::vector<ArgMeta> args;
};

inline EncodedImage encode_image_for_inference(const Model& model, const ImageUnit& image) {
    Tape tape;
    auto graph = model.vis.build_graph(tape, model.store, image, model.cfg.visual_mode,
                                       /*for_training=*/false);
    auto enc = model.vis.vis_common_encode(tape, model.store, graph);
    EncodedImage out;
    out.graph = enc.snapshot(tape);
    for (const auto& arg : graph.args) {
        EncodedImage::ArgMeta meta;
        meta.box = arg.box;
        meta.attention_role = arg.attention_role;
        if (arg.heatmap_flat.valid()) meta.heatmap = model.vis.heatmap_of(tape, arg);
        out.args.push_back(std::move(meta));
    }
    return out;
}

// Joint extraction over one document (all sentences and images of the
// corpus). Text: fuse with the best image and run the shared classifiers
// over fused features; image: symmetric; then cross-media coreference.
inline ExtractionOutput extract(const Model& model, const Corpus& corpus,
                                const InferenceConfig& cfg) {
    cfg.check();
    ExtractionOutput out;

    std::vector<CommonGraph> sentence_graphs;
    for (const auto& s : corpus.sentences) {
        Tape tape;
        auto enc = model.text.encode(tape, model.store, s);
        sentence_graphs.push_back(enc.snapshot(tape));
    }
    std::vector<EncodedImage> images;
    std::vector<CommonGraph> image_graphs;
    if (cfg.use_images) {
        for (const auto& m : corpus.images) {
            images.push_back(encode_image_for_inference(model, m));
            image_graphs.push_back(images.back().graph);
        }
    }

    const PairingResult pairing = pair_best(sentence_graphs, image_graphs, model.cfg.normalize_cost);

    // --- text side ---
    std::vector<EventRecord> text_events;
    std::vector<std::vector<ArgumentRecord>> text_args;  // aligned with text_events
    for (std::size_t si = 0; si < corpus.sentences.size(); ++si) {
        const SentenceUnit& s = corpus.sentences[si];
        const CommonGraph& graph = sentence_graphs[si];
        const std::size_t best = pairing.best_image.empty() ? PairingResult::npos
                                                            : pairing.best_image[si];
        double gamma = 0.0;
        std::optional<AlignmentResult> alignment;
        if (best != PairingResult::npos) {
            alignment = compute_alignment(graph, image_graphs[best], model.cfg.normalize_cost);
            gamma = std::exp(-alignment->cost);
        }
        std::vector<FusedNode> fused =
            alignment ? fuse(graph, alignment->w_prime, gamma)
                      : fuse(graph, graph.nodes, 0.0);  // gamma 0: w'' = w exactly

        std::vector<Tensor> dists;
        for (std::size_t i = 0; i < s.tokens.size(); ++i) {
            dists.push_back(detail::trigger_distribution(model, fused[i].fused));
        }
        for (const auto& span : model.text.bio_decode(dists)) {
            EventRecord ev;
            ev.id = "ev-t" + std::to_string(text_events.size());
            ev.type = span.type;
            ev.trigger = TriggerGrounding{s.id, span.start, span.end};
            ev.provenance = Provenance::TextOnly;
            std::vector<ArgumentRecord> args;

            // fused trigger feature: mean of the fused span
            const std::size_t d = model.cfg.common_dim;
            Tensor w_trigger({d});
            for (std::size_t i = span.start; i <= span.end; ++i) {
                for (std::size_t k = 0; k < d; ++k) w_trigger[k] += fused[i].fused[k];
            }
            for (std::size_t k = 0; k < d; ++k) {
                w_trigger[k] /= static_cast<double>(span.end - span.start + 1);
            }
            for (const auto& ent : s.entities) {
                Tensor t_base({d});
                for (std::size_t i = ent.start; i <= ent.end; ++i) {
                    for (std::size_t k = 0; k < d; ++k) t_base[k] += graph.nodes.at(i, k);
                }
                for (std::size_t k = 0; k < d; ++k) {
                    t_base[k] /= static_cast<double>(ent.end - ent.start + 1);
                }
                Tensor t_fused = t_base;
                if (alignment) {
                    const Tensor t_aligned = detail::attend_rows(t_base, image_graphs[best]);
                    t_fused = fuse_node(t_base, t_aligned, gamma).fused;
                }
                const Tensor dist = detail::argument_distribution(model, t_fused, w_trigger);
                const std::string role = detail::masked_role_argmax(model, dist, ev.type);
                if (role == kNoneLabel) continue;
                ArgumentRecord arg;
                arg.event_id = ev.id;
                arg.role = role;
                arg.span = TextGrounding{s.id, ent.start, ent.end};
                args.push_back(std::move(arg));
            }
            text_events.push_back(ev);
            text_args.push_back(std::move(args));
        }
    }

    // --- image side ---
    std::vector<EventRecord> image_events;
    std::vector<std::vector<ArgumentRecord>> image_args;
    for (std::size_t mi = 0; mi < images.size(); ++mi) {
        const ImageUnit& m = corpus.images[mi];
        const EncodedImage& em = images[mi];
        const std::size_t best = pairing.best_sentence[mi];
        double gamma = 0.0;
        std::optional<AlignmentResult> alignment;
        if (best != PairingResult::npos) {
            alignment = compute_alignment(sentence_graphs[best], em.graph,
                                          model.cfg.normalize_cost);
            gamma = std::exp(-alignment->cost);
        }
        std::vector<FusedNode> fused = alignment ? fuse(em.graph, alignment->o_prime, gamma)
                                                 : fuse(em.graph, em.graph.nodes, 0.0);

        const Tensor event_dist = detail::image_event_distribution(model, fused[0].fused);
        const std::size_t best_label = detail::argmax(event_dist);
        const std::string label = model.cls.image_event_labels[best_label];
        if (label == kNoneLabel) continue;

        EventRecord ev;
        ev.id = "ev-i" + std::to_string(image_events.size());
        ev.type = label;
        ev.image_id = m.id;
        ev.provenance = Provenance::ImageOnly;
        std::vector<ArgumentRecord> args;
        for (std::size_t ai = 0; ai < em.args.size(); ++ai) {
            const Tensor dist =
                detail::argument_distribution(model, fused[ai + 1].fused, fused[0].fused);
            const std::string role = detail::masked_role_argmax(model, dist, ev.type);
            if (role == kNoneLabel) continue;
            ArgumentRecord arg;
            arg.event_id = ev.id;
            arg.role = role;
            BoundingBox box;
            if (em.args[ai].box) {
                box = *em.args[ai].box;
            } else {
                box = heatmap_to_bbox(*em.args[ai].heatmap);
                out.heatmaps_used.emplace(m.id + "#" + *em.args[ai].attention_role,
                                          *em.args[ai].heatmap);
            }
            arg.box = BoxGrounding{m.id, box};
            args.push_back(std::move(arg));
        }
        image_events.push_back(ev);
        image_args.push_back(std::move(args));
    }

    // --- cross-media coreference over the considered pairs ---
    std::vector<std::string> sentence_ids, image_ids;
    for (const auto& s : corpus.sentences) sentence_ids.push_back(s.id);
    for (const auto& m : corpus.images) image_ids.push_back(m.id);
    const auto links = corefer(text_events, image_events, pairing.considered(), sentence_ids,
                               image_ids, cfg.coref_threshold);
    for (const auto& link : links) {
        out.links.push_back(ExtractionOutput::LinkRecord{*text_events[link.text_event].trigger,
                                                         *image_events[link.image_event].image_id,
                                                         text_events[link.text_event].type,
                                                         link.similarity});
    }

    // greedy one-to-one merge, strongest similarity first
    std::vector<CorefLink> ordered = links;
    std::sort(ordered.begin(), ordered.end(), [](const CorefLink& a, const CorefLink& b) {
        if (a.similarity != b.similarity) return a.similarity > b.similarity;
        if (a.text_event != b.text_event) return a.text_event < b.text_event;
        return a.image_event < b.image_event;
    });
    std::vector<bool> text_used(text_events.size(), false), image_used(image_events.size(), false);
    std::size_t merged_count = 0;
    auto emit = [&out](EventRecord ev, const std::vector<ArgumentRecord>& args) {
        for (ArgumentRecord arg : args) {
            arg.event_id = ev.id;
            out.arguments.push_back(std::move(arg));
        }
        out.events.push_back(std::move(ev));
    };
    for (const auto& link : ordered) {
        if (text_used[link.text_event] || image_used[link.image_event]) continue;
        text_used[link.text_event] = true;
        image_used[link.image_event] = true;
        EventRecord ev;
        ev.id = "ev-m" + std::to_string(merged_count++);
        ev.type = text_events[link.text_event].type;
        ev.trigger = text_events[link.text_event].trigger;
        ev.image_id = image_events[link.image_event].image_id;
        ev.provenance = Provenance::Multimedia;
        ev.similarity = link.similarity;
        std::vector<ArgumentRecord> args = text_args[link.text_event];
        args.insert(args.end(), image_args[link.image_event].begin(),
                    image_args[link.image_event].end());
        emit(std::move(ev), args);
    }
    for (std::size_t t = 0; t < text_events.size(); ++t) {
        if (!text_used[t]) emit(text_events[t], text_args[t]);
    }
    for (std::size_t i = 0; i < image_events.size(); ++i) {
        if (!image_used[i]) emit(image_events[i], image_args[i]);
    }
    return out;
}

// ---------- extractions.jsonl ----------

inline void write_extractions(const std::filesystem::path& path, const ExtractionOutput& out) {
    std::vector<json> lines;
    std::map<std::string, std::vector<const ArgumentRecord*>> by_event;
    for (const auto& a : out.arguments) by_event[a.event_id].push_back(&a);
    for (const auto& e : out.events) {
        json j = event_to_json(e);
        json args = json::array();
        for (const ArgumentRecord* a : by_event[e.id]) {
            json aj = argument_to_json(*a);
            aj.erase("event_id");
            args.push_back(aj);
        }
        j["arguments"] = args;
        lines.push_back(j);
    }
    write_jsonl(path, lines);
}

inline ExtractionOutput read_extractions(const std::filesystem::path& path) {
    ExtractionOutput out;
    for (const auto& j : read_jsonl(path)) {
        EventRecord e = event_from_json(j);
        for (const auto& aj : j.at("arguments")) {
            json with_id = aj;
            with_id["event_id"] = e.id;
            out.arguments.push_back(argument_from_json(with_id));
        }
        if (e.provenance == Provenance::Multimedia && e.similarity) {
            out.links.push_back(
                ExtractionOutput::LinkRecord{*e.trigger, *e.image_id, e.type, *e.similarity});
        }
        out.events.push_back(std::move(e));
    }
    return out;
}

}  // namespace wase
