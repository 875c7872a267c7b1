#pragma once

#include <algorithm>
#include <iomanip>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "wase/data.hpp"
#include "wase/inference.hpp"

namespace wase {

enum class Setting { TextOnly, ImageOnly, Multimedia, Overall };

inline std::string to_string(Setting s) {
    switch (s) {
        case Setting::TextOnly: return "text_only";
        case Setting::ImageOnly: return "image_only";
        case Setting::Multimedia: return "multimedia";
        case Setting::Overall: return "overall";
    }
    return "?";
}

struct MatchCounts {
    std::size_t correct = 0;
    std::size_t predicted = 0;
    std::size_t gold = 0;
};

struct Prf {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    MatchCounts counts;

    static Prf from(const MatchCounts& c) {
        Prf out;
        out.counts = c;
        out.precision = c.predicted ? static_cast<double>(c.correct) / c.predicted : 0.0;
        out.recall = c.gold ? static_cast<double>(c.correct) / c.gold : 0.0;
        out.f1 = (out.precision + out.recall) > 0.0
                     ? 2.0 * out.precision * out.recall / (out.precision + out.recall)
                     : 0.0;
        return out;
    }
};

// ---------- correctness rules ----------

// An event prediction matches a gold mention under the gold's provenance
// rule: exact trigger offsets for text, exact image for visual, either
// grounding for multimedia. A text-only prediction can therefore credit a
// multimedia gold mention through its trigger.
inline bool event_matches(const EventRecord& pred, const EventRecord& gold) {
    if (pred.type != gold.type) return false;
    const bool trigger_match = pred.trigger && gold.trigger && *pred.trigger == *gold.trigger;
    const bool image_match = pred.image_id && gold.image_id && *pred.image_id == *gold.image_id;
    switch (gold.provenance) {
        case Provenance::TextOnly: return trigger_match;
        case Provenance::ImageOnly: return image_match;
        case Provenance::Multimedia: return trigger_match || image_match;
    }
    return false;
}

// Flattened argument view carrying its owning event's type/provenance.
struct ScoredArgument {
    std::string event_type;
    Provenance event_provenance = Provenance::TextOnly;
    std::string role;
    std::optional<TextGrounding> span;
    std::optional<BoxGrounding> box;
};

// Text groundings need the exact (event type, span, role) triple; visual
// groundings need (event type, role) plus IoU above 0.5 on the same image.
inline bool argument_text_match(const ScoredArgument& pred, const ScoredArgument& gold) {
    return pred.span && gold.span && pred.event_type == gold.event_type &&
           pred.role == gold.role && pred.span->sentence_id == gold.span->sentence_id &&
           pred.span->start == gold.span->start && pred.span->end == gold.span->end;
}

inline double argument_box_overlap(const ScoredArgument& pred, const ScoredArgument& gold) {
    if (!pred.box || !gold.box || pred.event_type != gold.event_type || pred.role != gold.role ||
        pred.box->image_id != gold.box->image_id) {
        return 0.0;
    }
    return iou(pred.box->box, gold.box->box);
}

inline bool argument_matches(const ScoredArgument& pred, const ScoredArgument& gold) {
    return argument_text_match(pred, gold) || argument_box_overlap(pred, gold) > 0.5;
}

// ---------- subset selection per evaluation setting ----------

// The text-only and image-only settings compare predictions of that
// provenance; the multimedia setting counts every prediction since a
// text-only or image-only prediction can credit a multimedia gold
// through its single grounding.
inline std::vector<const EventRecord*> event_predictions_for(const std::vector<EventRecord>& preds,
                                                             Setting setting) {
    std::vector<const EventRecord*> out;
    for (const auto& p : preds) {
        const bool keep =
            setting == Setting::Multimedia || setting == Setting::Overall ||
            (setting == Setting::TextOnly && p.provenance == Provenance::TextOnly) ||
            (setting == Setting::ImageOnly && p.provenance == Provenance::ImageOnly);
        if (keep) out.push_back(&p);
    }
    return out;
}

inline std::vector<const EventRecord*> event_gold_for(const std::vector<EventRecord>& golds,
                                                      Setting setting) {
    std::vector<const EventRecord*> out;
    for (const auto& g : golds) {
        const bool keep = setting == Setting::Overall ||
                          (setting == Setting::TextOnly && g.provenance == Provenance::TextOnly) ||
                          (setting == Setting::ImageOnly && g.provenance == Provenance::ImageOnly) ||
                          (setting == Setting::Multimedia && g.provenance == Provenance::Multimedia);
        if (keep) out.push_back(&g);
    }
    return out;
}

// Greedy one-to-one matching in document order; each gold mention is
// creditable at most once.
inline MatchCounts score_events(const std::vector<EventRecord>& preds,
                                const std::vector<EventRecord>& golds, Setting setting) {
    const auto pred_set = event_predictions_for(preds, setting);
    const auto gold_set = event_gold_for(golds, setting);
    std::vector<bool> used(gold_set.size(), false);
    MatchCounts counts;
    counts.predicted = pred_set.size();
    counts.gold = gold_set.size();
    for (const EventRecord* p : pred_set) {
        for (std::size_t g = 0; g < gold_set.size(); ++g) {
            if (used[g] || !event_matches(*p, *gold_set[g])) continue;
            used[g] = true;
            counts.correct += 1;
            break;
        }
    }
    return counts;
}

inline std::vector<const ScoredArgument*> argument_predictions_for(
    const std::vector<ScoredArgument>& preds, Setting setting) {
    std::vector<const ScoredArgument*> out;
    for (const auto& p : preds) {
        const bool keep =
            setting == Setting::Multimedia || setting == Setting::Overall ||
            (setting == Setting::TextOnly && p.event_provenance == Provenance::TextOnly) ||
            (setting == Setting::ImageOnly && p.event_provenance == Provenance::ImageOnly);
        if (keep) out.push_back(&p);
    }
    return out;
}

inline std::vector<const ScoredArgument*> argument_gold_for(const std::vector<ScoredArgument>& golds,
                                                            Setting setting) {
    std::vector<const ScoredArgument*> out;
    for (const auto& g : golds) {
        const bool keep =
            setting == Setting::Overall ||
            (setting == Setting::TextOnly && g.event_provenance == Provenance::TextOnly) ||
            (setting == Setting::ImageOnly && g.event_provenance == Provenance::ImageOnly) ||
            (setting == Setting::Multimedia && g.event_provenance == Provenance::Multimedia);
        if (keep) out.push_back(&g);
    }
    return out;
}

// Text-grounded predictions match greedily in document order; visual
// predictions match greedily by descending IoU.
inline MatchCounts score_arguments(const std::vector<ScoredArgument>& preds,
                                   const std::vector<ScoredArgument>& golds, Setting setting) {
    const auto pred_set = argument_predictions_for(preds, setting);
    const auto gold_set = argument_gold_for(golds, setting);
    std::vector<bool> pred_used(pred_set.size(), false);
    std::vector<bool> gold_used(gold_set.size(), false);
    MatchCounts counts;
    counts.predicted = pred_set.size();
    counts.gold = gold_set.size();

    for (std::size_t p = 0; p < pred_set.size(); ++p) {
        if (!pred_set[p]->span) continue;
        for (std::size_t g = 0; g < gold_set.size(); ++g) {
            if (gold_used[g] || !argument_text_match(*pred_set[p], *gold_set[g])) continue;
            gold_used[g] = true;
            pred_used[p] = true;
            counts.correct += 1;
            break;
        }
    }

    struct Overlap {
        std::size_t pred, gold;
        double value;
    };
    std::vector<Overlap> overlaps;
    for (std::size_t p = 0; p < pred_set.size(); ++p) {
        if (pred_used[p] || !pred_set[p]->box) continue;
        for (std::size_t g = 0; g < gold_set.size(); ++g) {
            if (gold_used[g]) continue;
            const double value = argument_box_overlap(*pred_set[p], *gold_set[g]);
            if (value > 0.5) overlaps.push_back({p, g, value});
        }
    }
    std::sort(overlaps.begin(), overlaps.end(), [](const Overlap& a, const Overlap& b) {
        if (a.value != b.value) return a.value > b.value;
        if (a.pred != b.pred) return a.pred < b.pred;
        return a.gold < b.gold;
    });
    for (const auto& o : overlaps) {
        if (pred_used[o.pred] || gold_used[o.gold]) continue;
        pred_used[o.pred] = true;
        gold_used[o.gold] = true;
        counts.correct += 1;
    }
    return counts;
}

// ---------- exhaustive matching oracle ----------

// Optimal one-to-one matching by bitmask DP over the gold side; the
// same correctness rules as the greedy scorer. Sizes capped at 10.
template <typename Pred, typename Gold, typename Matches>
inline std::size_t oracle_match_count(const std::vector<Pred>& preds,
                                      const std::vector<Gold>& golds, Matches&& matches) {
    if (preds.size() > 10 || golds.size() > 10) {
        throw SizeLimitError("oracle_match: instance larger than 10 per side");
    }
    const std::size_t n_masks = std::size_t{1} << golds.size();
    std::vector<int> best(n_masks, -1);
    best[0] = 0;
    std::size_t result = 0;
    for (std::size_t p = 0; p <= preds.size(); ++p) {
        if (p == preds.size()) break;
        std::vector<int> next(n_masks, -1);
        for (std::size_t mask = 0; mask < n_masks; ++mask) {
            if (best[mask] < 0) continue;
            next[mask] = std::max(next[mask], best[mask]);  // leave pred p unmatched
            for (std::size_t g = 0; g < golds.size(); ++g) {
                if (mask & (std::size_t{1} << g)) continue;
                if (!matches(preds[p], golds[g])) continue;
                const std::size_t with = mask | (std::size_t{1} << g);
                next[with] = std::max(next[with], best[mask] + 1);
            }
        }
        best = std::move(next);
    }
    for (std::size_t mask = 0; mask < n_masks; ++mask) {
        result = std::max<std::size_t>(result, best[mask] < 0 ? 0 : best[mask]);
    }
    return result;
}

inline std::size_t oracle_event_match(const std::vector<EventRecord>& preds,
                                      const std::vector<EventRecord>& golds, Setting setting) {
    const auto pred_set = event_predictions_for(preds, setting);
    const auto gold_set = event_gold_for(golds, setting);
    std::vector<EventRecord> p, g;
    for (const auto* e : pred_set) p.push_back(*e);
    for (const auto* e : gold_set) g.push_back(*e);
    return oracle_match_count(p, g, [](const EventRecord& a, const EventRecord& b) {
        return event_matches(a, b);
    });
}

inline std::size_t oracle_argument_match(const std::vector<ScoredArgument>& preds,
                                         const std::vector<ScoredArgument>& golds,
                                         Setting setting) {
    const auto pred_set = argument_predictions_for(preds, setting);
    const auto gold_set = argument_gold_for(golds, setting);
    std::vector<ScoredArgument> p, g;
    for (const auto* a : pred_set) p.push_back(*a);
    for (const auto* a : gold_set) g.push_back(*a);
    return oracle_match_count(p, g, [](const ScoredArgument& a, const ScoredArgument& b) {
        return argument_matches(a, b);
    });
}

// ---------- coreference ----------

struct CorefPair {
    TriggerGrounding trigger;
    std::string image_id;
    std::string type;

    bool operator==(const CorefPair& o) const {
        return trigger == o.trigger && image_id == o.image_id && type == o.type;
    }
};

inline std::vector<CorefPair> gold_coref_pairs(const std::vector<EventRecord>& golds) {
    std::vector<CorefPair> out;
    for (const auto& g : golds) {
        if (g.provenance == Provenance::Multimedia) {
            out.push_back(CorefPair{*g.trigger, *g.image_id, g.type});
        }
    }
    return out;
}

// A predicted link is correct iff it appears among the gold mention
// pairs (unordered pair identity).
inline MatchCounts score_coreference(const std::vector<CorefPair>& pred_links,
                                     const std::vector<CorefPair>& gold_pairs) {
    MatchCounts counts;
    counts.predicted = pred_links.size();
    counts.gold = gold_pairs.size();
    std::vector<bool> used(gold_pairs.size(), false);
    for (const auto& link : pred_links) {
        for (std::size_t g = 0; g < gold_pairs.size(); ++g) {
            if (used[g] || !(gold_pairs[g] == link)) continue;
            used[g] = true;
            counts.correct += 1;
            break;
        }
    }
    return counts;
}

// Baseline linker: every cross-modal pair of equal type in the document.
inline std::vector<CorefPair> rule_baseline(const std::vector<EventRecord>& text_events,
                                            const std::vector<EventRecord>& image_events) {
    std::vector<CorefPair> links;
    for (const auto& t : text_events) {
        if (!t.trigger) continue;
        for (const auto& i : image_events) {
            if (!i.image_id || t.type != i.type) continue;
            links.push_back(CorefPair{*t.trigger, *i.image_id, t.type});
        }
    }
    return links;
}

// ---------- full report ----------

struct ScoreReport {
    std::map<std::string, Prf> events;     // per setting
    std::map<std::string, Prf> arguments;  // per setting
    Prf coreference;
    Prf rule_baseline_coreference;
};

inline std::vector<ScoredArgument> flatten_arguments(const std::vector<EventRecord>& events,
                                                     const std::vector<ArgumentRecord>& args) {
    std::map<std::string, const EventRecord*> by_id;
    for (const auto& e : events) by_id.emplace(e.id, &e);
    std::vector<ScoredArgument> out;
    for (const auto& a : args) {
        auto it = by_id.find(a.event_id);
        if (it == by_id.end()) {
            throw ValidationError("argument references unknown event '" + a.event_id + "'");
        }
        ScoredArgument s;
        s.event_type = it->second->type;
        s.event_provenance = it->second->provenance;
        s.role = a.role;
        s.span = a.span;
        s.box = a.box;
        out.push_back(std::move(s));
    }
    return out;
}

// Cross-checks every extraction grounding against the corpus ids.
inline void validate_extraction_ids(const Corpus& corpus, const ExtractionOutput& extraction) {
    for (const auto& e : extraction.events) {
        if (e.trigger && !corpus.sentence_index.count(e.trigger->sentence_id)) {
            throw ValidationError("extraction references unknown sentence id '" +
                                  e.trigger->sentence_id + "'");
        }
        if (e.image_id && !corpus.image_index.count(*e.image_id)) {
            throw ValidationError("extraction references unknown image id '" + *e.image_id + "'");
        }
    }
}

inline ScoreReport build_report(const Corpus& corpus, const ExtractionOutput& extraction) {
    validate_extraction_ids(corpus, extraction);
    ScoreReport report;
    const auto pred_args = flatten_arguments(extraction.events, extraction.arguments);
    const auto gold_args = flatten_arguments(corpus.gold_events, corpus.gold_arguments);
    for (Setting setting :
         {Setting::TextOnly, Setting::ImageOnly, Setting::Multimedia, Setting::Overall}) {
        report.events[to_string(setting)] =
            Prf::from(score_events(extraction.events, corpus.gold_events, setting));
        report.arguments[to_string(setting)] =
            Prf::from(score_arguments(pred_args, gold_args, setting));
    }
    std::vector<CorefPair> pred_links;
    for (const auto& link : extraction.links) {
        pred_links.push_back(CorefPair{link.trigger, link.image_id, link.type});
    }
    const auto gold_pairs = gold_coref_pairs(corpus.gold_events);
    report.coreference = Prf::from(score_coreference(pred_links, gold_pairs));

    // reference row: type-matching baseline over the gold mentions
    std::vector<EventRecord> gold_text, gold_image;
    for (const auto& g : corpus.gold_events) {
        if (g.trigger) gold_text.push_back(g);
        if (g.image_id) {
            EventRecord img = g;
            img.trigger.reset();
            gold_image.push_back(img);
        }
    }
    report.rule_baseline_coreference =
        Prf::from(score_coreference(rule_baseline(gold_text, gold_image), gold_pairs));
    return report;
}

inline json prf_to_json(const Prf& p) {
    return json{{"precision", p.precision}, {"recall", p.recall},       {"f1", p.f1},
                {"correct", p.counts.correct}, {"predicted", p.counts.predicted},
                {"gold", p.counts.gold}};
}

inline json report_to_json(const ScoreReport& r) {
    json j;
    json settings = json::object();
    for (const auto& [name, prf] : r.events) {
        settings[name] = json{{"event_mention", prf_to_json(prf)},
                              {"argument_role", prf_to_json(r.arguments.at(name))}};
    }
    j["settings"] = settings;
    j["coreference"] = prf_to_json(r.coreference);
    j["rule_baseline_coreference"] = prf_to_json(r.rule_baseline_coreference);
    return j;
}

inline void print_report(std::ostream& os, const ScoreReport& r) {
    auto row = [&os](const std::string& name, const Prf& p) {
        os << "  " << std::left << std::setw(12) << name << std::right << std::fixed
           << std::setprecision(4) << "  P " << p.precision << "  R " << p.recall << "  F1 "
           << p.f1 << "   (" << p.counts.correct << "/" << p.counts.predicted << " predicted, "
           << p.counts.gold << " gold)\n";
    };
    os << "event mentions\n";
    for (const auto& [name, prf] : r.events) row(name, prf);
    os << "argument roles\n";
    for (const auto& [name, prf] : r.arguments) row(name, prf);
    os << "cross-media coreference\n";
    row("predicted", r.coreference);
    row("rule_base", r.rule_baseline_coreference);
}

}  // namespace wase
