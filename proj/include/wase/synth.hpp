#pragma once

#include <algorithm>
#include <cctype>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "wase/corpus_io.hpp"
#include "wase/data.hpp"
#include "wase/rng.hpp"

namespace wase {

// Sizes and noise level for one generated corpus.
struct SynthSpec {
    std::size_t n_sentences = 200;
    std::size_t n_images = 200;
    std::size_t n_pairs = 200;
    double noise = 0.1;

    // Secondary knobs; the defaults produce corpora where images carry
    // information text alone cannot recover.
    double ambiguous_trigger_prob = 0.2;   // caption triggers shared between two types
    double second_event_prob = 0.45;       // extra text-only event per sentence
    double two_token_trigger_prob = 0.25;  // exercises I- labels
    double caption_role_drop_prob = 0.15;  // role grounded in the image only
    double distractor_entity_prob = 0.35;
    double instance_split_prob = 0.3;      // role annotated with two instance boxes

    void check() const {
        if (n_sentences < 1 || n_images < 1 || n_pairs < 1) {
            throw ValidationError("synth: sizes must be >= 1");
        }
        if (!(noise >= 0.0 && noise < 1.0)) {
            throw ValidationError("synth: noise must lie in [0, 1)");
        }
    }
};

namespace synth_detail {

inline std::string type_key(const std::string& type) {
    auto dot = type.find_last_of('.');
    std::string key = dot == std::string::npos ? type : type.substr(dot + 1);
    for (char& c : key) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return key;
}

inline std::string lower(const std::string& s) {
    std::string out = s;
    for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
}

inline const std::vector<std::string>& fillers() {
    static const std::vector<std::string> f = {"the",  "a",     "of",        "in",
                                               "on",   "at",    "near",      "local",
                                               "new",  "report", "said",     "officials",
                                               "today", "group", "city",     "plan"};
    return f;
}

inline std::string filler_pos(const std::string& tok) {
    if (tok == "the" || tok == "a") return "DET";
    if (tok == "of" || tok == "in" || tok == "on" || tok == "at" || tok == "near") return "ADP";
    if (tok == "local" || tok == "new") return "ADJ";
    return "X";
}

inline const std::map<std::string, std::string>& role_edge_label() {
    static const std::map<std::string, std::string> m = {
        {"Agent", "ARG0"},        {"Attacker", "ARG0"},  {"Entity", "ARG0"},
        {"Participant", "ARG0"},  {"Giver", "ARG0"},     {"Artifact", "ARG1"},
        {"Target", "ARG1"},       {"Person", "ARG1"},    {"Victim", "ARG1"},
        {"Recipient", "ARG2"},    {"Police", "ARG2"},    {"Vehicle", "instrument"},
        {"Instrument", "instrument"}, {"Money", "instrument"}, {"Place", "location"},
        {"Destination", "destination"}, {"Origin", "source"}};
    return m;
}

inline const std::map<std::string, std::string>& role_entity_tag() {
    static const std::map<std::string, std::string> m = {
        {"Agent", "PER"},      {"Attacker", "PER"}, {"Entity", "PER"},  {"Participant", "PER"},
        {"Giver", "PER"},      {"Person", "PER"},   {"Victim", "PER"},  {"Recipient", "PER"},
        {"Police", "PER"},     {"Vehicle", "VEH"},  {"Instrument", "WEA"}, {"Money", "MONEY"},
        {"Artifact", "FAC"},   {"Target", "FAC"},   {"Place", "GPE"},   {"Destination", "GPE"},
        {"Origin", "GPE"}};
    return m;
}

inline const std::map<std::string, std::vector<std::string>>& role_nouns() {
    static const std::map<std::string, std::vector<std::string>> m = {
        {"Agent", {"person", "officer"}},   {"Attacker", {"soldier", "person"}},
        {"Entity", {"crowd", "person"}},    {"Participant", {"person", "officer"}},
        {"Giver", {"person"}},              {"Artifact", {"crate", "car"}},
        {"Target", {"building", "ship"}},   {"Person", {"person"}},
        {"Victim", {"person"}},             {"Recipient", {"person", "officer"}},
        {"Police", {"officer"}},            {"Vehicle", {"truck", "ship", "car"}},
        {"Instrument", {"rifle", "phone"}}, {"Money", {"cash"}},
        {"Place", {"street", "building"}},  {"Destination", {"building", "street"}},
        {"Origin", {"building", "street"}}};
    return m;
}

// Ambiguous trigger clusters pair consecutive event types.
inline std::vector<std::pair<std::size_t, std::size_t>> ambiguous_pairs(std::size_t n_types) {
    std::vector<std::pair<std::size_t, std::size_t>> out;
    for (std::size_t i = 0; i + 1 < n_types; i += 2) out.emplace_back(i, i + 1);
    return out;
}

// Planted feature directions. Derived from a fixed stream, not the
// corpus seed, so independently generated corpora stay compatible.
struct Directions {
    std::map<std::string, Tensor> by_type;
    std::map<std::string, Tensor> by_verb;
    std::map<std::string, Tensor> by_role;
    std::map<std::string, Tensor> by_noun;

    static Tensor unit(Rng& rng) {
        Tensor t = Tensor::random_normal({512}, rng, 1.0);
        double norm = 0.0;
        for (std::size_t i = 0; i < t.numel(); ++i) norm += t[i] * t[i];
        norm = std::sqrt(norm);
        for (std::size_t i = 0; i < t.numel(); ++i) t[i] /= norm;
        return t;
    }

    static Directions make(const Ontology& onto) {
        Directions d;
        Rng rng(0x57A5Eu);
        for (const auto& t : onto.event_types) d.by_type.emplace(t, unit(rng));
        for (const auto& v : onto.verbs) d.by_verb.emplace(v, unit(rng));
        for (const auto& r : onto.situation_roles) d.by_role.emplace(r, unit(rng));
        for (const auto& n : onto.nouns) d.by_noun.emplace(n, unit(rng));
        return d;
    }
};

inline Tensor unit_noise(Rng& rng) { return Directions::unit(rng); }

struct RoleInstance {
    std::string role;
    std::string noun;
    // grid-aligned union box: rows [r0, r0+h), cols [c0, c0+w) of the 7x7 map
    std::size_t r0 = 0, c0 = 0, h = 2, w = 2;

    BoundingBox box() const {
        return BoundingBox{static_cast<double>(c0) / 7.0, static_cast<double>(r0) / 7.0,
                           static_cast<double>(c0 + w) / 7.0, static_cast<double>(r0 + h) / 7.0};
    }
};

struct EventInstance {
    std::string type;
    std::string verb;
    std::vector<RoleInstance> roles;
};

}  // namespace synth_detail

// Extends the default schema with the generator's closed token vocabulary.
inline Ontology synth_ontology() {
    using namespace synth_detail;
    Ontology onto = Ontology::default_ontology();
    std::vector<std::string> vocab = fillers();
    for (const auto& t : onto.event_types) {
        for (int i = 0; i < 4; ++i) vocab.push_back("t-" + type_key(t) + "-" + std::to_string(i));
    }
    for (auto [a, b] : ambiguous_pairs(onto.event_types.size())) {
        for (int i = 0; i < 2; ++i) {
            vocab.push_back("t-" + type_key(onto.event_types[a]) + "-" +
                            type_key(onto.event_types[b]) + "-" + std::to_string(i));
        }
    }
    for (const auto& r : onto.situation_roles) {
        for (int i = 0; i < 6; ++i) vocab.push_back("e-" + lower(r) + "-" + std::to_string(i));
    }
    onto.token_vocabulary = vocab;
    return onto;
}

// Generates a corpus with planted ground truth:
//  - every event type owns a trigger-token cluster and a visual verb
//    feature direction,
//  - role fillers carry role-correlated tokens/features,
//  - each caption pair realizes one shared latent event.
// Deterministic per seed.
inline Corpus synth_corpus(std::uint64_t seed, const SynthSpec& spec) {
    using namespace synth_detail;
    spec.check();

    Corpus corpus;
    corpus.ontology = synth_ontology();
    const Ontology& onto = corpus.ontology;
    const Directions dirs = Directions::make(onto);
    Rng rng(seed);

    const std::size_t n_types = onto.event_types.size();
    const auto amb = ambiguous_pairs(n_types);
    const std::size_t n_paired = std::min(spec.n_pairs, std::min(spec.n_sentences, spec.n_images));

    std::vector<std::string> mapped_verbs;
    for (const auto& v : onto.verbs) {
        if (onto.verb_to_event.count(v)) mapped_verbs.push_back(v);
    }
    std::vector<std::string> unmapped_verbs;
    for (const auto& v : onto.verbs) {
        if (!onto.verb_to_event.count(v)) unmapped_verbs.push_back(v);
    }

    // Disjoint 3x3 slots on the 7x7 grid hold role and distractor boxes.
    const std::vector<std::pair<std::size_t, std::size_t>> slots = {{0, 0}, {0, 4}, {4, 0}, {4, 4}};

    std::size_t event_counter = 0;
    auto next_event_id = [&] { return "ev-" + std::to_string(event_counter++); };

    auto make_instance = [&](std::size_t ordinal) {
        EventInstance ev;
        ev.type = onto.event_types[ordinal % n_types];
        std::vector<std::string> verbs_of_type;
        for (const auto& v : mapped_verbs) {
            if (onto.verb_to_event.at(v) == ev.type) verbs_of_type.push_back(v);
        }
        ev.verb = rng.pick(verbs_of_type);
        const auto& type_roles = onto.roles_by_type.at(ev.type);
        std::vector<std::string> pool = type_roles;
        rng.shuffle(pool);
        const std::size_t n_roles = std::min<std::size_t>(2 + rng.index(2), pool.size());
        std::vector<std::pair<std::size_t, std::size_t>> open_slots = slots;
        rng.shuffle(open_slots);
        for (std::size_t k = 0; k < n_roles; ++k) {
            RoleInstance ri;
            ri.role = pool[k];
            ri.noun = rng.pick(role_nouns().at(ri.role));
            ri.r0 = open_slots[k].first;
            ri.c0 = open_slots[k].second;
            ri.h = 2 + rng.index(2);
            ri.w = 2 + rng.index(2);
            ev.roles.push_back(std::move(ri));
        }
        return ev;
    };

    auto trigger_tokens = [&](const EventInstance& ev, bool allow_ambiguous) {
        std::vector<std::string> toks;
        std::string base;
        if (allow_ambiguous && rng.chance(spec.ambiguous_trigger_prob)) {
            const std::size_t ti =
                static_cast<std::size_t>(std::find(onto.event_types.begin(), onto.event_types.end(),
                                                   ev.type) -
                                         onto.event_types.begin());
            for (auto [a, b] : amb) {
                if (a == ti || b == ti) {
                    base = "t-" + type_key(onto.event_types[a]) + "-" +
                           type_key(onto.event_types[b]) + "-" + std::to_string(rng.index(2));
                    break;
                }
            }
        }
        if (base.empty()) {
            base = "t-" + type_key(ev.type) + "-" + std::to_string(rng.index(4));
        }
        toks.push_back(base);
        if (rng.chance(spec.two_token_trigger_prob)) {
            toks.push_back("t-" + type_key(ev.type) + "-" + std::to_string(rng.index(4)));
        }
        return toks;
    };

    auto entity_tokens = [&](const std::string& role) {
        std::string use_role = role;
        if (rng.chance(spec.noise)) use_role = rng.pick(onto.situation_roles);
        std::vector<std::string> toks;
        const std::size_t len = 1 + rng.index(2);
        for (std::size_t i = 0; i < len; ++i) {
            toks.push_back("e-" + lower(use_role) + "-" + std::to_string(rng.index(6)));
        }
        return toks;
    };

    // Realizes one or two events as a sentence; returns the per-event
    // trigger spans so gold records can reference them.
    struct Realized {
        std::vector<std::pair<std::size_t, std::size_t>> trigger_spans;
        std::vector<std::vector<std::string>> role_entity_ids;  // aligned with events[i].roles
    };
    auto realize_sentence = [&](SentenceUnit& s, const std::vector<EventInstance>& events,
                                const std::vector<std::vector<bool>>& role_in_text,
                                bool allow_ambiguous) {
        Realized out;
        auto add_filler = [&] {
            const std::string& f = rng.pick(fillers());
            s.tokens.push_back(f);
            s.pos_tags.push_back(filler_pos(f));
            s.entity_tags.push_back("O");
        };
        const std::size_t lead = 1 + rng.index(3);
        for (std::size_t i = 0; i < lead; ++i) add_filler();
        std::size_t entity_counter = 0;
        for (std::size_t e = 0; e < events.size(); ++e) {
            const EventInstance& ev = events[e];
            const auto trig = trigger_tokens(ev, allow_ambiguous && e == 0);
            const std::size_t tstart = s.tokens.size();
            for (std::size_t i = 0; i < trig.size(); ++i) {
                s.tokens.push_back(trig[i]);
                s.pos_tags.push_back("VERB");
                s.entity_tags.push_back("O");
            }
            const std::size_t tend = s.tokens.size() - 1;
            out.trigger_spans.emplace_back(tstart, tend);
            out.role_entity_ids.emplace_back();
            for (std::size_t k = 0; k < ev.roles.size(); ++k) {
                if (!role_in_text[e][k]) {
                    out.role_entity_ids.back().push_back("");
                    continue;
                }
                add_filler();
                const auto etoks = entity_tokens(ev.roles[k].role);
                const std::size_t estart = s.tokens.size();
                std::string tag = role_entity_tag().at(ev.roles[k].role);
                if (rng.chance(spec.noise * 0.5)) tag = rng.pick(onto.entity_tag_vocabulary);
                for (const auto& tok : etoks) {
                    s.tokens.push_back(tok);
                    s.pos_tags.push_back("NOUN");
                    s.entity_tags.push_back(tag);
                }
                const std::size_t eend = s.tokens.size() - 1;
                EntityMention ent;
                ent.id = s.id + "-e" + std::to_string(entity_counter++);
                ent.start = estart;
                ent.end = eend;
                s.entities.push_back(ent);
                out.role_entity_ids.back().push_back(ent.id);
                if (!rng.chance(spec.noise * 0.3)) {
                    s.edges.push_back(TypedEdge{tstart, estart, role_edge_label().at(ev.roles[k].role)});
                }
                s.gold_arguments.push_back(
                    GoldArgumentLabel{tstart, tend, ent.id, ev.roles[k].role});
            }
        }
        // distractor entity with no role
        if (rng.chance(spec.distractor_entity_prob)) {
            add_filler();
            const std::string drole = rng.pick(onto.situation_roles);
            const std::size_t estart = s.tokens.size();
            s.tokens.push_back("e-" + lower(drole) + "-" + std::to_string(rng.index(6)));
            s.pos_tags.push_back("NOUN");
            s.entity_tags.push_back(role_entity_tag().at(drole));
            EntityMention ent;
            ent.id = s.id + "-e" + std::to_string(entity_counter++);
            ent.start = estart;
            ent.end = estart;
            s.entities.push_back(ent);
        }
        const std::size_t trail = rng.index(3);
        for (std::size_t i = 0; i < trail; ++i) add_filler();

        // gold BIO
        s.gold_bio.assign(s.tokens.size(), "O");
        for (std::size_t e = 0; e < events.size(); ++e) {
            const auto [a, b] = out.trigger_spans[e];
            s.gold_bio[a] = "B-" + events[e].type;
            for (std::size_t i = a + 1; i <= b; ++i) s.gold_bio[i] = "I-" + events[e].type;
        }
        // positions and a mod edge between two filler tokens
        for (std::size_t i = 0; i < s.tokens.size(); ++i) s.positions.push_back(i);
        std::vector<std::size_t> filler_positions;
        for (std::size_t i = 0; i < s.tokens.size(); ++i) {
            if (s.gold_bio[i] == "O" && s.entity_tags[i] == "O") filler_positions.push_back(i);
        }
        if (filler_positions.size() >= 2) {
            const std::size_t a = filler_positions[rng.index(filler_positions.size())];
            const std::size_t b = filler_positions[rng.index(filler_positions.size())];
            if (a != b) s.edges.push_back(TypedEdge{a, b, "mod"});
        }
        return out;
    };

    auto realize_image = [&](ImageUnit& m, const EventInstance* ev) {
        const double noise = spec.noise;
        std::string verb = ev ? ev->verb : rng.pick(unmapped_verbs);
        m.gold_verb = verb;
        // global feature: type direction + verb direction + perturbation
        Tensor g({512});
        if (ev) {
            const Tensor& ut = dirs.by_type.at(ev->type);
            const Tensor& uv = dirs.by_verb.at(verb);
            for (std::size_t i = 0; i < 512; ++i) g[i] = ut[i] + 0.6 * uv[i];
        } else {
            const Tensor& uv = dirs.by_verb.at(verb);
            for (std::size_t i = 0; i < 512; ++i) g[i] = 1.1 * uv[i];
        }
        if (noise > 0.0) {
            Tensor eps = unit_noise(rng);
            for (std::size_t i = 0; i < 512; ++i) g[i] += noise * eps[i];
        }
        m.global_feature = std::move(g);

        // feature map: quiet background, role boxes carry a shared
        // role+noun mixture so in-box cells stay nearly identical
        Tensor fmap({7, 7, 512});
        for (std::size_t r = 0; r < 7; ++r) {
            for (std::size_t c = 0; c < 7; ++c) {
                Tensor eps = unit_noise(rng);
                for (std::size_t k = 0; k < 512; ++k) fmap.at(r, c, k) = 0.15 * eps[k];
            }
        }
        std::vector<Tensor> object_rows;
        std::vector<std::pair<std::size_t, std::size_t>> used_slots;
        if (ev) {
            for (const auto& ri : ev->roles) {
                const Tensor& zr = dirs.by_role.at(ri.role);
                const Tensor& yn = dirs.by_noun.at(ri.noun);
                Tensor base({512});
                for (std::size_t k = 0; k < 512; ++k) base[k] = zr[k] + 0.7 * yn[k];
                if (noise > 0.0) {
                    Tensor eps = unit_noise(rng);
                    for (std::size_t k = 0; k < 512; ++k) base[k] += 0.3 * noise * eps[k];
                }
                for (std::size_t r = ri.r0; r < ri.r0 + ri.h; ++r) {
                    for (std::size_t c = ri.c0; c < ri.c0 + ri.w; ++c) {
                        Tensor eps = unit_noise(rng);
                        for (std::size_t k = 0; k < 512; ++k) {
                            fmap.at(r, c, k) = base[k] + 0.2 * noise * eps[k];
                        }
                    }
                }
                Tensor obj({512});
                Tensor eps = unit_noise(rng);
                for (std::size_t k = 0; k < 512; ++k) obj[k] = base[k] + noise * eps[k];
                object_rows.push_back(std::move(obj));
                m.objects.push_back(DetectedObject{ri.box()});
                used_slots.emplace_back(ri.r0, ri.c0);

                GoldRoleAnnotation ann;
                ann.role = ri.role;
                ann.noun = ri.noun;
                ann.union_box = ri.box();
                if (ri.w >= 2 && rng.chance(spec.instance_split_prob)) {
                    const std::size_t wl = ri.w / 2;
                    ann.instance_boxes.push_back(
                        BoundingBox{ri.c0 / 7.0, ri.r0 / 7.0, (ri.c0 + wl) / 7.0, (ri.r0 + ri.h) / 7.0});
                    ann.instance_boxes.push_back(BoundingBox{(ri.c0 + wl) / 7.0, ri.r0 / 7.0,
                                                             (ri.c0 + ri.w) / 7.0,
                                                             (ri.r0 + ri.h) / 7.0});
                } else {
                    ann.instance_boxes.push_back(ann.union_box);
                }
                m.gold_roles.push_back(std::move(ann));
            }
        }
        // distractor objects in unused slots
        const std::size_t n_distractors = 1 + rng.index(2);
        std::vector<std::pair<std::size_t, std::size_t>> free_slots;
        for (const auto& slot : slots) {
            if (std::find(used_slots.begin(), used_slots.end(), slot) == used_slots.end()) {
                free_slots.push_back(slot);
            }
        }
        rng.shuffle(free_slots);
        for (std::size_t d = 0; d < n_distractors && d < free_slots.size(); ++d) {
            const auto [r0, c0] = free_slots[d];
            const std::size_t h = 2 + rng.index(2), w = 2 + rng.index(2);
            Tensor obj = unit_noise(rng);
            for (std::size_t k = 0; k < 512; ++k) obj[k] *= 0.35;
            object_rows.push_back(std::move(obj));
            m.objects.push_back(DetectedObject{BoundingBox{c0 / 7.0, r0 / 7.0, (c0 + w) / 7.0,
                                                           (r0 + h) / 7.0}});
        }
        // shuffle object order so position never encodes the role
        std::vector<std::size_t> perm(m.objects.size());
        for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = i;
        rng.shuffle(perm);
        std::vector<DetectedObject> shuffled;
        Tensor feats({std::max<std::size_t>(perm.size(), 1), 512});
        for (std::size_t i = 0; i < perm.size(); ++i) {
            shuffled.push_back(m.objects[perm[i]]);
            for (std::size_t k = 0; k < 512; ++k) feats.at(i, k) = object_rows[perm[i]][k];
        }
        m.objects = std::move(shuffled);
        m.object_features = m.objects.empty() ? Tensor() : std::move(feats);
        m.feature_map = std::move(fmap);
    };

    // --- paired instances (multimedia events) ---
    for (std::size_t i = 0; i < n_paired; ++i) {
        EventInstance ev = make_instance(i);
        SentenceUnit s;
        s.id = "s" + std::to_string(i);
        ImageUnit m;
        m.id = "m" + std::to_string(i);

        std::vector<EventInstance> sentence_events{ev};
        if (rng.chance(spec.second_event_prob)) {
            sentence_events.push_back(make_instance(rng.index(1000)));
            // second events keep at most one role to bound sentence length
            if (sentence_events[1].roles.size() > 1) sentence_events[1].roles.resize(1);
        }
        std::vector<std::vector<bool>> in_text;
        for (std::size_t e = 0; e < sentence_events.size(); ++e) {
            std::vector<bool> flags;
            for (std::size_t k = 0; k < sentence_events[e].roles.size(); ++k) {
                flags.push_back(e != 0 || !rng.chance(spec.caption_role_drop_prob));
            }
            in_text.push_back(std::move(flags));
        }
        auto realized = realize_sentence(s, sentence_events, in_text, /*allow_ambiguous=*/true);
        realize_image(m, &ev);

        // multimedia gold event + per-role arguments
        EventRecord rec;
        rec.id = next_event_id();
        rec.type = ev.type;
        rec.trigger = TriggerGrounding{s.id, realized.trigger_spans[0].first,
                                       realized.trigger_spans[0].second};
        rec.image_id = m.id;
        rec.provenance = Provenance::Multimedia;
        corpus.gold_events.push_back(rec);
        for (std::size_t k = 0; k < ev.roles.size(); ++k) {
            ArgumentRecord arg;
            arg.event_id = rec.id;
            arg.role = ev.roles[k].role;
            const std::string& eid = realized.role_entity_ids[0][k];
            if (!eid.empty()) {
                const EntityMention* ent = s.find_entity(eid);
                arg.span = TextGrounding{s.id, ent->start, ent->end};
            }
            arg.box = BoxGrounding{m.id, ev.roles[k].box()};
            corpus.gold_arguments.push_back(arg);
        }
        // trailing text-only events in the same sentence
        for (std::size_t e = 1; e < sentence_events.size(); ++e) {
            EventRecord extra;
            extra.id = next_event_id();
            extra.type = sentence_events[e].type;
            extra.trigger = TriggerGrounding{s.id, realized.trigger_spans[e].first,
                                             realized.trigger_spans[e].second};
            extra.provenance = Provenance::TextOnly;
            corpus.gold_events.push_back(extra);
            for (std::size_t k = 0; k < sentence_events[e].roles.size(); ++k) {
                const std::string& eid = realized.role_entity_ids[e][k];
                if (eid.empty()) continue;
                const EntityMention* ent = s.find_entity(eid);
                ArgumentRecord arg;
                arg.event_id = extra.id;
                arg.role = sentence_events[e].roles[k].role;
                arg.span = TextGrounding{s.id, ent->start, ent->end};
                corpus.gold_arguments.push_back(arg);
            }
        }

        corpus.sentences.push_back(std::move(s));
        corpus.images.push_back(std::move(m));
        corpus.pairs.push_back(
            CaptionPair{"p" + std::to_string(i), "s" + std::to_string(i), "m" + std::to_string(i)});
    }

    // --- unpaired sentences (text-only events) ---
    for (std::size_t i = n_paired; i < spec.n_sentences; ++i) {
        SentenceUnit s;
        s.id = "s" + std::to_string(i);
        std::vector<EventInstance> events{make_instance(i)};
        if (rng.chance(spec.second_event_prob * 0.5)) {
            events.push_back(make_instance(rng.index(1000)));
            if (events[1].roles.size() > 1) events[1].roles.resize(1);
        }
        std::vector<std::vector<bool>> in_text;
        for (const auto& ev : events) in_text.emplace_back(ev.roles.size(), true);
        auto realized = realize_sentence(s, events, in_text, /*allow_ambiguous=*/false);
        for (std::size_t e = 0; e < events.size(); ++e) {
            EventRecord rec;
            rec.id = next_event_id();
            rec.type = events[e].type;
            rec.trigger = TriggerGrounding{s.id, realized.trigger_spans[e].first,
                                           realized.trigger_spans[e].second};
            rec.provenance = Provenance::TextOnly;
            corpus.gold_events.push_back(rec);
            for (std::size_t k = 0; k < events[e].roles.size(); ++k) {
                const std::string& eid = realized.role_entity_ids[e][k];
                if (eid.empty()) continue;
                const EntityMention* ent = s.find_entity(eid);
                ArgumentRecord arg;
                arg.event_id = rec.id;
                arg.role = events[e].roles[k].role;
                arg.span = TextGrounding{s.id, ent->start, ent->end};
                corpus.gold_arguments.push_back(arg);
            }
        }
        corpus.sentences.push_back(std::move(s));
    }

    // --- unpaired images (image-only events or non-events) ---
    for (std::size_t i = n_paired; i < spec.n_images; ++i) {
        ImageUnit m;
        m.id = "m" + std::to_string(i);
        if (rng.chance(0.8)) {
            EventInstance ev = make_instance(i);
            realize_image(m, &ev);
            EventRecord rec;
            rec.id = next_event_id();
            rec.type = ev.type;
            rec.image_id = m.id;
            rec.provenance = Provenance::ImageOnly;
            corpus.gold_events.push_back(rec);
            for (const auto& ri : ev.roles) {
                ArgumentRecord arg;
                arg.event_id = rec.id;
                arg.role = ri.role;
                arg.box = BoxGrounding{m.id, ri.box()};
                corpus.gold_arguments.push_back(arg);
            }
        } else {
            realize_image(m, nullptr);
        }
        corpus.images.push_back(std::move(m));
    }

    corpus.reindex();
    validate_corpus(corpus);
    return corpus;
}

// Generates and writes a corpus directory.
inline void synth_generate(std::uint64_t seed, const SynthSpec& spec,
                           const std::filesystem::path& out_dir) {
    save_corpus(out_dir, synth_corpus(seed, spec));
}

}  // namespace wase
