#pragma once

#include <algorithm>
#include <map>
#include <string>
#include <vector>

#include "wase/errors.hpp"

namespace wase {

// Event/argument schema plus the closed vocabularies the encoders embed.
// The default instance carries the eight newsworthy event types with
// their role sets; alternative schemas load from ontology.json.
struct Ontology {
    std::vector<std::string> event_types;
    std::map<std::string, std::vector<std::string>> roles_by_type;
    std::vector<std::string> verbs;
    std::map<std::string, std::string> verb_to_event;  // verbs may be absent (no event)
    std::vector<std::string> nouns;
    std::vector<std::string> situation_roles;

    // Closed vocabularies for the from-scratch embedding tables.
    std::vector<std::string> token_vocabulary;
    std::vector<std::string> pos_tag_vocabulary;
    std::vector<std::string> entity_tag_vocabulary;
    std::vector<std::string> edge_label_vocabulary;
    std::size_t max_sentence_length = 64;

    // {O} then B-/I- per event type, in type order.
    std::vector<std::string> bio_labels() const {
        std::vector<std::string> out{"O"};
        for (const auto& t : event_types) {
            out.push_back("B-" + t);
            out.push_back("I-" + t);
        }
        return out;
    }

    // Distinct argument roles in first-appearance order, shared across
    // modalities by the argument classifier.
    std::vector<std::string> role_vocabulary() const {
        std::vector<std::string> out;
        for (const auto& t : event_types) {
            for (const auto& r : roles_by_type.at(t)) {
                if (std::find(out.begin(), out.end(), r) == out.end()) out.push_back(r);
            }
        }
        return out;
    }

    bool is_event_type(const std::string& t) const {
        return std::find(event_types.begin(), event_types.end(), t) != event_types.end();
    }

    bool type_has_role(const std::string& type, const std::string& role) const {
        auto it = roles_by_type.find(type);
        if (it == roles_by_type.end()) return false;
        return std::find(it->second.begin(), it->second.end(), role) != it->second.end();
    }

    void validate() const {
        if (event_types.empty()) throw ValidationError("ontology: no event types");
        for (const auto& t : event_types) {
            auto it = roles_by_type.find(t);
            if (it == roles_by_type.end() || it->second.empty()) {
                throw ValidationError("ontology: event type '" + t + "' declares no roles");
            }
        }
        for (const auto& [verb, type] : verb_to_event) {
            if (std::find(verbs.begin(), verbs.end(), verb) == verbs.end()) {
                throw ValidationError("ontology: mapped verb '" + verb + "' not in verb vocabulary");
            }
            if (!is_event_type(type)) {
                throw ValidationError("ontology: verb '" + verb + "' maps to unknown event type '" +
                                      type + "'");
            }
        }
    }

    static Ontology default_ontology();
};

inline Ontology Ontology::default_ontology() {
    Ontology o;
    o.event_types = {"Movement.Transport",  "Conflict.Attack",    "Conflict.Demonstrate",
                     "Justice.ArrestJail",  "Contact.PhoneWrite", "Contact.Meet",
                     "Life.Die",            "Transaction.TransferMoney"};
    o.roles_by_type = {
        {"Movement.Transport", {"Agent", "Artifact", "Vehicle", "Destination", "Origin"}},
        {"Conflict.Attack", {"Attacker", "Target", "Instrument", "Place"}},
        {"Conflict.Demonstrate", {"Entity", "Police", "Instrument", "Place"}},
        {"Justice.ArrestJail", {"Agent", "Person", "Instrument", "Place"}},
        {"Contact.PhoneWrite", {"Entity", "Instrument", "Place"}},
        {"Contact.Meet", {"Participant", "Place"}},
        {"Life.Die", {"Agent", "Instrument", "Victim", "Place"}},
        {"Transaction.TransferMoney", {"Giver", "Recipient", "Money"}},
    };
    o.verbs = {"hauling",  "ferrying",  "storming", "shelling", "marching", "picketing",
               "detaining", "handcuffing", "phoning", "texting", "greeting", "convening",
               "drowning", "capsizing", "paying",   "donating", "jogging",  "strolling"};
    o.verb_to_event = {
        {"hauling", "Movement.Transport"},      {"ferrying", "Movement.Transport"},
        {"storming", "Conflict.Attack"},        {"shelling", "Conflict.Attack"},
        {"marching", "Conflict.Demonstrate"},   {"picketing", "Conflict.Demonstrate"},
        {"detaining", "Justice.ArrestJail"},    {"handcuffing", "Justice.ArrestJail"},
        {"phoning", "Contact.PhoneWrite"},      {"texting", "Contact.PhoneWrite"},
        {"greeting", "Contact.Meet"},           {"convening", "Contact.Meet"},
        {"drowning", "Life.Die"},               {"capsizing", "Life.Die"},
        {"paying", "Transaction.TransferMoney"}, {"donating", "Transaction.TransferMoney"},
        // jogging/strolling map to nothing
    };
    o.situation_roles = o.role_vocabulary();
    o.nouns = {"person", "crowd",  "soldier", "officer", "car",   "truck",  "ship",
               "building", "street", "rifle",   "phone",  "banner", "cash",  "crate"};
    o.pos_tag_vocabulary = {"X", "VERB", "NOUN", "DET", "ADP", "ADJ"};
    o.entity_tag_vocabulary = {"O", "PER", "ORG", "VEH", "WEA", "FAC", "GPE", "MONEY"};
    o.edge_label_vocabulary = {"ARG0", "ARG1", "ARG2", "instrument", "location",
                               "destination", "source", "mod"};
    return o;
}

// Rewrites any I-t that does not continue a same-type B-t/I-t into B-t.
// Well-formed sequences pass through unchanged; the rewrite is idempotent.
inline std::vector<std::string> normalize_bio(const std::vector<std::string>& labels,
                                              const std::vector<std::string>& label_set) {
    auto known = [&](const std::string& l) {
        return std::find(label_set.begin(), label_set.end(), l) != label_set.end();
    };
    std::vector<std::string> out;
    out.reserve(labels.size());
    std::string prev_type;  // type continued by the previous token, "" if none
    for (const auto& l : labels) {
        if (!known(l)) throw VocabularyError("normalize_bio: unknown label '" + l + "'");
        if (l == "O") {
            out.push_back(l);
            prev_type.clear();
        } else if (l.rfind("B-", 0) == 0) {
            out.push_back(l);
            prev_type = l.substr(2);
        } else {  // I-t
            const std::string t = l.substr(2);
            if (t == prev_type) {
                out.push_back(l);
            } else {
                out.push_back("B-" + t);
            }
            prev_type = t;
        }
    }
    return out;
}

}  // namespace wase
