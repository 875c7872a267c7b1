#pragma once

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "wase/data.hpp"

namespace wase {

using json = nlohmann::ordered_json;

// ---------- little-endian binary primitives ----------

namespace detail {

inline void put_u32(std::ostream& os, std::uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v & 0xff),
                          static_cast<unsigned char>((v >> 8) & 0xff),
                          static_cast<unsigned char>((v >> 16) & 0xff),
                          static_cast<unsigned char>((v >> 24) & 0xff)};
    os.write(reinterpret_cast<const char*>(b), 4);
}

inline bool get_u32(std::istream& is, std::uint32_t& v) {
    unsigned char b[4];
    if (!is.read(reinterpret_cast<char*>(b), 4)) return false;
    v = static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
        (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
    return true;
}

inline void put_f32(std::ostream& os, float f) {
    std::uint32_t v;
    static_assert(sizeof(v) == sizeof(f));
    std::memcpy(&v, &f, 4);
    put_u32(os, v);
}

inline bool get_f32(std::istream& is, float& f) {
    std::uint32_t v;
    if (!get_u32(is, v)) return false;
    std::memcpy(&f, &v, 4);
    return true;
}

}  // namespace detail

// ---------- features.bin ----------

inline constexpr char kFeatureMagic[] = "WASEF1";

// id -> tensor blocks; payload is f32, widened to f64 in memory.
inline void write_features(const std::filesystem::path& path,
                           const std::vector<std::pair<std::string, const Tensor*>>& records) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw Error("cannot write " + path.string());
    os.write(kFeatureMagic, 6);
    for (const auto& [id, tensor] : records) {
        detail::put_u32(os, static_cast<std::uint32_t>(id.size()));
        os.write(id.data(), static_cast<std::streamsize>(id.size()));
        detail::put_u32(os, static_cast<std::uint32_t>(tensor->rank()));
        for (std::size_t d = 0; d < tensor->rank(); ++d) {
            detail::put_u32(os, static_cast<std::uint32_t>(tensor->extent(d)));
        }
        for (std::size_t i = 0; i < tensor->numel(); ++i) {
            detail::put_f32(os, static_cast<float>((*tensor)[i]));
        }
    }
}

inline std::map<std::string, Tensor> read_features(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw Error("cannot read " + path.string());
    char magic[6];
    if (!is.read(magic, 6) || std::string(magic, 6) != kFeatureMagic) {
        throw ParseError(path.string() + ": bad magic (expected WASEF1)");
    }
    std::map<std::string, Tensor> out;
    std::uint32_t id_len;
    while (detail::get_u32(is, id_len)) {
        std::string id(id_len, '\0');
        if (!is.read(id.data(), id_len)) throw ParseError(path.string() + ": truncated record id");
        std::uint32_t rank;
        if (!detail::get_u32(is, rank) || rank > 8) {
            throw ParseError(path.string() + ": bad rank for record '" + id + "'");
        }
        std::vector<std::size_t> shape;
        std::size_t numel = 1;
        for (std::uint32_t d = 0; d < rank; ++d) {
            std::uint32_t e;
            if (!detail::get_u32(is, e)) {
                throw ParseError(path.string() + ": truncated extents for record '" + id + "'");
            }
            shape.push_back(e);
            numel *= e;
        }
        std::vector<double> values(numel);
        for (std::size_t i = 0; i < numel; ++i) {
            float f;
            if (!detail::get_f32(is, f)) {
                throw ParseError(path.string() + ": truncated payload for record '" + id + "'");
            }
            values[i] = static_cast<double>(f);
        }
        if (numel == 0) {
            out.emplace(id, Tensor());  // zero-extent record stands for "absent"
        } else {
            out.emplace(id, Tensor(std::move(shape), std::move(values)));
        }
    }
    return out;
}

// ---------- JSON converters ----------

inline json box_to_json(const BoundingBox& b) { return json::array({b.x1, b.y1, b.x2, b.y2}); }

inline BoundingBox box_from_json(const json& j) {
    if (!j.is_array() || j.size() != 4) throw ValidationError("box must be [x1, y1, x2, y2]");
    return BoundingBox{j[0].get<double>(), j[1].get<double>(), j[2].get<double>(),
                       j[3].get<double>()};
}

inline json ontology_to_json(const Ontology& o) {
    json j;
    j["event_types"] = o.event_types;
    json roles = json::object();
    for (const auto& t : o.event_types) roles[t] = o.roles_by_type.at(t);
    j["argument_roles"] = roles;
    j["verbs"] = o.verbs;
    j["verb_to_event"] = o.verb_to_event;
    j["nouns"] = o.nouns;
    j["situation_roles"] = o.situation_roles;
    j["token_vocabulary"] = o.token_vocabulary;
    j["pos_tag_vocabulary"] = o.pos_tag_vocabulary;
    j["entity_tag_vocabulary"] = o.entity_tag_vocabulary;
    j["edge_label_vocabulary"] = o.edge_label_vocabulary;
    j["max_sentence_length"] = o.max_sentence_length;
    return j;
}

inline Ontology ontology_from_json(const json& j) {
    Ontology o;
    o.event_types = j.at("event_types").get<std::vector<std::string>>();
    for (const auto& [type, roles] : j.at("argument_roles").items()) {
        o.roles_by_type[type] = roles.get<std::vector<std::string>>();
    }
    o.verbs = j.at("verbs").get<std::vector<std::string>>();
    o.verb_to_event = j.at("verb_to_event").get<std::map<std::string, std::string>>();
    o.nouns = j.at("nouns").get<std::vector<std::string>>();
    o.situation_roles = j.at("situation_roles").get<std::vector<std::string>>();
    o.token_vocabulary = j.at("token_vocabulary").get<std::vector<std::string>>();
    o.pos_tag_vocabulary = j.at("pos_tag_vocabulary").get<std::vector<std::string>>();
    o.entity_tag_vocabulary = j.at("entity_tag_vocabulary").get<std::vector<std::string>>();
    o.edge_label_vocabulary = j.at("edge_label_vocabulary").get<std::vector<std::string>>();
    o.max_sentence_length = j.at("max_sentence_length").get<std::size_t>();
    return o;
}

inline json sentence_to_json(const SentenceUnit& s) {
    json j;
    j["id"] = s.id;
    j["tokens"] = s.tokens;
    j["pos_tags"] = s.pos_tags;
    j["entity_tags"] = s.entity_tags;
    j["positions"] = s.positions;
    json edges = json::array();
    for (const auto& e : s.edges) {
        edges.push_back(json{{"src", e.src}, {"dst", e.dst}, {"label", e.label}});
    }
    j["edges"] = edges;
    json ents = json::array();
    for (const auto& e : s.entities) {
        ents.push_back(json{{"id", e.id}, {"start", e.start}, {"end", e.end}});
    }
    j["entities"] = ents;
    j["gold_bio"] = s.gold_bio;
    json args = json::array();
    for (const auto& a : s.gold_arguments) {
        args.push_back(json{{"trigger_start", a.trigger_start},
                            {"trigger_end", a.trigger_end},
                            {"entity_id", a.entity_id},
                            {"role", a.role}});
    }
    j["gold_arguments"] = args;
    return j;
}

inline SentenceUnit sentence_from_json(const json& j) {
    SentenceUnit s;
    s.id = j.at("id").get<std::string>();
    s.tokens = j.at("tokens").get<std::vector<std::string>>();
    s.pos_tags = j.at("pos_tags").get<std::vector<std::string>>();
    s.entity_tags = j.at("entity_tags").get<std::vector<std::string>>();
    s.positions = j.at("positions").get<std::vector<std::size_t>>();
    for (const auto& e : j.at("edges")) {
        s.edges.push_back(TypedEdge{e.at("src").get<std::size_t>(), e.at("dst").get<std::size_t>(),
                                    e.at("label").get<std::string>()});
    }
    for (const auto& e : j.at("entities")) {
        s.entities.push_back(EntityMention{e.at("id").get<std::string>(),
                                           e.at("start").get<std::size_t>(),
                                           e.at("end").get<std::size_t>()});
    }
    s.gold_bio = j.at("gold_bio").get<std::vector<std::string>>();
    for (const auto& a : j.at("gold_arguments")) {
        s.gold_arguments.push_back(GoldArgumentLabel{
            a.at("trigger_start").get<std::size_t>(), a.at("trigger_end").get<std::size_t>(),
            a.at("entity_id").get<std::string>(), a.at("role").get<std::string>()});
    }
    return s;
}

inline json image_to_json(const ImageUnit& m) {
    json j;
    j["id"] = m.id;
    json objs = json::array();
    for (const auto& o : m.objects) objs.push_back(json{{"box", box_to_json(o.box)}});
    j["objects"] = objs;
    j["gold_verb"] = m.gold_verb;
    json roles = json::array();
    for (const auto& r : m.gold_roles) {
        json boxes = json::array();
        for (const auto& b : r.instance_boxes) boxes.push_back(box_to_json(b));
        roles.push_back(json{{"role", r.role},
                             {"noun", r.noun},
                             {"union_box", box_to_json(r.union_box)},
                             {"instance_boxes", boxes}});
    }
    j["gold_roles"] = roles;
    return j;
}

inline ImageUnit image_from_json(const json& j) {
    ImageUnit m;
    m.id = j.at("id").get<std::string>();
    for (const auto& o : j.at("objects")) {
        m.objects.push_back(DetectedObject{box_from_json(o.at("box"))});
    }
    m.gold_verb = j.at("gold_verb").get<std::string>();
    for (const auto& r : j.at("gold_roles")) {
        GoldRoleAnnotation g;
        g.role = r.at("role").get<std::string>();
        g.noun = r.at("noun").get<std::string>();
        g.union_box = box_from_json(r.at("union_box"));
        for (const auto& b : r.at("instance_boxes")) g.instance_boxes.push_back(box_from_json(b));
        m.gold_roles.push_back(std::move(g));
    }
    return m;
}

inline json event_to_json(const EventRecord& e) {
    json j;
    j["id"] = e.id;
    j["type"] = e.type;
    if (e.trigger) {
        j["sentence_id"] = e.trigger->sentence_id;
        j["trigger_start"] = e.trigger->start;
        j["trigger_end"] = e.trigger->end;
    }
    if (e.image_id) j["image_id"] = *e.image_id;
    j["provenance"] = to_string(e.provenance);
    if (e.similarity) j["similarity"] = *e.similarity;
    return j;
}

inline EventRecord event_from_json(const json& j) {
    EventRecord e;
    e.id = j.at("id").get<std::string>();
    e.type = j.at("type").get<std::string>();
    if (j.contains("sentence_id")) {
        e.trigger = TriggerGrounding{j.at("sentence_id").get<std::string>(),
                                     j.at("trigger_start").get<std::size_t>(),
                                     j.at("trigger_end").get<std::size_t>()};
    }
    if (j.contains("image_id")) e.image_id = j.at("image_id").get<std::string>();
    e.provenance = provenance_from_string(j.at("provenance").get<std::string>());
    if (j.contains("similarity")) e.similarity = j.at("similarity").get<double>();
    return e;
}

inline json argument_to_json(const ArgumentRecord& a) {
    json j;
    j["event_id"] = a.event_id;
    j["role"] = a.role;
    if (a.span) {
        j["sentence_id"] = a.span->sentence_id;
        j["start"] = a.span->start;
        j["end"] = a.span->end;
    }
    if (a.box) {
        j["image_id"] = a.box->image_id;
        j["box"] = box_to_json(a.box->box);
    }
    return j;
}

inline ArgumentRecord argument_from_json(const json& j) {
    ArgumentRecord a;
    a.event_id = j.at("event_id").get<std::string>();
    a.role = j.at("role").get<std::string>();
    if (j.contains("sentence_id")) {
        a.span = TextGrounding{j.at("sentence_id").get<std::string>(),
                               j.at("start").get<std::size_t>(), j.at("end").get<std::size_t>()};
    }
    if (j.contains("image_id")) {
        a.box = BoxGrounding{j.at("image_id").get<std::string>(), box_from_json(j.at("box"))};
    }
    return a;
}

// ---------- jsonl helpers ----------

inline void write_jsonl(const std::filesystem::path& path, const std::vector<json>& lines) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw Error("cannot write " + path.string());
    for (const auto& j : lines) os << j.dump() << "\n";
}

inline std::vector<json> read_jsonl(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw Error("cannot read " + path.string());
    std::vector<json> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty()) continue;
        try {
            out.push_back(json::parse(line));
        } catch (const json::exception& e) {
            throw ParseError(path.filename().string() + " line " + std::to_string(lineno) + ": " +
                             e.what());
        }
    }
    return out;
}

// ---------- corpus directory ----------

inline void save_corpus(const std::filesystem::path& dir, const Corpus& corpus) {
    std::filesystem::create_directories(dir);
    {
        std::ofstream os(dir / "ontology.json", std::ios::binary);
        if (!os) throw Error("cannot write " + (dir / "ontology.json").string());
        os << ontology_to_json(corpus.ontology).dump(2) << "\n";
    }
    std::vector<json> lines;
    for (const auto& s : corpus.sentences) lines.push_back(sentence_to_json(s));
    write_jsonl(dir / "sentences.jsonl", lines);

    lines.clear();
    std::vector<std::pair<std::string, const Tensor*>> features;
    for (const auto& m : corpus.images) {
        lines.push_back(image_to_json(m));
        features.emplace_back(m.id + "#global", &m.global_feature);
        features.emplace_back(m.id + "#fmap", &m.feature_map);
        if (!m.objects.empty()) features.emplace_back(m.id + "#objects", &m.object_features);
    }
    write_jsonl(dir / "images.jsonl", lines);
    write_features(dir / "features.bin", features);

    lines.clear();
    for (const auto& p : corpus.pairs) {
        lines.push_back(json{{"id", p.id}, {"sentence_id", p.sentence_id}, {"image_id", p.image_id}});
    }
    write_jsonl(dir / "pairs.jsonl", lines);

    lines.clear();
    for (const auto& e : corpus.gold_events) lines.push_back(event_to_json(e));
    write_jsonl(dir / "gold_events.jsonl", lines);

    lines.clear();
    for (const auto& a : corpus.gold_arguments) lines.push_back(argument_to_json(a));
    write_jsonl(dir / "gold_arguments.jsonl", lines);
}

inline Corpus load_corpus(const std::filesystem::path& dir) {
    Corpus corpus;
    {
        std::ifstream is(dir / "ontology.json");
        if (!is) throw Error("cannot read " + (dir / "ontology.json").string());
        json j;
        try {
            is >> j;
        } catch (const json::exception& e) {
            throw ParseError("ontology.json: " + std::string(e.what()));
        }
        corpus.ontology = ontology_from_json(j);
    }
    for (const auto& j : read_jsonl(dir / "sentences.jsonl")) {
        corpus.sentences.push_back(sentence_from_json(j));
    }
    auto features = read_features(dir / "features.bin");
    auto feature = [&](const std::string& key) -> Tensor {
        auto it = features.find(key);
        if (it == features.end()) {
            throw ValidationError("features.bin: missing record '" + key + "'");
        }
        return it->second;
    };
    for (const auto& j : read_jsonl(dir / "images.jsonl")) {
        ImageUnit m = image_from_json(j);
        m.global_feature = feature(m.id + "#global");
        m.feature_map = feature(m.id + "#fmap");
        if (!m.objects.empty()) m.object_features = feature(m.id + "#objects");
        corpus.images.push_back(std::move(m));
    }
    for (const auto& j : read_jsonl(dir / "pairs.jsonl")) {
        corpus.pairs.push_back(CaptionPair{j.at("id").get<std::string>(),
                                           j.at("sentence_id").get<std::string>(),
                                           j.at("image_id").get<std::string>()});
    }
    for (const auto& j : read_jsonl(dir / "gold_events.jsonl")) {
        corpus.gold_events.push_back(event_from_json(j));
    }
    for (const auto& j : read_jsonl(dir / "gold_arguments.jsonl")) {
        corpus.gold_arguments.push_back(argument_from_json(j));
    }
    corpus.reindex();
    validate_corpus(corpus);
    return corpus;
}

}  // namespace wase
