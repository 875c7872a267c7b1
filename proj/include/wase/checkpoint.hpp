#pragma once

#include <array>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>

#include <json.hpp>

#include "wase/corpus_io.hpp"
#include "wase/model.hpp"

namespace wase {

inline constexpr char kCheckpointMagic[] = "WASEC1";
inline constexpr std::uint16_t kCheckpointVersion = 1;

namespace detail {

inline const std::array<std::uint32_t, 256>& crc32_table() {
    static const std::array<std::uint32_t, 256> table = [] {
        std::array<std::uint32_t, 256> t{};
        for (std::uint32_t i = 0; i < 256; ++i) {
            std::uint32_t c = i;
            for (int k = 0; k < 8; ++k) c = (c & 1) ? 0xEDB88320u ^ (c >> 1) : c >> 1;
            t[i] = c;
        }
        return t;
    }();
    return table;
}

inline std::uint32_t crc32(const std::string& data) {
    std::uint32_t c = 0xFFFFFFFFu;
    for (unsigned char byte : data) c = crc32_table()[(c ^ byte) & 0xFF] ^ (c >> 8);
    return c ^ 0xFFFFFFFFu;
}

inline void put_u16(std::ostream& os, std::uint16_t v) {
    unsigned char b[2] = {static_cast<unsigned char>(v & 0xff),
                          static_cast<unsigned char>((v >> 8) & 0xff)};
    os.write(reinterpret_cast<const char*>(b), 2);
}

inline void put_u64(std::ostream& os, std::uint64_t v) {
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
    os.write(reinterpret_cast<const char*>(b), 8);
}

inline bool get_u16(std::istream& is, std::uint16_t& v) {
    unsigned char b[2];
    if (!is.read(reinterpret_cast<char*>(b), 2)) return false;
    v = static_cast<std::uint16_t>(b[0] | (b[1] << 8));
    return true;
}

inline bool get_u64(std::istream& is, std::uint64_t& v) {
    unsigned char b[8];
    if (!is.read(reinterpret_cast<char*>(b), 8)) return false;
    v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    return true;
}

}  // namespace detail

// Everything needed to reproduce training state and forward outputs
// bit-for-bit: config echo, ontology, optimizer scalars, epoch counter,
// and every named f64 tensor (parameters plus Adam moments).
struct Checkpoint {
    ModelConfig config;
    Ontology ontology;
    OptMethod opt_method = OptMethod::Adam;
    double learning_rate = 1e-3;
    std::int64_t opt_step_count = 0;
    std::int64_t epoch = 0;
    std::map<std::string, Tensor> tensors;
};

inline void save_checkpoint(const std::filesystem::path& path, const Model& model,
                            const OptimizerState& opt, std::int64_t epoch) {
    nlohmann::ordered_json meta;
    nlohmann::ordered_json cfg_json;
    to_json(cfg_json, model.cfg);
    meta["model_config"] = cfg_json;
    meta["ontology"] = ontology_to_json(model.onto);
    meta["optimizer"] = {{"method", opt.method == OptMethod::Adam ? "adam" : "sgd"},
                         {"learning_rate", opt.learning_rate},
                         {"step_count", opt.step_count}};
    meta["epoch"] = epoch;
    const std::string config_block = meta.dump();

    // body: config block + named tensors, covered by the checksum
    std::ostringstream body;
    detail::put_u32(body, static_cast<std::uint32_t>(config_block.size()));
    body.write(config_block.data(), static_cast<std::streamsize>(config_block.size()));

    std::map<std::string, const Tensor*> tensors;
    for (const auto& [name, t] : model.store.all()) tensors.emplace(name, &t);
    for (const auto& [name, t] : opt.m1) tensors.emplace("opt.m1." + name, &t);
    for (const auto& [name, t] : opt.m2) tensors.emplace("opt.m2." + name, &t);

    detail::put_u32(body, static_cast<std::uint32_t>(tensors.size()));
    for (const auto& [name, t] : tensors) {
        detail::put_u32(body, static_cast<std::uint32_t>(name.size()));
        body.write(name.data(), static_cast<std::streamsize>(name.size()));
        detail::put_u32(body, static_cast<std::uint32_t>(t->rank()));
        for (std::size_t d = 0; d < t->rank(); ++d) {
            detail::put_u32(body, static_cast<std::uint32_t>(t->extent(d)));
        }
        for (std::size_t i = 0; i < t->numel(); ++i) {
            std::uint64_t bits;
            const double v = (*t)[i];
            std::memcpy(&bits, &v, 8);
            detail::put_u64(body, bits);
        }
    }
    const std::string payload = body.str();

    std::ofstream os(path, std::ios::binary);
    if (!os) throw Error("cannot write " + path.string());
    os.write(kCheckpointMagic, 6);
    detail::put_u16(os, kCheckpointVersion);
    detail::put_u32(os, detail::crc32(payload));
    os.write(payload.data(), static_cast<std::streamsize>(payload.size()));
}

inline Checkpoint load_checkpoint(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw Error("cannot read " + path.string());
    char magic[6];
    if (!is.read(magic, 6) || std::string(magic, 6) != kCheckpointMagic) {
        throw ParseError(path.string() + ": bad magic (expected WASEC1)");
    }
    std::uint16_t version;
    if (!detail::get_u16(is, version)) throw ChecksumError(path.string() + ": truncated header");
    if (version != kCheckpointVersion) {
        throw VersionError(path.string() + ": unsupported version " + std::to_string(version));
    }
    std::uint32_t stored_crc;
    if (!detail::get_u32(is, stored_crc)) throw ChecksumError(path.string() + ": truncated header");
    std::ostringstream rest;
    rest << is.rdbuf();
    const std::string payload = rest.str();
    if (detail::crc32(payload) != stored_crc) {
        throw ChecksumError(path.string() + ": checksum mismatch (corrupt or truncated)");
    }

    std::istringstream body(payload);
    std::uint32_t config_len;
    if (!detail::get_u32(body, config_len)) throw ChecksumError(path.string() + ": truncated body");
    std::string config_block(config_len, '\0');
    if (!body.read(config_block.data(), config_len)) {
        throw ChecksumError(path.string() + ": truncated config block");
    }
    Checkpoint ckpt;
    nlohmann::ordered_json meta;
    try {
        meta = nlohmann::ordered_json::parse(config_block);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(path.string() + ": config block: " + e.what());
    }
    from_json(meta.at("model_config"), ckpt.config);
    ckpt.ontology = ontology_from_json(meta.at("ontology"));
    const auto& opt = meta.at("optimizer");
    ckpt.opt_method = opt.at("method").get<std::string>() == "adam" ? OptMethod::Adam
                                                                    : OptMethod::PlainSgd;
    ckpt.learning_rate = opt.at("learning_rate").get<double>();
    ckpt.opt_step_count = opt.at("step_count").get<std::int64_t>();
    ckpt.epoch = meta.at("epoch").get<std::int64_t>();

    std::uint32_t tensor_count;
    if (!detail::get_u32(body, tensor_count)) {
        throw ChecksumError(path.string() + ": truncated tensor count");
    }
    for (std::uint32_t t = 0; t < tensor_count; ++t) {
        std::uint32_t name_len;
        if (!detail::get_u32(body, name_len)) throw ChecksumError(path.string() + ": truncated");
        std::string name(name_len, '\0');
        if (!body.read(name.data(), name_len)) throw ChecksumError(path.string() + ": truncated");
        std::uint32_t rank;
        if (!detail::get_u32(body, rank) || rank > 8) {
            throw ChecksumError(path.string() + ": bad tensor rank for '" + name + "'");
        }
        std::vector<std::size_t> shape;
        std::size_t numel = 1;
        for (std::uint32_t d = 0; d < rank; ++d) {
            std::uint32_t e;
            if (!detail::get_u32(body, e)) throw ChecksumError(path.string() + ": truncated");
            shape.push_back(e);
            numel *= e;
        }
        std::vector<double> values(numel);
        for (std::size_t i = 0; i < numel; ++i) {
            std::uint64_t bits;
            if (!detail::get_u64(body, bits)) throw ChecksumError(path.string() + ": truncated");
            std::memcpy(&values[i], &bits, 8);
        }
        ckpt.tensors.emplace(std::move(name), Tensor(std::move(shape), std::move(values)));
    }
    return ckpt;
}

// Rebuilds a model (and optionally the optimizer) from a checkpoint.
inline std::unique_ptr<Model> restore_model(const Checkpoint& ckpt,
                                            OptimizerState* opt = nullptr) {
    auto model = std::make_unique<Model>(ckpt.config, ckpt.ontology);
    model->init_params(0);  // creates the parameter set; values overwritten below
    for (const auto& [name, t] : model->store.all()) {
        auto it = ckpt.tensors.find(name);
        if (it == ckpt.tensors.end()) {
            throw ValidationError("checkpoint missing parameter '" + name + "'");
        }
        require_same_shape(t, it->second, "restore_model");
        model->store.value(name) = it->second;
    }
    if (opt) {
        opt->method = ckpt.opt_method;
        opt->learning_rate = ckpt.learning_rate;
        opt->step_count = ckpt.opt_step_count;
        opt->m1.clear();
        opt->m2.clear();
        for (const auto& [name, t] : ckpt.tensors) {
            if (name.rfind("opt.m1.", 0) == 0) opt->m1.emplace(name.substr(7), t);
            if (name.rfind("opt.m2.", 0) == 0) opt->m2.emplace(name.substr(7), t);
        }
    }
    return model;
}

}  // namespace wase
