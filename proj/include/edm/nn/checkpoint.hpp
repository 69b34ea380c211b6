#pragma once

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "edm/core/error.hpp"
#include "edm/nn/modules.hpp"

// Checkpoint container: 8-byte magic, little-endian u32 JSON metadata length,
// metadata bytes, u32 tensor count, then per tensor a u32-length name, u32
// ndim, i32 dims and raw little-endian float64 payload. Doubles are stored
// bit-exactly, so save -> load -> infer reproduces inference exactly.

namespace edm::nn {

constexpr char kCheckpointMagic[8] = {'E', 'D', 'M', 'C', 'K', 'P', 'T', '1'};

namespace detail {

inline void put_u32(std::ostream& out, std::uint32_t v) {
    std::uint8_t b[4] = {static_cast<std::uint8_t>(v), static_cast<std::uint8_t>(v >> 8),
                         static_cast<std::uint8_t>(v >> 16), static_cast<std::uint8_t>(v >> 24)};
    out.write(reinterpret_cast<const char*>(b), 4);
}

inline std::uint32_t get_u32(std::istream& in) {
    std::uint8_t b[4];
    in.read(reinterpret_cast<char*>(b), 4);
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

} // namespace detail

inline void save_checkpoint(const std::string& path, const nlohmann::json& meta,
                            const std::vector<std::pair<std::string, const Tensor*>>& tensors) {
    if (auto parent = std::filesystem::absolute(std::filesystem::path(path)).parent_path();
        !parent.empty())
        std::filesystem::create_directories(parent);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    expect(out.is_open(), "cannot write checkpoint: " + path);
    out.write(kCheckpointMagic, 8);
    std::string meta_str = meta.dump();
    detail::put_u32(out, static_cast<std::uint32_t>(meta_str.size()));
    out.write(meta_str.data(), static_cast<std::streamsize>(meta_str.size()));
    detail::put_u32(out, static_cast<std::uint32_t>(tensors.size()));
    for (const auto& [name, t] : tensors) {
        detail::put_u32(out, static_cast<std::uint32_t>(name.size()));
        out.write(name.data(), static_cast<std::streamsize>(name.size()));
        detail::put_u32(out, static_cast<std::uint32_t>(t->ndim()));
        for (int d = 0; d < t->ndim(); ++d) detail::put_u32(out, static_cast<std::uint32_t>(t->dim(d)));
        out.write(reinterpret_cast<const char*>(t->data()),
                  static_cast<std::streamsize>(t->numel() * sizeof(double)));
    }
    expect(out.good(), "write failed: " + path);
}

struct Checkpoint {
    nlohmann::json meta;
    std::vector<std::pair<std::string, Tensor>> tensors;

    const Tensor* find(const std::string& name) const {
        for (const auto& [n, t] : tensors)
            if (n == name) return &t;
        return nullptr;
    }
};

inline Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    expect(in.is_open(), "cannot open checkpoint: " + path);
    char magic[8];
    in.read(magic, 8);
    expect(in.good() && std::memcmp(magic, kCheckpointMagic, 8) == 0,
           path + ": not a checkpoint file");
    Checkpoint ck;
    std::uint32_t meta_len = detail::get_u32(in);
    std::string meta_str(meta_len, '\0');
    in.read(meta_str.data(), meta_len);
    expect(in.good(), path + ": truncated checkpoint metadata");
    ck.meta = nlohmann::json::parse(meta_str);
    std::uint32_t n_tensors = detail::get_u32(in);
    for (std::uint32_t ti = 0; ti < n_tensors; ++ti) {
        std::uint32_t name_len = detail::get_u32(in);
        std::string name(name_len, '\0');
        in.read(name.data(), name_len);
        std::uint32_t ndim = detail::get_u32(in);
        std::vector<int> shape;
        for (std::uint32_t d = 0; d < ndim; ++d) shape.push_back(static_cast<int>(detail::get_u32(in)));
        Tensor t(shape);
        in.read(reinterpret_cast<char*>(t.data()),
                static_cast<std::streamsize>(t.numel() * sizeof(double)));
        expect(in.good(), path + ": truncated tensor payload");
        ck.tensors.emplace_back(std::move(name), std::move(t));
    }
    return ck;
}

// Order-based parameter restore; shapes must match the live model.
inline void assign_params(const Checkpoint& ck, const std::vector<Parameter*>& params,
                          const std::string& what) {
    expect(ck.tensors.size() == params.size(),
           what + ": checkpoint has " + std::to_string(ck.tensors.size()) + " tensors, model expects " +
               std::to_string(params.size()));
    for (std::size_t i = 0; i < params.size(); ++i) {
        expect(ck.tensors[i].second.shape() == params[i]->value.shape(),
               what + ": tensor " + ck.tensors[i].first + " shape mismatch");
        params[i]->value = ck.tensors[i].second;
    }
}

inline std::vector<std::pair<std::string, const Tensor*>> named_params(
    const std::vector<Parameter*>& params, const std::string& prefix) {
    std::vector<std::pair<std::string, const Tensor*>> out;
    for (std::size_t i = 0; i < params.size(); ++i) {
        char buf[16];
        std::snprintf(buf, sizeof(buf), "%04zu", i);
        out.emplace_back(prefix + "." + buf, &params[i]->value);
    }
    return out;
}

} // namespace edm::nn
