#pragma once

#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "argbd/model.hpp"

namespace argbd {

enum class NetworkKind : std::uint8_t { completion = 1, super_resolution = 2 };

inline const char* network_kind_name(NetworkKind k) {
    return k == NetworkKind::completion ? "completion" : "super-resolution";
}

// Serialized network state: versioned header, named float32 tensors in a
// fixed order, and training metadata. All integers and floats are stored
// little-endian; save -> load -> save reproduces the bytes exactly.
struct Checkpoint {
    static constexpr char kMagic[6] = {'A', 'R', 'G', 'B', 'D', '1'};
    static constexpr std::uint32_t kVersion = 1;

    struct NamedTensor {
        std::string name;
        Shape dims;
        std::vector<float> data;
    };

    NetworkKind kind = NetworkKind::completion;
    std::uint32_t aux = 0; // up-sampling ratio for super-resolution networks
    std::uint32_t epoch = 0;
    std::vector<float> loss_history;
    std::vector<NamedTensor> tensors;

    const NamedTensor& find(const std::string& name) const {
        for (const NamedTensor& t : tensors) {
            if (t.name == name) return t;
        }
        throw CheckpointError("checkpoint: no tensor named '" + name + "'");
    }
};

namespace detail {

inline void write_u32(std::ostream& os, std::uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                          static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
    os.write(reinterpret_cast<const char*>(b), 4);
}

inline std::uint32_t read_u32(std::istream& is, const char* what) {
    unsigned char b[4];
    if (!is.read(reinterpret_cast<char*>(b), 4)) {
        throw CheckpointError(std::string("checkpoint: truncated while reading ") + what);
    }
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

inline void write_f32(std::ostream& os, float v) {
    std::uint32_t bits;
    std::memcpy(&bits, &v, 4);
    write_u32(os, bits);
}

inline float read_f32(std::istream& is, const char* what) {
    const std::uint32_t bits = read_u32(is, what);
    float v;
    std::memcpy(&v, &bits, 4);
    return v;
}

} // namespace detail

inline void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("checkpoint: cannot open '" + path + "' for writing");
    os.write(Checkpoint::kMagic, sizeof(Checkpoint::kMagic));
    detail::write_u32(os, Checkpoint::kVersion);
    os.put(static_cast<char>(ckpt.kind));
    detail::write_u32(os, ckpt.aux);
    detail::write_u32(os, ckpt.epoch);
    detail::write_u32(os, static_cast<std::uint32_t>(ckpt.loss_history.size()));
    for (float v : ckpt.loss_history) detail::write_f32(os, v);
    detail::write_u32(os, static_cast<std::uint32_t>(ckpt.tensors.size()));
    for (const Checkpoint::NamedTensor& t : ckpt.tensors) {
        detail::write_u32(os, static_cast<std::uint32_t>(t.name.size()));
        os.write(t.name.data(), static_cast<std::streamsize>(t.name.size()));
        detail::write_u32(os, static_cast<std::uint32_t>(t.dims.batch));
        detail::write_u32(os, static_cast<std::uint32_t>(t.dims.channels));
        detail::write_u32(os, static_cast<std::uint32_t>(t.dims.height));
        detail::write_u32(os, static_cast<std::uint32_t>(t.dims.width));
        for (float v : t.data) detail::write_f32(os, v);
    }
    if (!os) throw IoError("checkpoint: write to '" + path + "' failed");
}

inline Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("checkpoint: cannot open '" + path + "'");
    char magic[sizeof(Checkpoint::kMagic)];
    if (!is.read(magic, sizeof(magic)) ||
        std::memcmp(magic, Checkpoint::kMagic, sizeof(magic)) != 0) {
        throw CheckpointError("checkpoint: bad magic in '" + path + "'");
    }
    const std::uint32_t version = detail::read_u32(is, "version");
    if (version != Checkpoint::kVersion) {
        throw CheckpointError("checkpoint: unknown format version " + std::to_string(version));
    }
    Checkpoint ckpt;
    const int kind = is.get();
    if (kind != static_cast<int>(NetworkKind::completion) &&
        kind != static_cast<int>(NetworkKind::super_resolution)) {
        throw CheckpointError("checkpoint: unknown network kind tag");
    }
    ckpt.kind = static_cast<NetworkKind>(kind);
    ckpt.aux = detail::read_u32(is, "aux field");
    ckpt.epoch = detail::read_u32(is, "epoch");
    const std::uint32_t n_loss = detail::read_u32(is, "loss history size");
    ckpt.loss_history.resize(n_loss);
    for (std::uint32_t i = 0; i < n_loss; ++i) {
        ckpt.loss_history[i] = detail::read_f32(is, "loss history");
    }
    const std::uint32_t n_tensors = detail::read_u32(is, "tensor count");
    ckpt.tensors.resize(n_tensors);
    for (std::uint32_t i = 0; i < n_tensors; ++i) {
        Checkpoint::NamedTensor& t = ckpt.tensors[i];
        const std::uint32_t name_len = detail::read_u32(is, "tensor name length");
        if (name_len > 4096) throw CheckpointError("checkpoint: implausible tensor name length");
        t.name.resize(name_len);
        if (!is.read(t.name.data(), name_len)) {
            throw CheckpointError("checkpoint: truncated tensor name");
        }
        t.dims.batch = detail::read_u32(is, "dims");
        t.dims.channels = detail::read_u32(is, "dims");
        t.dims.height = detail::read_u32(is, "dims");
        t.dims.width = detail::read_u32(is, "dims");
        t.data.resize(static_cast<std::size_t>(t.dims.count()));
        for (auto& v : t.data) v = detail::read_f32(is, "tensor data");
    }
    // anything after the last tensor is corruption
    if (is.peek() != std::char_traits<char>::eof()) {
        throw CheckpointError("checkpoint: trailing bytes in '" + path + "'");
    }
    return ckpt;
}

// Packs a network's named state into checkpoint tensors (float32).
template <typename T, typename Net>
Checkpoint checkpoint_from_network(Net& net, NetworkKind kind, std::uint32_t aux,
                                   std::uint32_t epoch, std::vector<float> loss_history) {
    Checkpoint ckpt;
    ckpt.kind = kind;
    ckpt.aux = aux;
    ckpt.epoch = epoch;
    ckpt.loss_history = std::move(loss_history);
    for (StateRef<T> ref : net.named_state()) {
        Checkpoint::NamedTensor t;
        t.name = ref.name;
        t.dims = ref.dims;
        t.data.resize(static_cast<std::size_t>(ref.count));
        for (index_t i = 0; i < ref.count; ++i) t.data[static_cast<std::size_t>(i)] =
            static_cast<float>(ref.data[i]);
        ckpt.tensors.push_back(std::move(t));
    }
    return ckpt;
}

// Restores a network's named state; every entry must be present with the
// exact shape, and the kind tag must match the requested network.
template <typename T, typename Net>
void network_from_checkpoint(Net& net, const Checkpoint& ckpt, NetworkKind expected) {
    if (ckpt.kind != expected) {
        throw CheckpointError(std::string("checkpoint holds a ") + network_kind_name(ckpt.kind) +
                              " network, expected " + network_kind_name(expected));
    }
    for (StateRef<T> ref : net.named_state()) {
        const Checkpoint::NamedTensor& t = ckpt.find(ref.name);
        if (!(t.dims == ref.dims)) {
            throw CheckpointError("checkpoint: tensor '" + ref.name + "' has dims " +
                                  t.dims.str() + ", expected " + ref.dims.str());
        }
        for (index_t i = 0; i < ref.count; ++i) {
            ref.data[i] = static_cast<T>(t.data[static_cast<std::size_t>(i)]);
        }
    }
}

} // namespace argbd
