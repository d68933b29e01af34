#pragma once

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "a3dc/errors.hpp"
#include "a3dc/tensor.hpp"

namespace a3dc {

// Binary checkpoint container, little-endian throughout:
//   magic "A3DC" | u32 version | u64 config length | UTF-8 JSON config
//   | u32 tensor count | per tensor:
//       u16 name length | name bytes | u8 rank | rank x u64 extents
//       | row-major f32 payload
// Round-trips are bit-exact: payloads are the raw f32 storage.
inline constexpr uint32_t kCheckpointVersion = 1;

struct Checkpoint {
    std::string config_json;
    std::map<std::string, Tensor<float>> tensors;
};

namespace detail {

template <typename T>
void write_le(std::ostream& os, T v) {
    static_assert(std::is_trivially_copyable_v<T>);
    os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_le(std::istream& is) {
    T v{};
    is.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!is) throw IoError("checkpoint: unexpected end of stream");
    return v;
}

}  // namespace detail

inline void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ck) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("checkpoint: cannot open " + path.string() + " for write");
    os.write("A3DC", 4);
    detail::write_le<uint32_t>(os, kCheckpointVersion);
    detail::write_le<uint64_t>(os, ck.config_json.size());
    os.write(ck.config_json.data(), std::streamsize(ck.config_json.size()));
    detail::write_le<uint32_t>(os, uint32_t(ck.tensors.size()));
    for (const auto& [name, t] : ck.tensors) {
        if (name.size() > 0xFFFF) throw IoError("checkpoint: tensor name too long");
        detail::write_le<uint16_t>(os, uint16_t(name.size()));
        os.write(name.data(), std::streamsize(name.size()));
        detail::write_le<uint8_t>(os, uint8_t(t.rank()));
        for (int64_t e : t.shape()) detail::write_le<uint64_t>(os, uint64_t(e));
        os.write(reinterpret_cast<const char*>(t.data()),
                 std::streamsize(size_t(t.size()) * sizeof(float)));
    }
    if (!os) throw IoError("checkpoint: write failed for " + path.string());
}

inline Checkpoint load_checkpoint(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("checkpoint: cannot open " + path.string());
    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, "A3DC", 4) != 0) {
        throw IoError("checkpoint: bad magic in " + path.string());
    }
    const uint32_t version = detail::read_le<uint32_t>(is);
    if (version != kCheckpointVersion) {
        throw IoError("checkpoint: unsupported version " + std::to_string(version) +
                      " in " + path.string());
    }
    Checkpoint ck;
    const uint64_t cfg_len = detail::read_le<uint64_t>(is);
    ck.config_json.resize(cfg_len);
    is.read(ck.config_json.data(), std::streamsize(cfg_len));
    const uint32_t count = detail::read_le<uint32_t>(is);
    for (uint32_t i = 0; i < count; ++i) {
        const uint16_t name_len = detail::read_le<uint16_t>(is);
        std::string name(name_len, '\0');
        is.read(name.data(), name_len);
        const uint8_t rank = detail::read_le<uint8_t>(is);
        if (rank < 1) throw IoError("checkpoint: tensor " + name + " has rank 0");
        Shape shape(rank);
        for (uint8_t r = 0; r < rank; ++r) {
            shape[r] = int64_t(detail::read_le<uint64_t>(is));
        }
        const int64_t n = Tensor<float>::numel_of(shape);
        std::vector<float> data(static_cast<size_t>(n));
        is.read(reinterpret_cast<char*>(data.data()),
                std::streamsize(size_t(n) * sizeof(float)));
        if (!is) throw IoError("checkpoint: truncated payload for tensor " + name);
        ck.tensors.emplace(std::move(name),
                           Tensor<float>::from_data(std::move(shape), std::move(data)));
    }
    return ck;
}

}  // namespace a3dc
