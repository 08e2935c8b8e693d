// Copyright 2026 AVInpaint Authors
// Licensed under the Apache License, Version 2.0

#include "avinpaint/checkpoint.hpp"

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>

namespace fs = std::filesystem;

namespace avi {

namespace {

constexpr char kMagic[8] = {'A', 'V', 'I', 'C', 'K', 'P', 'T', '1'};

template <class T>
void wr(std::ofstream& os, const T& v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
void rd(std::ifstream& is, T& v) {
    is.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!is) throw IoError("checkpoint: truncated file");
}

}  // namespace

void save_checkpoint(const std::string& path, const std::string& module_name,
                     const nlohmann::json& header, const ParamSet& params) {
    // Write to a temp file and rename so readers never see partial output.
    const std::string tmp = path + ".tmp";
    {
        std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
        if (!os) throw IoError("checkpoint: cannot open for writing: " + path);
        os.write(kMagic, sizeof(kMagic));
        wr(os, kCheckpointVersion);

        nlohmann::json h = header;
        h["module"] = module_name;
        const std::string hs = h.dump();
        wr(os, static_cast<uint32_t>(hs.size()));
        os.write(hs.data(), static_cast<std::streamsize>(hs.size()));

        wr(os, static_cast<uint32_t>(params.size()));
        for (const auto& [name, t] : params.items()) {
            wr(os, static_cast<uint32_t>(name.size()));
            os.write(name.data(), static_cast<std::streamsize>(name.size()));
            wr(os, static_cast<uint32_t>(t.shape.size()));
            for (int d : t.shape) wr(os, static_cast<uint64_t>(d));
            os.write(reinterpret_cast<const char*>(t.data.data()),
                     static_cast<std::streamsize>(t.data.size() * sizeof(double)));
        }
        if (!os) throw IoError("checkpoint: write failed: " + path);
    }
    fs::rename(tmp, path);
}

LoadedCheckpoint load_checkpoint(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("checkpoint: cannot open: " + path);
    char magic[8];
    is.read(magic, sizeof(magic));
    if (!is || std::memcmp(magic, kMagic, sizeof(magic)) != 0)
        throw IoError("checkpoint: bad magic in " + path);
    uint32_t version = 0;
    rd(is, version);
    if (version != kCheckpointVersion)
        throw IoError("checkpoint: unsupported version " + std::to_string(version));

    uint32_t hlen = 0;
    rd(is, hlen);
    std::string hs(hlen, '\0');
    is.read(hs.data(), hlen);
    if (!is) throw IoError("checkpoint: truncated header");

    LoadedCheckpoint out;
    out.header = nlohmann::json::parse(hs);
    out.module_name = out.header.value("module", "");

    uint32_t n_arrays = 0;
    rd(is, n_arrays);
    for (uint32_t a = 0; a < n_arrays; ++a) {
        uint32_t nlen = 0;
        rd(is, nlen);
        std::string name(nlen, '\0');
        is.read(name.data(), nlen);
        uint32_t ndim = 0;
        rd(is, ndim);
        std::vector<int> shape(ndim);
        for (uint32_t i = 0; i < ndim; ++i) {
            uint64_t d = 0;
            rd(is, d);
            shape[i] = static_cast<int>(d);
        }
        Tensor t(shape);
        is.read(reinterpret_cast<char*>(t.data.data()),
                static_cast<std::streamsize>(t.data.size() * sizeof(double)));
        if (!is) throw IoError("checkpoint: truncated array " + name);
        out.params.add(name, std::move(t));
    }
    return out;
}

}  // namespace avi
