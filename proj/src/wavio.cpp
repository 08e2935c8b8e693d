// Copyright 2026 AVInpaint Authors
// Licensed under the Apache License, Version 2.0

#include "avinpaint/wavio.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>

#include "avinpaint/common.hpp"

namespace avi {

namespace {

uint32_t rd_u32(const unsigned char* p) {
    return static_cast<uint32_t>(p[0]) | (static_cast<uint32_t>(p[1]) << 8) |
           (static_cast<uint32_t>(p[2]) << 16) | (static_cast<uint32_t>(p[3]) << 24);
}

uint16_t rd_u16(const unsigned char* p) {
    return static_cast<uint16_t>(p[0] | (p[1] << 8));
}

void wr_u32(std::ofstream& os, uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                          static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
    os.write(reinterpret_cast<char*>(b), 4);
}

void wr_u16(std::ofstream& os, uint16_t v) {
    unsigned char b[2] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8)};
    os.write(reinterpret_cast<char*>(b), 2);
}

}  // namespace

std::vector<double> read_wav_16k_mono(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open WAV: " + path);
    std::vector<unsigned char> buf((std::istreambuf_iterator<char>(is)),
                                   std::istreambuf_iterator<char>());
    if (buf.size() < 44 || std::memcmp(buf.data(), "RIFF", 4) != 0 ||
        std::memcmp(buf.data() + 8, "WAVE", 4) != 0)
        throw InvalidInputError("not a RIFF/WAVE file: " + path);

    size_t pos = 12;
    int channels = 0, bits = 0;
    uint32_t rate = 0;
    const unsigned char* data = nullptr;
    uint32_t data_len = 0;
    while (pos + 8 <= buf.size()) {
        const uint32_t chunk_len = rd_u32(buf.data() + pos + 4);
        if (std::memcmp(buf.data() + pos, "fmt ", 4) == 0 && pos + 8 + 16 <= buf.size()) {
            const unsigned char* f = buf.data() + pos + 8;
            const uint16_t fmt = rd_u16(f);
            channels = rd_u16(f + 2);
            rate = rd_u32(f + 4);
            bits = rd_u16(f + 14);
            if (fmt != 1) throw InvalidInputError("WAV must be PCM: " + path);
        } else if (std::memcmp(buf.data() + pos, "data", 4) == 0) {
            data = buf.data() + pos + 8;
            data_len = std::min<uint32_t>(chunk_len, static_cast<uint32_t>(buf.size() - pos - 8));
        }
        pos += 8 + chunk_len + (chunk_len & 1);
    }
    if (!data) throw InvalidInputError("WAV has no data chunk: " + path);
    if (channels != 1 || bits != 16 || rate != kSampleRate)
        throw InvalidInputError("WAV must be mono 16-bit 16 kHz: " + path);

    std::vector<double> out(data_len / 2);
    for (size_t i = 0; i < out.size(); ++i) {
        const int16_t s = static_cast<int16_t>(data[2 * i] | (data[2 * i + 1] << 8));
        out[i] = static_cast<double>(s) / 32768.0;
    }
    return out;
}

void write_wav_16k_mono(const std::string& path, const std::vector<double>& samples) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("cannot open WAV for writing: " + path);
    const uint32_t data_bytes = static_cast<uint32_t>(samples.size() * 2);
    os.write("RIFF", 4);
    wr_u32(os, 36 + data_bytes);
    os.write("WAVE", 4);
    os.write("fmt ", 4);
    wr_u32(os, 16);
    wr_u16(os, 1);  // PCM
    wr_u16(os, 1);  // mono
    wr_u32(os, kSampleRate);
    wr_u32(os, kSampleRate * 2);
    wr_u16(os, 2);
    wr_u16(os, 16);
    os.write("data", 4);
    wr_u32(os, data_bytes);
    for (double v : samples) {
        const double c = std::clamp(v, -1.0, 1.0);
        const int16_t s = static_cast<int16_t>(std::lround(c * 32767.0));
        unsigned char b[2] = {static_cast<unsigned char>(s & 0xff),
                              static_cast<unsigned char>((s >> 8) & 0xff)};
        os.write(reinterpret_cast<char*>(b), 2);
    }
    if (!os) throw IoError("failed writing WAV: " + path);
}

}  // namespace avi
