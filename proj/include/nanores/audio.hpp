#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "nanores/errors.hpp"

namespace nanores {

/// Mono audio clip, samples in [-1, 1].
struct AudioClip {
    std::vector<double> samples;
    std::uint32_t sample_rate = 0;
};

/// Drive signal for the network: t voltage values with peak amplitude v_p.
struct VoltageTrace {
    std::vector<double> values;
    double v_p = 1.0;
};

namespace wav_detail {

inline std::uint16_t read_u16(const unsigned char* p) {
    return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}
inline std::uint32_t read_u32(const unsigned char* p) {
    return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

}  // namespace wav_detail

/// Reads a RIFF/WAVE file containing uncompressed PCM, 8-bit unsigned or
/// 16-bit signed little-endian. Multi-channel input is averaged to mono.
/// 16-bit samples map to s/32768, 8-bit to (s-128)/128.
inline AudioClip read_wav(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open: " + path.string());
    std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                     std::istreambuf_iterator<char>());

    using wav_detail::read_u16;
    using wav_detail::read_u32;

    if (bytes.size() < 12) throw ParseError(path.string() + ": truncated RIFF header");
    if (std::memcmp(bytes.data(), "RIFF", 4) != 0)
        throw ParseError(path.string() + ": missing RIFF magic");
    if (std::memcmp(bytes.data() + 8, "WAVE", 4) != 0)
        throw ParseError(path.string() + ": not a WAVE file");

    bool have_fmt = false;
    std::uint16_t format_tag = 0, channels = 0, bits = 0;
    std::uint32_t sample_rate = 0;
    const unsigned char* data = nullptr;
    std::uint32_t data_size = 0;

    std::size_t pos = 12;
    while (pos + 8 <= bytes.size()) {
        const unsigned char* chunk = bytes.data() + pos;
        std::uint32_t size = read_u32(chunk + 4);
        if (pos + 8 + size > bytes.size())
            throw ParseError(path.string() + ": truncated chunk");
        if (std::memcmp(chunk, "fmt ", 4) == 0) {
            if (size < 16) throw ParseError(path.string() + ": fmt chunk too small");
            format_tag = read_u16(chunk + 8);
            channels = read_u16(chunk + 10);
            sample_rate = read_u32(chunk + 12);
            bits = read_u16(chunk + 22);
            have_fmt = true;
        } else if (std::memcmp(chunk, "data", 4) == 0) {
            data = chunk + 8;
            data_size = size;
            break;
        }
        pos += 8 + size + (size & 1);  // chunks are word aligned
    }

    if (!have_fmt) throw ParseError(path.string() + ": missing fmt chunk");
    if (data == nullptr) throw ParseError(path.string() + ": missing data chunk");
    if (format_tag != 1)
        throw UnsupportedFormat(path.string() + ": format tag " + std::to_string(format_tag) +
                                " (only PCM supported)");
    if (bits != 8 && bits != 16)
        throw UnsupportedFormat(path.string() + ": " + std::to_string(bits) +
                                "-bit samples (only 8 and 16 supported)");
    if (channels == 0) throw ParseError(path.string() + ": zero channels");

    const std::size_t bytes_per_sample = bits / 8;
    const std::size_t frame_size = bytes_per_sample * channels;
    const std::size_t frames = data_size / frame_size;
    if (frames == 0) throw EmptyClip(path.string() + ": no samples");

    AudioClip clip;
    clip.sample_rate = sample_rate;
    clip.samples.resize(frames);
    for (std::size_t f = 0; f < frames; ++f) {
        double acc = 0.0;
        for (std::uint16_t c = 0; c < channels; ++c) {
            const unsigned char* s = data + f * frame_size + c * bytes_per_sample;
            if (bits == 16) {
                auto u = read_u16(s);
                acc += static_cast<std::int16_t>(u) / 32768.0;
            } else {
                acc += (static_cast<int>(s[0]) - 128) / 128.0;
            }
        }
        clip.samples[f] = acc / channels;
    }
    return clip;
}

/// Writes mono 16-bit PCM. Values are clamped to [-1, 1].
inline void write_wav16(const std::filesystem::path& path, const std::vector<double>& samples,
                        std::uint32_t sample_rate) {
    std::vector<unsigned char> bytes;
    bytes.reserve(44 + samples.size() * 2);
    auto put_u32 = [&](std::uint32_t v) {
        bytes.push_back(v & 0xff);
        bytes.push_back((v >> 8) & 0xff);
        bytes.push_back((v >> 16) & 0xff);
        bytes.push_back((v >> 24) & 0xff);
    };
    auto put_u16 = [&](std::uint16_t v) {
        bytes.push_back(v & 0xff);
        bytes.push_back((v >> 8) & 0xff);
    };
    auto put_tag = [&](const char* t) {
        bytes.insert(bytes.end(), t, t + 4);
    };
    const std::uint32_t data_size = static_cast<std::uint32_t>(samples.size() * 2);
    put_tag("RIFF");
    put_u32(36 + data_size);
    put_tag("WAVE");
    put_tag("fmt ");
    put_u32(16);
    put_u16(1);  // PCM
    put_u16(1);  // mono
    put_u32(sample_rate);
    put_u32(sample_rate * 2);
    put_u16(2);
    put_u16(16);
    put_tag("data");
    put_u32(data_size);
    for (double x : samples) {
        double v = std::round(std::clamp(x, -1.0, 1.0) * 32768.0);
        v = std::clamp(v, -32768.0, 32767.0);
        put_u16(static_cast<std::uint16_t>(static_cast<std::int16_t>(v)));
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open for writing: " + path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("write failed: " + path.string());
}

/// Maps a clip of any length onto exactly t drive values:
/// partition into t contiguous bins [floor(i*n/t), floor((i+1)*n/t)), take bin
/// means, then scale so the peak magnitude equals v_p. Clips shorter than t
/// are zero-padded to t first. An all-zero clip stays all-zero. A trace whose
/// peak already equals v_p is returned unscaled, so the map is idempotent.
inline VoltageTrace standardize_trace(const std::vector<double>& samples, std::size_t t,
                                      double v_p) {
    if (t == 0) throw InvalidArgument("standardize_trace: t must be >= 1");
    if (!(v_p > 0.0)) throw InvalidArgument("standardize_trace: v_p must be positive");
    if (samples.empty()) throw EmptyClip("standardize_trace: empty clip");

    const std::vector<double>* src = &samples;
    std::vector<double> padded;
    if (samples.size() < t) {
        padded = samples;
        padded.resize(t, 0.0);
        src = &padded;
    }
    const std::size_t n = src->size();

    VoltageTrace trace;
    trace.v_p = v_p;
    trace.values.resize(t);
    for (std::size_t i = 0; i < t; ++i) {
        const std::size_t lo = i * n / t;
        const std::size_t hi = (i + 1) * n / t;
        double acc = 0.0;
        for (std::size_t j = lo; j < hi; ++j) acc += (*src)[j];
        trace.values[i] = acc / static_cast<double>(hi - lo);
    }

    double peak = 0.0;
    for (double v : trace.values) peak = std::max(peak, std::abs(v));
    if (peak != 0.0 && peak != v_p) {
        for (double& v : trace.values) v = (v / peak) * v_p;
    }
    return trace;
}

inline VoltageTrace standardize_trace(const AudioClip& clip, std::size_t t, double v_p) {
    return standardize_trace(clip.samples, t, v_p);
}

}  // namespace nanores
