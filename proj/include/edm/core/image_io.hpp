#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "edm/core/error.hpp"
#include "edm/core/grid.hpp"

// Lossless NetPBM readers/writers (binary P5/P6) plus the float32 map
// container used for raw energy-density grids. 16-bit PGM samples are
// big-endian per the format; float payloads are little-endian.

namespace edm::io {

namespace detail {

inline int pnm_token(std::istream& in) {
    // Skips whitespace and '#' comments, returns the next unsigned integer.
    int c = in.get();
    while (c != EOF) {
        if (c == '#') {
            while (c != EOF && c != '\n') c = in.get();
        } else if (std::isspace(c)) {
            c = in.get();
        } else {
            break;
        }
    }
    expect(c != EOF && std::isdigit(c), "pnm: malformed header");
    int value = 0;
    while (c != EOF && std::isdigit(c)) {
        value = value * 10 + (c - '0');
        c = in.get();
    }
    return value;
}

struct PnmHeader {
    std::string magic;
    int width = 0;
    int height = 0;
    int maxval = 0;
};

inline PnmHeader read_pnm_header(std::istream& in, const std::string& path) {
    char m0 = static_cast<char>(in.get());
    char m1 = static_cast<char>(in.get());
    expect(in.good() && m0 == 'P' && (m1 == '5' || m1 == '6'), path + ": not a binary PGM/PPM file");
    PnmHeader h;
    h.magic = std::string{m0, m1};
    h.width = pnm_token(in);
    h.height = pnm_token(in);
    h.maxval = pnm_token(in);
    expect(h.width > 0 && h.height > 0, path + ": bad dimensions");
    expect(h.maxval > 0 && h.maxval <= 65535, path + ": bad maxval");
    // exactly one whitespace byte separates header and raster
    return h;
}

inline std::ifstream open_in(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    expect(in.is_open(), "cannot open file: " + path);
    return in;
}

inline std::ofstream open_out(const std::string& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    expect(out.is_open(), "cannot write file: " + path);
    return out;
}

} // namespace detail

inline void write_pgm8(const std::string& path, const Grid<std::uint8_t>& g) {
    auto out = detail::open_out(path);
    out << "P5\n" << g.width() << " " << g.height() << "\n255\n";
    out.write(reinterpret_cast<const char*>(g.data()), static_cast<std::streamsize>(g.size()));
    expect(out.good(), "write failed: " + path);
}

inline Grid<std::uint8_t> read_pgm8(const std::string& path) {
    auto in = detail::open_in(path);
    auto h = detail::read_pnm_header(in, path);
    expect(h.magic == "P5", path + ": expected single-channel PGM");
    expect(h.maxval <= 255, path + ": expected 8-bit samples");
    Grid<std::uint8_t> g(h.height, h.width);
    in.read(reinterpret_cast<char*>(g.data()), static_cast<std::streamsize>(g.size()));
    expect(in.gcount() == static_cast<std::streamsize>(g.size()), path + ": truncated raster");
    return g;
}

inline void write_pgm16(const std::string& path, const Grid<std::uint16_t>& g) {
    auto out = detail::open_out(path);
    out << "P5\n" << g.width() << " " << g.height() << "\n65535\n";
    std::vector<std::uint8_t> buf(g.size() * 2);
    for (std::size_t i = 0; i < g.size(); ++i) {
        std::uint16_t v = g.data()[i];
        buf[2 * i] = static_cast<std::uint8_t>(v >> 8);
        buf[2 * i + 1] = static_cast<std::uint8_t>(v & 0xff);
    }
    out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
    expect(out.good(), "write failed: " + path);
}

inline Grid<std::uint16_t> read_pgm16(const std::string& path) {
    auto in = detail::open_in(path);
    auto h = detail::read_pnm_header(in, path);
    expect(h.magic == "P5", path + ": expected single-channel PGM");
    expect(h.maxval > 255, path + ": expected 16-bit samples, got an 8-bit file");
    Grid<std::uint16_t> g(h.height, h.width);
    std::vector<std::uint8_t> buf(g.size() * 2);
    in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
    expect(in.gcount() == static_cast<std::streamsize>(buf.size()), path + ": truncated raster");
    for (std::size_t i = 0; i < g.size(); ++i)
        g.data()[i] = static_cast<std::uint16_t>((buf[2 * i] << 8) | buf[2 * i + 1]);
    return g;
}

inline void write_ppm8(const std::string& path, const RgbImage& img) {
    auto out = detail::open_out(path);
    out << "P6\n" << img.width << " " << img.height << "\n255\n";
    out.write(reinterpret_cast<const char*>(img.px.data()), static_cast<std::streamsize>(img.px.size()));
    expect(out.good(), "write failed: " + path);
}

inline RgbImage read_ppm8(const std::string& path) {
    auto in = detail::open_in(path);
    auto h = detail::read_pnm_header(in, path);
    expect(h.magic == "P6", path + ": expected 3-channel PPM");
    expect(h.maxval <= 255, path + ": expected 8-bit samples");
    RgbImage img(h.height, h.width);
    in.read(reinterpret_cast<char*>(img.px.data()), static_cast<std::streamsize>(img.px.size()));
    expect(in.gcount() == static_cast<std::streamsize>(img.px.size()), path + ": truncated raster");
    return img;
}

// Float map container: magic "EDMF", u32 version, u32 rep tag, u32 H, u32 W,
// then H*W little-endian float32 values.
constexpr char kFloatMapMagic[4] = {'E', 'D', 'M', 'F'};

inline void write_float_map(const std::string& path, const Grid<double>& g, std::uint32_t rep_tag) {
    auto out = detail::open_out(path);
    out.write(kFloatMapMagic, 4);
    auto put_u32 = [&](std::uint32_t v) {
        std::uint8_t b[4] = {static_cast<std::uint8_t>(v), static_cast<std::uint8_t>(v >> 8),
                             static_cast<std::uint8_t>(v >> 16), static_cast<std::uint8_t>(v >> 24)};
        out.write(reinterpret_cast<const char*>(b), 4);
    };
    put_u32(1); // version
    put_u32(rep_tag);
    put_u32(static_cast<std::uint32_t>(g.height()));
    put_u32(static_cast<std::uint32_t>(g.width()));
    std::vector<float> buf(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) buf[i] = static_cast<float>(g.data()[i]);
    out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size() * 4));
    expect(out.good(), "write failed: " + path);
}

inline Grid<double> read_float_map(const std::string& path, std::uint32_t* rep_tag = nullptr) {
    auto in = detail::open_in(path);
    char magic[4];
    in.read(magic, 4);
    expect(in.good() && std::memcmp(magic, kFloatMapMagic, 4) == 0, path + ": not a float map file");
    auto get_u32 = [&]() {
        std::uint8_t b[4];
        in.read(reinterpret_cast<char*>(b), 4);
        return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
               (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
    };
    std::uint32_t version = get_u32();
    expect(version == 1, path + ": unsupported float map version");
    std::uint32_t rep = get_u32();
    std::uint32_t h = get_u32();
    std::uint32_t w = get_u32();
    expect(in.good() && h > 0 && w > 0, path + ": bad float map header");
    Grid<double> g(static_cast<int>(h), static_cast<int>(w));
    std::vector<float> buf(g.size());
    in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size() * 4));
    expect(in.gcount() == static_cast<std::streamsize>(buf.size() * 4), path + ": truncated float map");
    for (std::size_t i = 0; i < g.size(); ++i) g.data()[i] = static_cast<double>(buf[i]);
    if (rep_tag) *rep_tag = rep;
    return g;
}

} // namespace edm::io
