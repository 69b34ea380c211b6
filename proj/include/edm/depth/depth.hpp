#pragma once

#include <cstdint>
#include <string>

#include "edm/core/grid.hpp"
#include "edm/core/image_io.hpp"
#include "edm/depth/morphology.hpp"

namespace edm::depth {

// Overhead sensor depth. Raw samples are 16-bit distance units of 1e-4 m,
// so a reading of 1000 is 0.1 m from the camera. Zero means no reading.
constexpr double kMetersPerUnit = 1e-4;
constexpr double kRawMax = 65535.0;

enum class Representation { RawU16, Meters, SignedUnit };

struct DepthMap {
    Representation rep = Representation::RawU16;
    Grid<double> values;
    Grid<std::uint8_t> missing; // 1 where the sensor gave no reading
};

inline DepthMap decode_depth(const std::string& path) {
    DepthMap map;
    Grid<std::uint16_t> raw = io::read_pgm16(path);
    map.rep = Representation::RawU16;
    map.values = Grid<double>(raw.height(), raw.width());
    map.missing = Grid<std::uint8_t>(raw.height(), raw.width(), 0);
    for (int i = 0; i < raw.height(); ++i) {
        for (int j = 0; j < raw.width(); ++j) {
            map.values(i, j) = static_cast<double>(raw(i, j));
            map.missing(i, j) = raw(i, j) == 0 ? 1 : 0;
        }
    }
    return map;
}

inline void encode_depth(const std::string& path, const DepthMap& map) {
    require(map.rep == Representation::RawU16, "encode_depth: map must be RAW_U16");
    Grid<std::uint16_t> raw(map.values.height(), map.values.width());
    for (int i = 0; i < raw.height(); ++i)
        for (int j = 0; j < raw.width(); ++j)
            raw(i, j) = static_cast<std::uint16_t>(map.values(i, j));
    io::write_pgm16(path, raw);
}

inline DepthMap depth_to_meters(const DepthMap& map) {
    require(map.rep == Representation::RawU16, "depth_to_meters: map must be RAW_U16");
    DepthMap out = map;
    out.rep = Representation::Meters;
    for (double& v : out.values) v *= kMetersPerUnit;
    return out;
}

// Dilation smooths the foreground, then closing fills missing readings.
// A missing pixel whose closed value is nonzero becomes a valid reading.
inline DepthMap postprocess_depth(const DepthMap& map, int dilation_kernel, int closing_kernel) {
    require(dilation_kernel >= 1 && dilation_kernel % 2 == 1,
            "postprocess_depth: dilation kernel must be odd and >= 1");
    require(closing_kernel >= 1 && closing_kernel % 2 == 1,
            "postprocess_depth: closing kernel must be odd and >= 1");
    DepthMap out = map;
    out.values = close(dilate(map.values, dilation_kernel), closing_kernel);
    for (int i = 0; i < out.values.height(); ++i)
        for (int j = 0; j < out.values.width(); ++j)
            if (out.missing(i, j) && out.values(i, j) != 0.0) out.missing(i, j) = 0;
    return out;
}

// Linear map of the fixed sensor range [0, 65535] onto [-1, 1]; absolute
// distance semantics are preserved across dishes.
inline DepthMap normalize_depth(const DepthMap& map) {
    require(map.rep == Representation::RawU16, "normalize_depth: map must be RAW_U16");
    DepthMap out = map;
    out.rep = Representation::SignedUnit;
    for (double& v : out.values) v = v / (kRawMax / 2.0) - 1.0;
    return out;
}

} // namespace edm::depth
