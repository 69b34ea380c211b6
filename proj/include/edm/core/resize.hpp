#pragma once

#include <algorithm>
#include <cmath>

#include "edm/core/grid.hpp"

namespace edm {

// Bilinear resize with half-pixel centers, edges clamped.
inline Grid<double> resize_bilinear(const Grid<double>& src, int out_h, int out_w) {
    require(out_h > 0 && out_w > 0, "resize_bilinear: output dimensions must be positive");
    if (src.height() == out_h && src.width() == out_w) return src;
    Grid<double> dst(out_h, out_w);
    const double sy = static_cast<double>(src.height()) / out_h;
    const double sx = static_cast<double>(src.width()) / out_w;
    for (int i = 0; i < out_h; ++i) {
        double fy = (i + 0.5) * sy - 0.5;
        int y0 = static_cast<int>(std::floor(fy));
        double wy = fy - y0;
        int y1 = std::min(y0 + 1, src.height() - 1);
        y0 = std::clamp(y0, 0, src.height() - 1);
        for (int j = 0; j < out_w; ++j) {
            double fx = (j + 0.5) * sx - 0.5;
            int x0 = static_cast<int>(std::floor(fx));
            double wx = fx - x0;
            int x1 = std::min(x0 + 1, src.width() - 1);
            x0 = std::clamp(x0, 0, src.width() - 1);
            double top = src(y0, x0) * (1.0 - wx) + src(y0, x1) * wx;
            double bot = src(y1, x0) * (1.0 - wx) + src(y1, x1) * wx;
            dst(i, j) = top * (1.0 - wy) + bot * wy;
        }
    }
    return dst;
}

} // namespace edm
