#pragma once

#include <algorithm>

#include "edm/core/grid.hpp"

// Grayscale morphology with a square structuring element. Windows are clipped
// at the image border (equivalent to -inf padding for dilation and +inf for
// erosion). The square element separates into a horizontal then vertical pass.

namespace edm::depth {

namespace detail {

template <bool Max>
inline Grid<double> line_filter(const Grid<double>& src, int radius, bool horizontal) {
    Grid<double> dst(src.height(), src.width());
    const int h = src.height(), w = src.width();
    for (int i = 0; i < h; ++i) {
        for (int j = 0; j < w; ++j) {
            double best = src(i, j);
            for (int d = -radius; d <= radius; ++d) {
                int ii = horizontal ? i : i + d;
                int jj = horizontal ? j + d : j;
                if (ii < 0 || ii >= h || jj < 0 || jj >= w) continue;
                double v = src(ii, jj);
                best = Max ? std::max(best, v) : std::min(best, v);
            }
            dst(i, j) = best;
        }
    }
    return dst;
}

} // namespace detail

inline Grid<double> dilate(const Grid<double>& src, int kernel) {
    require(kernel >= 1 && kernel % 2 == 1, "dilate: kernel must be odd and >= 1");
    if (kernel == 1) return src;
    int r = kernel / 2;
    return detail::line_filter<true>(detail::line_filter<true>(src, r, true), r, false);
}

inline Grid<double> erode(const Grid<double>& src, int kernel) {
    require(kernel >= 1 && kernel % 2 == 1, "erode: kernel must be odd and >= 1");
    if (kernel == 1) return src;
    int r = kernel / 2;
    return detail::line_filter<false>(detail::line_filter<false>(src, r, true), r, false);
}

// Closing: dilation followed by erosion; fills holes up to the kernel size.
inline Grid<double> close(const Grid<double>& src, int kernel) {
    return erode(dilate(src, kernel), kernel);
}

} // namespace edm::depth
