#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "edm/core/error.hpp"

namespace edm {

// Dense row-major H x W grid. Row index first: g(i, j) is row i, column j.
template <typename T>
class Grid {
public:
    Grid() = default;
    Grid(int height, int width, T fill = T{})
        : h_(height), w_(width), v_(static_cast<std::size_t>(height) * width, fill) {
        require(height > 0 && width > 0, "Grid: dimensions must be positive");
    }

    int height() const { return h_; }
    int width() const { return w_; }
    std::size_t size() const { return v_.size(); }
    bool empty() const { return v_.empty(); }

    T& operator()(int i, int j) { return v_[static_cast<std::size_t>(i) * w_ + j]; }
    const T& operator()(int i, int j) const { return v_[static_cast<std::size_t>(i) * w_ + j]; }

    T& at(int i, int j) {
        require(i >= 0 && i < h_ && j >= 0 && j < w_, "Grid::at: index out of range");
        return (*this)(i, j);
    }
    const T& at(int i, int j) const {
        require(i >= 0 && i < h_ && j >= 0 && j < w_, "Grid::at: index out of range");
        return (*this)(i, j);
    }

    T* data() { return v_.data(); }
    const T* data() const { return v_.data(); }
    auto begin() { return v_.begin(); }
    auto end() { return v_.end(); }
    auto begin() const { return v_.begin(); }
    auto end() const { return v_.end(); }

    template <typename U>
    bool same_shape(const Grid<U>& o) const {
        return h_ == o.height() && w_ == o.width();
    }

    bool operator==(const Grid& o) const { return h_ == o.h_ && w_ == o.w_ && v_ == o.v_; }

private:
    int h_ = 0;
    int w_ = 0;
    std::vector<T> v_;
};

// 8-bit interleaved RGB image.
struct RgbImage {
    int height = 0;
    int width = 0;
    std::vector<std::uint8_t> px; // 3 * height * width, RGBRGB...

    RgbImage() = default;
    RgbImage(int h, int w) : height(h), width(w), px(static_cast<std::size_t>(h) * w * 3, 0) {
        require(h > 0 && w > 0, "RgbImage: dimensions must be positive");
    }

    std::uint8_t& at(int i, int j, int c) {
        return px[(static_cast<std::size_t>(i) * width + j) * 3 + c];
    }
    std::uint8_t at(int i, int j, int c) const {
        return px[(static_cast<std::size_t>(i) * width + j) * 3 + c];
    }

    bool operator==(const RgbImage& o) const {
        return height == o.height && width == o.width && px == o.px;
    }
};

} // namespace edm
