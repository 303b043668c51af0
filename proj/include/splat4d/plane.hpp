// Copyright Contributors to the splat4d Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

namespace splat4d {

/// H x W x C raster with row-major storage. Pixel (x, y) and the Gaussian
/// built from it share the flat index y * width + x, so images, depth maps,
/// masks, flow maps, and kernel lists all line up through this one indexing.
template <typename T>
class Plane {
public:
    Plane() = default;

    Plane(int width, int height, int channels, T fill = T{})
        : width_(width), height_(height), channels_(channels),
          data_(static_cast<std::size_t>(width) * height * channels, fill) {
        if (width < 1 || height < 1 || channels < 1)
            throw std::invalid_argument("Plane: dimensions must be positive");
    }

    int width() const { return width_; }
    int height() const { return height_; }
    int channels() const { return channels_; }
    std::size_t size() const { return data_.size(); }
    std::size_t pixel_count() const { return static_cast<std::size_t>(width_) * height_; }

    T& at(int x, int y, int c = 0) {
        return data_[(static_cast<std::size_t>(y) * width_ + x) * channels_ + c];
    }
    T at(int x, int y, int c = 0) const {
        return data_[(static_cast<std::size_t>(y) * width_ + x) * channels_ + c];
    }

    T* data() { return data_.data(); }
    const T* data() const { return data_.data(); }
    std::vector<T>& raw() { return data_; }
    const std::vector<T>& raw() const { return data_; }

    bool same_shape(const Plane& o) const {
        return width_ == o.width_ && height_ == o.height_ && channels_ == o.channels_;
    }

    bool operator==(const Plane& o) const {
        return same_shape(o) && data_ == o.data_;
    }

private:
    int width_ = 0;
    int height_ = 0;
    int channels_ = 0;
    std::vector<T> data_;
};

using Image = Plane<double>;        // RGB in [0,1], 3 channels
using FloatRaster = Plane<float>;   // on-disk form of scalar/attribute maps
using IntRaster = Plane<std::int32_t>;

} // namespace splat4d
