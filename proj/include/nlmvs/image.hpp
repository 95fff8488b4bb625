#pragma once

#include "nlmvs/math.hpp"

#include <cstdint>
#include <stdexcept>
#include <vector>

namespace nlmvs {

/// Linear-radiance raster, float32 storage, 1 or 3 channels, row 0 at the top.
class HdrImage {
  public:
    HdrImage() = default;
    HdrImage(int width, int height, int channels, float fill = 0.f)
        : width_(width), height_(height), channels_(channels),
          data_(static_cast<size_t>(width) * height * channels, fill) {
        if (width <= 0 || height <= 0 || (channels != 1 && channels != 3))
            throw std::invalid_argument("HdrImage: bad dimensions");
    }

    int width() const { return width_; }
    int height() const { return height_; }
    int channels() const { return channels_; }
    bool empty() const { return data_.empty(); }

    float& at(int x, int y, int c = 0) {
        return data_[(static_cast<size_t>(y) * width_ + x) * channels_ + c];
    }
    float at(int x, int y, int c = 0) const {
        return data_[(static_cast<size_t>(y) * width_ + x) * channels_ + c];
    }

    Rgb rgb(int x, int y) const {
        if (channels_ == 1) {
            double v = at(x, y, 0);
            return Rgb{v};
        }
        return {at(x, y, 0), at(x, y, 1), at(x, y, 2)};
    }
    void set_rgb(int x, int y, const Rgb& v) {
        if (channels_ == 1) {
            at(x, y, 0) = static_cast<float>(v.r);
        } else {
            at(x, y, 0) = static_cast<float>(v.r);
            at(x, y, 1) = static_cast<float>(v.g);
            at(x, y, 2) = static_cast<float>(v.b);
        }
    }

    float max_value() const {
        float m = 0.f;
        for (float v : data_) m = std::fmax(m, v);
        return m;
    }

    std::vector<float>& data() { return data_; }
    const std::vector<float>& data() const { return data_; }

  private:
    int width_ = 0, height_ = 0, channels_ = 0;
    std::vector<float> data_;
};

/// Binary per-pixel validity mask.
class Mask {
  public:
    Mask() = default;
    Mask(int width, int height, bool fill = false)
        : width_(width), height_(height), data_(static_cast<size_t>(width) * height, fill ? 1 : 0) {}

    int width() const { return width_; }
    int height() const { return height_; }
    bool empty() const { return data_.empty(); }

    bool at(int x, int y) const { return data_[static_cast<size_t>(y) * width_ + x] != 0; }
    void set(int x, int y, bool v) { data_[static_cast<size_t>(y) * width_ + x] = v ? 1 : 0; }

    size_t count() const {
        size_t n = 0;
        for (auto v : data_) n += v;
        return n;
    }

    std::vector<uint8_t>& data() { return data_; }
    const std::vector<uint8_t>& data() const { return data_; }

  private:
    int width_ = 0, height_ = 0;
    std::vector<uint8_t> data_;
};

using DepthMap = HdrImage;  // single channel, scene units
using NormalMap = HdrImage; // 3 channels, components in [-1,1]

} // namespace nlmvs
