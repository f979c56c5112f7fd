#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

namespace semdiff {

/// Dense row-major N-dimensional array of doubles.
///
/// A default-constructed Tensor is "empty" (rank 0, no data) and is used as
/// the absent-value marker for optional parameter blocks. Constructing a
/// tensor with any zero extent is rejected.
class Tensor {
public:
    Tensor() = default;

    explicit Tensor(std::vector<std::size_t> shape);
    Tensor(std::vector<std::size_t> shape, std::vector<double> data);

    static Tensor full(std::vector<std::size_t> shape, double value);

    const std::vector<std::size_t>& shape() const { return shape_; }
    std::size_t rank() const { return shape_.size(); }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    std::span<double> values() { return data_; }
    std::span<const double> values() const { return data_; }

    double& operator[](std::size_t i) { return data_[i]; }
    double operator[](std::size_t i) const { return data_[i]; }

    bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }

private:
    std::vector<std::size_t> shape_;
    std::vector<double> data_;
};

/// A rank-3 tensor laid out (channels, height, width).
class FeatureMap {
public:
    FeatureMap(std::size_t channels, std::size_t height, std::size_t width)
        : t_({channels, height, width}) {}

    explicit FeatureMap(Tensor t) : t_(std::move(t)) {
        if (t_.rank() != 3)
            throw std::invalid_argument("FeatureMap requires a rank-3 tensor");
    }

    static FeatureMap full(std::size_t c, std::size_t h, std::size_t w, double value) {
        return FeatureMap(Tensor::full({c, h, w}, value));
    }

    std::size_t channels() const { return t_.shape()[0]; }
    std::size_t height() const { return t_.shape()[1]; }
    std::size_t width() const { return t_.shape()[2]; }

    double& at(std::size_t c, std::size_t y, std::size_t x) {
        return t_[(c * height() + y) * width() + x];
    }
    double at(std::size_t c, std::size_t y, std::size_t x) const {
        return t_[(c * height() + y) * width() + x];
    }

    Tensor& tensor() { return t_; }
    const Tensor& tensor() const { return t_; }

    std::span<double> values() { return t_.values(); }
    std::span<const double> values() const { return t_.values(); }

    bool same_extents(const FeatureMap& other) const {
        return height() == other.height() && width() == other.width();
    }

private:
    Tensor t_;
};

/// Enlarges the map by `margin` pixels on every side, clamping out-of-range
/// samples to the nearest in-range pixel (edge replication).
FeatureMap pad_replicate(const FeatureMap& x, std::size_t margin);

/// Removes `margin` pixels from every side. Inverse of pad_replicate.
FeatureMap crop(const FeatureMap& x, std::size_t margin);

/// Bilinear upsampling with half-pixel-center sampling:
/// src = (dst + 0.5) * in/out - 0.5, clamped. Downsampling is rejected.
FeatureMap bilinear_upsample(const FeatureMap& x, std::size_t out_h, std::size_t out_w);

/// Adjoint of bilinear_upsample: scatters grad_out back to a (C, in_h, in_w)
/// map with the same interpolation weights.
FeatureMap bilinear_upsample_adjoint(const FeatureMap& grad_out, std::size_t in_h,
                                     std::size_t in_w);

/// Stacks b's channels after a's. Spatial extents must match.
FeatureMap concat_channels(const FeatureMap& a, const FeatureMap& b);

/// Channels [begin, end) of x as a new map.
FeatureMap channel_slice(const FeatureMap& x, std::size_t begin, std::size_t end);

}  // namespace semdiff
