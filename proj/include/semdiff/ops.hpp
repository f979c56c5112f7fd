#pragma once

#include <cstdint>
#include <span>

#include "semdiff/tensor.hpp"

namespace semdiff {

/// Weights and geometry shared by the vanilla, central-difference, and
/// semantic-difference operators. Weights are (C_out, C_in, h, w) with odd h
/// and w so a center tap exists. `lambda` scales the similarity term and is
/// ignored by the vanilla and central-difference forms.
struct SdcKernel {
    Tensor weights;
    std::size_t dilation = 1;
    double lambda = 1.0;

    SdcKernel(Tensor weights_, std::size_t dilation_ = 1, double lambda_ = 1.0);

    std::size_t out_channels() const { return weights.shape()[0]; }
    std::size_t in_channels() const { return weights.shape()[1]; }
    std::size_t kernel_h() const { return weights.shape()[2]; }
    std::size_t kernel_w() const { return weights.shape()[3]; }

    double weight(std::size_t co, std::size_t ci, std::size_t ky, std::size_t kx) const {
        return weights[((co * in_channels() + ci) * kernel_h() + ky) * kernel_w() + kx];
    }
};

/// Plain cross-correlation with replicate padding; output spatial extents are
/// ceil(extent / stride). Stride 2 exists only for the guidance projection.
FeatureMap conv2d(const FeatureMap& x, const SdcKernel& k, std::size_t stride = 1);

/// Central difference convolution: cross-correlation of the center-subtracted
/// patch, y(p) = sum_j W(j) * (x(j) - x(p)).
FeatureMap cdc2d(const FeatureMap& x, const SdcKernel& k);

/// Similarity of two guidance vectors: the diffusivity of their channel-mean
/// squared difference. Symmetric; equals 1 exactly when va == vb.
double semantic_similarity(std::span<const double> va, std::span<const double> vb,
                           double lambda);

/// Semantic difference convolution:
///   Y(p) = sum_j W(j) * S(V(j), V(p)) * (U(j) - U(p)),
/// with one shared similarity field per pixel pair across all channels.
FeatureMap sdc2d(const FeatureMap& u, const FeatureMap& v, const SdcKernel& k);

/// Leading-order operation count H*W*h*w*(Ci*Co + Cf) of one SDC application.
std::uint64_t flop_estimate(std::uint64_t h_img, std::uint64_t w_img, std::uint64_t h_k,
                            std::uint64_t w_k, std::uint64_t c_in, std::uint64_t c_out,
                            std::uint64_t c_f);

}  // namespace semdiff
