#pragma once

#include <string>
#include <vector>

#include "semdiff/ops.hpp"

namespace semdiff {

/// Complete state of one SDN neck: the SDC kernel, the 1x1 fusion weights
/// (C_out, C_u + C_y, 1, 1), and optionally the 3x3 stride-2 guidance
/// projection weights (empty when guidance is supplied externally).
struct SdnParams {
    SdcKernel sdc;
    Tensor fusion_weights;
    Tensor phi_weights;

    SdnParams(SdcKernel sdc_, Tensor fusion_weights_, Tensor phi_weights_ = Tensor());
};

/// Concat-then-1x1 fusion of the input feature and the SDC response. If the
/// spatial extents differ, the smaller map is bilinear-upsampled first.
FeatureMap fuse(const FeatureMap& u, const FeatureMap& y, const SdnParams& params);

/// F_sdn = fuse(U, sdc2d(U, V', params.sdc)) where V' is V upsampled to U's
/// extents when smaller.
FeatureMap sdn_forward(const FeatureMap& u, const FeatureMap& v, const SdnParams& params);

/// Parameters for which sdn_forward on single-channel input reproduces one
/// explicit diffusion update exactly: all-ones SDC weights and [alpha | beta]
/// fusion weights.
SdnParams as_diffusion_step(double alpha, double beta, double lambda,
                            std::size_t kernel_h = 3, std::size_t kernel_w = 3);

/// Guidance for a single-scale neck: a 3x3 stride-2 convolution of F
/// (replicate padding, ceil-division output extents).
FeatureMap guidance_single_scale(const FeatureMap& f, const SdnParams& params);

/// Guidance per stage of an L-scale pyramid (coarsest last): stage i < L is
/// guided by F_{i+1}, stage L by the stride-2 projection of F_L. Every entry
/// is upsampled to its stage's extents so it is ready for SDC.
std::vector<FeatureMap> guidance_multi_scale(const std::vector<FeatureMap>& feats,
                                             const SdnParams& stage_l_params);

/// Serialization: one .tns per parameter block plus a JSON sidecar
/// (<basename>.json) naming the blocks and scalar settings.
void save_sdn_params(const SdnParams& params, const std::string& basename);
SdnParams load_sdn_params(const std::string& basename);

}  // namespace semdiff
