#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "semdiff/ops.hpp"

namespace semdiff {

/// Gradients of a scalar loss with respect to an operator's input, guidance,
/// and kernel weights. Operators without a guidance branch leave the guidance
/// slot zero-filled in the input's shape.
struct GradTriple {
    Tensor grad_input;
    Tensor grad_guidance;
    Tensor grad_weights;
};

GradTriple conv2d_backward(const FeatureMap& grad_out, const FeatureMap& x,
                           const SdcKernel& k, std::size_t stride = 1);

GradTriple cdc2d_backward(const FeatureMap& grad_out, const FeatureMap& x,
                          const SdcKernel& k);

GradTriple sdc2d_backward(const FeatureMap& grad_out, const FeatureMap& u,
                          const FeatureMap& v, const SdcKernel& k);

enum class OpKind { Vanilla, Cdc, Sdc };

/// Per-parameter-block maxima of the relative error between analytic
/// gradients and central finite differences of the cotangent-weighted loss.
struct GradCheckResult {
    double input = 0.0;
    double guidance = 0.0;  // 0 for operators without a guidance branch
    double weights = 0.0;

    double max() const;
};

/// Central-difference certification of one operator instance. The loss is
/// sum(grad_out .* forward(...)) with a cotangent drawn from `cotangent_seed`.
/// Relative-error denominators are floored at 1e-8.
GradCheckResult finite_diff_check(OpKind op, const FeatureMap& x, const FeatureMap& guidance,
                                  const SdcKernel& k, double step,
                                  std::uint64_t cotangent_seed);

struct GradCheckRow {
    std::string op;
    std::string block;
    double max_rel_err;
};

/// Random-instance sweep over all three operators; one row per
/// (operator, parameter block). Used by the gradcheck CLI and acceptance gate.
std::vector<GradCheckRow> run_gradcheck_suite(int instances_per_op, double step,
                                              std::uint64_t seed);

}  // namespace semdiff
