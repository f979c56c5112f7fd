#pragma once

#include "semdiff/tensor.hpp"

namespace semdiff {

/// Contrast scale of the diffusivity g(s) = 1 / sqrt(1 + s / lambda^2).
struct DiffusivityConfig {
    double lambda = 1.0;

    explicit DiffusivityConfig(double lambda_) : lambda(lambda_) {
        if (!(lambda > 0.0)) throw std::invalid_argument("lambda must be positive");
    }
};

/// Explicit-update schedule: U <- alpha * U + beta * Utilde, repeated `steps`
/// times over an (kernel_h x kernel_w) neighborhood.
struct DiffusionSchedule {
    int steps = 1;
    double alpha = 1.0;
    double beta = 1.0 / 9.0;
    std::size_t kernel_h = 3;
    std::size_t kernel_w = 3;

    // Set when beta * (kernel_h * kernel_w - 1) > 1: with g <= 1 the explicit
    // update can then leave the input's value range.
    bool stability_warning = false;

    static DiffusionSchedule make(int steps, double alpha, double beta,
                                  std::size_t kernel_h = 3, std::size_t kernel_w = 3);
};

/// g(s) = 1 / sqrt(1 + s / lambda^2) for s >= 0. Equals 1 at s = 0 and is
/// strictly decreasing in s.
double diffusivity(double s, const DiffusivityConfig& cfg);

/// One explicit update. For each pixel p:
///   Utilde_c(p) = sum over the neighborhood (replicate-clamped) of
///                 g(s) * (U_c(q) - U_c(p)),
/// where s is the mean over V's channels of the squared difference between
/// V(q) and V(p), shared across U's channels. Output = alpha*U + beta*Utilde.
FeatureMap diffusion_step(const FeatureMap& u, const FeatureMap& v,
                          const DiffusionSchedule& sched, const DiffusivityConfig& cfg);

/// The neighbor-aggregation term Utilde alone (no alpha/beta blend).
FeatureMap diffusion_increment(const FeatureMap& u, const FeatureMap& v,
                               const DiffusionSchedule& sched, const DiffusivityConfig& cfg);

/// `sched.steps` repeated applications of diffusion_step; steps == 0 returns u.
FeatureMap diffuse(const FeatureMap& u, const FeatureMap& v,
                   const DiffusionSchedule& sched, const DiffusivityConfig& cfg);

}  // namespace semdiff
