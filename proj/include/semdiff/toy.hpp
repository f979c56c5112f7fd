#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "semdiff/metrics.hpp"
#include "semdiff/tensor.hpp"

namespace semdiff {

/// Synthetic scene parameters: colored shapes on a background with seeded
/// high-frequency intra-class texture.
struct SceneConfig {
    std::size_t height = 48;
    std::size_t width = 48;
    int n_classes = 3;       // 2..4
    int shapes = 4;
    double texture = 0.3;    // amplitude of the intra-class texture
    std::uint64_t seed = 0;
};

struct Scene {
    FeatureMap image;   // (3, H, W)
    LabelMap labels;
};

/// Deterministic given cfg.seed.
Scene gen_scene(const SceneConfig& cfg);

enum class NeckKind { None, Vanilla, Cdc, Sdn };

std::string to_string(NeckKind k);
NeckKind neck_from_string(const std::string& s);

struct ToyConfig {
    std::size_t enc_channels = 8;
    std::size_t guidance_channels = 4;
    int n_classes = 3;
    double lambda = 0.5;   // SDC similarity scale (sdn neck only)
};

/// Two stride-2 conv+ReLU encoder stages, a pluggable neck, and a 1x1
/// classifier upsampled back to input resolution. No biases anywhere.
struct ToyModel {
    NeckKind neck = NeckKind::None;
    ToyConfig cfg;
    Tensor enc1;     // (C, 3, 3, 3), stride 2
    Tensor enc2;     // (C, C, 3, 3), stride 2
    Tensor neck_op;  // (C, C, 3, 3); empty for the bare neck
    Tensor phi;      // (Cf, C, 3, 3), stride 2; sdn neck only
    Tensor fusion;   // (C, 2C, 1, 1); empty for the bare neck
    Tensor dec;      // (K, C, 1, 1)

    /// Trainable blocks in a fixed order (absent blocks skipped).
    std::vector<Tensor*> parameters();
    std::vector<const Tensor*> parameters() const;
};

/// He-style seeded uniform init, bound sqrt(6 / fan_in).
ToyModel init_model(NeckKind neck, const ToyConfig& cfg, std::uint64_t seed);

/// Per-class score map (n_classes, H, W) at input resolution.
FeatureMap model_forward(const ToyModel& m, const FeatureMap& image);

/// Mean pixel-wise softmax cross-entropy and its score gradient
/// (softmax - onehot) / pixel_count.
std::pair<double, FeatureMap> loss_and_grad(const FeatureMap& scores, const LabelMap& labels);

/// Loss plus gradients for every tensor returned by m.parameters(), in order.
double model_loss_and_gradients(const ToyModel& m, const FeatureMap& image,
                                const LabelMap& labels, std::vector<Tensor>& grads);

struct TrainRecord {
    std::vector<double> losses;  // one entry per SGD step
};

/// Plain SGD with momentum 0.9 over single-scene steps; scene order is a
/// fixed seeded shuffle reused every epoch. Aborts on non-finite loss.
TrainRecord train(ToyModel& m, const std::vector<Scene>& scenes, int epochs,
                  double learning_rate, std::uint64_t seed);

/// Argmax per pixel; ties break toward the lowest class index.
LabelMap argmax_labels(const FeatureMap& scores);

struct EvalAggregates {
    double miou = 0.0;
    double f1px = 0.0;
    double f3px = 0.0;
};

/// Metrics averaged over scenes.
EvalAggregates evaluate_model(const ToyModel& m, const std::vector<Scene>& scenes);

}  // namespace semdiff
