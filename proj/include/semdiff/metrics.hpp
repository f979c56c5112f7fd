#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "semdiff/tensor.hpp"

namespace semdiff {

/// 2-D grid of class indices.
struct LabelMap {
    std::size_t height = 0, width = 0;
    std::vector<int> labels;

    LabelMap() = default;
    LabelMap(std::size_t h, std::size_t w, int fill = 0)
        : height(h), width(w), labels(h * w, fill) {}

    int& at(std::size_t y, std::size_t x) { return labels[y * width + x]; }
    int at(std::size_t y, std::size_t x) const { return labels[y * width + x]; }
};

struct BinaryMask {
    std::size_t height = 0, width = 0;
    std::vector<std::uint8_t> set;

    BinaryMask() = default;
    BinaryMask(std::size_t h, std::size_t w) : height(h), width(w), set(h * w, 0) {}

    std::uint8_t& at(std::size_t y, std::size_t x) { return set[y * width + x]; }
    bool at(std::size_t y, std::size_t x) const { return set[y * width + x] != 0; }
    std::size_t popcount() const;
};

/// (ground truth, predicted) pixel counts.
struct ConfusionMatrix {
    int n_classes = 0;
    std::vector<std::uint64_t> counts;

    explicit ConfusionMatrix(int n) : n_classes(n), counts(static_cast<std::size_t>(n) * n, 0) {}

    std::uint64_t& at(int gt, int pred) {
        return counts[static_cast<std::size_t>(gt) * n_classes + pred];
    }
    std::uint64_t at(int gt, int pred) const {
        return counts[static_cast<std::size_t>(gt) * n_classes + pred];
    }
    std::uint64_t total() const;
};

/// Counts accumulated only where mask is set (everywhere when absent).
/// Out-of-range class indices are an error.
ConfusionMatrix confusion_matrix(const LabelMap& pred, const LabelMap& gt, int n_classes,
                                 const BinaryMask* mask = nullptr);

/// Mean of TP / (TP + FP + FN) over classes present in pred or gt. Returns
/// nullopt when no class is present at all (empty matrix).
std::optional<double> miou(const ConfusionMatrix& cm);

/// Pixels within Chebyshev distance (width-1)/2 of a boundary seed, where a
/// seed is any pixel with a 4-neighbor of a different class. Width must be odd.
BinaryMask boundary_mask(const LabelMap& gt, int width_px);

/// Macro-averaged per-class F1 of predicted labels restricted to the
/// ground-truth boundary band. Returns nullopt when the band is empty.
std::optional<double> boundary_fscore(const LabelMap& pred, const LabelMap& gt, int width_px);

}  // namespace semdiff
