#include "semdiff/metrics.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <stdexcept>

namespace semdiff {

std::size_t BinaryMask::popcount() const {
    return static_cast<std::size_t>(std::count(set.begin(), set.end(), std::uint8_t{1}));
}

std::uint64_t ConfusionMatrix::total() const {
    return std::accumulate(counts.begin(), counts.end(), std::uint64_t{0});
}

ConfusionMatrix confusion_matrix(const LabelMap& pred, const LabelMap& gt, int n_classes,
                                 const BinaryMask* mask) {
    if (pred.height != gt.height || pred.width != gt.width)
        throw std::invalid_argument("confusion_matrix: shape mismatch");
    if (mask && (mask->height != gt.height || mask->width != gt.width))
        throw std::invalid_argument("confusion_matrix: mask shape mismatch");
    if (n_classes < 1) throw std::invalid_argument("n_classes must be positive");
    ConfusionMatrix cm(n_classes);
    for (std::size_t i = 0; i < gt.labels.size(); ++i) {
        if (mask && !mask->set[i]) continue;
        const int g = gt.labels[i], p = pred.labels[i];
        if (g < 0 || g >= n_classes || p < 0 || p >= n_classes)
            throw std::out_of_range("class index outside [0, n_classes)");
        ++cm.at(g, p);
    }
    return cm;
}

std::optional<double> miou(const ConfusionMatrix& cm) {
    double sum = 0.0;
    int present = 0;
    for (int c = 0; c < cm.n_classes; ++c) {
        std::uint64_t tp = cm.at(c, c), gt_total = 0, pred_total = 0;
        for (int k = 0; k < cm.n_classes; ++k) {
            gt_total += cm.at(c, k);
            pred_total += cm.at(k, c);
        }
        const std::uint64_t uni = gt_total + pred_total - tp;
        if (uni == 0) continue;  // class absent from both maps
        sum += static_cast<double>(tp) / static_cast<double>(uni);
        ++present;
    }
    if (present == 0) return std::nullopt;
    return sum / present;
}

BinaryMask boundary_mask(const LabelMap& gt, int width_px) {
    if (width_px < 1 || width_px % 2 == 0)
        throw std::invalid_argument("band width must be odd and positive");
    const std::size_t h = gt.height, w = gt.width;
    BinaryMask seeds(h, w);
    for (std::size_t y = 0; y < h; ++y)
        for (std::size_t x = 0; x < w; ++x) {
            const int c = gt.at(y, x);
            const bool edge = (y > 0 && gt.at(y - 1, x) != c) ||
                              (y + 1 < h && gt.at(y + 1, x) != c) ||
                              (x > 0 && gt.at(y, x - 1) != c) ||
                              (x + 1 < w && gt.at(y, x + 1) != c);
            if (edge) seeds.at(y, x) = 1;
        }
    const int radius = (width_px - 1) / 2;
    if (radius == 0) return seeds;
    BinaryMask band(h, w);
    for (std::size_t y = 0; y < h; ++y)
        for (std::size_t x = 0; x < w; ++x) {
            if (!seeds.at(y, x)) continue;
            const std::size_t y0 = y >= static_cast<std::size_t>(radius) ? y - radius : 0;
            const std::size_t x0 = x >= static_cast<std::size_t>(radius) ? x - radius : 0;
            const std::size_t y1 = std::min(h - 1, y + radius);
            const std::size_t x1 = std::min(w - 1, x + radius);
            for (std::size_t yy = y0; yy <= y1; ++yy)
                for (std::size_t xx = x0; xx <= x1; ++xx) band.at(yy, xx) = 1;
        }
    return band;
}

std::optional<double> boundary_fscore(const LabelMap& pred, const LabelMap& gt,
                                      int width_px) {
    if (pred.height != gt.height || pred.width != gt.width)
        throw std::invalid_argument("boundary_fscore: shape mismatch");
    const BinaryMask band = boundary_mask(gt, width_px);
    struct Counts {
        std::uint64_t tp = 0, fp = 0, fn = 0;
    };
    std::map<int, Counts> per_class;
    bool any = false;
    for (std::size_t i = 0; i < gt.labels.size(); ++i) {
        if (!band.set[i]) continue;
        any = true;
        const int g = gt.labels[i], p = pred.labels[i];
        if (g == p) {
            ++per_class[g].tp;
        } else {
            ++per_class[g].fn;
            ++per_class[p].fp;
        }
    }
    if (!any) return std::nullopt;
    double sum = 0.0;
    int n = 0;
    for (const auto& [cls, c] : per_class) {
        // macro average runs over classes present in the band's ground truth
        if (c.tp + c.fn == 0) continue;
        const double precision =
            c.tp + c.fp == 0 ? 0.0 : static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp);
        const double recall = static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn);
        const double f1 =
            precision + recall == 0.0 ? 0.0 : 2.0 * precision * recall / (precision + recall);
        sum += f1;
        ++n;
    }
    return sum / n;
}

}  // namespace semdiff
