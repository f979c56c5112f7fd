#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "semdiff/toy.hpp"

namespace semdiff {

/// Desk-scale experiment: every neck variant trained on the same scenes for
/// every seed, then evaluated on held-out scenes.
struct BenchConfig {
    std::vector<std::uint64_t> seeds{0, 1, 2};
    int epochs = 15;
    double learning_rate = 0.05;
    int train_scenes = 16;
    int eval_scenes = 16;
    std::vector<NeckKind> variants{NeckKind::None, NeckKind::Vanilla, NeckKind::Cdc,
                                   NeckKind::Sdn};
    // high-texture scenes; the seed field is ignored (per-scene seeds are derived)
    SceneConfig scene{.texture = 0.7};
    ToyConfig model;

    static BenchConfig from_json_file(const std::string& path);
};

struct BenchRow {
    std::string variant;
    std::uint64_t seed;
    EvalAggregates metrics;
};

/// Trains and evaluates every (variant, seed) pair, writes metrics.csv,
/// per-run loss curves, and PPM dumps of the first held-out scene with each
/// variant's prediction and error map. Returns the metric rows.
std::vector<BenchRow> run_bench(const BenchConfig& cfg, const std::string& out_dir);

/// Mean of a metric over seeds for one variant.
double mean_metric(const std::vector<BenchRow>& rows, const std::string& variant,
                   double EvalAggregates::*field);

/// Fixed-format CSV serialization ('.' decimal, LF, header row) used for the
/// metrics file; bit-identical across reruns.
std::string bench_rows_to_csv(const std::vector<BenchRow>& rows);

}  // namespace semdiff
