#include "semdiff/bench.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "semdiff/tensor_io.hpp"

namespace semdiff {

namespace {

std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

Scene scene_for(const SceneConfig& base, std::uint64_t experiment_seed, int index,
                bool heldout) {
    SceneConfig cfg = base;
    cfg.seed = experiment_seed * 1000003u + static_cast<std::uint64_t>(index) +
               (heldout ? 500u : 0u);
    return gen_scene(cfg);
}

void write_error_map(const LabelMap& pred, const LabelMap& gt, const std::string& path) {
    // non-black pixels mark wrong predictions
    FeatureMap err = FeatureMap::full(3, gt.height, gt.width, 0.0);
    for (std::size_t y = 0; y < gt.height; ++y)
        for (std::size_t x = 0; x < gt.width; ++x)
            if (pred.at(y, x) != gt.at(y, x)) err.at(0, y, x) = 1.0;
    write_ppm(err, path);
}

void write_label_vis(const LabelMap& lm, int n_classes, const std::string& path) {
    FeatureMap vis(1, lm.height, lm.width);
    for (std::size_t i = 0; i < lm.labels.size(); ++i)
        vis.values()[i] = static_cast<double>(lm.labels[i]) /
                          static_cast<double>(std::max(1, n_classes - 1));
    write_pgm(vis, path);
}

}  // namespace

BenchConfig BenchConfig::from_json_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("cannot open config " + path);
    nlohmann::json j = nlohmann::json::parse(is);
    BenchConfig cfg;
    if (j.contains("seeds")) cfg.seeds = j["seeds"].get<std::vector<std::uint64_t>>();
    cfg.epochs = j.value("epochs", cfg.epochs);
    cfg.learning_rate = j.value("learning_rate", cfg.learning_rate);
    cfg.train_scenes = j.value("train_scenes", cfg.train_scenes);
    cfg.eval_scenes = j.value("eval_scenes", cfg.eval_scenes);
    if (j.contains("variants")) {
        cfg.variants.clear();
        for (const auto& v : j["variants"])
            cfg.variants.push_back(neck_from_string(v.get<std::string>()));
    }
    if (j.contains("scene")) {
        const auto& s = j["scene"];
        cfg.scene.height = s.value("height", cfg.scene.height);
        cfg.scene.width = s.value("width", cfg.scene.width);
        cfg.scene.n_classes = s.value("n_classes", cfg.scene.n_classes);
        cfg.scene.shapes = s.value("shapes", cfg.scene.shapes);
        cfg.scene.texture = s.value("texture", cfg.scene.texture);
    }
    if (j.contains("model")) {
        const auto& m = j["model"];
        cfg.model.enc_channels = m.value("enc_channels", cfg.model.enc_channels);
        cfg.model.guidance_channels = m.value("guidance_channels", cfg.model.guidance_channels);
        cfg.model.lambda = m.value("lambda", cfg.model.lambda);
    }
    cfg.model.n_classes = cfg.scene.n_classes;
    return cfg;
}

std::string bench_rows_to_csv(const std::vector<BenchRow>& rows) {
    std::string csv = "variant,seed,miou,f1px,f3px\n";
    for (const auto& r : rows) {
        csv += r.variant + "," + std::to_string(r.seed) + "," + fmt_double(r.metrics.miou) +
               "," + fmt_double(r.metrics.f1px) + "," + fmt_double(r.metrics.f3px) + "\n";
    }
    return csv;
}

std::vector<BenchRow> run_bench(const BenchConfig& cfg, const std::string& out_dir) {
    namespace fs = std::filesystem;
    fs::create_directories(out_dir);
    std::vector<BenchRow> rows;

    for (std::uint64_t seed : cfg.seeds) {
        std::vector<Scene> train_set, eval_set;
        for (int i = 0; i < cfg.train_scenes; ++i)
            train_set.push_back(scene_for(cfg.scene, seed, i, false));
        for (int i = 0; i < cfg.eval_scenes; ++i)
            eval_set.push_back(scene_for(cfg.scene, seed, i, true));

        ToyConfig model_cfg = cfg.model;
        model_cfg.n_classes = cfg.scene.n_classes;

        if (seed == cfg.seeds.front() && !eval_set.empty()) {
            write_ppm(eval_set.front().image, out_dir + "/scene0.ppm");
            write_label_vis(eval_set.front().labels, cfg.scene.n_classes,
                            out_dir + "/scene0_gt.pgm");
        }

        for (NeckKind variant : cfg.variants) {
            ToyModel model = init_model(variant, model_cfg, seed * 7919u + 1u);
            const TrainRecord rec =
                train(model, train_set, cfg.epochs, cfg.learning_rate, seed);
            const EvalAggregates agg = evaluate_model(model, eval_set);
            rows.push_back({to_string(variant), seed, agg});

            std::ofstream loss_csv(out_dir + "/loss_" + to_string(variant) + "_" +
                                   std::to_string(seed) + ".csv", std::ios::binary);
            loss_csv << "step,loss\n";
            for (std::size_t s = 0; s < rec.losses.size(); ++s)
                loss_csv << s << "," << fmt_double(rec.losses[s]) << "\n";

            if (seed == cfg.seeds.front() && !eval_set.empty()) {
                const LabelMap pred =
                    argmax_labels(model_forward(model, eval_set.front().image));
                write_label_vis(pred, cfg.scene.n_classes,
                                out_dir + "/pred_" + to_string(variant) + ".pgm");
                write_error_map(pred, eval_set.front().labels,
                                out_dir + "/error_" + to_string(variant) + ".ppm");
            }
        }
    }

    std::ofstream metrics(out_dir + "/metrics.csv", std::ios::binary);
    metrics << bench_rows_to_csv(rows);
    return rows;
}

double mean_metric(const std::vector<BenchRow>& rows, const std::string& variant,
                   double EvalAggregates::*field) {
    double sum = 0.0;
    int n = 0;
    for (const auto& r : rows)
        if (r.variant == variant) {
            sum += r.metrics.*field;
            ++n;
        }
    if (n == 0) throw std::invalid_argument("no rows for variant " + variant);
    return sum / n;
}

}  // namespace semdiff
