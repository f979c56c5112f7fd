// semdiff command-line tool: guided diffusion, operator demos, gradient
// certification, the desk-scale benchmark, and metric evaluation.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>

#include <CLI11.hpp>

#include "semdiff/bench.hpp"
#include "semdiff/diffusion.hpp"
#include "semdiff/grad.hpp"
#include "semdiff/metrics.hpp"
#include "semdiff/ops.hpp"
#include "semdiff/tensor_io.hpp"

namespace fs = std::filesystem;
using namespace semdiff;

namespace {

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

FeatureMap load_guidance(const std::string& spec, std::size_t h, std::size_t w) {
    if (spec == "constant") return FeatureMap::full(1, h, w, 0.0);
    return read_image_any(spec);
}

void save_output(const FeatureMap& x, const std::string& path) {
    if (path.size() >= 4 && path.compare(path.size() - 4, 4, ".tns") == 0) {
        save_tns(x.tensor(), path);
    } else if (path.size() >= 4 && path.compare(path.size() - 4, 4, ".ppm") == 0) {
        write_ppm(x, path);
    } else {
        write_pgm(x, path);
    }
}

int cmd_diffuse(const std::string& input, const std::string& guidance, double lambda,
                double alpha, double beta, int steps, const std::string& out) {
    const FeatureMap u0 = read_image_any(input);
    const FeatureMap v = load_guidance(guidance, u0.height(), u0.width());
    if (v.height() != u0.height() || v.width() != u0.width()) {
        std::cerr << "error: guidance extents differ from input\n";
        return 1;
    }
    const DiffusivityConfig cfg(lambda);
    const DiffusionSchedule sched = DiffusionSchedule::make(steps, alpha, beta);
    if (sched.stability_warning) {
        std::cerr << "error: unstable schedule (beta * (taps-1) > 1)\n";
        return 1;
    }
    auto stats = [](const FeatureMap& m) {
        double mn = m.values()[0], mx = m.values()[0], sum = 0.0;
        for (double x : m.values()) {
            mn = std::min(mn, x);
            mx = std::max(mx, x);
            sum += x;
        }
        return std::pair{sum / static_cast<double>(m.values().size()), mx - mn};
    };
    std::cout << "step,mean,range\n";
    FeatureMap u = u0;
    auto [mean0, range0] = stats(u);
    std::cout << 0 << "," << fmt(mean0) << "," << fmt(range0) << "\n";
    for (int t = 1; t <= steps; ++t) {
        u = diffusion_step(u, v, sched, cfg);
        auto [mean, range] = stats(u);
        std::cout << t << "," << fmt(mean) << "," << fmt(range) << "\n";
    }
    save_output(u, out);
    return 0;
}

int cmd_opdemo(const std::string& op, const std::string& input, const std::string& guidance,
               std::size_t kernel, std::size_t dilation, double lambda,
               const std::string& labels_path, const std::string& out) {
    const FeatureMap x = read_image_any(input);
    const FeatureMap v = load_guidance(guidance, x.height(), x.width());
    SdcKernel k(Tensor::full({1, x.channels(), kernel, kernel}, 1.0), dilation, lambda);
    FeatureMap y = [&] {
        if (op == "vanilla") return conv2d(x, k);
        if (op == "cdc") return cdc2d(x, k);
        if (op == "sdc") return sdc2d(x, v, k);
        throw CLI::ValidationError("operator", "unknown operator tag '" + op + "'");
    }();

    save_tns(y.tensor(), out + ".tns");
    // linearly normalized view for the PGM dump
    double mn = y.values()[0], mx = y.values()[0];
    for (double val : y.values()) {
        mn = std::min(mn, val);
        mx = std::max(mx, val);
    }
    FeatureMap vis = y;
    const double span = mx > mn ? mx - mn : 1.0;
    for (auto& val : vis.values()) val = (val - mn) / span;
    write_pgm(channel_slice(vis, 0, 1), out + ".pgm");

    if (!labels_path.empty()) {
        const LabelMap gt = read_label_pgm(labels_path);
        const BinaryMask band = boundary_mask(gt, 1);
        double in_sum = 0.0, band_sum = 0.0;
        std::size_t in_n = 0, band_n = 0;
        for (std::size_t yy = 0; yy < y.height(); ++yy)
            for (std::size_t xx = 0; xx < y.width(); ++xx) {
                const double a = std::abs(y.at(0, yy, xx));
                if (band.at(yy, xx)) {
                    band_sum += a;
                    ++band_n;
                } else {
                    in_sum += a;
                    ++in_n;
                }
            }
        std::cout << "region,mean_abs_response\n";
        std::cout << "interior," << fmt(in_n ? in_sum / in_n : 0.0) << "\n";
        std::cout << "boundary," << fmt(band_n ? band_sum / band_n : 0.0) << "\n";
    }
    return 0;
}

int cmd_gradcheck(const std::string& out, bool corrupt) {
    auto rows = run_gradcheck_suite(20, 1e-5, 0);
    if (corrupt) {
        // negative control: simulates a broken backward pass
        rows[0].max_rel_err += 1.0;
    }
    std::ofstream csv(out, std::ios::binary);
    if (!csv) {
        std::cerr << "error: cannot open " << out << "\n";
        return 1;
    }
    csv << "operator,block,max_rel_err\n";
    bool ok = true;
    for (const auto& r : rows) {
        csv << r.op << "," << r.block << "," << fmt(r.max_rel_err) << "\n";
        if (!(r.max_rel_err <= 1e-6)) {
            std::cerr << "gradcheck FAILED: " << r.op << "/" << r.block << " = "
                      << fmt(r.max_rel_err) << "\n";
            ok = false;
        }
    }
    return ok ? 0 : 1;
}

int cmd_bench(const std::string& config_path, const std::string& out_dir) {
    BenchConfig cfg;
    if (!config_path.empty()) cfg = BenchConfig::from_json_file(config_path);
    const auto rows = run_bench(cfg, out_dir);
    for (const auto& r : rows)
        std::cout << r.variant << "," << r.seed << "," << fmt(r.metrics.miou) << ","
                  << fmt(r.metrics.f1px) << "," << fmt(r.metrics.f3px) << "\n";
    return 0;
}

int cmd_eval(const std::string& pred_dir, const std::string& gt_dir, int n_classes,
             const std::string& out) {
    std::vector<std::string> names;
    for (const auto& e : fs::directory_iterator(gt_dir))
        if (e.path().extension() == ".pgm") names.push_back(e.path().filename().string());
    std::sort(names.begin(), names.end());
    if (names.empty()) {
        std::cerr << "error: no .pgm label maps in " << gt_dir << "\n";
        return 1;
    }
    std::ofstream csv(out, std::ios::binary);
    if (!csv) {
        std::cerr << "error: cannot open " << out << "\n";
        return 1;
    }
    csv << "image,miou,f1px,f3px\n";
    double sum_miou = 0.0, sum_f1 = 0.0, sum_f3 = 0.0;
    std::size_t counted = 0;
    for (const auto& name : names) {
        const fs::path pred_path = fs::path(pred_dir) / name;
        if (!fs::exists(pred_path)) {
            std::cerr << "error: prediction missing for " << name << "\n";
            return 1;
        }
        const LabelMap gt = read_label_pgm((fs::path(gt_dir) / name).string());
        const LabelMap pred = read_label_pgm(pred_path.string());
        const auto cm = confusion_matrix(pred, gt, n_classes);
        const auto m = miou(cm);
        const auto f1 = boundary_fscore(pred, gt, 1);
        const auto f3 = boundary_fscore(pred, gt, 3);
        csv << name << "," << (m ? fmt(*m) : "nodata") << ","
            << (f1 ? fmt(*f1) : "nodata") << "," << (f3 ? fmt(*f3) : "nodata") << "\n";
        if (m) {
            sum_miou += *m;
            sum_f1 += f1.value_or(0.0);
            sum_f3 += f3.value_or(0.0);
            ++counted;
        }
    }
    if (counted == 0) {
        std::cerr << "error: no evaluable images (all empty)\n";
        return 1;
    }
    const double n = static_cast<double>(counted);
    csv << "aggregate," << fmt(sum_miou / n) << "," << fmt(sum_f1 / n) << ","
        << fmt(sum_f3 / n) << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"semantic diffusion toolkit"};
    app.require_subcommand(1);

    std::string input, guidance = "constant", out, config, labels, op;
    std::string pred_dir, gt_dir;
    double lambda = 1.0, alpha = 1.0, beta = 1.0 / 9.0;
    int steps = 10, n_classes = 2;
    std::size_t kernel = 3, dilation = 1;
    std::uint64_t seed = 0;
    bool corrupt = false;

    auto* diffuse = app.add_subcommand("diffuse", "guided anisotropic diffusion of an image");
    diffuse->add_option("--input", input)->required()->check(CLI::ExistingFile);
    diffuse->add_option("--guidance", guidance, "guidance image path or 'constant'");
    diffuse->add_option("--lambda", lambda);
    diffuse->add_option("--alpha", alpha);
    diffuse->add_option("--beta", beta);
    diffuse->add_option("--steps", steps);
    diffuse->add_option("--out", out)->required();

    auto* opdemo = app.add_subcommand("opdemo", "dump an operator response map");
    opdemo->add_option("operator", op, "vanilla | cdc | sdc")->required();
    opdemo->add_option("--input", input)->required()->check(CLI::ExistingFile);
    opdemo->add_option("--guidance", guidance);
    opdemo->add_option("--kernel", kernel);
    opdemo->add_option("--dilation", dilation);
    opdemo->add_option("--lambda", lambda);
    opdemo->add_option("--labels", labels, "label PGM for region statistics");
    opdemo->add_option("--out", out, "output basename")->required();

    auto* gradcheck = app.add_subcommand("gradcheck", "finite-difference gradient certification");
    gradcheck->add_option("--out", out)->required();
    gradcheck->add_flag("--self-test-corrupt", corrupt)->group("");  // hidden

    auto* bench = app.add_subcommand("bench", "train and evaluate all neck variants");
    bench->add_option("--config", config, "experiment JSON")->check(CLI::ExistingFile);
    bench->add_option("--out", out, "output directory")->required();

    auto* eval = app.add_subcommand("eval", "metrics over prediction/ground-truth directories");
    eval->add_option("--pred", pred_dir)->required()->check(CLI::ExistingDirectory);
    eval->add_option("--gt", gt_dir)->required()->check(CLI::ExistingDirectory);
    eval->add_option("--classes", n_classes)->required();
    eval->add_option("--out", out)->required();

    app.add_option("--seed", seed, "seed override (reserved for future subcommands)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (diffuse->parsed())
            return cmd_diffuse(input, guidance, lambda, alpha, beta, steps, out);
        if (opdemo->parsed())
            return cmd_opdemo(op, input, guidance, kernel, dilation, lambda, labels, out);
        if (gradcheck->parsed()) return cmd_gradcheck(out, corrupt);
        if (bench->parsed()) return cmd_bench(config, out);
        if (eval->parsed()) return cmd_eval(pred_dir, gt_dir, n_classes, out);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
