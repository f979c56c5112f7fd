#include "semdiff/sdn.hpp"

#include <algorithm>
#include <fstream>

#include <json.hpp>

#include "semdiff/tensor_io.hpp"

namespace semdiff {

SdnParams::SdnParams(SdcKernel sdc_, Tensor fusion_weights_, Tensor phi_weights_)
    : sdc(std::move(sdc_)),
      fusion_weights(std::move(fusion_weights_)),
      phi_weights(std::move(phi_weights_)) {
    if (fusion_weights.rank() != 4 || fusion_weights.shape()[2] != 1 ||
        fusion_weights.shape()[3] != 1)
        throw std::invalid_argument("fusion weights must be (C_out, C_in, 1, 1)");
    if (fusion_weights.shape()[1] != sdc.in_channels() + sdc.out_channels())
        throw std::invalid_argument(
            "fusion input channels must equal U channels + SDC output channels");
    if (!phi_weights.empty() && phi_weights.rank() != 4)
        throw std::invalid_argument("phi weights must be rank 4 when present");
}

FeatureMap fuse(const FeatureMap& u, const FeatureMap& y, const SdnParams& params) {
    const std::size_t h = std::max(u.height(), y.height());
    const std::size_t w = std::max(u.width(), y.width());
    FeatureMap ub = (u.height() == h && u.width() == w) ? u : bilinear_upsample(u, h, w);
    FeatureMap yb = (y.height() == h && y.width() == w) ? y : bilinear_upsample(y, h, w);
    SdcKernel one_by_one(params.fusion_weights, 1, 1.0);
    return conv2d(concat_channels(ub, yb), one_by_one);
}

FeatureMap sdn_forward(const FeatureMap& u, const FeatureMap& v, const SdnParams& params) {
    FeatureMap vb = (v.height() == u.height() && v.width() == u.width())
                        ? v
                        : bilinear_upsample(v, u.height(), u.width());
    return fuse(u, sdc2d(u, vb, params.sdc), params);
}

SdnParams as_diffusion_step(double alpha, double beta, double lambda, std::size_t kernel_h,
                            std::size_t kernel_w) {
    SdcKernel sdc(Tensor::full({1, 1, kernel_h, kernel_w}, 1.0), 1, lambda);
    Tensor fusion({1, 2, 1, 1}, {alpha, beta});
    return SdnParams(std::move(sdc), std::move(fusion));
}

FeatureMap guidance_single_scale(const FeatureMap& f, const SdnParams& params) {
    if (params.phi_weights.empty())
        throw std::invalid_argument("guidance projection weights are absent");
    SdcKernel phi(params.phi_weights, 1, 1.0);
    return conv2d(f, phi, 2);
}

std::vector<FeatureMap> guidance_multi_scale(const std::vector<FeatureMap>& feats,
                                             const SdnParams& stage_l_params) {
    if (feats.empty()) throw std::invalid_argument("empty feature pyramid");
    for (std::size_t i = 1; i < feats.size(); ++i)
        if (feats[i].height() > feats[i - 1].height() ||
            feats[i].width() > feats[i - 1].width())
            throw std::invalid_argument("pyramid extents must be non-increasing");
    std::vector<FeatureMap> out;
    out.reserve(feats.size());
    for (std::size_t i = 0; i + 1 < feats.size(); ++i)
        out.push_back(bilinear_upsample(feats[i + 1], feats[i].height(), feats[i].width()));
    const FeatureMap& last = feats.back();
    out.push_back(bilinear_upsample(guidance_single_scale(last, stage_l_params),
                                    last.height(), last.width()));
    return out;
}

void save_sdn_params(const SdnParams& params, const std::string& basename) {
    nlohmann::json meta;
    meta["blocks"] = nlohmann::json::array();
    auto add_block = [&](const std::string& name, const Tensor& t) {
        const std::string file = basename + "." + name + ".tns";
        save_tns(t, file);
        meta["blocks"].push_back({{"name", name}, {"file", file}});
    };
    add_block("sdc_weights", params.sdc.weights);
    add_block("fusion_weights", params.fusion_weights);
    if (!params.phi_weights.empty()) add_block("phi_weights", params.phi_weights);
    meta["dilation"] = params.sdc.dilation;
    meta["lambda"] = params.sdc.lambda;
    std::ofstream os(basename + ".json");
    if (!os) throw std::runtime_error("cannot open " + basename + ".json");
    os << meta.dump(2) << "\n";
}

SdnParams load_sdn_params(const std::string& basename) {
    std::ifstream is(basename + ".json");
    if (!is) throw std::runtime_error("cannot open " + basename + ".json");
    nlohmann::json meta = nlohmann::json::parse(is);
    Tensor sdc_w, fusion_w, phi_w;
    for (const auto& block : meta.at("blocks")) {
        const std::string name = block.at("name");
        Tensor t = load_tns(block.at("file"));
        if (name == "sdc_weights") sdc_w = std::move(t);
        else if (name == "fusion_weights") fusion_w = std::move(t);
        else if (name == "phi_weights") phi_w = std::move(t);
        else throw std::runtime_error("unknown parameter block '" + name + "'");
    }
    SdcKernel sdc(std::move(sdc_w), meta.at("dilation").get<std::size_t>(),
                  meta.at("lambda").get<double>());
    return SdnParams(std::move(sdc), std::move(fusion_w), std::move(phi_w));
}

}  // namespace semdiff
