#include "fast/losses.hpp"

#include <cmath>
#include <filesystem>

#include <ATen/CPUGeneratorImpl.h>

#include "fast/metrics.hpp"

namespace fast {

namespace nn = torch::nn;
using nlohmann::json;

void LossWeights::validate() const
{
    for (double w : {lambda1, lambda2, lambda3, lambda4, beta1, beta2, beta3})
        if (!(w >= 0.0) || !std::isfinite(w))
            throw InvalidArgument("loss weights must be finite and nonnegative");
}

void to_json(json& j, const LossWeights& w)
{
    j = json{{"lambda1", w.lambda1}, {"lambda2", w.lambda2}, {"lambda3", w.lambda3}, {"lambda4", w.lambda4},
             {"beta1", w.beta1},     {"beta2", w.beta2},     {"beta3", w.beta3}};
}

void from_json(const json& j, LossWeights& w)
{
    LossWeights d;
    w.lambda1 = j.value("lambda1", d.lambda1);
    w.lambda2 = j.value("lambda2", d.lambda2);
    w.lambda3 = j.value("lambda3", d.lambda3);
    w.lambda4 = j.value("lambda4", d.lambda4);
    w.beta1 = j.value("beta1", d.beta1);
    w.beta2 = j.value("beta2", d.beta2);
    w.beta3 = j.value("beta3", d.beta3);
    w.validate();
}

void to_json(json& j, const ExtractorConfig& c)
{
    j = json{{"width_divisor", c.width_divisor}, {"weights", c.weights}};
}

void from_json(const json& j, ExtractorConfig& c)
{
    c.width_divisor = j.value("width_divisor", int64_t{1});
    c.weights = j.value("weights", std::string());
    if (c.width_divisor < 1 || 64 % c.width_divisor != 0)
        throw InvalidArgument("extractor width_divisor must divide 64");
}

// ---------------------------------------------------------------------------

FeatureExtractorImpl::FeatureExtractorImpl(int64_t width_divisor)
{
    if (width_divisor < 1 || 64 % width_divisor != 0)
        throw InvalidArgument("extractor width_divisor must divide 64");
    // VGG-19 layout through conv4_1; 0 marks a 2x2 max pool.
    const int plan[] = {64, 64, 0, 128, 128, 0, 256, 256, 256, 256, 0, 512};
    nn::Sequential features;
    int64_t in = 3;
    int conv_count = 0, tap = 0;
    for (int width : plan) {
        if (width == 0) {
            features->push_back(nn::MaxPool2d(nn::MaxPool2dOptions(2).stride(2)));
            continue;
        }
        const int64_t out = width / width_divisor;
        features->push_back(nn::Conv2d(nn::Conv2dOptions(in, out, 3).padding(1)));
        features->push_back(nn::ReLU());
        ++conv_count;
        if (tap < 2 && conv_count == kPerceptualTaps[tap])
            tap_index_[tap++] = static_cast<int>(features->size()) - 1;
        in = out;
    }
    features_ = register_module("features", features);
    mean_ = register_buffer("mean", torch::tensor({0.485, 0.456, 0.406}).view({1, 3, 1, 1}));
    std_ = register_buffer("std", torch::tensor({0.229, 0.224, 0.225}).view({1, 3, 1, 1}));
}

std::array<torch::Tensor, 2> FeatureExtractorImpl::forward(const torch::Tensor& x)
{
    // Generator range [-1, 1] -> [0, 1] -> ImageNet normalization.
    auto h = (to_unit(x) - mean_.to(x.scalar_type())) / std_.to(x.scalar_type());
    std::array<torch::Tensor, 2> taps;
    int i = 0;
    for (auto& layer : *features_) {
        h = layer.forward(h);
        if (i == tap_index_[0])
            taps[0] = h;
        if (i == tap_index_[1]) {
            taps[1] = h;
            break;
        }
        ++i;
    }
    return taps;
}

FeatureExtractor make_feature_extractor(const ExtractorConfig& config)
{
    FeatureExtractor extractor(config.width_divisor);
    if (!config.weights.empty()) {
        if (config.width_divisor != 1)
            throw InvalidArgument("pretrained extractor weights require width_divisor 1");
        std::error_code ec;
        if (!std::filesystem::is_regular_file(config.weights, ec))
            throw BackboneUnavailable("VGG-19 weights not found at '" + config.weights + "'");
        torch::load(extractor, config.weights);
    } else {
        // Fixed-seed He initialization, independent of the global torch RNG.
        auto gen = at::make_generator<at::CPUGeneratorImpl>(0x76676731ULL);
        torch::NoGradGuard no_grad;
        for (auto& item : extractor->named_parameters()) {
            auto& p = item.value();
            if (p.dim() == 4) {
                const double fan_in = static_cast<double>(p.size(1) * p.size(2) * p.size(3));
                p.copy_(at::normal(0.0, std::sqrt(2.0 / fan_in), p.sizes(), gen));
            } else {
                p.zero_();
            }
        }
    }
    for (auto& p : extractor->parameters())
        p.set_requires_grad(false);
    extractor->eval();
    return extractor;
}

// ---------------------------------------------------------------------------

static void same_shape(const torch::Tensor& a, const torch::Tensor& b, const char* what)
{
    if (a.sizes() != b.sizes())
        throw ShapeMismatch(std::string(what) + ": " + c10::str(a.sizes()) + " vs " + c10::str(b.sizes()));
}

torch::Tensor pixel_l2(const torch::Tensor& a, const torch::Tensor& b)
{
    same_shape(a, b, "pixel_l2");
    return (a - b).pow(2).mean();
}

torch::Tensor pixel_l1(const torch::Tensor& a, const torch::Tensor& b)
{
    same_shape(a, b, "pixel_l1");
    return (a - b).abs().mean();
}

torch::Tensor bce(const torch::Tensor& probabilities, double target)
{
    auto p = probabilities.clamp(kBceEpsilon, 1.0 - kBceEpsilon);
    return -(target * torch::log(p) + (1.0 - target) * torch::log(1.0 - p)).mean();
}

torch::Tensor gan_loss_generator(const torch::Tensor& fake_map) { return bce(fake_map, 1.0); }

torch::Tensor gan_loss_discriminator(const torch::Tensor& real_map, const torch::Tensor& fake_map)
{
    return 0.5 * (bce(real_map, 1.0) + bce(fake_map, 0.0));
}

std::array<torch::Tensor, 2> perceptual_loss(const torch::Tensor& a, const torch::Tensor& b,
                                             FeatureExtractor& extractor)
{
    same_shape(a, b, "perceptual_loss");
    auto x = a.dim() == 3 ? a.unsqueeze(0) : a;
    auto y = b.dim() == 3 ? b.unsqueeze(0) : b;
    auto fa = extractor->forward(x);
    auto fb = extractor->forward(y);
    return {(fa[0] - fb[0]).abs().mean(), (fa[1] - fb[1]).abs().mean()};
}

torch::Tensor msssim_loss(const torch::Tensor& a, const torch::Tensor& b)
{
    same_shape(a, b, "msssim_loss");
    return 1.0 - ms_ssim_tensor(to_unit(a), to_unit(b));
}

torch::Tensor stage1_generator_objective(const Stage1Terms& t, const LossWeights& w)
{
    return w.lambda1 * t.l2 + w.lambda2 * t.gan + w.lambda3 * (t.p4 + t.p9) + w.lambda4 * t.ssim;
}

torch::Tensor stage2_generator_objective(const Stage2Terms& t, const LossWeights& w)
{
    return w.beta1 * t.l1 + w.beta2 * t.gan + w.beta3 * (t.p4 + t.p9);
}

} // namespace fast
