#pragma once

#include <array>
#include <string>

#include <nlohmann/json.hpp>

#include "fast/common.hpp"

namespace fast {

struct LossWeights {
    double lambda1 = 1.0;   ///< stage I pixel L2
    double lambda2 = 5.0;   ///< stage I adversarial
    double lambda3 = 1.0;   ///< stage I perceptual (both taps)
    double lambda4 = 100.0; ///< stage I MS-SSIM
    double beta1 = 5.0;     ///< stage II pixel L1
    double beta2 = 1.0;     ///< stage II adversarial
    double beta3 = 5.0;     ///< stage II perceptual (both taps)

    void validate() const;
    bool operator==(const LossWeights&) const = default;
};

void to_json(nlohmann::json& j, const LossWeights& w);
void from_json(const nlohmann::json& j, LossWeights& w);

// Perceptual taps: activations after the ReLU of the 4th and 9th convolution of the VGG-19 stack
// (relu2_2 and relu4_1).
inline constexpr std::array<int, 2> kPerceptualTaps{4, 9};

struct ExtractorConfig {
    /// Divides every VGG-19 channel count. Pretrained weights require 1.
    int64_t width_divisor = 1;
    /// Archive written by tools/export_vgg19.py; empty means a fixed-seed frozen initialization.
    std::string weights;

    bool operator==(const ExtractorConfig&) const = default;
};

void to_json(nlohmann::json& j, const ExtractorConfig& c);
void from_json(const nlohmann::json& j, ExtractorConfig& c);

// Frozen VGG-19 convolution stack up to the deepest perceptual tap.
class FeatureExtractorImpl : public torch::nn::Module {
public:
    explicit FeatureExtractorImpl(int64_t width_divisor = 1);

    /// x in [-1, 1], (N, 3, H, W). Returns the activations at kPerceptualTaps.
    std::array<torch::Tensor, 2> forward(const torch::Tensor& x);

private:
    torch::nn::Sequential features_{nullptr};
    std::array<int, 2> tap_index_{};
    torch::Tensor mean_, std_;
};
TORCH_MODULE(FeatureExtractor);

/// Builds, loads (when configured) and freezes the extractor. A configured but missing weight file
/// throws BackboneUnavailable.
FeatureExtractor make_feature_extractor(const ExtractorConfig& config);

// All losses return scalar tensors and keep the autograd graph.

torch::Tensor pixel_l2(const torch::Tensor& a, const torch::Tensor& b);
torch::Tensor pixel_l1(const torch::Tensor& a, const torch::Tensor& b);

inline constexpr double kBceEpsilon = 1e-7;
/// Mean binary cross-entropy of a probability map against a constant target (0 or 1).
torch::Tensor bce(const torch::Tensor& probabilities, double target);
torch::Tensor gan_loss_generator(const torch::Tensor& fake_map);
torch::Tensor gan_loss_discriminator(const torch::Tensor& real_map, const torch::Tensor& fake_map);

/// Mean absolute feature difference per tap; inputs in [-1, 1].
std::array<torch::Tensor, 2> perceptual_loss(const torch::Tensor& a, const torch::Tensor& b,
                                             FeatureExtractor& extractor);

/// 1 - MS-SSIM on inputs remapped from [-1, 1] to [0, 1].
torch::Tensor msssim_loss(const torch::Tensor& a, const torch::Tensor& b);

struct Stage1Terms {
    torch::Tensor l2, gan, p4, p9, ssim;
};
struct Stage2Terms {
    torch::Tensor l1, gan, p4, p9;
};

torch::Tensor stage1_generator_objective(const Stage1Terms& t, const LossWeights& w);
torch::Tensor stage2_generator_objective(const Stage2Terms& t, const LossWeights& w);

} // namespace fast
