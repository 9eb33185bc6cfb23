#pragma once

#include "fast/common.hpp"

namespace fast {

struct MaskEstimate {
    torch::Tensor soft;  ///< (1, 64, 256) probabilities
    torch::Tensor hard;  ///< (1, 64, 256) in {0, 1}, exactly soft > 0.5
};

// U-Net with four max-pool downsamplings and four bilinear-upsample + conv stages, skip connections,
// channel plan base..8*base (64..512 by default), single-channel logit head.
class MaskUNetImpl : public torch::nn::Module {
public:
    explicit MaskUNetImpl(int64_t base_channels = 64);

    /// (N, 3, 64, 256) image -> (N, 1, 64, 256) logits.
    torch::Tensor forward(const torch::Tensor& image);
    int64_t base_channels() const { return base_channels_; }

private:
    int64_t base_channels_;
    torch::nn::Sequential in_{nullptr};
    std::array<torch::nn::Sequential, 4> down_;
    std::array<torch::nn::Sequential, 4> up_;
    torch::nn::Conv2d head_{nullptr};
};
TORCH_MODULE(MaskUNet);

/// Unbatched (3, 64, 256) image; runs under NoGradGuard.
MaskEstimate estimate_mask(MaskUNet& unet, const TensorImage& image);

} // namespace fast
