#pragma once

#include "fast/common.hpp"

namespace fast {

// PatchGAN over a channel-concatenated pair: four stride-2 4x4 conv blocks (C, 2C, 4C, 8C; leaky ReLU
// 0.2; batch-norm on blocks 2-4), a 1x1 projection and a sigmoid. 64x256 inputs give a 4x16 map.
class PatchDiscriminatorImpl : public torch::nn::Module {
public:
    explicit PatchDiscriminatorImpl(int64_t base_channels = 64, int64_t pair_channels = 2 * kChannels);

    /// a, b: (N, 3, 64, 256). Returns the probability map (N, 4, 16).
    torch::Tensor forward(const torch::Tensor& a, const torch::Tensor& b);

    int64_t base_channels() const { return base_channels_; }

private:
    int64_t base_channels_;
    int64_t pair_channels_;
    torch::nn::Sequential body_{nullptr};
};
TORCH_MODULE(PatchDiscriminator);

/// Unbatched (3, 64, 256) pair -> (4, 16) map.
torch::Tensor patch_discriminate(PatchDiscriminator& discriminator, const TensorImage& a, const TensorImage& b);

} // namespace fast
