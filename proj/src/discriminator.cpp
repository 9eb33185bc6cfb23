#include "fast/discriminator.hpp"

namespace fast {

namespace nn = torch::nn;

PatchDiscriminatorImpl::PatchDiscriminatorImpl(int64_t base_channels, int64_t pair_channels)
    : base_channels_(base_channels), pair_channels_(pair_channels)
{
    nn::Sequential body;
    int64_t in = pair_channels, out = base_channels;
    for (int k = 0; k < 4; ++k) {
        body->push_back(nn::Conv2d(nn::Conv2dOptions(in, out, 4).stride(2).padding(1).bias(k == 0)));
        if (k > 0)
            body->push_back(nn::BatchNorm2d(out));
        body->push_back(nn::LeakyReLU(nn::LeakyReLUOptions().negative_slope(0.2)));
        in = out;
        out *= 2;
    }
    body->push_back(nn::Conv2d(nn::Conv2dOptions(in, 1, 1)));
    body_ = register_module("body", body);
}

torch::Tensor PatchDiscriminatorImpl::forward(const torch::Tensor& a, const torch::Tensor& b)
{
    if (a.dim() != 4 || a.sizes() != b.sizes() || a.size(1) * 2 != pair_channels_ || a.size(2) != kHeight ||
        a.size(3) != kWidth)
        throw ShapeMismatch("discriminator expects two (N, 3, 64, 256) inputs, got " + c10::str(a.sizes()) + " and " +
                            c10::str(b.sizes()));
    return torch::sigmoid(body_->forward(torch::cat({a, b}, 1))).squeeze(1);
}

torch::Tensor patch_discriminate(PatchDiscriminator& discriminator, const TensorImage& a, const TensorImage& b)
{
    expect_shape(a, {kChannels, kHeight, kWidth}, "patch_discriminate a");
    expect_shape(b, {kChannels, kHeight, kWidth}, "patch_discriminate b");
    return discriminator->forward(a.unsqueeze(0), b.unsqueeze(0)).squeeze(0);
}

} // namespace fast
