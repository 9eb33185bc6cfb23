#include "fast/mask_unet.hpp"

namespace fast {

namespace nn = torch::nn;
namespace F = torch::nn::functional;

static nn::Sequential double_conv(int64_t in, int64_t out)
{
    return nn::Sequential(nn::Conv2d(nn::Conv2dOptions(in, out, 3).padding(1).bias(false)), nn::BatchNorm2d(out),
                          nn::ReLU(), nn::Conv2d(nn::Conv2dOptions(out, out, 3).padding(1).bias(false)),
                          nn::BatchNorm2d(out), nn::ReLU());
}

MaskUNetImpl::MaskUNetImpl(int64_t base_channels) : base_channels_(base_channels)
{
    const int64_t c = base_channels;
    in_ = register_module("stem", double_conv(kChannels, c));
    // Encoder widths c, 2c, 4c, 8c, 8c (the bottleneck stays at 8c because upsampling is bilinear).
    const int64_t enc[5] = {c, 2 * c, 4 * c, 8 * c, 8 * c};
    for (int k = 0; k < 4; ++k)
        down_[k] = register_module("down" + std::to_string(k + 1), double_conv(enc[k], enc[k + 1]));
    // Decoder: concat(upsampled, skip) -> double conv.
    const int64_t dec_in[4] = {16 * c, 8 * c, 4 * c, 2 * c};
    const int64_t dec_out[4] = {4 * c, 2 * c, c, c};
    for (int k = 0; k < 4; ++k)
        up_[k] = register_module("up" + std::to_string(k + 1), double_conv(dec_in[k], dec_out[k]));
    head_ = register_module("head", nn::Conv2d(nn::Conv2dOptions(c, 1, 1)));
}

torch::Tensor MaskUNetImpl::forward(const torch::Tensor& image)
{
    if (image.dim() != 4 || image.size(1) != kChannels || image.size(2) != kHeight || image.size(3) != kWidth)
        throw ShapeMismatch("mask U-Net expects (N, 3, 64, 256), got " + c10::str(image.sizes()));
    std::array<torch::Tensor, 5> skips;
    skips[0] = in_->forward(image);
    for (int k = 0; k < 4; ++k)
        skips[k + 1] = down_[k]->forward(F::max_pool2d(skips[k], F::MaxPool2dFuncOptions(2)));
    auto h = skips[4];
    for (int k = 0; k < 4; ++k) {
        const auto& skip = skips[3 - k];
        h = F::interpolate(h, F::InterpolateFuncOptions()
                                  .size(std::vector<int64_t>{skip.size(2), skip.size(3)})
                                  .mode(torch::kBilinear)
                                  .align_corners(false));
        h = up_[k]->forward(torch::cat({skip, h}, 1));
    }
    return head_(h);
}

MaskEstimate estimate_mask(MaskUNet& unet, const TensorImage& image)
{
    expect_shape(image, {kChannels, kHeight, kWidth}, "estimate_mask");
    torch::NoGradGuard no_grad;
    auto soft = torch::sigmoid(unet->forward(image.unsqueeze(0))).squeeze(0);
    return {soft, (soft > 0.5).to(soft.scalar_type())};
}

} // namespace fast
