#include "fast/pipeline.hpp"

#include "fast/checkpoint.hpp"
#include "fast/data_synth.hpp"
#include "fast/image_io.hpp"

namespace fast {

namespace fs = std::filesystem;

Editor::Editor(Generator gm, Generator gi, std::optional<MaskUNet> unet, std::string hash)
    : gm_(std::move(gm)), gi_(std::move(gi)), unet_(std::move(unet)), hash_(std::move(hash))
{
    gm_->eval();
    gi_->eval();
    if (unet_)
        (*unet_)->eval();
    for (auto* m : {static_cast<torch::nn::Module*>(gm_.get()), static_cast<torch::nn::Module*>(gi_.get())})
        for (auto& p : m->parameters())
            p.set_requires_grad(false);
}

Editor Editor::load(const fs::path& dir)
{
    if (dir.empty() || !fs::is_directory(dir))
        throw MissingCheckpoint("checkpoint directory '" + dir.string() + "' does not exist");
    std::optional<MaskUNet> unet;
    if (has_weights(dir, "unet"))
        unet = load_unet(dir);
    return Editor(load_generator(dir, "gm"), load_generator(dir, "gi"), std::move(unet), fast::checkpoint_hash(dir));
}

static TensorImage check_image(const TensorImage& image, const char* what)
{
    if (!image.defined() || image.dim() != 3 || image.size(0) != kChannels || image.size(1) < 1 || image.size(2) < 1)
        throw InvalidArgument(std::string(what) + " must be a (3, H, W) image");
    return image.to(torch::kFloat);
}

MaskEstimate Editor::estimate(const TensorImage& image) const
{
    if (!unet_)
        throw MissingCheckpoint("no unet.weights in the checkpoint; supply a source mask");
    MaskUNet unet = *unet_;
    return estimate_mask(unet, resize(check_image(image, "image"), kHeight, kWidth));
}

EditResult Editor::edit(const EditRequest& request, MaskMode mode) const
{
    const TensorImage image = check_image(request.image, "image");
    for (unsigned char c : request.target_text)
        if (c > 0x7e)
            throw GlyphOverflow("target text has characters outside the fixed font");
    // Validates and renders the target first so bad text fails before any network runs.
    const TensorImage fixed = render_fixed_mask(request.target_text);

    torch::NoGradGuard no_grad;
    const TensorImage source = resize(image, kHeight, kWidth);

    EditResult result;
    result.fixed_mask = fixed;
    if (request.source_mask) {
        const auto& m = *request.source_mask;
        if (!m.defined() || m.dim() != 3 || m.size(1) < 1 || m.size(2) < 1)
            throw InvalidArgument("source mask must be a (C, H, W) tensor");
        auto channel = resize(m.slice(0, 0, 1).to(torch::kFloat), kHeight, kWidth);
        result.source_mask = torch::where(channel > 0, 1.0f, -1.0f).expand({kChannels, kHeight, kWidth}).contiguous();
    } else {
        auto estimate = this->estimate(image);
        result.soft_mask = estimate.soft;
        result.source_mask = to_signed(estimate.hard).expand({kChannels, kHeight, kWidth}).contiguous();
    }

    Generator gm = gm_, gi = gi_;
    const auto& gm_config = gm->config();
    auto condition1 = gm_config.condition_kind == ConditionKind::Image ? source : result.source_mask;
    auto masks1 = gm_config.concat_source_mask ? torch::cat({result.source_mask, fixed}) : fixed;
    auto m_bar = gm->forward(condition1.unsqueeze(0), masks1.unsqueeze(0)).squeeze(0);
    result.target_mask_bin = torch::where(m_bar > 0, 1.0f, -1.0f);
    result.target_mask = mode == MaskMode::Binary ? result.target_mask_bin : m_bar;

    const auto& gi_config = gi->config();
    auto condition2 = gi_config.condition_kind == ConditionKind::Image ? source : result.source_mask;
    auto masks2 = gi_config.concat_source_mask ? torch::cat({result.source_mask, result.target_mask}) : result.target_mask;
    auto edited = gi->forward(condition2.unsqueeze(0), masks2.unsqueeze(0)).squeeze(0);

    result.edited = (image.size(1) == kHeight && image.size(2) == kWidth)
                        ? edited
                        : resize(edited, image.size(1), image.size(2)).clamp(-1.0, 1.0);
    return result;
}

void write_debug_images(const EditResult& result, const fs::path& dir)
{
    fs::create_directories(dir);
    write_image(dir / "m_A.png", result.source_mask);
    write_image(dir / "m_F.png", result.fixed_mask);
    write_image(dir / "m_B_bar.png", result.target_mask);
}

} // namespace fast
