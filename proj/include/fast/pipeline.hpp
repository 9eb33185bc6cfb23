#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include "fast/common.hpp"
#include "fast/generator.hpp"
#include "fast/mask_unet.hpp"

namespace fast {

// How the stage-I output m̄_B is handed to stage II.
enum class MaskMode {
    Raw,    ///< tanh output as produced
    Binary, ///< thresholded at 0 to {-1, +1}
};

struct EditRequest {
    TensorImage image;                       ///< (3, H, W) in [-1, 1], any size
    std::string target_text;
    std::optional<TensorImage> source_mask;  ///< (C, h, w) mask, text > 0; estimated when absent
};

struct EditResult {
    TensorImage edited;          ///< (3, H, W), original request size
    TensorImage source_mask;     ///< m_A at 64×256, {-1, +1}
    TensorImage fixed_mask;      ///< m_F at 64×256
    TensorImage target_mask;     ///< m̄_B at 64×256 as fed to stage II
    TensorImage target_mask_bin; ///< m̄_B thresholded at 0
    std::optional<torch::Tensor> soft_mask; ///< (1, 64, 256) U-Net probabilities when estimated
};

// Loaded checkpoint plus inference. Weights are immutable after load, so one Editor may serve
// concurrent edit() calls.
class Editor {
public:
    // Requires gm and gi; unet is optional and only needed for requests without a source mask.
    static Editor load(const std::filesystem::path& checkpoint_dir);
    Editor(Generator gm, Generator gi, std::optional<MaskUNet> unet, std::string hash = {});

    // Throws InvalidArgument for an empty or non-printable target, GlyphOverflow when it cannot be
    // rendered, MissingCheckpoint when a mask must be estimated but no U-Net was loaded.
    EditResult edit(const EditRequest& request, MaskMode mode = MaskMode::Raw) const;

    // U-Net estimate for `image` resized to 64×256.
    MaskEstimate estimate(const TensorImage& image) const;

    bool has_unet() const { return unet_.has_value(); }
    const std::string& checkpoint_hash() const { return hash_; }

private:
    Generator gm_, gi_;
    std::optional<MaskUNet> unet_;
    std::string hash_;
};

// Writes m_A.png, m_F.png and m_B_bar.png into `dir`.
void write_debug_images(const EditResult& result, const std::filesystem::path& dir);

} // namespace fast
