#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>
#include <opencv2/core.hpp>

#include "fast/common.hpp"

namespace fast {

// ---------------------------------------------------------------------------
// Styles and samples
// ---------------------------------------------------------------------------

struct StyleSpec {
    std::string font_id = "hershey-simplex";
    int glyph_height_px = 32;               ///< 8..56
    std::array<int, 3> fill_rgb{255, 255, 255};
    double rotation_deg = 0.0;              ///< -15..15 when sampled
    double curve_amplitude_px = 0.0;        ///< 0..8 when sampled
    /// Pixel offsets (dx, dy) of the canvas corners TL, TR, BR, BL under the homography.
    std::array<double, 8> perspective_warp{};
    std::string background_id;

    // Range check of the sampled fields. Throws InvalidArgument.
    void validate() const;
};

void to_json(nlohmann::json& j, const StyleSpec& s);
void from_json(const nlohmann::json& j, StyleSpec& s);

struct SceneTextSample {
    TensorImage image_src;   ///< I_A
    TensorImage image_tgt;   ///< I_B
    TensorImage mask_src;    ///< m_A, values in {-1, +1}
    TensorImage mask_tgt;    ///< m_B
    TensorImage mask_fixed;  ///< m_F: text_tgt in the fixed font
    std::string text_src;
    std::string text_tgt;
    StyleSpec style;
};

// ---------------------------------------------------------------------------
// Fonts
// ---------------------------------------------------------------------------

class Font {
public:
    virtual ~Font() = default;
    /// Size of `text` rendered at `pixel_height`; `baseline` receives the descent below the baseline.
    virtual cv::Size measure(const std::string& text, int pixel_height, int& baseline) const = 0;
    /// Draws white (255) anti-aliased glyphs into an 8-bit single-channel canvas.
    virtual void draw(cv::Mat& canvas, const std::string& text, cv::Point origin, int pixel_height) const = 0;
};

/// Font ids:
///   hershey-<face>[-italic][-bold]   OpenCV stroke fonts; faces: simplex, plain, duplex, complex,
///                                    triplex, complex_small, script_simplex, script_complex
///   ttf:<path>                       any TrueType/OpenType file, rendered with FreeType
///   <stem>                           a TrueType file registered by its file stem (e.g. DejaVuSans)
class FontLibrary {
public:
    FontLibrary();
    ~FontLibrary();
    FontLibrary(FontLibrary&&) noexcept;
    FontLibrary& operator=(FontLibrary&&) noexcept;

    /// All Hershey variants plus every TrueType file found under `font_dirs`.
    static FontLibrary with_system_fonts(const std::vector<std::filesystem::path>& font_dirs = {"/usr/share/fonts"});

    void register_file(const std::filesystem::path& ttf);
    const Font& resolve(const std::string& font_id) const; // throws MissingFont
    std::vector<std::string> ids() const;                  // sorted

    static const std::string& fixed_font_id();

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

// Where the flat, untransformed text sits on the 64x256 canvas.
struct TextLayout {
    cv::Point origin;  ///< baseline-left origin passed to the rasterizer
    cv::Rect box;      ///< ink bounding box including descenders
};

// Centered layout; throws GlyphOverflow if the text does not fit the canvas.
TextLayout layout_text(const Font& font, const std::string& text, int pixel_height);

// Flat glyph alpha layer, CV_8UC1 of size 64x256.
cv::Mat rasterize_flat(const Font& font, const std::string& text, int pixel_height);

// Fixed-font guidance mask m_F for `text`: identity transform, centered, largest height <= 32 px that fits.
TensorImage render_fixed_mask(const std::string& text);

// ---------------------------------------------------------------------------
// Geometry and compositing
// ---------------------------------------------------------------------------

// Rotation about the canvas center, then vertical sinusoidal curve (one half period across the
// ink's horizontal extent, positive amplitude arches upward), then the corner homography.
// Every channel of `canvas` (C, H, W) is resampled identically with bilinear interpolation and zero
// fill; the last channel is treated as alpha for locating the ink. Throws GlyphOverflow if the
// transformed ink box leaves the canvas.
torch::Tensor apply_geometric_transform(const torch::Tensor& canvas, const StyleSpec& style);

// Returns {composited image, binary mask}. Mask is +1 exactly where transformed alpha > 0.5.
// Alpha at or below 0.5 does not touch the background.
std::pair<TensorImage, TensorImage> render_text_image(const std::string& text, const StyleSpec& style,
                                                      const TensorImage& background, const FontLibrary& fonts);

SceneTextSample make_paired_sample(const std::string& text_src, const std::string& text_tgt, const StyleSpec& style,
                                   const TensorImage& background, const FontLibrary& fonts);

// Mean over channels of |fill - mean background color|, both on a 0..1 scale.
double fill_contrast(const StyleSpec& style, const TensorImage& background);

// Fraction of +1 pixels in a {-1,+1} mask.
double mask_coverage(const TensorImage& mask);

// ---------------------------------------------------------------------------
// Backgrounds
// ---------------------------------------------------------------------------

/// Background ids: "proc:<n>" is a deterministic procedural texture; "file:<path>" is an image
/// resized to 64x256.
class BackgroundLibrary {
public:
    static BackgroundLibrary procedural(int count);
    static BackgroundLibrary from_directory(const std::filesystem::path& dir);
    explicit BackgroundLibrary(std::vector<std::string> ids) : ids_(std::move(ids)) {}

    const std::vector<std::string>& ids() const { return ids_; }
    bool empty() const { return ids_.empty(); }
    static TensorImage load(const std::string& id);

private:
    std::vector<std::string> ids_;
};

TensorImage procedural_background(uint64_t index);

// ---------------------------------------------------------------------------
// Dataset generation
// ---------------------------------------------------------------------------

// Sampling ranges for StyleSpec fields.
struct SynthRanges {
    int glyph_height_min = 16;
    int glyph_height_max = 48;
    double rotation_max_deg = 15.0;
    double curve_max_px = 8.0;
    double perspective_max_px = 6.0;
    double min_contrast = 30.0 / 255.0;
    double min_coverage = 0.01;
    double max_coverage = 0.9;
    int max_attempts = 1000;
};

void to_json(nlohmann::json& j, const SynthRanges& r);
void from_json(const nlohmann::json& j, SynthRanges& r);

struct ManifestRecord {
    std::string id;
    std::string text_src;
    std::string text_tgt;
    std::optional<StyleSpec> style;
    uint64_t seed = 0;
    uint64_t sample_seed = 0;
};

void to_json(nlohmann::json& j, const ManifestRecord& r);
void from_json(const nlohmann::json& j, ManifestRecord& r);

const std::vector<std::string>& word_list();

// splitmix64-based per-sample seed; stable across execution order.
uint64_t sample_seed(uint64_t seed, uint64_t index);

// Deterministic in (seed, index, fonts, backgrounds, ranges).
SceneTextSample sample_scene_text(uint64_t seed, uint64_t index, const std::vector<std::string>& font_ids,
                                  const BackgroundLibrary& backgrounds, const FontLibrary& fonts,
                                  const SynthRanges& ranges = {});

// Writes <root>/{i_s,i_t,mask_s,mask_t,mask_f}/NNNNNN.png and manifest.jsonl.
std::vector<ManifestRecord> generate_dataset(int64_t count, const std::vector<std::string>& font_ids,
                                             const BackgroundLibrary& backgrounds, uint64_t seed,
                                             const std::filesystem::path& root, const FontLibrary& fonts,
                                             const SynthRanges& ranges = {});

// ---------------------------------------------------------------------------
// Dataset reading
// ---------------------------------------------------------------------------

std::string sample_file_name(int64_t index);

class PairedDataset {
public:
    // Reads manifest.jsonl under `root`. Throws EmptyDataset if there are no records.
    static PairedDataset open(const std::filesystem::path& root);
    // Concatenation of several datasets (data mixing).
    static PairedDataset concat(const std::vector<PairedDataset>& parts);
    static PairedDataset from_samples(std::vector<SceneTextSample> samples);

    int64_t size() const { return static_cast<int64_t>(entries_.size()); }
    bool empty() const { return entries_.empty(); }
    // Loaded lazily and cached.
    const SceneTextSample& at(int64_t index) const;
    const ManifestRecord& record(int64_t index) const { return entries_.at(index).record; }

private:
    struct Entry {
        std::filesystem::path root;
        ManifestRecord record;
        mutable std::shared_ptr<SceneTextSample> cached;
    };
    std::vector<Entry> entries_;
};

// Batched (N, 3, 64, 256) tensors for the samples at `indices`.
struct SampleBatch {
    torch::Tensor image_src, image_tgt, mask_src, mask_tgt, mask_fixed;
};
SampleBatch make_batch(const PairedDataset& data, const std::vector<int64_t>& indices);

// Adapts a MOSTEL/SRNet-style directory (i_s/, t_f/, mask_s/, mask_t/, i_t.txt, optional i_s.txt)
// into the dataset layout above. Returns the number of converted samples.
int64_t convert_mostel(const std::filesystem::path& src, const std::filesystem::path& dst);

} // namespace fast
